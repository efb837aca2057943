//! Coupled Stokes-Darcy flow: the Stokes scheme above a horizontal interface,
//! the Darcy scheme below, and the interface conditions imposed as
//! collocation rows at sampling points.

use crate::darcy::{eval_darcy_solution, DarcyAssembler, DarcySchemeConfig, DarcySpaces, DarcyVariant};
use crate::error::{Error, Result};
use crate::features::Field;
use crate::mesh::{Mesh, Point, Subdomain};
use crate::problems::{CoupledProblem, InterfaceLaw};
use crate::stokes::{eval_stokes_solution, StokesAssembler, StokesSchemeConfig, StokesSpaces};
use crate::system::{ColumnLayout, DenseSystem, Equation, RowTag};

/// Outward normal of the Stokes region on the interface.
pub const INTERFACE_NORMAL: Point = [0.0, -1.0];
pub const INTERFACE_TANGENT: Point = [1.0, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    /// `M` equispaced points strictly inside the interface.
    Interior,
    /// Explicit abscissae on the interface line.
    At(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceConfig {
    pub m: usize,
    pub placement: Placement,
}

impl InterfaceConfig {
    pub fn new(m: usize) -> Self {
        Self { m, placement: Placement::Interior }
    }

    /// Sampling points on the line `y = y_gamma` between `x_min` and `x_max`.
    pub fn points(&self, x_min: f64, x_max: f64, y_gamma: f64) -> Result<Vec<Point>> {
        match &self.placement {
            Placement::Interior => {
                if self.m == 0 {
                    return Err(Error::Config("need at least one interface sampling point".into()));
                }
                let w = x_max - x_min;
                Ok((1..=self.m).map(|i| [x_min + w * i as f64 / (self.m + 1) as f64, y_gamma]).collect())
            }
            Placement::At(xs) => {
                if xs.is_empty() {
                    return Err(Error::Config("need at least one interface sampling point".into()));
                }
                Ok(xs.iter().map(|&x| [x, y_gamma]).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSchemeConfig {
    pub stokes: StokesSchemeConfig,
    pub darcy: DarcySchemeConfig,
    pub interface: InterfaceConfig,
}

impl CoupledSchemeConfig {
    /// Stokes tests of degree `k0 + 1` and Darcy tests of degree `k0`, with
    /// the matching neuron counts.
    pub fn from_degree(k0: usize, m: usize) -> Self {
        Self {
            stokes: StokesSchemeConfig::from_degree(k0 + 1),
            darcy: DarcySchemeConfig::from_degree(k0, DarcyVariant::Hdpg),
            interface: InterfaceConfig::new(m),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledDiscretization {
    pub system: DenseSystem,
    pub layout: ColumnLayout,
    pub stokes: StokesSpaces,
    pub darcy: DarcySpaces,
    pub points: Vec<Point>,
}

/// Interface edge containing a sampling point, with its Stokes and Darcy
/// neighbours.
fn locate_on_interface(mesh: &Mesh, x: Point) -> Result<(usize, usize, usize)> {
    let edge = mesh
        .interface_edges()
        .find(|e| e.contains(x))
        .ok_or(Error::Placement { x: x[0], y: x[1] })?;
    let pick = |part| {
        edge.neighbors.iter().copied().find(|&k| mesh.elements[k].subdomain == part).ok_or(Error::Placement { x: x[0], y: x[1] })
    };
    Ok((edge.id, pick(Subdomain::Stokes)?, pick(Subdomain::Darcy)?))
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn assemble_stokes_darcy(mesh: &Mesh, problem: &CoupledProblem, config: &CoupledSchemeConfig) -> Result<CoupledDiscretization> {
    if mesh.divider.map_or(true, |y| (y - problem.interface_y).abs() > 1e-10 * mesh.domain.height()) {
        return Err(Error::Config("mesh is not split at the interface".into()));
    }
    if config.darcy.variant != DarcyVariant::Hdpg || config.darcy.eta != 0.0 {
        return Err(Error::Config("the coupled scheme uses the unstabilized hybridized Darcy variant".into()));
    }
    if !(problem.kappa > 0.0) {
        return Err(Error::Problem(format!("friction coefficient {} must be positive", problem.kappa)));
    }
    let stokes = StokesAssembler::new(mesh, &problem.stokes, &config.stokes, Subdomain::Stokes)?;
    let mut darcy = DarcyAssembler::new(mesh, &problem.darcy, &config.darcy, Subdomain::Darcy)?;
    let mut layout = ColumnLayout::new();
    stokes.add_columns(&mut layout)?;
    darcy.add_columns(&mut layout)?;
    let mut system = DenseSystem::new(layout.dof());
    stokes.add_rows(&layout, &mut system, false)?;
    darcy.add_rows(&layout, &mut system)?;
    let (stokes, darcy) = (stokes.into_spaces(), darcy.into_spaces());

    let d = mesh.domain;
    let points = config.interface.points(d.x_min, d.x_max, problem.interface_y)?;
    let (n, t) = (INTERFACE_NORMAL, INTERFACE_TANGENT);
    let friction = problem.stokes.nu / problem.kappa;
    let col = |field: Field, entity: usize, comp: usize| {
        layout.offset(field, entity, comp).ok_or_else(|| Error::Layout(format!("{} block", field.name())))
    };
    for (i, &x) in points.iter().enumerate() {
        let (edge, ks, kd) = locate_on_interface(mesh, x)?;
        let e = &mesh.edges[edge];
        let param = e.parameter_of(x);
        let sign = dot(e.normal, n);
        let chi_s = stokes.trace[edge].as_ref().expect("Stokes trace on the interface").eval(param);
        let chi_d = darcy.trace[edge].as_ref().expect("Darcy trace on the interface").eval(param);
        let phi_s = stokes.velocity[ks].as_ref().expect("Stokes velocity").eval(x);
        let phi_d = darcy.velocity[kd].as_ref().expect("Darcy velocity").eval(x);
        let psi_d = darcy.pressure[kd].as_ref().expect("Darcy pressure").eval(x);

        // u^S . n - uhat^D . n = 0
        let r = system.push_rows(1, RowTag { equation: Equation::InterfaceMass, entity: i });
        for c in 0..2 {
            let o = col(Field::Velocity, ks, c)?;
            for (j, v) in phi_s.iter().enumerate() {
                system.row_mut(r)[o + j] += n[c] * v;
            }
        }
        let o = col(Field::FluxTrace, edge, 0)?;
        for (j, v) in chi_d.iter().enumerate() {
            system.row_mut(r)[o + j] -= sign * v;
        }

        // (sigmahat n) . n + p^D = 0
        let r = system.push_rows(1, RowTag { equation: Equation::InterfaceNormalStress, entity: i });
        for c in 0..2 {
            let o = col(Field::StressTrace, edge, c)?;
            for (j, v) in chi_s.iter().enumerate() {
                system.row_mut(r)[o + j] += sign * n[c] * v;
            }
        }
        let o = col(Field::Pressure, kd, 0)?;
        for (j, v) in psi_d.iter().enumerate() {
            system.row_mut(r)[o + j] += v;
        }

        // (sigmahat n) . t + nu / kappa (u^S - u^D) . t = 0, without u^D for BJS
        let r = system.push_rows(1, RowTag { equation: Equation::InterfaceTangential, entity: i });
        for c in 0..2 {
            let o = col(Field::StressTrace, edge, c)?;
            for (j, v) in chi_s.iter().enumerate() {
                system.row_mut(r)[o + j] += sign * t[c] * v;
            }
            if t[c] == 0.0 {
                continue;
            }
            let o = col(Field::Velocity, ks, c)?;
            for (j, v) in phi_s.iter().enumerate() {
                system.row_mut(r)[o + j] += friction * t[c] * v;
            }
            if problem.law == InterfaceLaw::Bj {
                let o = col(Field::Velocity, kd, c)?;
                for (j, v) in phi_d.iter().enumerate() {
                    system.row_mut(r)[o + j] -= friction * t[c] * v;
                }
            }
        }
    }
    Ok(CoupledDiscretization { system, layout, stokes, darcy, points })
}

/// The three interface conditions evaluated from a solution at each
/// sampling point: mass, normal stress and tangential friction.
pub fn interface_residuals(
    mesh: &Mesh,
    problem: &CoupledProblem,
    disc: &CoupledDiscretization,
    coefficients: &[f64],
) -> Result<Vec<[f64; 3]>> {
    let (n, t) = (INTERFACE_NORMAL, INTERFACE_TANGENT);
    let friction = problem.stokes.nu / problem.kappa;
    disc.points
        .iter()
        .map(|&x| {
            let (edge, ks, kd) = locate_on_interface(mesh, x)?;
            let e = &mesh.edges[edge];
            let param = e.parameter_of(x);
            let sign = dot(e.normal, n);
            let stokes = eval_stokes_solution(mesh, &disc.stokes, &disc.layout, coefficients, x, ks)?;
            let darcy = eval_darcy_solution(mesh, &disc.darcy, &disc.layout, coefficients, x, kd)?;
            let trace = |field: Field, comp: usize, basis: Vec<f64>| -> Result<f64> {
                let c = disc
                    .layout
                    .slice(coefficients, field, edge, comp)
                    .ok_or_else(|| Error::Layout(format!("{} block", field.name())))?;
                Ok(c.iter().zip(&basis).map(|(a, b)| a * b).sum())
            };
            let chi_s = disc.stokes.trace[edge].as_ref().expect("Stokes trace").eval(param);
            let chi_d = disc.darcy.trace[edge].as_ref().expect("Darcy trace").eval(param);
            let sigma_n_e = [trace(Field::StressTrace, 0, chi_s.clone())?, trace(Field::StressTrace, 1, chi_s)?];
            let sigma_n = [sign * sigma_n_e[0], sign * sigma_n_e[1]];
            let uhat_n = sign * trace(Field::FluxTrace, 0, chi_d)?;
            let mut slip = stokes.u;
            if problem.law == InterfaceLaw::Bj {
                slip = [slip[0] - darcy.u[0], slip[1] - darcy.u[1]];
            }
            Ok([
                dot(stokes.u, n) - uhat_n,
                dot(sigma_n, n) + darcy.p,
                dot(sigma_n, t) + friction * dot(slip, t),
            ])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::EdgeKind;
    use crate::problems::example4;
    use crate::system::{residual_by_provenance, solve_least_squares};
    use crate::Domain;
    use std::f64::consts::PI;

    fn mesh() -> Mesh {
        Mesh::uniform(Domain::new(0.0, PI, -PI, PI).unwrap(), 3, 6, Some(0.0)).unwrap()
    }

    fn small() -> CoupledSchemeConfig {
        let mut c = CoupledSchemeConfig::from_degree(2, 30);
        c.stokes.half_width = 0.6;
        c.darcy.half_width = 0.7;
        c
    }

    #[test]
    fn sampling_points() {
        let pts = InterfaceConfig::new(3).points(0.0, 4.0, 0.0).unwrap();
        assert_eq!(pts, vec![[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let m = mesh();
        assert!(matches!(locate_on_interface(&m, [1.0, 0.5]), Err(Error::Placement { .. })));
        let (edge, ks, kd) = locate_on_interface(&m, [1.0, 0.0]).unwrap();
        assert_eq!(m.edges[edge].kind, EdgeKind::Interface);
        assert_eq!((m.elements[ks].subdomain, m.elements[kd].subdomain), (Subdomain::Stokes, Subdomain::Darcy));
    }

    #[test]
    fn interface_frame() {
        assert_eq!(dot(INTERFACE_NORMAL, INTERFACE_TANGENT), 0.0);
        assert_eq!(dot(INTERFACE_NORMAL, INTERFACE_NORMAL), 1.0);
        assert_eq!(dot(INTERFACE_TANGENT, INTERFACE_TANGENT), 1.0);
    }

    #[test]
    fn off_interface_point_is_rejected() {
        let p = example4(0.01, 0.1).unwrap();
        let mut c = small();
        c.interface.placement = Placement::At(vec![1.0, 4.0]);
        assert!(matches!(assemble_stokes_darcy(&mesh(), &p, &c), Err(Error::Placement { .. })));
    }

    #[test]
    fn collocation_rows_and_block_structure() {
        let m = mesh();
        let p = example4(0.01, 0.1).unwrap();
        let d = assemble_stokes_darcy(&m, &p, &small()).unwrap();
        let iface = d.system.tags.iter().filter(|t| {
            matches!(t.equation, Equation::InterfaceMass | Equation::InterfaceNormalStress | Equation::InterfaceTangential)
        });
        assert_eq!(iface.count(), 90);
        assert!(d.system.tags.iter().all(|t| t.equation != Equation::MeanTrace));

        // Without the interface rows, Stokes rows only touch Stokes columns
        // and Darcy rows only Darcy columns.
        let stokes_cols: Vec<bool> = (0..d.layout.dof())
            .map(|j| {
                d.layout.blocks().iter().any(|b| {
                    j >= b.offset
                        && j < b.offset + b.size
                        && match b.key.field {
                            Field::Stress | Field::StressTrace => true,
                            Field::Velocity => m.elements[b.key.entity].subdomain == Subdomain::Stokes,
                            _ => false,
                        }
                })
            })
            .collect();
        for (i, tag) in d.system.tags.iter().enumerate() {
            let stokes_row = match tag.equation {
                Equation::StokesConstitutive | Equation::StokesTrace | Equation::StokesMomentum => true,
                Equation::DarcyFlux | Equation::DarcyTrace | Equation::DarcyMass => false,
                _ => continue,
            };
            for (j, v) in d.system.row(i).iter().enumerate() {
                if *v != 0.0 {
                    assert_eq!(stokes_cols[j], stokes_row, "row {i} col {j}");
                }
            }
        }
    }

    #[test]
    fn bjs_drops_only_darcy_tangential_terms() {
        let m = mesh();
        let bj = example4(0.01, 0.1).unwrap();
        let bjs = CoupledProblem { law: InterfaceLaw::Bjs, ..bj.clone() };
        let a = assemble_stokes_darcy(&m, &bj, &small()).unwrap();
        let b = assemble_stokes_darcy(&m, &bjs, &small()).unwrap();
        let darcy_velocity: Vec<bool> = (0..a.layout.dof())
            .map(|j| {
                a.layout.blocks().iter().any(|blk| {
                    blk.key.field == Field::Velocity
                        && m.elements[blk.key.entity].subdomain == Subdomain::Darcy
                        && j >= blk.offset
                        && j < blk.offset + blk.size
                })
            })
            .collect();
        for i in 0..a.system.rows() {
            for j in 0..a.layout.dof() {
                let (x, y) = (a.system.get(i, j), b.system.get(i, j));
                if a.system.tags[i].equation == Equation::InterfaceTangential && darcy_velocity[j] {
                    assert_eq!(y, 0.0);
                } else {
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn residuals_match_interface_rows() {
        let m = mesh();
        let p = example4(0.01, 0.1).unwrap();
        let d = assemble_stokes_darcy(&m, &p, &small()).unwrap();
        let zero = vec![0.0; d.layout.dof()];
        assert!(interface_residuals(&m, &p, &d, &zero).unwrap().iter().all(|r| *r == [0.0; 3]));

        let sol = solve_least_squares(&d.system, None).unwrap();
        let res = interface_residuals(&m, &p, &d, &sol.coefficients).unwrap();
        let by = residual_by_provenance(&d.system, &sol.coefficients);
        let names = [Equation::InterfaceMass, Equation::InterfaceNormalStress, Equation::InterfaceTangential];
        for (c, eq) in names.iter().enumerate() {
            let ours = res.iter().map(|r| r[c] * r[c]).sum::<f64>().sqrt();
            assert!((ours - by[eq]).abs() <= 1e-12 * (1.0 + by[eq]), "{eq:?}: {ours} vs {}", by[eq]);
            assert!(ours <= sol.residual_norm * (1.0 + 1e-12));
        }
    }
}
