//! Velocity-stress hybridized scheme for Stokes and Brinkman flow. The
//! stress is a symmetric tensor with three components sharing one feature
//! space per element; the trace unknown on an edge is the vector `sigma n_e`.

use faer::Mat;

use crate::assembly::{gram, moment, ElementFns};
use crate::error::{Error, Result};
use crate::features::{EdgeFeatureSpace, ElementFeatureSpace, FeatureSpaceConfig, Field};
use crate::mesh::{EdgeKind, Mesh, Point, Subdomain};
use crate::poly::{scalar_dim, strain, trace, EdgePolyBasis, ElementPolyBasis, SymTensor};
use crate::problems::StokesProblem;
use crate::quadrature::{edge_rule, gauss_line, tensor_rect, LineRule};
use crate::system::{ColumnLayout, DenseSystem, Equation, RowTag};

/// `a^d : b^d` for the unit components `E_0 = e1 e1`, `E_1 = e1 e2 + e2 e1`
/// and `E_2 = e2 e2`.
const DEVIATORIC_PRODUCTS: [[f64; 3]; 3] = [[0.5, 0.0, -0.5], [0.0, 2.0, 0.0], [-0.5, 0.0, 0.5]];

/// `E_c n`.
fn unit_contract(c: usize, n: Point) -> Point {
    match c {
        0 => [n[0], 0.0],
        1 => [n[1], n[0]],
        _ => [0.0, n[1]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesSchemeConfig {
    pub n_sigma: usize,
    pub n_sigmahat: usize,
    pub n_u: usize,
    /// Degree of the tensor and edge tests; vector tests have degree `k + 1`.
    pub k: usize,
    pub eta: f64,
    pub half_width: f64,
    pub seed: u64,
    pub shared_weights: bool,
    /// Gauss points per direction; `k + 5` when unset.
    pub quad_points: Option<usize>,
}

impl StokesSchemeConfig {
    /// Neuron counts tied to the test degree `k`.
    pub fn from_degree(k: usize) -> Self {
        Self {
            n_sigma: scalar_dim(k),
            n_sigmahat: k + 1,
            n_u: scalar_dim(k + 1),
            k,
            eta: 0.0,
            half_width: 1.0,
            seed: 0,
            shared_weights: false,
            quad_points: None,
        }
    }

    pub fn quadrature(&self) -> usize {
        self.quad_points.unwrap_or(self.k + 5)
    }

    fn features(&self, neurons: usize) -> FeatureSpaceConfig {
        FeatureSpaceConfig { neurons, half_width: self.half_width, seed: self.seed, shared: self.shared_weights }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sigma == 0 || self.n_sigmahat == 0 || self.n_u == 0 {
            return Err(Error::Config("neuron counts must be positive".into()));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::Config(format!("eta = {} must be non-negative", self.eta)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Config(format!("half-width {} must be positive", self.half_width)));
        }
        if self.quadrature() == 0 {
            return Err(Error::Config("quadrature needs at least one point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StokesSpaces {
    pub part: Subdomain,
    pub stress: Vec<Option<ElementFeatureSpace>>,
    pub velocity: Vec<Option<ElementFeatureSpace>>,
    pub trace: Vec<Option<EdgeFeatureSpace>>,
}

#[derive(Debug, Clone)]
pub struct StokesDiscretization {
    pub system: DenseSystem,
    pub layout: ColumnLayout,
    pub spaces: StokesSpaces,
}

/// Stress, velocity, velocity gradient and post-processed pressure at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StokesValue {
    pub sigma: SymTensor,
    pub u: [f64; 2],
    /// Rows are the gradients of the two velocity components.
    pub grad_u: [[f64; 2]; 2],
    pub p: f64,
}

/// Pressure recovered from the stress of an incompressible flow,
/// `p = -tr(sigma) / 2`.
pub fn postprocess_pressure(sigma: SymTensor) -> f64 {
    -0.5 * trace(sigma)
}

/// Symmetric gradients of `phi_i e_1` and `phi_i e_2` for every feature.
pub fn strain_of_vector_features(space: &ElementFeatureSpace, x: Point) -> Vec<[SymTensor; 2]> {
    space.eval_gradients(x).into_iter().map(|g| [strain(g, [0.0; 2]), strain([0.0; 2], g)]).collect()
}

struct Face {
    edge: usize,
    s: f64,
    normal: Point,
    w: Vec<f64>,
    pts: Vec<Point>,
    params: Vec<f64>,
}

/// Builds the columns and rows of one Stokes or Brinkman subproblem.
pub(crate) struct StokesAssembler<'a> {
    mesh: &'a Mesh,
    problem: &'a StokesProblem,
    config: StokesSchemeConfig,
    line: LineRule,
    spaces: StokesSpaces,
    elements: Vec<usize>,
    edges: Vec<usize>,
}

impl<'a> StokesAssembler<'a> {
    pub fn new(mesh: &'a Mesh, problem: &'a StokesProblem, config: &StokesSchemeConfig, part: Subdomain) -> Result<Self> {
        config.validate()?;
        if !(problem.nu > 0.0) {
            return Err(Error::Problem(format!("viscosity {} must be positive", problem.nu)));
        }
        let line = gauss_line(config.quadrature())?;
        let elements: Vec<usize> = (0..mesh.elements.len()).filter(|&e| mesh.in_part(e, part)).collect();
        if elements.is_empty() {
            return Err(Error::Config("no elements in the Stokes region".into()));
        }
        let edges: Vec<usize> = mesh
            .edges
            .iter()
            .filter(|e| e.neighbors.iter().any(|&k| mesh.in_part(k, part)))
            .map(|e| e.id)
            .collect();
        let ne = mesh.elements.len();
        let (cs, cu, ct) = (config.features(config.n_sigma), config.features(config.n_u), config.features(config.n_sigmahat));
        let mut stress = vec![None; ne];
        let mut velocity = vec![None; ne];
        for &e in &elements {
            stress[e] = Some(ElementFeatureSpace::new(&cs, Field::Stress, e));
            velocity[e] = Some(ElementFeatureSpace::new(&cu, Field::Velocity, e));
        }
        let mut trace = vec![None; mesh.edges.len()];
        for &e in &edges {
            trace[e] = Some(EdgeFeatureSpace::new(&ct, Field::StressTrace, e));
        }
        let spaces = StokesSpaces { part, stress, velocity, trace };
        Ok(Self { mesh, problem, config: config.clone(), line, spaces, elements, edges })
    }

    pub fn add_columns(&self, layout: &mut ColumnLayout) -> Result<()> {
        let c = &self.config;
        for &e in &self.elements {
            for comp in 0..3 {
                layout.push(Field::Stress, e, comp, c.n_sigma)?;
            }
            for comp in 0..2 {
                layout.push(Field::Velocity, e, comp, c.n_u)?;
            }
        }
        for &e in &self.edges {
            for comp in 0..2 {
                layout.push(Field::StressTrace, e, comp, c.n_sigmahat)?;
            }
        }
        Ok(())
    }

    /// All rows; the zero-mean trace row only when `mean_trace` is set.
    pub fn add_rows(&self, layout: &ColumnLayout, system: &mut DenseSystem, mean_trace: bool) -> Result<()> {
        for &e in &self.elements {
            self.constitutive_rows(e, layout, system)?;
        }
        for &edge in &self.edges {
            if self.mesh.edges[edge].kind != EdgeKind::Interface {
                self.trace_rows(edge, layout, system)?;
            }
        }
        for &e in &self.elements {
            self.momentum_rows(e, layout, system)?;
        }
        if mean_trace {
            self.mean_trace_row(layout, system)?;
        }
        Ok(())
    }

    pub fn into_spaces(self) -> StokesSpaces {
        self.spaces
    }

    fn stress(&self, e: usize) -> &ElementFeatureSpace {
        self.spaces.stress[e].as_ref().expect("stress space on a Stokes element")
    }

    fn velocity(&self, e: usize) -> &ElementFeatureSpace {
        self.spaces.velocity[e].as_ref().expect("velocity space on a Stokes element")
    }

    fn trace(&self, edge: usize) -> &EdgeFeatureSpace {
        self.spaces.trace[edge].as_ref().expect("stress trace space on a Stokes edge")
    }

    fn col(layout: &ColumnLayout, field: Field, entity: usize, comp: usize) -> Result<usize> {
        layout.offset(field, entity, comp).ok_or_else(|| Error::Layout(format!("{} block", field.name())))
    }

    fn faces(&self, element: usize) -> Result<Vec<Face>> {
        self.mesh.elements[element]
            .edges
            .iter()
            .map(|&edge| {
                let rule = edge_rule(&self.line, &self.mesh.edges[edge]);
                Ok(Face {
                    edge,
                    s: self.mesh.orientation(element, edge)?,
                    normal: self.mesh.outward_normal(element, edge)?,
                    w: rule.weights,
                    pts: rule.points,
                    params: rule.params,
                })
            })
            .collect()
    }

    /// `(1/2nu)(sigma^d, tau^d) + eta h ((sigma - sigmahat) n, tau n) - (eps(u), tau) = 0`.
    fn constitutive_rows(&self, element: usize, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        let el = &self.mesh.elements[element];
        let rect = tensor_rect(&self.line, &el.bounds);
        let w = &rect.weights;
        let psi = ElementPolyBasis::new(self.config.k, el.bounds);
        let m = psi.dim();
        let t_vals = ElementFns::Poly(&psi).values(&rect.points);
        let s_fns = ElementFns::Features(self.stress(element));
        let s_vals = s_fns.values(&rect.points);
        let u_tab = ElementFns::Features(self.velocity(element)).tab(&rect.points);
        let r0 = system.push_rows(3 * m, RowTag { equation: Equation::StokesConstitutive, entity: element });
        let col_s: Vec<usize> = (0..3).map(|c| Self::col(layout, Field::Stress, element, c)).collect::<Result<_>>()?;
        let col_u: Vec<usize> = (0..2).map(|d| Self::col(layout, Field::Velocity, element, d)).collect::<Result<_>>()?;

        let g = gram(w, t_vals.as_ref(), s_vals.as_ref());
        let half_inv_nu = 0.5 / self.problem.nu;
        for (ct, row) in DEVIATORIC_PRODUCTS.iter().enumerate() {
            for (c, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    system.add_block(r0 + ct * m, col_s[c], g.as_ref(), half_inv_nu * a);
                }
            }
        }
        // eps(phi e_1) : tau = phi_x tau_11 + phi_y tau_12 (twice the half),
        // eps(phi e_2) : tau = phi_x tau_12 + phi_y tau_22.
        let gx = gram(w, t_vals.as_ref(), u_tab.dx.as_ref());
        let gy = gram(w, t_vals.as_ref(), u_tab.dy.as_ref());
        system.add_block(r0, col_u[0], gx.as_ref(), -1.0);
        system.add_block(r0 + m, col_u[0], gy.as_ref(), -1.0);
        system.add_block(r0 + m, col_u[1], gx.as_ref(), -1.0);
        system.add_block(r0 + 2 * m, col_u[1], gy.as_ref(), -1.0);

        let eta_h = self.config.eta * el.h;
        if eta_h > 0.0 {
            for f in self.faces(element)? {
                let tf = ElementFns::Poly(&psi).values(&f.pts);
                let sf = s_fns.values(&f.pts);
                let chi = self.trace(f.edge).eval_matrix(&f.params);
                let bs = gram(&f.w, tf.as_ref(), sf.as_ref());
                let bt = gram(&f.w, tf.as_ref(), chi.as_ref());
                for ct in 0..3 {
                    let tn = unit_contract(ct, f.normal);
                    for c in 0..3 {
                        let sn = unit_contract(c, f.normal);
                        let a = sn[0] * tn[0] + sn[1] * tn[1];
                        if a != 0.0 {
                            system.add_block(r0 + ct * m, col_s[c], bs.as_ref(), eta_h * a);
                        }
                    }
                    for d in 0..2 {
                        if tn[d] != 0.0 {
                            let col = Self::col(layout, Field::StressTrace, f.edge, d)?;
                            system.add_block(r0 + ct * m, col, bt.as_ref(), -eta_h * f.s * tn[d]);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `-eta h ((sigma - sigmahat) n, w) + (u, w) = (g, w)` on each edge,
    /// summed over the neighbours, with `w = tauhat n` a vector edge test.
    fn trace_rows(&self, edge: usize, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        let e = &self.mesh.edges[edge];
        let rule = edge_rule(&self.line, e);
        let basis = EdgePolyBasis::new(self.config.k);
        let m = basis.dim();
        let tests = Mat::from_fn(rule.params.len(), m, |q, j| basis.eval(rule.params[q])[j]);
        let r0 = system.push_rows(2 * m, RowTag { equation: Equation::StokesTrace, entity: edge });
        let chi = self.trace(edge).eval_matrix(&rule.params);
        let bt = gram(&rule.weights, tests.as_ref(), chi.as_ref());
        let col_t: Vec<usize> = (0..2).map(|d| Self::col(layout, Field::StressTrace, edge, d)).collect::<Result<_>>()?;
        for &k in e.neighbors.iter().filter(|&&k| self.mesh.in_part(k, self.spaces.part)) {
            let s = self.mesh.orientation(k, edge)?;
            let n = self.mesh.outward_normal(k, edge)?;
            let eta_h = self.config.eta * self.mesh.elements[k].h;
            let uf = ElementFns::Features(self.velocity(k)).values(&rule.points);
            let bu = gram(&rule.weights, tests.as_ref(), uf.as_ref());
            for d in 0..2 {
                let col = Self::col(layout, Field::Velocity, k, d)?;
                system.add_block(r0 + d * m, col, bu.as_ref(), s);
            }
            if eta_h > 0.0 {
                let sf = ElementFns::Features(self.stress(k)).values(&rule.points);
                let bs = gram(&rule.weights, tests.as_ref(), sf.as_ref());
                for c in 0..3 {
                    let sn = unit_contract(c, n);
                    let col = Self::col(layout, Field::Stress, k, c)?;
                    for d in 0..2 {
                        if sn[d] != 0.0 {
                            system.add_block(r0 + d * m, col, bs.as_ref(), -eta_h * s * sn[d]);
                        }
                    }
                }
                for d in 0..2 {
                    system.add_block(r0 + d * m, col_t[d], bt.as_ref(), eta_h);
                }
            }
            if e.kind == EdgeKind::Boundary {
                let g: Vec<[f64; 2]> = rule.points.iter().map(|&x| (self.problem.boundary)(x)).collect();
                for d in 0..2 {
                    let gd: Vec<f64> = g.iter().map(|v| v[d]).collect();
                    for (j, mj) in moment(&rule.weights, tests.as_ref(), &gd).into_iter().enumerate() {
                        system.rhs[r0 + d * m + j] += s * mj;
                    }
                }
            }
        }
        Ok(())
    }

    /// `-(sigma, eps(v)) + <sigmahat n_K, v> - nu (kinv u, v) = -(f, v)`.
    fn momentum_rows(&self, element: usize, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        let el = &self.mesh.elements[element];
        let rect = tensor_rect(&self.line, &el.bounds);
        let w = &rect.weights;
        let ell = ElementPolyBasis::new(self.config.k + 1, el.bounds);
        let m = ell.dim();
        let l_tab = ElementFns::Poly(&ell).tab(&rect.points);
        let s_vals = ElementFns::Features(self.stress(element)).values(&rect.points);
        let r0 = system.push_rows(2 * m, RowTag { equation: Equation::StokesMomentum, entity: element });
        let col_s: Vec<usize> = (0..3).map(|c| Self::col(layout, Field::Stress, element, c)).collect::<Result<_>>()?;
        let col_u: Vec<usize> = (0..2).map(|d| Self::col(layout, Field::Velocity, element, d)).collect::<Result<_>>()?;

        let gx = gram(w, l_tab.dx.as_ref(), s_vals.as_ref());
        let gy = gram(w, l_tab.dy.as_ref(), s_vals.as_ref());
        system.add_block(r0, col_s[0], gx.as_ref(), -1.0);
        system.add_block(r0, col_s[1], gy.as_ref(), -1.0);
        system.add_block(r0 + m, col_s[1], gx.as_ref(), -1.0);
        system.add_block(r0 + m, col_s[2], gy.as_ref(), -1.0);

        let kinv = self.problem.inv_kappa;
        if kinv.iter().flatten().any(|&v| v != 0.0) {
            let u_vals = ElementFns::Features(self.velocity(element)).values(&rect.points);
            let g = gram(w, l_tab.vals.as_ref(), u_vals.as_ref());
            for d in 0..2 {
                for dd in 0..2 {
                    if kinv[d][dd] != 0.0 {
                        system.add_block(r0 + d * m, col_u[dd], g.as_ref(), -self.problem.nu * kinv[d][dd]);
                    }
                }
            }
        }

        for f in self.faces(element)? {
            let lf = ElementFns::Poly(&ell).values(&f.pts);
            let chi = self.trace(f.edge).eval_matrix(&f.params);
            let b = gram(&f.w, lf.as_ref(), chi.as_ref());
            for d in 0..2 {
                let col = Self::col(layout, Field::StressTrace, f.edge, d)?;
                system.add_block(r0 + d * m, col, b.as_ref(), f.s);
            }
        }

        let src: Vec<[f64; 2]> = rect.points.iter().map(|&x| (self.problem.source)(x)).collect();
        for d in 0..2 {
            let fd: Vec<f64> = src.iter().map(|v| v[d]).collect();
            for (j, mj) in moment(w, l_tab.vals.as_ref(), &fd).into_iter().enumerate() {
                system.rhs[r0 + d * m + j] -= mj;
            }
        }
        Ok(())
    }

    /// `sum_K int_K tr(sigma) dx = 0`.
    fn mean_trace_row(&self, layout: &ColumnLayout, system: &mut DenseSystem) -> Result<()> {
        let r = system.push_rows(1, RowTag { equation: Equation::MeanTrace, entity: 0 });
        for &e in &self.elements {
            let rect = tensor_rect(&self.line, &self.mesh.elements[e].bounds);
            let vals = ElementFns::Features(self.stress(e)).values(&rect.points);
            let ints = moment(&rect.weights, vals.as_ref(), &vec![1.0; rect.weights.len()]);
            for c in [0, 2] {
                let col = Self::col(layout, Field::Stress, e, c)?;
                for (i, v) in ints.iter().enumerate() {
                    system.row_mut(r)[col + i] += v;
                }
            }
        }
        Ok(())
    }
}

impl EdgeFeatureSpace {
    fn eval_matrix(&self, params: &[f64]) -> Mat<f64> {
        let mut m = Mat::zeros(params.len(), self.len());
        let mut v = vec![0.0; self.len()];
        for (q, &t) in params.iter().enumerate() {
            self.eval_into(t, &mut v);
            for (i, vi) in v.iter().enumerate() {
                m[(q, i)] = *vi;
            }
        }
        m
    }
}

fn assemble(mesh: &Mesh, problem: &StokesProblem, config: &StokesSchemeConfig) -> Result<StokesDiscretization> {
    let asm = StokesAssembler::new(mesh, problem, config, Subdomain::Single)?;
    let mut layout = ColumnLayout::new();
    asm.add_columns(&mut layout)?;
    let mut system = DenseSystem::new(layout.dof());
    asm.add_rows(&layout, &mut system, true)?;
    Ok(StokesDiscretization { system, layout, spaces: asm.into_spaces() })
}

/// Stokes flow; the problem must carry no Brinkman term.
pub fn assemble_hdpg_stokes(mesh: &Mesh, problem: &StokesProblem, config: &StokesSchemeConfig) -> Result<StokesDiscretization> {
    if problem.inv_kappa.iter().flatten().any(|&v| v != 0.0) {
        return Err(Error::Config("Stokes assembly got a nonzero inverse permeability; use the Brinkman scheme".into()));
    }
    assemble(mesh, problem, config)
}

/// Brinkman flow: the Stokes scheme plus `-nu (kinv u, v)` in the momentum rows.
pub fn assemble_brinkman(mesh: &Mesh, problem: &StokesProblem, config: &StokesSchemeConfig) -> Result<StokesDiscretization> {
    assemble(mesh, problem, config)
}

/// Evaluates stress, velocity and pressure at `x` in `element`.
pub fn eval_stokes_solution(
    mesh: &Mesh,
    spaces: &StokesSpaces,
    layout: &ColumnLayout,
    coefficients: &[f64],
    x: Point,
    element: usize,
) -> Result<StokesValue> {
    let outside = Error::PointOutside { element, x: x[0], y: x[1] };
    let el = mesh.elements.get(element).ok_or(outside)?;
    if !el.bounds.contains(x) {
        return Err(Error::PointOutside { element, x: x[0], y: x[1] });
    }
    let (Some(ss), Some(us)) = (&spaces.stress[element], &spaces.velocity[element]) else {
        return Err(Error::PointOutside { element, x: x[0], y: x[1] });
    };
    let block = |field: Field, comp: usize| {
        layout.slice(coefficients, field, element, comp).ok_or_else(|| Error::Layout(format!("{} block", field.name())))
    };
    let mut out = StokesValue::default();
    let phi = ss.eval(x);
    for c in 0..3 {
        out.sigma[c] = block(Field::Stress, c)?.iter().zip(&phi).map(|(a, b)| a * b).sum();
    }
    let mut vals = vec![0.0; us.len()];
    let mut grads = vec![[0.0; 2]; us.len()];
    us.eval_with_gradients_into(x, &mut vals, &mut grads);
    for d in 0..2 {
        let c = block(Field::Velocity, d)?;
        for i in 0..us.len() {
            out.u[d] += c[i] * vals[i];
            out.grad_u[d][0] += c[i] * grads[i][0];
            out.grad_u[d][1] += c[i] * grads[i][1];
        }
    }
    out.p = postprocess_pressure(out.sigma);
    Ok(out)
}

/// Column count `E (3 N_sigma + 2 N_u) + edges 2 N_sigmahat`.
pub fn expected_dof(mesh: &Mesh, config: &StokesSchemeConfig) -> usize {
    mesh.elements.len() * (3 * config.n_sigma + 2 * config.n_u) + mesh.edges.len() * 2 * config.n_sigmahat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{relative_l2, tensor_components};
    use crate::poly::{deviatoric, double_dot};
    use crate::problems::{example3, example5};
    use crate::system::solve_least_squares;
    use crate::Domain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> StokesSchemeConfig {
        StokesSchemeConfig { half_width: 0.9, ..StokesSchemeConfig::from_degree(3) }
    }

    #[test]
    fn unit_products_match_tensor_algebra() {
        let unit = |c: usize| {
            let mut t = [0.0; 3];
            t[c] = 1.0;
            t
        };
        for a in 0..3 {
            for b in 0..3 {
                let direct = double_dot(deviatoric(unit(a)), deviatoric(unit(b)));
                assert!((DEVIATORIC_PRODUCTS[a][b] - direct).abs() < 1e-15);
            }
            let n = [0.6, -0.8];
            let sn = crate::poly::contract_normal(unit(a), n);
            assert_eq!(unit_contract(a, n), sn);
        }
    }

    #[test]
    fn pressure_postprocessing() {
        assert_eq!(postprocess_pressure([2.5, 0.3, -2.5]), 0.0);
        assert_eq!(postprocess_pressure([-1.5, 0.0, -1.5]), 1.5);
    }

    #[test]
    fn deviatoric_is_trace_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s: SymTensor = [rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3)];
            assert!(trace(deviatoric(s)).abs() <= 1e-14 * (s[0].abs() + s[2].abs()));
        }
        assert_eq!(deviatoric([1.0, 0.0, 1.0]), [0.0; 3]);
    }

    #[test]
    fn feature_strain_matches_finite_differences() {
        let cfg = FeatureSpaceConfig::new(5, 1.0, 3);
        let space = ElementFeatureSpace::new(&cfg, Field::Velocity, 2);
        let x = [0.31, 0.72];
        let eps = strain_of_vector_features(&space, x);
        let h = 1e-6;
        for (i, e) in eps.iter().enumerate() {
            let fx = (space.eval([x[0] + h, x[1]])[i] - space.eval([x[0] - h, x[1]])[i]) / (2.0 * h);
            let fy = (space.eval([x[0], x[1] + h])[i] - space.eval([x[0], x[1] - h])[i]) / (2.0 * h);
            let fd = [[fx, 0.5 * fy, 0.0], [0.0, 0.5 * fx, fy]];
            for d in 0..2 {
                for c in 0..3 {
                    assert!((e[d][c] - fd[d][c]).abs() < 1e-8);
                }
            }
        }
        let zero = ElementFeatureSpace { weights: vec![[0.0; 2]; 3], biases: vec![0.0; 3] };
        assert!(strain_of_vector_features(&zero, x).iter().all(|e| e[0] == [0.0; 3] && e[1] == [0.0; 3]));
    }

    #[test]
    fn dimensions_and_mean_row() {
        let mesh = Mesh::uniform(Domain::unit_square(), 2, 2, None).unwrap();
        let p = example3(0.1).unwrap();
        let c = small();
        let d = assemble_hdpg_stokes(&mesh, &p, &c).unwrap();
        assert_eq!(d.layout.dof(), expected_dof(&mesh, &c));
        let rows = 4 * (3 * scalar_dim(3) + 2 * scalar_dim(4)) + 12 * 2 * 4 + 1;
        assert_eq!(d.system.rows(), rows);
        assert_eq!(d.system.tags.last().unwrap().equation, Equation::MeanTrace);
    }

    #[test]
    fn brinkman_without_permeability_matches_stokes() {
        let mesh = Mesh::uniform(Domain::unit_square(), 2, 2, None).unwrap();
        let stokes = example3(0.1).unwrap();
        let a = assemble_hdpg_stokes(&mesh, &stokes, &small()).unwrap();
        let b = assemble_brinkman(&mesh, &stokes, &small()).unwrap();
        assert_eq!(a.system.rows(), b.system.rows());
        for i in 0..a.system.rows() {
            assert_eq!(a.system.row(i), b.system.row(i));
        }
        assert_eq!(a.system.rhs, b.system.rhs);
        let brinkman = example5(1.0).unwrap();
        assert!(matches!(assemble_hdpg_stokes(&mesh, &brinkman, &small()), Err(Error::Config(_))));
    }

    #[test]
    fn eta_only_touches_penalty_rows() {
        let mesh = Mesh::uniform(Domain::unit_square(), 2, 2, None).unwrap();
        let p = example3(0.1).unwrap();
        let a = assemble_hdpg_stokes(&mesh, &p, &small()).unwrap();
        let b = assemble_hdpg_stokes(&mesh, &p, &StokesSchemeConfig { eta: 1.0, ..small() }).unwrap();
        for i in 0..a.system.rows() {
            if a.system.row(i) != b.system.row(i) {
                let eq = a.system.tags[i].equation;
                assert!(matches!(eq, Equation::StokesConstitutive | Equation::StokesTrace), "{eq:?}");
            }
        }
    }

    #[test]
    fn solves_example3_coarsely() {
        let mesh = Mesh::uniform(Domain::unit_square(), 3, 3, None).unwrap();
        let p = example3(0.1).unwrap();
        let c = StokesSchemeConfig { half_width: 1.2, ..StokesSchemeConfig::from_degree(7) };
        let d = assemble_hdpg_stokes(&mesh, &p, &c).unwrap();
        let sol = solve_least_squares(&d.system, None).unwrap();
        let ex = p.exact.as_ref().unwrap();
        let eval = |e: usize, x: Point| eval_stokes_solution(&mesh, &d.spaces, &d.layout, &sol.coefficients, x, e);
        let eu = relative_l2(&mesh, Subdomain::Single, 12, |e, x| Ok(eval(e, x)?.u.to_vec()), |x| (ex.u)(x).to_vec()).unwrap();
        let es = relative_l2(
            &mesh,
            Subdomain::Single,
            12,
            |e, x| Ok(tensor_components(eval(e, x)?.sigma)),
            |x| tensor_components((ex.sigma)(x)),
        )
        .unwrap();
        assert!(eu < 1e-2, "velocity error {eu}");
        assert!(es < 1e-2, "stress error {es}");
    }
}
