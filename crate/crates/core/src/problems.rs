//! Problem data and manufactured benchmark solutions.
//!
//! Exact solutions are supplied as second-order jets (value, gradient,
//! Hessian); sources and boundary data are derived from them generically.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Domain, Point};
use crate::poly::SymTensor;
use crate::runner::{RunConfig, Scheme};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(Point) -> SymTensor + Send + Sync>;
/// Row `c` is the gradient of component `c`.
pub type GradientFn = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

pub type Matrix2 = [[f64; 2]; 2];

/// Value, gradient and Hessian `(xx, xy, yy)` of a scalar at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub h: [f64; 3],
}

impl Jet {
    pub fn scale(self, a: f64) -> Jet {
        Jet { v: a * self.v, d: [a * self.d[0], a * self.d[1]], h: [a * self.h[0], a * self.h[1], a * self.h[2]] }
    }
}

pub fn mat_vec(m: Matrix2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn inverse(m: Matrix2) -> Matrix2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

fn is_spd(m: Matrix2) -> bool {
    m[0][1] == m[1][0] && m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0
}

#[derive(Clone)]
pub struct DarcyExact {
    pub p: ScalarFn,
    pub grad_p: VectorFn,
    pub u: VectorFn,
}

/// `u = -K grad p`, `div u = f` in the domain, `p = g` on the boundary.
#[derive(Clone)]
pub struct DarcyProblem {
    pub name: String,
    pub domain: Domain,
    pub k: Matrix2,
    pub source: ScalarFn,
    pub boundary: ScalarFn,
    pub exact: Option<DarcyExact>,
}

impl DarcyProblem {
    pub fn new(name: &str, domain: Domain, k: Matrix2, source: ScalarFn, boundary: ScalarFn) -> Result<Self> {
        if !is_spd(k) {
            return Err(Error::Problem(format!("permeability {k:?} is not symmetric positive definite")));
        }
        Ok(Self { name: name.into(), domain, k, source, boundary, exact: None })
    }

    /// Derives `f = -div(K grad p)`, `g = p` and `u = -K grad p` from a jet.
    pub fn manufactured(
        name: &str,
        domain: Domain,
        k: Matrix2,
        jet: impl Fn(Point) -> Jet + Send + Sync + 'static,
    ) -> Result<Self> {
        let jet = Arc::new(jet);
        let (j1, j2, j3, j4) = (jet.clone(), jet.clone(), jet.clone(), jet.clone());
        let source: ScalarFn = Arc::new(move |x| {
            let h = j1(x).h;
            -(k[0][0] * h[0] + (k[0][1] + k[1][0]) * h[1] + k[1][1] * h[2])
        });
        let boundary: ScalarFn = Arc::new(move |x| j2(x).v);
        let mut problem = Self::new(name, domain, k, source, boundary)?;
        problem.exact = Some(DarcyExact {
            p: Arc::new(move |x| j3(x).v),
            grad_p: Arc::new(move |x| jet(x).d),
            u: Arc::new(move |x| {
                let g = j4(x).d;
                let v = mat_vec(k, g);
                [-v[0], -v[1]]
            }),
        });
        Ok(problem)
    }

    pub fn k_inv(&self) -> Matrix2 {
        inverse(self.k)
    }
}

#[derive(Clone)]
pub struct StokesExact {
    pub u: VectorFn,
    pub grad_u: GradientFn,
    pub sigma: TensorFn,
    pub p: ScalarFn,
}

/// `nu kinv u - div sigma = f`, `sigma^d = 2 nu eps(u)`, `u = g` on the
/// boundary. Plain Stokes has `kinv = 0`.
#[derive(Clone)]
pub struct StokesProblem {
    pub name: String,
    pub domain: Domain,
    pub nu: f64,
    pub inv_kappa: Matrix2,
    pub source: VectorFn,
    pub boundary: VectorFn,
    pub exact: Option<StokesExact>,
}

pub type BrinkmanProblem = StokesProblem;

impl StokesProblem {
    pub fn new(
        name: &str,
        domain: Domain,
        nu: f64,
        inv_kappa: Matrix2,
        source: VectorFn,
        boundary: VectorFn,
    ) -> Result<Self> {
        if nu.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Problem(format!("viscosity {nu} must be positive")));
        }
        if inv_kappa[0][1] != inv_kappa[1][0] {
            return Err(Error::Problem("inverse permeability must be symmetric".into()));
        }
        Ok(Self { name: name.into(), domain, nu, inv_kappa, source, boundary, exact: None })
    }

    /// Derives `f = -nu (lap u + grad div u) + grad p + nu kinv u`, `g = u`
    /// and `sigma = 2 nu eps(u) - p I` from jets of `u` and `p`.
    pub fn manufactured(
        name: &str,
        domain: Domain,
        nu: f64,
        inv_kappa: Matrix2,
        u: impl Fn(Point) -> [Jet; 2] + Send + Sync + 'static,
        p: impl Fn(Point) -> Jet + Send + Sync + 'static,
    ) -> Result<Self> {
        let u = Arc::new(u);
        let p = Arc::new(p);
        let (u1, p1) = (u.clone(), p.clone());
        let source: VectorFn = Arc::new(move |x| {
            let [a, b] = u1(x);
            let q = p1(x);
            let ux = 2.0 * a.h[0] + a.h[2] + b.h[1];
            let uy = b.h[0] + 2.0 * b.h[2] + a.h[1];
            let k = mat_vec(inv_kappa, [a.v, b.v]);
            [-nu * ux + q.d[0] + nu * k[0], -nu * uy + q.d[1] + nu * k[1]]
        });
        let u2 = u.clone();
        let boundary: VectorFn = Arc::new(move |x| {
            let [a, b] = u2(x);
            [a.v, b.v]
        });
        let mut problem = Self::new(name, domain, nu, inv_kappa, source, boundary)?;
        let (u3, u4, u5, p2, p3) = (u.clone(), u.clone(), u, p.clone(), p);
        problem.exact = Some(StokesExact {
            u: Arc::new(move |x| {
                let [a, b] = u3(x);
                [a.v, b.v]
            }),
            grad_u: Arc::new(move |x| {
                let [a, b] = u4(x);
                [a.d, b.d]
            }),
            sigma: Arc::new(move |x| {
                let [a, b] = u5(x);
                let q = p2(x).v;
                [2.0 * nu * a.d[0] - q, nu * (a.d[1] + b.d[0]), 2.0 * nu * b.d[1] - q]
            }),
            p: Arc::new(move |x| p3(x).v),
        });
        Ok(problem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceLaw {
    /// Beavers-Joseph-Saffman: the Darcy tangential velocity is dropped.
    Bjs,
    /// Full Beavers-Joseph law.
    Bj,
}

/// Stokes above a horizontal interface, Darcy below.
#[derive(Clone)]
pub struct CoupledProblem {
    pub stokes: StokesProblem,
    pub darcy: DarcyProblem,
    /// Height of the horizontal interface.
    pub interface_y: f64,
    pub kappa: f64,
    pub law: InterfaceLaw,
    pub alpha: f64,
}

impl CoupledProblem {
    pub fn domain(&self) -> Domain {
        let s = self.stokes.domain;
        let d = self.darcy.domain;
        Domain { x_min: s.x_min, x_max: s.x_max, y_min: d.y_min, y_max: s.y_max }
    }

    /// `kappa = sqrt((nu K t) . t) / alpha` with `t = (1, 0)`.
    pub fn friction_from_alpha(nu: f64, k: Matrix2, alpha: f64) -> f64 {
        (nu * k[0][0]).sqrt() / alpha
    }
}

/// Oscillating-permeability free example: anisotropic `K` with
/// `p = x(1-x) y(1-y) e^{xy}` on the unit square.
pub fn example1() -> DarcyProblem {
    let k = [[10.0, 2.0], [2.0, 100.0]];
    DarcyProblem::manufactured("example1", Domain::unit_square(), k, |[x, y]| {
        let (a, a1, a2) = (x * (1.0 - x), 1.0 - 2.0 * x, -2.0);
        let (b, b1, b2) = (y * (1.0 - y), 1.0 - 2.0 * y, -2.0);
        let e = (x * y).exp();
        Jet {
            v: a * b * e,
            d: [b * e * (a1 + a * y), a * e * (b1 + b * x)],
            h: [
                b * e * (a2 + 2.0 * a1 * y + a * y * y),
                e * ((b1 + b * x) * (a1 + a * y) + a * b),
                a * e * (b2 + 2.0 * b1 * x + b * x * x),
            ],
        }
    })
    .expect("constant SPD permeability")
}

/// `p = (1/m) sum_{i=1..m} sin(2^i pi x) sin(2^i pi y)` with `K = I`.
pub fn example2(m: u32) -> Result<DarcyProblem> {
    if m == 0 {
        return Err(Error::Problem("oscillation level m must be positive".into()));
    }
    let identity = [[1.0, 0.0], [0.0, 1.0]];
    DarcyProblem::manufactured(&format!("example2(m={m})"), Domain::unit_square(), identity, move |[x, y]| {
        let mut j = Jet::default();
        for i in 1..=m {
            let a = 2f64.powi(i as i32) * PI;
            let (sx, cx) = (a * x).sin_cos();
            let (sy, cy) = (a * y).sin_cos();
            j.v += sx * sy;
            j.d[0] += a * cx * sy;
            j.d[1] += a * sx * cy;
            j.h[0] -= a * a * sx * sy;
            j.h[1] += a * a * cx * cy;
            j.h[2] -= a * a * sx * sy;
        }
        j.scale(1.0 / m as f64)
    })
}

/// Stokes flow with `u = (sin^2(pi x) sin(2 pi y), -sin(2 pi x) sin^2(pi y))`
/// and `p = cos(pi x) cos(pi y)`.
pub fn example3(nu: f64) -> Result<StokesProblem> {
    StokesProblem::manufactured(
        &format!("example3(nu={nu})"),
        Domain::unit_square(),
        nu,
        [[0.0; 2]; 2],
        example3_velocity,
        example3_pressure,
    )
}

fn example3_velocity([x, y]: Point) -> [Jet; 2] {
    let (s1x, c1x) = (PI * x).sin_cos();
    let (s1y, c1y) = (PI * y).sin_cos();
    let (s2x, c2x) = (2.0 * PI * x).sin_cos();
    let (s2y, c2y) = (2.0 * PI * y).sin_cos();
    let _ = (c1x, c1y);
    let p2 = PI * PI;
    let a = Jet {
        v: s1x * s1x * s2y,
        d: [PI * s2x * s2y, 2.0 * PI * s1x * s1x * c2y],
        h: [2.0 * p2 * c2x * s2y, 2.0 * p2 * s2x * c2y, -4.0 * p2 * s1x * s1x * s2y],
    };
    let b = Jet {
        v: -s2x * s1y * s1y,
        d: [-2.0 * PI * c2x * s1y * s1y, -PI * s2x * s2y],
        h: [4.0 * p2 * s2x * s1y * s1y, -2.0 * p2 * c2x * s2y, -2.0 * p2 * s2x * c2y],
    };
    [a, b]
}

fn example3_pressure([x, y]: Point) -> Jet {
    let (sx, cx) = (PI * x).sin_cos();
    let (sy, cy) = (PI * y).sin_cos();
    let p2 = PI * PI;
    Jet { v: cx * cy, d: [-PI * sx * cy, -PI * cx * sy], h: [-p2 * cx * cy, p2 * sx * sy, -p2 * cx * cy] }
}

/// Coupled Stokes-Darcy flow on `(0, pi) x (-pi, pi)` with the interface at
/// `y = 0`, `K = alpha I`, `kappa = 1` and the full Beavers-Joseph law.
pub fn example4(alpha: f64, nu: f64) -> Result<CoupledProblem> {
    let stokes_domain = Domain::new(0.0, PI, 0.0, PI)?;
    let darcy_domain = Domain::new(0.0, PI, -PI, 0.0)?;
    let stokes = StokesProblem::manufactured(
        &format!("example4-stokes(alpha={alpha},nu={nu})"),
        stokes_domain,
        nu,
        [[0.0; 2]; 2],
        move |[x, y]| {
            let (sx, cx) = x.sin_cos();
            let (sy, _) = y.sin_cos();
            let (s2y, c2y) = (2.0 * y).sin_cos();
            let a = Jet {
                v: s2y * cx,
                d: [-s2y * sx, 2.0 * c2y * cx],
                h: [-s2y * cx, -2.0 * c2y * sx, -4.0 * s2y * cx],
            };
            let w = sy * sy - 2.0;
            let b = Jet {
                v: w * sx,
                d: [w * cx, s2y * sx],
                h: [-w * sx, s2y * cx, 2.0 * c2y * sx],
            };
            [a.scale(alpha), b.scale(alpha)]
        },
        |[x, y]| {
            let (s2x, c2x) = (2.0 * x).sin_cos();
            let (s2y, c2y) = (2.0 * y).sin_cos();
            Jet {
                v: s2x * s2y,
                d: [2.0 * c2x * s2y, 2.0 * s2x * c2y],
                h: [-4.0 * s2x * s2y, 4.0 * c2x * c2y, -4.0 * s2x * s2y],
            }
        },
    )?;
    let k = [[alpha, 0.0], [0.0, alpha]];
    let darcy = DarcyProblem::manufactured(
        &format!("example4-darcy(alpha={alpha})"),
        darcy_domain,
        k,
        |[x, y]| {
            let (sx, cx) = x.sin_cos();
            let c = 2.0 / PI;
            let q = PI * y - y * y;
            Jet {
                v: c * q * sx,
                d: [c * q * cx, c * (PI - 2.0 * y) * sx],
                h: [-c * q * sx, c * (PI - 2.0 * y) * cx, -2.0 * c * sx],
            }
        },
    )?;
    Ok(CoupledProblem { stokes, darcy, interface_y: 0.0, kappa: 1.0, law: InterfaceLaw::Bj, alpha })
}

/// Brinkman flow with `kinv = alpha I`, `nu = 1`,
/// `u = (a(x) b(y), -b(x) a(y))` where `a = x^2 (x-1)^2` and
/// `b = y (y-1) (2y-1)`, and `p = (2x-1)(2y-1)`.
pub fn example5(alpha: f64) -> Result<BrinkmanProblem> {
    StokesProblem::manufactured(
        &format!("example5(alpha={alpha})"),
        Domain::unit_square(),
        1.0,
        [[alpha, 0.0], [0.0, alpha]],
        |[x, y]| {
            let a = |s: f64| [s * s * (s - 1.0) * (s - 1.0), 2.0 * s * (s - 1.0) * (2.0 * s - 1.0), 2.0 * (6.0 * s * s - 6.0 * s + 1.0)];
            let b = |s: f64| [s * (s - 1.0) * (2.0 * s - 1.0), 6.0 * s * s - 6.0 * s + 1.0, 12.0 * s - 6.0];
            let (ax, ay, bx, by) = (a(x), a(y), b(x), b(y));
            let u1 = Jet {
                v: ax[0] * by[0],
                d: [ax[1] * by[0], ax[0] * by[1]],
                h: [ax[2] * by[0], ax[1] * by[1], ax[0] * by[2]],
            };
            let u2 = Jet {
                v: -bx[0] * ay[0],
                d: [-bx[1] * ay[0], -bx[0] * ay[1]],
                h: [-bx[2] * ay[0], -bx[1] * ay[1], -bx[0] * ay[2]],
            };
            [u1, u2]
        },
        |[x, y]| Jet {
            v: (2.0 * x - 1.0) * (2.0 * y - 1.0),
            d: [2.0 * (2.0 * y - 1.0), 2.0 * (2.0 * x - 1.0)],
            h: [0.0, 4.0, 0.0],
        },
    )
}

/// Parameter rows behind the published result tables: `1`, `2`, `3`, `5`,
/// `6`, `ex3`, `ex4` or `ex5` (a leading `table` is ignored). Every row
/// averages seeds `0..10`.
pub fn preset_run_table(table: &str) -> Result<Vec<RunConfig>> {
    use crate::darcy::DarcyVariant::*;
    let id = table.trim().trim_start_matches("table");
    let base = RunConfig::default();
    let mut rows = Vec::new();
    match id {
        "1" | "2" | "3" => {
            let variant = match id {
                "1" => Hdpg,
                "2" => HdpgReduced,
                _ => HdpgGlobalTrace,
            };
            for (n_u, n_uhat, n_p, global) in [(6, 3, 10, 72), (15, 5, 21, 120), (28, 7, 36, 168), (45, 9, 55, 216)] {
                for k in 3..=8 {
                    rows.push(RunConfig {
                        scheme: Scheme::Darcy(variant),
                        k0: k,
                        n_u: Some(n_u),
                        n_uhat: Some(if variant == HdpgGlobalTrace { global } else { n_uhat }),
                        n_p: Some(n_p),
                        r: 0.6,
                        ..base.clone()
                    });
                }
            }
        }
        "5" => {
            for (n, r) in [(2, 2.1), (4, 1.9), (6, 1.6), (8, 1.6)] {
                for k0 in 2..=10 {
                    rows.push(RunConfig { example: 2, scheme: Scheme::Darcy(Hdg), m: 3, nx: n, ny: n, k0, r, ..base.clone() });
                }
            }
        }
        "6" => {
            for (m, n, r) in [(1, 8, 0.9), (2, 8, 1.1), (3, 16, 1.1), (4, 16, 1.2), (5, 32, 1.1), (6, 32, 1.3)] {
                rows.push(RunConfig { example: 2, scheme: Scheme::Darcy(Hdg), m, nx: n, ny: n, k0: 5, r, ..base.clone() });
            }
        }
        "ex3" => {
            for nu in [0.1, 0.01, 0.001] {
                for (n, r) in [(2, 1.5), (3, 1.2), (4, 0.9)] {
                    for k0 in 4..=10 {
                        rows.push(RunConfig { example: 3, scheme: Scheme::Stokes, nu, nx: n, ny: n, k0, r, ..base.clone() });
                    }
                }
            }
        }
        "ex4" => {
            for (alpha, nu, r_d, r_s) in [(0.01, 0.001, 0.7, 0.6), (0.01, 0.1, 0.7, 0.6), (100.0, 0.001, 1.3, 1.5), (100.0, 0.1, 1.3, 1.5)] {
                for k0 in 4..=9 {
                    rows.push(RunConfig {
                        example: 4,
                        scheme: Scheme::Coupled,
                        alpha,
                        nu,
                        law: InterfaceLaw::Bj,
                        nx: 3,
                        ny: 6,
                        k0,
                        r_s,
                        r_d,
                        points: 30,
                        ..base.clone()
                    });
                }
            }
        }
        "ex5" => {
            for alpha in [1e-3, 1.0, 1e3] {
                for (n, r) in [(2, 0.8), (3, 0.9), (4, 0.9)] {
                    for k0 in 3..=8 {
                        rows.push(RunConfig { example: 5, scheme: Scheme::Brinkman, alpha, nx: n, ny: n, k0, r, ..base.clone() });
                    }
                }
            }
        }
        _ => return Err(Error::Config(format!("unknown table `{table}`"))),
    }
    Ok(rows)
}
