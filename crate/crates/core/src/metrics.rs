//! Relative error norms by element-wise Gauss quadrature.
//!
//! Evaluators return the pointwise components of a field; vector and tensor
//! fields are measured in the Frobenius norm, so a symmetric tensor should be
//! passed with its off-diagonal entry twice (see [`tensor_components`]).

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, Subdomain};
use crate::poly::SymTensor;
use crate::quadrature::{gauss_line, tensor_rect};

/// Full `2 x 2` components of a symmetric tensor, row by row.
pub fn tensor_components(s: SymTensor) -> Vec<f64> {
    vec![s[0], s[1], s[1], s[2]]
}

/// Absolute error and exact norms, `(||num - exact||, ||exact||)`, in
/// `L^q` for `q` in `{1, 2}`.
fn norms<N, E>(mesh: &Mesh, part: Subdomain, points: usize, q: u32, numeric: N, exact: E) -> Result<(f64, f64)>
where
    N: Fn(usize, Point) -> Result<Vec<f64>>,
    E: Fn(Point) -> Vec<f64>,
{
    let line = gauss_line(points)?;
    let (mut err, mut nrm) = (0.0, 0.0);
    for el in mesh.elements.iter().filter(|e| mesh.in_part(e.id, part)) {
        let rule = tensor_rect(&line, &el.bounds);
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            let a = numeric(el.id, x)?;
            let b = exact(x);
            if a.len() != b.len() {
                return Err(Error::Config(format!("field sizes differ: {} vs {}", a.len(), b.len())));
            }
            let d2: f64 = a.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum();
            let e2: f64 = b.iter().map(|b| b * b).sum();
            if q == 1 {
                err += w * d2.sqrt();
                nrm += w * e2.sqrt();
            } else {
                err += w * d2;
                nrm += w * e2;
            }
        }
    }
    if q == 2 {
        err = err.sqrt();
        nrm = nrm.sqrt();
    }
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::Normalization);
    }
    Ok((err, nrm))
}

/// `||num - exact|| / ||exact||` in `L^2` over the elements of `part`.
pub fn relative_l2<N, E>(mesh: &Mesh, part: Subdomain, points: usize, numeric: N, exact: E) -> Result<f64>
where
    N: Fn(usize, Point) -> Result<Vec<f64>>,
    E: Fn(Point) -> Vec<f64>,
{
    let (e, n) = norms(mesh, part, points, 2, numeric, exact)?;
    Ok(e / n)
}

/// Relative `H^1` seminorm error, given gradient evaluators.
pub fn relative_semi_h1<N, E>(mesh: &Mesh, part: Subdomain, points: usize, numeric_grad: N, exact_grad: E) -> Result<f64>
where
    N: Fn(usize, Point) -> Result<Vec<f64>>,
    E: Fn(Point) -> Vec<f64>,
{
    relative_l2(mesh, part, points, numeric_grad, exact_grad)
}

/// `||num - exact||_{L^1} / ||exact||_{L^1}`.
pub fn relative_l1<N, E>(mesh: &Mesh, part: Subdomain, points: usize, numeric: N, exact: E) -> Result<f64>
where
    N: Fn(usize, Point) -> Result<Vec<f64>>,
    E: Fn(Point) -> Vec<f64>,
{
    let (e, n) = norms(mesh, part, points, 1, numeric, exact)?;
    Ok(e / n)
}

/// Errors and solve statistics of one run. Absent metrics are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub e0_p: Option<f64>,
    pub e1_p: Option<f64>,
    pub eps1_p: Option<f64>,
    pub e0_u: Option<f64>,
    pub e0_sigma: Option<f64>,
    /// Stokes velocity in coupled runs.
    pub e0_u_stokes: Option<f64>,
    pub e0_p_stokes: Option<f64>,
    pub e0_u_darcy: Option<f64>,
    /// Darcy pressure in coupled runs.
    pub e0_p_darcy: Option<f64>,
    pub dof: usize,
    pub rows: usize,
    pub rank: usize,
    pub residual_norm: f64,
    pub runtime_ms: f64,
}

impl ErrorReport {
    /// Named error values in a fixed order.
    pub fn errors(&self) -> [(&'static str, Option<f64>); 9] {
        [
            ("e0_p", self.e0_p),
            ("e1_p", self.e1_p),
            ("eps1_p", self.eps1_p),
            ("e0_u", self.e0_u),
            ("e0_sigma", self.e0_sigma),
            ("e0_uS", self.e0_u_stokes),
            ("e0_pS", self.e0_p_stokes),
            ("e0_uD", self.e0_u_darcy),
            ("e0_pD", self.e0_p_darcy),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Domain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh() -> Mesh {
        Mesh::uniform(Domain::unit_square(), 3, 2, None).unwrap()
    }

    fn exact(x: Point) -> Vec<f64> {
        vec![x[0]]
    }

    #[test]
    fn l2_examples() {
        let m = mesh();
        let s = Subdomain::Single;
        assert_eq!(relative_l2(&m, s, 4, |_, x| Ok(exact(x)), exact).unwrap(), 0.0);
        assert_eq!(relative_l2(&m, s, 4, |_, _| Ok(vec![0.0]), exact).unwrap(), 1.0);
        let e = relative_l2(&m, s, 4, |_, x| Ok(vec![1.1 * x[0]]), exact).unwrap();
        assert!((e - 0.1).abs() < 1e-14);
        assert!(matches!(relative_l2(&m, s, 4, |_, _| Ok(vec![1.0]), |_| vec![0.0]), Err(Error::Normalization)));
    }

    #[test]
    fn semi_h1_examples() {
        let m = mesh();
        let s = Subdomain::Single;
        let g = |x: Point| vec![2.0 * x[0], 1.0];
        assert_eq!(relative_semi_h1(&m, s, 4, |_, x| Ok(g(x)), g).unwrap(), 0.0);
        let e = relative_semi_h1(&m, s, 4, |_, x| Ok(g(x).iter().map(|v| 2.0 * v).collect()), g).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
        assert!(relative_semi_h1(&m, s, 4, |_, _| Ok(vec![1.0, 0.0]), |_| vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn l1_examples() {
        let m = mesh();
        let s = Subdomain::Single;
        let one = |_: Point| vec![1.0];
        assert_eq!(relative_l1(&m, s, 3, |_, x| Ok(one(x)), one).unwrap(), 0.0);
        assert_eq!(relative_l1(&m, s, 3, |_, _| Ok(vec![0.0]), one).unwrap(), 1.0);
        let e = relative_l1(&m, s, 3, |_, _| Ok(vec![1.25]), one).unwrap();
        assert!((e - 0.25).abs() < 1e-14);
    }

    #[test]
    fn triangle_inequality() {
        let m = mesh();
        let s = Subdomain::Single;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = move |x: Point, o: usize| vec![c[o] + c[o + 1] * x[0] + c[o + 2] * (3.0 * x[1]).sin()];
            let (fa, fb, fc, fd) = (f.clone(), f.clone(), f.clone(), f);
            let a = move |_: usize, x: Point| Ok(fa(x, 0));
            let b_num = move |_: usize, x: Point| Ok(fb(x, 3));
            let b = move |x: Point| fd(x, 3);
            let c = move |x: Point| fc(x, 6);
            let (ac, nc) = norms(&m, s, 5, 2, a.clone(), c.clone()).unwrap();
            let (ab, _) = norms(&m, s, 5, 2, a, b).unwrap();
            let (bc, _) = norms(&m, s, 5, 2, b_num, c).unwrap();
            assert!(ac <= ab + bc + 1e-14);
            assert!(ac / nc <= (ab + bc) / nc + 1e-14);
        }
    }

    #[test]
    fn part_restriction() {
        let d = Domain::new(0.0, 1.0, -1.0, 1.0).unwrap();
        let m = Mesh::uniform(d, 2, 2, Some(0.0)).unwrap();
        // Error only in the lower half.
        let num = |_: usize, x: Point| Ok(vec![if x[1] < 0.0 { 0.0 } else { 1.0 }]);
        assert_eq!(relative_l2(&m, Subdomain::Stokes, 3, num, |_| vec![1.0]).unwrap(), 0.0);
        assert_eq!(relative_l2(&m, Subdomain::Darcy, 3, num, |_| vec![1.0]).unwrap(), 1.0);
    }

    #[test]
    fn tensor_frobenius_counts_off_diagonal_twice() {
        assert_eq!(tensor_components([1.0, 2.0, 3.0]), vec![1.0, 2.0, 2.0, 3.0]);
    }
}
