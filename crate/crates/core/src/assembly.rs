//! Tabulation of trial and test functions at quadrature points and the
//! weighted products used to build element and face blocks.

use faer::{Mat, MatRef};

use crate::features::{EdgeFeatureSpace, ElementFeatureSpace};
use crate::mesh::Point;
use crate::poly::{EdgePolyBasis, ElementPolyBasis};

/// Values and partial derivatives, one row per point.
pub(crate) struct Tab {
    pub vals: Mat<f64>,
    pub dx: Mat<f64>,
    pub dy: Mat<f64>,
}

impl Tab {
    pub fn d(&self, c: usize) -> &Mat<f64> {
        if c == 0 {
            &self.dx
        } else {
            &self.dy
        }
    }
}

fn tabulate(n: usize, pts: &[Point], mut f: impl FnMut(Point, &mut [f64], &mut [[f64; 2]])) -> Tab {
    let mut vals = Mat::zeros(pts.len(), n);
    let mut dx = Mat::zeros(pts.len(), n);
    let mut dy = Mat::zeros(pts.len(), n);
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 2]; n];
    for (q, &x) in pts.iter().enumerate() {
        f(x, &mut v, &mut g);
        for i in 0..n {
            vals[(q, i)] = v[i];
            dx[(q, i)] = g[i][0];
            dy[(q, i)] = g[i][1];
        }
    }
    Tab { vals, dx, dy }
}

/// Element functions used as trial or test spaces.
#[derive(Clone, Copy)]
pub(crate) enum ElementFns<'a> {
    Features(&'a ElementFeatureSpace),
    Poly(&'a ElementPolyBasis),
    /// Features recombined by a fixed matrix, `phi T`.
    Combined(&'a ElementFeatureSpace, &'a Mat<f64>),
}

impl ElementFns<'_> {
    pub fn len(&self) -> usize {
        match self {
            ElementFns::Features(s) => s.len(),
            ElementFns::Poly(b) => b.dim(),
            ElementFns::Combined(_, t) => t.ncols(),
        }
    }

    pub fn tab(&self, pts: &[Point]) -> Tab {
        match self {
            ElementFns::Features(s) => tabulate(s.len(), pts, |x, v, g| s.eval_with_gradients_into(x, v, g)),
            ElementFns::Poly(b) => tabulate(b.dim(), pts, |x, v, g| b.eval_with_gradients_into(x, v, g)),
            ElementFns::Combined(s, t) => {
                let raw = ElementFns::Features(s).tab(pts);
                Tab { vals: &raw.vals * *t, dx: &raw.dx * *t, dy: &raw.dy * *t }
            }
        }
    }

    pub fn values(&self, pts: &[Point]) -> Mat<f64> {
        match self {
            ElementFns::Features(s) => {
                let mut m = Mat::zeros(pts.len(), s.len());
                let mut v = vec![0.0; s.len()];
                for (q, &x) in pts.iter().enumerate() {
                    s.eval_into(x, &mut v);
                    for (i, vi) in v.iter().enumerate() {
                        m[(q, i)] = *vi;
                    }
                }
                m
            }
            ElementFns::Poly(_) => self.tab(pts).vals,
            ElementFns::Combined(s, t) => ElementFns::Features(s).values(pts) * *t,
        }
    }
}

/// Edge functions in the edge parameter, or the normal component of a
/// vector-valued global space with shared features.
#[derive(Clone, Copy)]
pub(crate) enum EdgeFns<'a> {
    Features(&'a EdgeFeatureSpace),
    Poly(EdgePolyBasis),
    Global(&'a ElementFeatureSpace, Point),
    Combined(&'a EdgeFeatureSpace, &'a Mat<f64>),
}

impl EdgeFns<'_> {
    pub fn len(&self) -> usize {
        match self {
            EdgeFns::Features(s) => s.len(),
            EdgeFns::Poly(b) => b.dim(),
            EdgeFns::Global(s, _) => 2 * s.len(),
            EdgeFns::Combined(_, t) => t.ncols(),
        }
    }

    pub fn values(&self, pts: &[Point], params: &[f64]) -> Mat<f64> {
        if let EdgeFns::Combined(s, t) = self {
            return EdgeFns::Features(s).values(pts, params) * *t;
        }
        let n = self.len();
        let mut m = Mat::zeros(params.len(), n);
        let mut v = vec![0.0; n];
        for q in 0..params.len() {
            match self {
                EdgeFns::Features(s) => s.eval_into(params[q], &mut v),
                EdgeFns::Poly(b) => v.copy_from_slice(&b.eval(params[q])),
                EdgeFns::Combined(..) => unreachable!(),
                EdgeFns::Global(s, normal) => {
                    let (a, b) = v.split_at_mut(n / 2);
                    s.eval_into(pts[q], a);
                    for i in 0..n / 2 {
                        b[i] = a[i] * normal[1];
                        a[i] *= normal[0];
                    }
                }
            }
            for i in 0..n {
                m[(q, i)] = v[i];
            }
        }
        m
    }
}

/// `T` such that the nonzero columns of `vals * T` are orthonormal in the
/// discrete inner product with weights `w`. Built from a column-pivoted QR of
/// `diag(sqrt(w)) vals`; directions with `|R_jj| <= tol |R_00|` get a zero
/// column, so the shape stays `n x n`.
pub(crate) fn orthonormalizer(w: &[f64], vals: MatRef<'_, f64>, tol: f64) -> Mat<f64> {
    let n = vals.ncols();
    assert!(vals.nrows() >= n, "need at least as many points as functions");
    let a = Mat::from_fn(vals.nrows(), n, |q, i| w[q].sqrt() * vals[(q, i)]);
    let qr = a.col_piv_qr();
    let r = qr.thin_R();
    let r00 = r[(0, 0)].abs();
    let rank = (0..n).take_while(|&j| r[(j, j)].abs() > tol * r00 && r[(j, j)].is_finite()).count();
    let mut inv = Mat::<f64>::identity(rank, rank);
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(
        r.get(..rank, ..rank),
        inv.as_mut(),
        faer::Par::Seq,
    );
    let (fwd, _) = qr.P().arrays();
    let mut t = Mat::zeros(n, n);
    for i in 0..rank {
        for j in 0..rank {
            t[(fwd[i], j)] = inv[(i, j)];
        }
    }
    t
}

/// `A^T diag(w) B`.
pub(crate) fn gram(w: &[f64], a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let wa = Mat::from_fn(a.nrows(), a.ncols(), |q, i| w[q] * a[(q, i)]);
    wa.transpose() * b
}

/// `A^T diag(w) f`.
pub(crate) fn moment(w: &[f64], a: MatRef<'_, f64>, f: &[f64]) -> Vec<f64> {
    (0..a.ncols()).map(|i| (0..a.nrows()).map(|q| w[q] * a[(q, i)] * f[q]).sum()).collect()
}

/// Horizontally concatenates blocks with equal row counts.
pub(crate) fn hcat(blocks: &[MatRef<'_, f64>]) -> Mat<f64> {
    let rows = blocks[0].nrows();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows);
        out.as_mut().get_mut(.., c0..c0 + b.ncols()).copy_from(b);
        c0 += b.ncols();
    }
    out
}

/// Vertically concatenates blocks with equal column counts.
pub(crate) fn vcat(blocks: &[MatRef<'_, f64>]) -> Mat<f64> {
    let cols = blocks[0].ncols();
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols);
        out.as_mut().get_mut(r0..r0 + b.nrows(), ..).copy_from(b);
        r0 += b.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_loops() {
        let a = Mat::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
        let b = Mat::from_fn(4, 3, |i, j| (i * j) as f64 - 1.0);
        let w = [0.5, 1.0, 2.0, 0.25];
        let g = gram(&w, a.as_ref(), b.as_ref());
        for i in 0..2 {
            for j in 0..3 {
                let v: f64 = (0..4).map(|q| w[q] * a[(q, i)] * b[(q, j)]).sum();
                assert_eq!(g[(i, j)], v);
            }
        }
        let f = [1.0, -1.0, 0.5, 2.0];
        let m = moment(&w, a.as_ref(), &f);
        assert_eq!(m[0], (0..4).map(|q| w[q] * a[(q, 0)] * f[q]).sum::<f64>());
    }

    #[test]
    fn concatenation() {
        let a = Mat::from_fn(2, 1, |i, _| i as f64);
        let b = Mat::from_fn(2, 2, |i, j| (10 * i + j) as f64);
        let h = hcat(&[a.as_ref(), b.as_ref()]);
        assert_eq!(h[(1, 2)], 11.0);
        let v = vcat(&[b.as_ref(), b.as_ref()]);
        assert_eq!((v.nrows(), v[(3, 1)]), (4, 11.0));
    }
}
