//! Polynomial test spaces.
//!
//! Element bases are products of orthonormal shifted Legendre polynomials on
//! the reference square, restricted to total degree `k`. Edge bases are the 1D
//! factors in the edge parameter `t`.

use crate::mesh::{Domain, Point};

/// Number of total-degree-`k` monomials in two variables.
pub fn scalar_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Orthonormal Legendre values `l_i(s) = sqrt(2i+1) P_i(2s-1)` and their
/// derivatives for `i = 0..=k`, on `[0, 1]`.
pub fn legendre_orthonormal(k: usize, s: f64, vals: &mut [f64], ders: &mut [f64]) {
    let x = 2.0 * s - 1.0;
    let mut p_prev = 1.0;
    let mut d_prev = 0.0;
    vals[0] = 1.0;
    ders[0] = 0.0;
    if k == 0 {
        return;
    }
    let mut p = x;
    let mut d = 1.0;
    vals[1] = 3f64.sqrt() * p;
    ders[1] = 2.0 * 3f64.sqrt() * d;
    for n in 1..k {
        let nf = n as f64;
        let p_next = ((2.0 * nf + 1.0) * x * p - nf * p_prev) / (nf + 1.0);
        let d_next = d_prev + (2.0 * nf + 1.0) * p;
        p_prev = p;
        d_prev = d;
        p = p_next;
        d = d_next;
        let c = (2.0 * nf + 3.0).sqrt();
        vals[n + 1] = c * p;
        ders[n + 1] = 2.0 * c * d;
    }
}

/// Total-degree `P_k` on one rectangle.
#[derive(Debug, Clone)]
pub struct ElementPolyBasis {
    pub degree: usize,
    pub bounds: Domain,
    /// `(i, j)` Legendre degrees of each member, graded by total degree.
    pub indices: Vec<(usize, usize)>,
}

impl ElementPolyBasis {
    pub fn new(degree: usize, bounds: Domain) -> Self {
        let mut indices = Vec::with_capacity(scalar_dim(degree));
        for total in 0..=degree {
            for j in 0..=total {
                indices.push((total - j, j));
            }
        }
        Self { degree, bounds, indices }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn eval(&self, x: Point) -> Vec<f64> {
        let mut vals = vec![0.0; self.dim()];
        let mut grads = vec![[0.0; 2]; self.dim()];
        self.eval_with_gradients_into(x, &mut vals, &mut grads);
        vals
    }

    pub fn eval_gradients(&self, x: Point) -> Vec<[f64; 2]> {
        let mut vals = vec![0.0; self.dim()];
        let mut grads = vec![[0.0; 2]; self.dim()];
        self.eval_with_gradients_into(x, &mut vals, &mut grads);
        grads
    }

    /// Values and physical gradients at a physical point.
    pub fn eval_with_gradients_into(&self, x: Point, vals: &mut [f64], grads: &mut [[f64; 2]]) {
        let k = self.degree;
        let [xi, eta] = self.bounds.to_reference(x);
        let mut lx = [0.0; 32];
        let mut dx = [0.0; 32];
        let mut ly = [0.0; 32];
        let mut dy = [0.0; 32];
        assert!(k < 32, "polynomial degree {k} too large");
        legendre_orthonormal(k, xi, &mut lx, &mut dx);
        legendre_orthonormal(k, eta, &mut ly, &mut dy);
        let sx = 1.0 / self.bounds.width();
        let sy = 1.0 / self.bounds.height();
        for (m, &(i, j)) in self.indices.iter().enumerate() {
            vals[m] = lx[i] * ly[j];
            grads[m] = [dx[i] * ly[j] * sx, lx[i] * dy[j] * sy];
        }
    }
}

/// `P_k` in the edge parameter `t` in `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct EdgePolyBasis {
    pub degree: usize,
}

impl EdgePolyBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut vals = vec![0.0; self.dim()];
        let mut ders = vec![0.0; self.dim()];
        legendre_orthonormal(self.degree, t, &mut vals, &mut ders);
        vals
    }
}

/// Symmetric 2x2 tensor stored as `(s11, s12, s22)`.
pub type SymTensor = [f64; 3];

pub fn trace(s: SymTensor) -> f64 {
    s[0] + s[2]
}

/// `s - tr(s)/2 I`.
pub fn deviatoric(s: SymTensor) -> SymTensor {
    let half = 0.5 * trace(s);
    [s[0] - half, s[1], s[2] - half]
}

/// Frobenius product `a : b`, with the off-diagonal entry counted twice.
pub fn double_dot(a: SymTensor, b: SymTensor) -> f64 {
    a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2]
}

/// `a^d : b^d` without forming the deviatoric parts.
pub fn deviatoric_product(a: SymTensor, b: SymTensor) -> f64 {
    0.5 * (a[0] - a[2]) * (b[0] - b[2]) + 2.0 * a[1] * b[1]
}

/// `s n`.
pub fn contract_normal(s: SymTensor, n: Point) -> Point {
    [s[0] * n[0] + s[1] * n[1], s[1] * n[0] + s[2] * n[1]]
}

/// Full 2x2 matrix of a symmetric tensor.
pub fn to_matrix(s: SymTensor) -> [[f64; 2]; 2] {
    [[s[0], s[1]], [s[1], s[2]]]
}

/// Symmetric gradient `(grad u + grad u^T) / 2` of a vector field from its
/// component gradients.
pub fn strain(grad_ux: [f64; 2], grad_uy: [f64; 2]) -> SymTensor {
    [grad_ux[0], 0.5 * (grad_ux[1] + grad_uy[0]), grad_uy[1]]
}

/// Symmetric tensor tests: member `c * dim + i` puts scalar function `i`
/// into component `c` of `(11, 12, 22)`.
#[derive(Debug, Clone)]
pub struct SymmetricTensorBasis {
    pub scalar: ElementPolyBasis,
}

impl SymmetricTensorBasis {
    pub fn new(degree: usize, bounds: Domain) -> Self {
        Self { scalar: ElementPolyBasis::new(degree, bounds) }
    }

    pub fn len(&self) -> usize {
        3 * self.scalar.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Member tensor from precomputed scalar values.
    pub fn member(&self, index: usize, scalar_vals: &[f64]) -> SymTensor {
        let d = self.scalar.dim();
        let mut t = [0.0; 3];
        t[index / d] = scalar_vals[index % d];
        t
    }

    /// Row divergence of a member from precomputed scalar gradients.
    pub fn divergence(&self, index: usize, scalar_grads: &[[f64; 2]]) -> Point {
        let d = self.scalar.dim();
        let g = scalar_grads[index % d];
        match index / d {
            0 => [g[0], 0.0],
            1 => [g[1], g[0]],
            _ => [0.0, g[1]],
        }
    }
}
