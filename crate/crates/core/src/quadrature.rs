//! Gauss-Legendre rules on `[0, 1]`, mapped to rectangles and edges.

use crate::error::{Error, Result};
use crate::mesh::{Domain, Edge, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Edge parameters of the points, `t = 0` at `Edge::start`.
    pub params: Vec<f64>,
}

impl LineRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

impl RectRule {
    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

impl EdgeRule {
    pub fn integrate(&self, f: impl Fn(Point, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.params)
            .zip(&self.weights)
            .map(|((&p, &t), &w)| w * f(p, t))
            .sum()
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`, exact for degree `2n - 1`.
pub fn gauss_line(n: usize) -> Result<LineRule> {
    if n == 0 {
        return Err(Error::InvalidOrder(n));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th root on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1, 1] to [0, 1]; the largest root comes first.
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    Ok(LineRule { points, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Tensor-product rule on a rectangle; weights sum to the area.
pub fn tensor_rect(rule: &LineRule, rect: &Domain) -> RectRule {
    let n = rule.len();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    let (w, h) = (rect.width(), rect.height());
    for (&sy, &wy) in rule.points.iter().zip(&rule.weights) {
        for (&sx, &wx) in rule.points.iter().zip(&rule.weights) {
            points.push([rect.x_min + w * sx, rect.y_min + h * sy]);
            weights.push(wx * wy * w * h);
        }
    }
    RectRule { points, weights }
}

/// Rule along an edge; weights sum to the edge length.
pub fn edge_rule(rule: &LineRule, edge: &Edge) -> EdgeRule {
    EdgeRule {
        points: rule.points.iter().map(|&t| edge.point_at(t)).collect(),
        weights: rule.weights.iter().map(|&w| w * edge.length).collect(),
        params: rule.points.clone(),
    }
}
