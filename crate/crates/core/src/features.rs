//! Randomized single-hidden-layer tanh feature spaces.
//!
//! Hidden weights and biases are drawn once from `U(-r, r)` and frozen; the
//! output-layer coefficients are the unknowns of the least-squares systems and
//! never live here. Every entity (element, edge, or the whole domain) draws
//! from its own ChaCha stream keyed by `(field, entity)`, so spaces do not
//! depend on construction order.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::Point;

/// Unknown fields of the discrete schemes. Used both to key random streams
/// and to label column blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Velocity,
    Pressure,
    FluxTrace,
    PressureTrace,
    Stress,
    StressTrace,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Velocity => "u",
            Field::Pressure => "p",
            Field::FluxTrace => "uhat",
            Field::PressureTrace => "phat",
            Field::Stress => "sigma",
            Field::StressTrace => "sigmahat",
        }
    }

    fn code(self) -> u64 {
        match self {
            Field::Velocity => 1,
            Field::Pressure => 2,
            Field::FluxTrace => 3,
            Field::PressureTrace => 4,
            Field::Stress => 5,
            Field::StressTrace => 6,
        }
    }
}

/// Entity index reserved for domain-wide (global) spaces.
pub const GLOBAL_ENTITY: usize = usize::MAX >> 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSpaceConfig {
    pub neurons: usize,
    /// Half-width `r` of the sampling distribution `U(-r, r)`.
    pub half_width: f64,
    pub seed: u64,
    /// Reuse one draw for every entity of a field instead of independent draws.
    pub shared: bool,
}

impl FeatureSpaceConfig {
    pub fn new(neurons: usize, half_width: f64, seed: u64) -> Self {
        assert!(neurons >= 1, "feature spaces need at least one neuron");
        assert!(half_width > 0.0, "half-width must be positive");
        Self { neurons, half_width, seed, shared: false }
    }

    pub fn with_neurons(self, neurons: usize) -> Self {
        Self::new(neurons, self.half_width, self.seed).shared(self.shared)
    }

    pub fn shared(mut self, shared: bool) -> Self {
        self.shared = shared;
        self
    }

    fn rng(&self, field: Field, entity: usize) -> ChaCha8Rng {
        let entity = if self.shared && entity != GLOBAL_ENTITY { 0 } else { entity };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((field.code() << 48) ^ entity as u64);
        rng
    }
}

/// `tanh(W x + b)` with `W` of shape `N x 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementFeatureSpace {
    pub weights: Vec<[f64; 2]>,
    pub biases: Vec<f64>,
}

impl ElementFeatureSpace {
    pub fn new(config: &FeatureSpaceConfig, field: Field, entity: usize) -> Self {
        let mut rng = config.rng(field, entity);
        let dist = Uniform::new_inclusive(-config.half_width, config.half_width);
        let weights = (0..config.neurons)
            .map(|_| [dist.sample(&mut rng), dist.sample(&mut rng)])
            .collect();
        let biases = (0..config.neurons).map(|_| dist.sample(&mut rng)).collect();
        Self { weights, biases }
    }

    /// A single space over the whole domain, evaluated only on edges.
    pub fn global(config: &FeatureSpaceConfig, field: Field) -> Self {
        Self::new(config, field, GLOBAL_ENTITY)
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }

    pub fn eval(&self, x: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: Point, out: &mut [f64]) {
        for ((o, w), b) in out.iter_mut().zip(&self.weights).zip(&self.biases) {
            *o = (w[0] * x[0] + w[1] * x[1] + b).tanh();
        }
    }

    /// Row `i` is `(1 - tanh^2(w_i . x + b_i)) w_i`.
    pub fn eval_gradients(&self, x: Point) -> Vec<[f64; 2]> {
        let mut vals = vec![0.0; self.len()];
        let mut grads = vec![[0.0; 2]; self.len()];
        self.eval_with_gradients_into(x, &mut vals, &mut grads);
        grads
    }

    pub fn eval_with_gradients_into(&self, x: Point, vals: &mut [f64], grads: &mut [[f64; 2]]) {
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let v = (w[0] * x[0] + w[1] * x[1] + b).tanh();
            let d = 1.0 - v * v;
            vals[i] = v;
            grads[i] = [d * w[0], d * w[1]];
        }
    }
}

/// Edge features with flip structure:
/// `phi_i(t) = tanh(w_i t + b_i) + tanh(w_{N+1-i} (1 - t) + b_{N+1-i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatureSpace {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl EdgeFeatureSpace {
    pub fn new(config: &FeatureSpaceConfig, field: Field, edge: usize) -> Self {
        let mut rng = config.rng(field, edge);
        let dist = Uniform::new_inclusive(-config.half_width, config.half_width);
        let weights = (0..config.neurons).map(|_| dist.sample(&mut rng)).collect();
        let biases = (0..config.neurons).map(|_| dist.sample(&mut rng)).collect();
        Self { weights, biases }
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let n = self.len();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let j = n - 1 - i;
            *o = (self.weights[i] * t + self.biases[i]).tanh()
                + (self.weights[j] * (1.0 - t) + self.biases[j]).tanh();
        }
    }
}
