//! Dense layers with explicit forward caches and backward passes.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

pub const LEAKY_SLOPE: f64 = 0.01;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Fully connected layer `y = x W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Linear {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Uniform fan-in initialization, bound `1 / sqrt(inputs)`.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        Linear {
            weight: Array2::from_shape_simple_fn((inputs, outputs), || dist.sample(rng)),
            bias: Array1::from_shape_simple_fn(outputs, || dist.sample(rng)),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Accumulates parameter gradients into `grad` and returns `∂L/∂x`.
    pub fn backward(&self, x: &Array2<f64>, gy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        grad.weight += &x.t().dot(gy);
        grad.bias += &gy.sum_axis(Axis(0));
        gy.dot(&self.weight.t())
    }
}

/// Per-feature batch normalization over the rows of its input.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

/// What the backward pass needs from a batch-norm forward.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
    batch_stats: bool,
}

/// Batch statistics observed in a training forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    pub count: usize,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(features),
            beta: Array1::zeros(features),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
        }
    }

    pub fn zeros(features: usize) -> Self {
        BatchNorm {
            gamma: Array1::zeros(features),
            beta: Array1::zeros(features),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
        }
    }

    /// Normalizes with batch statistics when `train`, running statistics
    /// otherwise. Empty batches pass through untouched.
    pub fn forward(
        &self,
        x: &Array2<f64>,
        train: bool,
    ) -> (Array2<f64>, BatchNormCache, Option<BatchStats>) {
        let n = x.nrows();
        let (mean, var, stats) = if train && n > 0 {
            let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
            let var = x.var_axis(Axis(0), 0.0);
            let stats = BatchStats {
                mean: mean.clone(),
                var: var.clone(),
                count: n,
            };
            (mean, var, Some(stats))
        } else {
            (self.running_mean.clone(), self.running_var.clone(), None)
        };
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let normalized = (x - &mean) * &inv_std;
        let y = &normalized * &self.gamma + &self.beta;
        (
            y,
            BatchNormCache {
                normalized,
                inv_std,
                batch_stats: train && n > 0,
            },
            stats,
        )
    }

    pub fn backward(
        &self,
        cache: &BatchNormCache,
        gy: &Array2<f64>,
        grad: &mut BatchNorm,
    ) -> Array2<f64> {
        grad.gamma += &(gy * &cache.normalized).sum_axis(Axis(0));
        grad.beta += &gy.sum_axis(Axis(0));
        let g_norm = gy * &self.gamma;
        if !cache.batch_stats {
            return g_norm * &cache.inv_std;
        }
        let n = gy.nrows() as f64;
        let sum_g = g_norm.sum_axis(Axis(0));
        let sum_gx = (&g_norm * &cache.normalized).sum_axis(Axis(0));
        let centered = g_norm * n - &sum_g - &(&cache.normalized * &sum_gx);
        centered * &cache.inv_std / n
    }

    /// Exponential moving average of the batch statistics; the variance
    /// is updated with its unbiased estimate.
    pub fn update_running(&mut self, stats: &BatchStats) {
        let unbias = if stats.count > 1 {
            stats.count as f64 / (stats.count - 1) as f64
        } else {
            1.0
        };
        self.running_mean = &self.running_mean * (1.0 - BN_MOMENTUM) + &stats.mean * BN_MOMENTUM;
        self.running_var =
            &self.running_var * (1.0 - BN_MOMENTUM) + &stats.var * (BN_MOMENTUM * unbias);
    }
}

/// Embedding table with `rows` entries; indices past the end are clamped
/// to the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub table: Array2<f64>,
}

impl Embedding {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Embedding {
            table: Array2::zeros((rows.max(1), dim)),
        }
    }

    /// Standard normal entries.
    pub fn init(rows: usize, dim: usize, rng: &mut impl Rng) -> Self {
        Embedding {
            table: Array2::from_shape_simple_fn((rows.max(1), dim), || StandardNormal.sample(rng)),
        }
    }

    pub fn row_index(&self, index: usize) -> usize {
        index.min(self.table.nrows() - 1)
    }

    pub fn lookup_add(&self, indices: &[usize], out: &mut Array2<f64>) {
        for (mut row, &i) in out.rows_mut().into_iter().zip(indices) {
            row += &self.table.row(self.row_index(i));
        }
    }

    pub fn backward(&self, indices: &[usize], gy: &Array2<f64>, grad: &mut Embedding) {
        for (g, &i) in gy.rows().into_iter().zip(indices) {
            let mut row = grad.table.row_mut(self.row_index(i));
            row += &g;
        }
    }
}

pub fn leaky_relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { LEAKY_SLOPE * v })
}

pub fn leaky_relu_backward(x: &Array2<f64>, gy: &Array2<f64>) -> Array2<f64> {
    let mut g = gy.clone();
    g.zip_mut_with(x, |g, &v| {
        if v <= 0.0 {
            *g *= LEAKY_SLOPE
        }
    });
    g
}

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

pub fn relu_backward(x: &Array2<f64>, gy: &Array2<f64>) -> Array2<f64> {
    let mut g = gy.clone();
    g.zip_mut_with(x, |g, &v| {
        if v <= 0.0 {
            *g = 0.0
        }
    });
    g
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean softmax cross-entropy over the rows of `logits`, and its gradient.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> (f64, Array2<f64>) {
    let n = logits.nrows().max(1) as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for ((row, mut g), &y) in logits.rows().into_iter().zip(grad.rows_mut()).zip(labels) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = ((row[k] - log_z).exp() - if k == y { 1.0 } else { 0.0 }) / n;
        }
    }
    (loss / n, grad)
}
