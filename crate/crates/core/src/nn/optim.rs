//! Adam with L2 weight decay and a step-halving learning-rate schedule.

use super::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Added to the gradient as `weight_decay * θ`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &mut ModelParams) -> Self {
        let shapes: Vec<usize> = params
            .trainable_mut()
            .iter()
            .map(|t| t.data.len())
            .collect();
        Adam {
            config,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &mut ModelParams, lr: f64) {
        let AdamConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        let tensors = params
            .trainable_mut()
            .into_iter()
            .zip(grads.trainable_mut());
        for (i, (p, g)) in tensors.enumerate() {
            debug_assert_eq!(p.name, g.name);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.data.len() {
                let grad = g.data[j] + weight_decay * p.data[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * grad;
                v[j] = beta2 * v[j] + (1.0 - beta2) * grad * grad;
                p.data[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
            }
        }
    }
}

/// `lr0` halved every `period` epochs; `epoch` counts from zero.
pub fn learning_rate(lr0: f64, period: usize, epoch: usize) -> f64 {
    if period == 0 {
        return lr0;
    }
    lr0 / 2f64.powi((epoch / period) as i32)
}
