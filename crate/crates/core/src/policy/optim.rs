use serde::{Deserialize, Serialize};

use super::net::PolicyParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Steps *descend* along the given gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: PolicyParams,
    v: PolicyParams,
    steps: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &PolicyParams) -> Self {
        Self {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut PolicyParams, grads: &PolicyParams) {
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.steps += 1;
        let bc1 = 1.0 - beta1.powi(self.steps as i32);
        let bc2 = 1.0 - beta2.powi(self.steps as i32);
        for (((p, g), m), v) in params
            .tensors
            .iter_mut()
            .zip(&grads.tensors)
            .zip(&mut self.m.tensors)
            .zip(&mut self.v.tensors)
        {
            for (((pi, &gi), mi), vi) in p
                .data
                .iter_mut()
                .zip(&g.data)
                .zip(&mut m.data)
                .zip(&mut v.data)
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                if lr != 0.0 {
                    *pi -= lr * (*mi / bc1) / ((*vi / bc2).sqrt() + eps);
                }
            }
        }
    }
}

/// Rescales `grads` to at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut PolicyParams, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}
