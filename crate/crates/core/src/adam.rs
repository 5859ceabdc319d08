//! Adam over a flat parameter vector, with a stepped geometric
//! learning-rate decay.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub base_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// lr at step s is base_lr · decay^⌊s / decay_every⌋.
    pub decay: f64,
    pub decay_every: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            base_lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay: 0.95,
            decay_every: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n_params: usize) -> Result<Self> {
        if !(cfg.base_lr > 0.0
            && (0.0..1.0).contains(&cfg.beta1)
            && (0.0..1.0).contains(&cfg.beta2)
            && cfg.eps > 0.0
            && cfg.decay > 0.0
            && cfg.decay_every > 0)
        {
            return Err(Error::InvalidParameter("invalid Adam configuration".into()));
        }
        Ok(Adam { cfg, m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 })
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// Learning rate that the next `step` call will use.
    pub fn current_lr(&self) -> f64 {
        self.cfg.base_lr * self.cfg.decay.powi((self.step / self.cfg.decay_every) as i32)
    }

    /// One Adam update with bias correction. Updates params in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        let lr = self.current_lr();
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.cfg.beta1.powi(t);
        let c2 = 1.0 - self.cfg.beta2.powi(t);
        let (b1, b2, eps) = (self.cfg.beta1, self.cfg.beta2, self.cfg.eps);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
}
