use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::{Error, Result};

/// Adam hyperparameters. Defaults follow the usual settings with the
/// training learning rate of 0.001.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Bias-corrected Adam. Moment tensors are created lazily, keyed by
/// parameter name, and mirror the parameter shapes.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub cfg: AdamConfig,
    step: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig) -> Self {
        AdamState {
            cfg,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over named parameters. `grads` must carry exactly the
    /// same keys as the parameter iterator.
    pub fn step<'a>(
        &mut self,
        params: impl Iterator<Item = (&'a str, &'a mut Tensor)>,
        grads: &BTreeMap<String, Tensor>,
    ) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.cfg.beta1.powi(t);
        let bc2 = 1.0 - self.cfg.beta2.powi(t);
        let mut seen = 0usize;

        for (name, param) in params {
            let g = grads.get(name).ok_or_else(|| {
                Error::Other(format!("adam: missing gradient for parameter `{name}`"))
            })?;
            if !g.same_shape(param) {
                return Err(Error::Other(format!(
                    "adam: gradient shape {:?} != parameter shape {:?} for `{name}`",
                    g.shape(),
                    param.shape()
                )));
            }
            seen += 1;
            let m = self
                .m
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(param.shape()));
            let v = self
                .v
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(param.shape()));
            let (b1, b2) = (self.cfg.beta1, self.cfg.beta2);
            for i in 0..param.len() {
                let gi = g.data()[i];
                let mi = b1 * m.data()[i] + (1.0 - b1) * gi;
                let vi = b2 * v.data()[i] + (1.0 - b2) * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                param.data_mut()[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
            }
        }

        if seen != grads.len() {
            return Err(Error::Other(format!(
                "adam: {} gradients supplied for {} parameters",
                grads.len(),
                seen
            )));
        }
        Ok(())
    }
}
