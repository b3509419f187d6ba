use serde::{Deserialize, Serialize};

use super::{ParameterStore, Real};
use crate::error::Result;

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
        AdamConfig { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moments per parameter plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new<T: Real>(params: &ParameterStore<T>) -> Self {
        let zeros = || params.ids().map(|id| vec![0.0; params.value(id).len()]).collect();
        AdamState { m: zeros(), v: zeros(), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update from the current gradients. Gradients are
    /// left in place; the caller zeroes them.
    pub fn step<T: Real>(&mut self, params: &mut ParameterStore<T>, cfg: &AdamConfig) -> Result<()> {
        params.check_finite_grads()?;
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        let ids: Vec<_> = params.ids().collect();
        for id in ids {
            let grad: Vec<f64> = params.grad(id).as_slice().iter().map(|g| g.f64()).collect();
            let (m, v) = (&mut self.m[id.index()], &mut self.v[id.index()]);
            let value = params.value_mut(id).as_mut_slice();
            for (j, g) in grad.into_iter().enumerate() {
                if g == 0.0 && m[j] == 0.0 && v[j] == 0.0 {
                    continue;
                }
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
                let update = cfg.lr * (m[j] / bc1) / ((v[j] / bc2).sqrt() + cfg.eps);
                value[j] = T::of(value[j].f64() - update);
            }
        }
        Ok(())
    }
}
