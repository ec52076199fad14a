use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::param::ParamSet;
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, beta1: default_beta1(), beta2: default_beta2(), eps: default_eps() }
    }
}

/// Adam moments for one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, params: &ParamSet<T>) -> Result<Self> {
        let ok = config.lr >= 0.0
            && (0.0..1.0).contains(&config.beta1)
            && config.beta1 > 0.0
            && (0.0..1.0).contains(&config.beta2)
            && config.beta2 > 0.0
            && config.eps > 0.0;
        if !ok {
            return Err(TensorError::Invalid(format!("bad Adam settings {config:?}")));
        }
        let m = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect::<Vec<_>>();
        Ok(Self { config, t: 0, v: m.clone(), m })
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update from the gradients stored in `params`.
    /// Leaves everything untouched if any gradient is non-finite.
    pub fn step(&mut self, params: &mut ParamSet<T>) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(TensorError::Invalid(format!(
                "optimizer tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for p in params.iter() {
            if !p.grad.is_finite() {
                return Err(TensorError::NonFiniteGradient(p.name.clone()));
            }
        }
        self.t += 1;
        let c = &self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let bc1 = T::lit(1.0 - c.beta1.powi(self.t as i32));
        let bc2 = T::lit(1.0 - c.beta2.powi(self.t as i32));
        let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let g = p.grad.data();
            for (((w, mi), vi), &gi) in p.value.data_mut().iter_mut().zip(m.data_mut()).zip(v.data_mut()).zip(g) {
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                let mhat = *mi / bc1;
                let vhat = *vi / bc2;
                *w = *w - lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
