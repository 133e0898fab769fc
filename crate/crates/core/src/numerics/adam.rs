use super::{ParamSet, Parameter, Tensor};
use crate::error::{bail, Result};
use crate::math;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.0002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Tensor,
    pub second_moment: Tensor,
    pub step: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(shape: &[usize], config: AdamConfig) -> Self {
        AdamState {
            first_moment: Tensor::zeros(shape),
            second_moment: Tensor::zeros(shape),
            step: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update of `param` from its current gradient.
pub fn adam_step(param: &mut Parameter, state: &mut AdamState) -> Result<()> {
    let shape = param.value.shape();
    if param.grad.shape() != shape
        || state.first_moment.shape() != shape
        || state.second_moment.shape() != shape
    {
        bail!(
            Config,
            "adam state for {} does not match parameter shape {shape:?}",
            param.name
        );
    }
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - math::powi(beta1, t);
    let c2 = 1.0 - math::powi(beta2, t);
    let g = param.grad.data();
    let m = state.first_moment.data_mut();
    for (mi, gi) in m.iter_mut().zip(g) {
        *mi = beta1 * *mi + (1.0 - beta1) * gi;
    }
    let v = state.second_moment.data_mut();
    for (vi, gi) in v.iter_mut().zip(g) {
        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
    }
    let m = state.first_moment.data();
    let v = state.second_moment.data();
    for ((w, mi), vi) in param.value.data_mut().iter_mut().zip(m).zip(v) {
        let m_hat = mi / c1;
        let v_hat = vi / c2;
        *w -= learning_rate * m_hat / (math::sqrt(v_hat) + epsilon);
    }
    Ok(())
}

/// Adam over a whole [`ParamSet`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        Adam {
            states: params
                .iter()
                .map(|p| AdamState::new(p.value.shape(), config))
                .collect(),
        }
    }

    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if self.states.len() != params.len() {
            bail!(
                Config,
                "optimizer tracks {} parameters, set has {}",
                self.states.len(),
                params.len()
            );
        }
        for (p, s) in params.iter_mut().zip(self.states.iter_mut()) {
            adam_step(p, s)?;
        }
        Ok(())
    }

    pub fn steps_taken(&self) -> u64 {
        self.states.first().map_or(0, |s| s.step)
    }
}
