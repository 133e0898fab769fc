use super::Tensor;
use crate::error::{bail, Result};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Index of a parameter inside its [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

/// A named trainable tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// Ordered collection of parameters. Order is creation order and is part of
/// the checkpoint format.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    params: Vec<Parameter>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Parameter::new(name, value));
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Total number of scalar weights.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.is_finite())
    }

    /// Move accumulated gradients from `grads` into the parameters' own
    /// gradient tensors (replacing them) and reset `grads` to zero.
    pub fn absorb(&mut self, grads: &mut Gradients) -> Result<()> {
        if grads.buffers.len() != self.params.len() {
            bail!(
                Shape,
                "gradient buffer holds {} tensors, parameter set {}",
                grads.buffers.len(),
                self.params.len()
            );
        }
        for (p, g) in self.params.iter_mut().zip(grads.buffers.iter_mut()) {
            p.grad.data_mut().copy_from_slice(g);
            g.fill(0.0);
        }
        Ok(())
    }

    /// Replace all values with those of `other`, matched by position and checked by name and shape.
    pub fn load_values(&mut self, other: &[(String, Tensor)]) -> Result<()> {
        if other.len() != self.params.len() {
            bail!(
                Shape,
                "expected {} parameters, got {}",
                self.params.len(),
                other.len()
            );
        }
        for (p, (name, t)) in self.params.iter_mut().zip(other) {
            if &p.name != name || p.value.shape() != t.shape() {
                bail!(
                    Shape,
                    "parameter {} {:?} does not match {} {:?}",
                    p.name,
                    p.value.shape(),
                    name,
                    t.shape()
                );
            }
            p.value = t.clone();
        }
        Ok(())
    }
}

/// Gradient accumulator kept outside the [`ParamSet`] so a tape can borrow
/// parameter values while gradients are written.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) buffers: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Gradients {
            buffers: params
                .iter()
                .map(|p| alloc::vec![0.0; p.value.len()])
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.buffers[id.0]
    }

    pub fn scale(&mut self, s: f64) {
        for b in &mut self.buffers {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.buffers.iter().flatten().map(|g| g * g).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.buffers.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}
