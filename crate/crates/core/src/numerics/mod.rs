//! Dense `f64` tensors, a reverse-mode tape, Adam and finite-difference checks.

mod adam;
mod gradcheck;
pub(crate) mod linalg;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use gradcheck::{
    grad_check, grad_check_params, grad_check_params_report, relative_error, GradCheckReport,
};
pub use params::{Gradients, ParamId, ParamSet, Parameter};
pub use tape::{Backward, Tape, Var};
pub use tensor::Tensor;

use crate::error::{bail, Result};
use crate::math;
use alloc::vec::Vec;

/// Numerically stable softmax along `axis` of a tensor of any rank.
pub fn softmax(logits: &Tensor, axis: usize) -> Result<Tensor> {
    let shape = logits.shape();
    if axis >= shape.len().max(1) {
        bail!(
            Shape,
            "softmax axis {axis} invalid for rank {}",
            shape.len()
        );
    }
    if shape.is_empty() {
        return Tensor::new(Vec::new(), alloc::vec![1.0]);
    }
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let src = logits.data();
    let mut out = alloc::vec![0.0; src.len()];
    for o in 0..outer {
        for i in 0..inner {
            let idx = |k: usize| (o * len + k) * inner + i;
            let max = (0..len)
                .map(|k| src[idx(k)])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for k in 0..len {
                let e = math::exp(src[idx(k)] - max);
                out[idx(k)] = e;
                total += e;
            }
            for k in 0..len {
                out[idx(k)] /= total;
            }
        }
    }
    Tensor::new(shape.to_vec(), out)
}

/// Target of a cross-entropy loss.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Index(usize),
    Distribution(&'a [f64]),
}

/// Cross-entropy of a single logit vector against a class index or distribution.
pub fn cross_entropy(logits: &Tensor, target: Target<'_>) -> Result<f64> {
    let z = logits.data();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = max + math::ln(z.iter().map(|&v| math::exp(v - max)).sum::<f64>());
    match target {
        Target::Index(t) => {
            if t >= z.len() {
                bail!(Index, "target {t} out of range for {} classes", z.len());
            }
            Ok(log_norm - z[t])
        }
        Target::Distribution(p) => {
            if p.len() != z.len() {
                bail!(
                    Shape,
                    "distribution has {} entries, logits {}",
                    p.len(),
                    z.len()
                );
            }
            Ok(p.iter().zip(z).map(|(&pi, &zi)| pi * (log_norm - zi)).sum())
        }
    }
}
