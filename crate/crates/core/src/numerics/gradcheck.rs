//! Central-difference gradient verification.
//!
//! Functions must be smooth around the checked point. In particular a
//! coordinate sitting exactly on a ReLU kink gives a meaningless comparison
//! (the tape uses derivative 0 there, the difference quotient sees 1/2); the
//! caller is expected to jitter such points first.

use super::{Gradients, ParamId, ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use alloc::format;
use alloc::vec;

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn eval<F>(f: &F, point: &Tensor) -> f64
where
    F: Fn(&mut Tape<'_>, Var) -> Var,
{
    let mut tape = Tape::new();
    let x = tape.input(point);
    let y = f(&mut tape, x);
    tape.scalar(y)
}

fn non_finite(coordinate: usize, what: &str) -> Error {
    Error::Numeric {
        coordinate: Some(coordinate),
        message: format!("non-finite {what} while differencing"),
    }
}

/// Largest relative error between the tape gradient of the scalar map `f`
/// at `point` and its central difference with step `perturbation`.
pub fn grad_check<F>(f: F, point: &Tensor, perturbation: f64) -> Result<f64>
where
    F: Fn(&mut Tape<'_>, Var) -> Var,
{
    let mut tape = Tape::new();
    let x = tape.input(point);
    let y = f(&mut tape, x);
    if !tape.scalar(y).is_finite() {
        return Err(Error::Numeric {
            coordinate: None,
            message: format!("function value {} at the base point", tape.scalar(y)),
        });
    }
    let back = tape.backward(y, 1.0, None);
    let analytic = back
        .wrt(x)
        .map(|g| g.to_vec())
        .unwrap_or_else(|| vec![0.0; point.len()]);

    let mut worst: f64 = 0.0;
    let mut probe = point.clone();
    for i in 0..point.len() {
        let base = point.data()[i];
        probe.data_mut()[i] = base + perturbation;
        let up = eval(&f, &probe);
        probe.data_mut()[i] = base - perturbation;
        let down = eval(&f, &probe);
        probe.data_mut()[i] = base;
        if !up.is_finite() || !down.is_finite() {
            return Err(non_finite(i, "function value"));
        }
        let numeric = (up - down) / (2.0 * perturbation);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}

/// Per-coordinate summary of a parameter gradient check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GradCheckReport {
    pub coordinates: usize,
    pub max_relative: f64,
    /// Coordinate at which `max_relative` occurred.
    pub worst_coordinate: usize,
    pub max_absolute: f64,
    /// Coordinates whose relative error exceeds `threshold`.
    pub above_threshold: usize,
    pub threshold: f64,
}

/// Like [`grad_check`] but differentiating a loss with respect to every
/// scalar of every parameter in `params`. Coordinates are numbered in
/// parameter order, then row-major within a parameter.
pub fn grad_check_params<F>(params: &mut ParamSet, f: F, perturbation: f64) -> Result<f64>
where
    F: Fn(&mut Tape<'_>) -> Var,
{
    grad_check_params_report(params, f, perturbation, 1e-6).map(|r| r.max_relative)
}

/// [`grad_check_params`] with the full error breakdown.
///
/// The central difference of a loss of size `L` carries round-off of roughly
/// `ulp(L) / perturbation`, so coordinates whose true derivative is not much
/// larger than that cannot reach a small relative error; `max_absolute`
/// shows whether a large relative error is such a case.
pub fn grad_check_params_report<F>(
    params: &mut ParamSet,
    f: F,
    perturbation: f64,
    threshold: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>) -> Var,
{
    let loss_at = |params: &ParamSet| {
        let mut tape = Tape::with_params(params);
        let y = f(&mut tape);
        tape.scalar(y)
    };
    let mut grads = Gradients::zeros_like(params);
    {
        let mut tape = Tape::with_params(params);
        let y = f(&mut tape);
        if !tape.scalar(y).is_finite() {
            return Err(Error::Numeric {
                coordinate: None,
                message: format!("loss {} at the base point", tape.scalar(y)),
            });
        }
        tape.backward(y, 1.0, Some(&mut grads));
    }
    let mut report = GradCheckReport {
        coordinates: 0,
        max_relative: 0.0,
        worst_coordinate: 0,
        max_absolute: 0.0,
        above_threshold: 0,
        threshold,
    };
    for p in 0..params.len() {
        let id = ParamId(p);
        for i in 0..params.value(id).len() {
            let coordinate = report.coordinates;
            let base = params.value(id).data()[i];
            params.get_mut(id).value.data_mut()[i] = base + perturbation;
            let up = loss_at(params);
            params.get_mut(id).value.data_mut()[i] = base - perturbation;
            let down = loss_at(params);
            params.get_mut(id).value.data_mut()[i] = base;
            if !up.is_finite() || !down.is_finite() {
                return Err(non_finite(coordinate, "loss"));
            }
            let numeric = (up - down) / (2.0 * perturbation);
            let analytic = grads.get(id)[i];
            let rel = relative_error(analytic, numeric);
            if rel > report.max_relative {
                report.max_relative = rel;
                report.worst_coordinate = coordinate;
            }
            report.max_absolute = report.max_absolute.max((analytic - numeric).abs());
            if rel > threshold {
                report.above_threshold += 1;
            }
            report.coordinates += 1;
        }
    }
    Ok(report)
}
