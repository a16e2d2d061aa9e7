//! Regression losses for soft labels and their analytic gradients.
//!
//! * Generalized Jaccard metric loss (GJML):
//!   `2 * |a - b|_1 / (|a + b|_1 + |a - b|_1)`, a semi-metric on any hypercube.
//! * Stable focal-L1: per pixel `|e|^(1 + gamma)` when prediction and target
//!   share a sign (or either is zero) and `|e|` otherwise, averaged over pixels.
//! * Focal-L1 with the `max(|target|, |pred|)` denominator, kept only as a
//!   reference for comparisons.
//!
//! Sums run sequentially in pixel order, so results are bit-reproducible.
//! Non-differentiable points get a zero subgradient and the sign-agreement
//! indicator is treated as piecewise constant.

use thiserror::Error;

use crate::grid::{FieldKind, GridError, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("invalid loss configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Shape(#[from] GridError),
    #[error("value {value} at index {index} is outside [{lo}, {hi}]")]
    OutOfBounds { index: usize, value: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossConfig {
    /// Focusing exponent; must be at least 1.
    pub gamma: f64,
    pub weight_gjml: f64,
    pub weight_sfl1: f64,
    /// Lower corner of the hypercube GJML inputs must lie in.
    pub bounds_lo: f64,
    pub bounds_hi: f64,
    /// GJML returns 0 when `|a + b|_1 + |a - b|_1` drops below this; also
    /// floors the focal-L1 reference denominator.
    pub denom_guard: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            weight_gjml: 1.0,
            weight_sfl1: 1.0,
            bounds_lo: -1.0,
            bounds_hi: 1.0,
            denom_guard: 1e-12,
        }
    }
}

impl LossConfig {
    pub fn with_bounds(lo: f64, hi: f64) -> Self {
        Self {
            bounds_lo: lo,
            bounds_hi: hi,
            ..Self::default()
        }
    }

    pub fn with_weights(weight_gjml: f64, weight_sfl1: f64) -> Self {
        Self {
            weight_gjml,
            weight_sfl1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.gamma >= 1.0) || !self.gamma.is_finite() {
            return Err(LossError::InvalidConfig("gamma must be a finite value >= 1"));
        }
        if !(self.weight_gjml >= 0.0 && self.weight_sfl1 >= 0.0)
            || !self.weight_gjml.is_finite()
            || !self.weight_sfl1.is_finite()
        {
            return Err(LossError::InvalidConfig("loss weights must be finite and nonnegative"));
        }
        if !(self.bounds_lo < self.bounds_hi) || !self.bounds_lo.is_finite() || !self.bounds_hi.is_finite() {
            return Err(LossError::InvalidConfig("bounds must satisfy lo < hi"));
        }
        if !(self.denom_guard > 0.0) {
            return Err(LossError::InvalidConfig("denominator guard must be positive"));
        }
        Ok(())
    }
}

fn check_range(field: &ScalarField, lo: f64, hi: f64) -> Result<(), LossError> {
    match field
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, &v)| !(lo..=hi).contains(&v))
    {
        Some((index, &value)) => Err(LossError::OutOfBounds { index, value, lo, hi }),
        None => Ok(()),
    }
}

fn check_pair(pred: &ScalarField, target: &ScalarField, cfg: &LossConfig, lo: f64, hi: f64) -> Result<(), LossError> {
    cfg.validate()?;
    pred.same_shape(target)?;
    check_range(pred, lo, hi)?;
    check_range(target, lo, hi)
}

fn check_hypercube(pred: &ScalarField, target: &ScalarField, cfg: &LossConfig) -> Result<(), LossError> {
    check_pair(pred, target, cfg, cfg.bounds_lo, cfg.bounds_hi)
}

fn check_unit(pred: &ScalarField, target: &ScalarField, cfg: &LossConfig) -> Result<(), LossError> {
    check_pair(pred, target, cfg, -1.0, 1.0)
}

fn grad_field(like: &ScalarField, data: Vec<f64>) -> ScalarField {
    ScalarField::new(like.height(), like.width(), data, FieldKind::Generic)
        .expect("gradient has the input shape and finite entries")
}

#[inline]
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(|a + b|_1, |a - b|_1)`.
fn l1_sum_diff(a: &[f64], b: &[f64]) -> (f64, f64) {
    a.iter()
        .zip(b)
        .fold((0.0, 0.0), |(s, d), (&x, &y)| (s + (x + y).abs(), d + (x - y).abs()))
}

pub(crate) fn gjml_raw(pred: &[f64], target: &[f64], guard: f64) -> f64 {
    let (s, d) = l1_sum_diff(pred, target);
    if s + d < guard {
        return 0.0;
    }
    2.0 * d / (s + d)
}

pub(crate) fn gjml_grad_raw(pred: &[f64], target: &[f64], guard: f64) -> Vec<f64> {
    let (s, d) = l1_sum_diff(pred, target);
    let total = s + d;
    if total < guard {
        return vec![0.0; pred.len()];
    }
    let scale = 2.0 / (total * total);
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| scale * (sgn(p - t) * s - d * sgn(p + t)))
        .collect()
}

#[inline]
fn agree(pred: f64, target: f64) -> bool {
    target * pred >= 0.0
}

#[inline]
fn sfl1_pixel(pred: f64, target: f64, gamma: f64) -> f64 {
    let e = (target - pred).abs();
    if agree(pred, target) {
        e.powf(1.0 + gamma)
    } else {
        e
    }
}

/// Derivative of the per-pixel stable focal-L1 term with respect to `pred`.
#[inline]
fn sfl1_pixel_grad(pred: f64, target: f64, gamma: f64) -> f64 {
    let e = target - pred;
    if e == 0.0 {
        return 0.0;
    }
    if agree(pred, target) {
        -(1.0 + gamma) * e.abs().powf(gamma) * sgn(e)
    } else {
        -sgn(e)
    }
}

pub(crate) fn sfl1_raw(pred: &[f64], target: &[f64], gamma: f64) -> f64 {
    let sum = pred
        .iter()
        .zip(target)
        .fold(0.0, |acc, (&p, &t)| acc + sfl1_pixel(p, t, gamma));
    sum / pred.len() as f64
}

pub(crate) fn sfl1_grad_raw(pred: &[f64], target: &[f64], gamma: f64) -> Vec<f64> {
    let n = pred.len() as f64;
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| sfl1_pixel_grad(p, t, gamma) / n)
        .collect()
}

pub(crate) fn l1_raw(pred: &[f64], target: &[f64]) -> f64 {
    let sum = pred.iter().zip(target).fold(0.0, |acc, (&p, &t)| acc + (t - p).abs());
    sum / pred.len() as f64
}

pub(crate) fn l1_grad_raw(pred: &[f64], target: &[f64]) -> Vec<f64> {
    let n = pred.len() as f64;
    pred.iter().zip(target).map(|(&p, &t)| sgn(p - t) / n).collect()
}

/// Generalized Jaccard metric loss; in `[0, 2]` on `[-1, 1]^D`.
pub fn gjml(pred: &ScalarField, target: &ScalarField, cfg: &LossConfig) -> Result<f64, LossError> {
    check_hypercube(pred, target, cfg)?;
    Ok(gjml_raw(pred.as_slice(), target.as_slice(), cfg.denom_guard))
}

/// `dL/dpred_i = 2 (sign(p_i - t_i) S - D sign(p_i + t_i)) / (S + D)^2`
/// with `S = |p + t|_1` and `D = |p - t|_1`.
pub fn gjml_grad(pred: &ScalarField, target: &ScalarField, cfg: &LossConfig) -> Result<ScalarField, LossError> {
    check_hypercube(pred, target, cfg)?;
    Ok(grad_field(
        pred,
        gjml_grad_raw(pred.as_slice(), target.as_slice(), cfg.denom_guard),
    ))
}

pub fn stable_focal_l1(pred: &ScalarField, target: &ScalarField, cfg: &LossConfig) -> Result<f64, LossError> {
    check_unit(pred, target, cfg)?;
    Ok(sfl1_raw(pred.as_slice(), target.as_slice(), cfg.gamma))
}

pub fn stable_focal_l1_grad(
    pred: &ScalarField,
    target: &ScalarField,
    cfg: &LossConfig,
) -> Result<ScalarField, LossError> {
    check_unit(pred, target, cfg)?;
    Ok(grad_field(
        pred,
        sfl1_grad_raw(pred.as_slice(), target.as_slice(), cfg.gamma),
    ))
}

/// Focal-L1 with its `max(|target|, |pred|)` weighting denominator (floored
/// at `denom_guard`). Not meant for training; it has a spurious minimum at
/// the far end of the opposite-sign range.
pub fn focal_l1_reference(pred: &ScalarField, target: &ScalarField, cfg: &LossConfig) -> Result<f64, LossError> {
    check_unit(pred, target, cfg)?;
    let sum = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .fold(0.0, |acc, (&p, &t)| {
            let denom = t.abs().max(p.abs()).max(cfg.denom_guard);
            acc + sfl1_pixel(p, t, cfg.gamma) / denom
        });
    Ok(sum / pred.len() as f64)
}

/// Mean absolute error, used for the hard-label baseline.
pub fn l1_loss(pred: &ScalarField, target: &ScalarField) -> Result<f64, LossError> {
    pred.same_shape(target)?;
    Ok(l1_raw(pred.as_slice(), target.as_slice()))
}

pub fn l1_loss_grad(pred: &ScalarField, target: &ScalarField) -> Result<ScalarField, LossError> {
    pred.same_shape(target)?;
    Ok(grad_field(pred, l1_grad_raw(pred.as_slice(), target.as_slice())))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LossParts {
    pub gjml: f64,
    pub sfl1: f64,
}

/// `weight_gjml * gjml + weight_sfl1 * stable_focal_l1`.
pub fn combined_loss(
    pred: &ScalarField,
    target: &ScalarField,
    cfg: &LossConfig,
) -> Result<(f64, LossParts), LossError> {
    let parts = LossParts {
        gjml: gjml(pred, target, cfg)?,
        sfl1: stable_focal_l1(pred, target, cfg)?,
    };
    Ok((cfg.weight_gjml * parts.gjml + cfg.weight_sfl1 * parts.sfl1, parts))
}

pub(crate) fn combined_grad_raw(pred: &[f64], target: &[f64], cfg: &LossConfig) -> Vec<f64> {
    let mut grad = vec![0.0; pred.len()];
    if cfg.weight_gjml != 0.0 {
        for (g, v) in grad.iter_mut().zip(gjml_grad_raw(pred, target, cfg.denom_guard)) {
            *g += cfg.weight_gjml * v;
        }
    }
    if cfg.weight_sfl1 != 0.0 {
        for (g, v) in grad.iter_mut().zip(sfl1_grad_raw(pred, target, cfg.gamma)) {
            *g += cfg.weight_sfl1 * v;
        }
    }
    grad
}

pub(crate) fn combined_raw(pred: &[f64], target: &[f64], cfg: &LossConfig) -> f64 {
    cfg.weight_gjml * gjml_raw(pred, target, cfg.denom_guard) + cfg.weight_sfl1 * sfl1_raw(pred, target, cfg.gamma)
}

pub fn combined_loss_grad(
    pred: &ScalarField,
    target: &ScalarField,
    cfg: &LossConfig,
) -> Result<ScalarField, LossError> {
    check_hypercube(pred, target, cfg)?;
    check_unit(pred, target, cfg)?;
    Ok(grad_field(
        pred,
        combined_grad_raw(pred.as_slice(), target.as_slice(), cfg),
    ))
}
