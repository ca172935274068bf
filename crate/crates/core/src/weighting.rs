//! Per-instance weights that discount faulty positives.
//!
//! Scores are the cross-modal agreement `v̄_i · ā_i` of each instance's bank
//! rows. Weights are the CDF of `N(mean + delta * std, kappa * std^2)` at the
//! score, squashed onto `[w_min, 1]`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{dot, gaussian_cdf, gaussian_icdf, sample_stats};
use crate::memory_bank::MemoryBank;

/// Score spreads below this are treated as degenerate.
pub const MIN_SCORE_STD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    /// Midpoint offset, in units of the score standard deviation.
    pub delta: f64,
    /// Variance scale of the transformed normal.
    pub kappa: f64,
    pub w_min: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self { delta: -1.0, kappa: 0.5, w_min: 0.25 }
    }
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::OutOfRange { what: "kappa", value: self.kappa });
        }
        if !(0.0..1.0).contains(&self.w_min) {
            return Err(Error::OutOfRange { what: "w_min", value: self.w_min });
        }
        if !self.delta.is_finite() {
            return Err(Error::OutOfRange { what: "delta", value: self.delta });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    pub weights: Vec<f64>,
    pub score_mean: f64,
    pub score_std: f64,
    pub params: WeightParams,
}

impl WeightState {
    /// All weights one, e.g. before any scores exist.
    pub fn uniform(len: usize, params: WeightParams) -> Self {
        Self { weights: alloc::vec![1.0; len], score_mean: 0.0, score_std: 0.0, params }
    }

    /// Weights fixed by ground truth rather than scores.
    pub fn oracle(faulty: &[bool], params: WeightParams) -> Self {
        Self { weights: oracle_weights(faulty), score_mean: 0.0, score_std: 0.0, params }
    }

    pub fn mean_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len().max(1) as f64
    }
}

/// `t(x) = x * (1 - w_min) + w_min`.
pub fn truncate(x: f64, w_min: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange { what: "probability", value: x });
    }
    if !(0.0..1.0).contains(&w_min) {
        return Err(Error::OutOfRange { what: "w_min", value: w_min });
    }
    Ok(x * (1.0 - w_min) + w_min)
}

pub fn sample_weight(score: f64, mean: f64, std: f64, params: &WeightParams) -> Result<f64> {
    if !(std > 0.0) {
        return Err(Error::InvalidVariance(std * std));
    }
    let cdf = gaussian_cdf(score, mean + params.delta * std, params.kappa * std * std)?;
    truncate(cdf, params.w_min)
}

/// `v̄_i · ā_i` for every instance.
pub fn correspondence_scores(bank_v: &MemoryBank, bank_a: &MemoryBank) -> Result<Vec<f64>> {
    if bank_v.len() != bank_a.len() {
        return Err(Error::ShapeMismatch { expected: bank_v.len(), got: bank_a.len() });
    }
    if bank_v.dim() != bank_a.dim() {
        return Err(Error::ShapeMismatch { expected: bank_v.dim(), got: bank_a.dim() });
    }
    let d = bank_v.dim();
    Ok(bank_v
        .rows()
        .chunks_exact(d)
        .zip(bank_a.rows().chunks_exact(d))
        .map(|(v, a)| dot(v, a))
        .collect())
}

/// Weights from raw scores, with statistics estimated from the same scores.
pub fn weights_from_scores(scores: &[f64], params: WeightParams) -> Result<WeightState> {
    params.validate()?;
    let (mean, var) = sample_stats(scores)?;
    let std = libm::sqrt(var);
    if !(std >= MIN_SCORE_STD) {
        return Err(Error::DegenerateScores { std });
    }
    let weights = scores
        .iter()
        .map(|&s| sample_weight(s, mean, std, &params))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightState { weights, score_mean: mean, score_std: std, params })
}

pub fn compute_weight_state(bank_v: &MemoryBank, bank_a: &MemoryBank, params: WeightParams) -> Result<WeightState> {
    weights_from_scores(&correspondence_scores(bank_v, bank_a)?, params)
}

/// Like [`compute_weight_state`], but a degenerate score spread falls back to
/// unit weights with a warning.
pub fn compute_weight_state_or_uniform(
    bank_v: &MemoryBank,
    bank_a: &MemoryBank,
    params: WeightParams,
) -> Result<WeightState> {
    match compute_weight_state(bank_v, bank_a, params) {
        Err(Error::DegenerateScores { std }) => {
            log::warn!("correspondence scores are degenerate (std {std:e}); using unit weights");
            Ok(WeightState::uniform(bank_v.len(), params))
        }
        other => other,
    }
}

/// Offset placing the weight midpoint at the `fraction` quantile of normal scores.
pub fn delta_for_noise_fraction(fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::OutOfRange { what: "noise fraction", value: fraction });
    }
    gaussian_icdf(fraction)
}

/// Zero for altered instances, one elsewhere.
pub fn oracle_weights(faulty: &[bool]) -> Vec<f64> {
    faulty.iter().map(|&f| if f { 0.0 } else { 1.0 }).collect()
}
