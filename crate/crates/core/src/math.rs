//! Scalar and vector primitives shared by the rest of the crate.
//!
//! Everything is `f64`. Softmax subtracts the running maximum before
//! exponentiating, so temperatures as low as 0.02 stay finite.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Norms at or below this are treated as zero.
pub const NORM_EPS: f64 = 1e-12;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Scales `v` to unit length in place and returns the original norm.
pub fn normalize_in_place(v: &mut [f64]) -> Result<f64> {
    let n = norm(v);
    if !(n > NORM_EPS) {
        return Err(Error::ZeroVector { eps: NORM_EPS });
    }
    let inv = 1.0 / n;
    v.iter_mut().for_each(|x| *x *= inv);
    Ok(n)
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    normalize_in_place(&mut out)?;
    Ok(out)
}

/// Numerically stable `softmax(logits / tau)`, written into `logits`.
pub fn softmax_in_place(logits: &mut [f64], tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::InvalidTemperature(tau));
    }
    if logits.is_empty() {
        return Ok(());
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logits.iter_mut() {
        *l = libm::exp((*l - max) / tau);
        total += *l;
    }
    let inv = 1.0 / total;
    logits.iter_mut().for_each(|p| *p *= inv);
    Ok(())
}

pub fn tempered_softmax(logits: &[f64], tau: f64) -> Result<Vec<f64>> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out, tau)?;
    Ok(out)
}

/// `log(softmax(logits / tau))`, using log-sum-exp.
pub fn log_softmax(logits: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidTemperature(tau));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = libm::log(logits.iter().map(|l| libm::exp((l - max) / tau)).sum::<f64>());
    Ok(logits.iter().map(|l| (l - max) / tau - lse).collect())
}

/// Entropy in nats; zero-probability entries contribute nothing.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * libm::log(p))
        .sum::<f64>()
}

/// CDF of `N(mean, var)` at `x`.
pub fn gaussian_cdf(x: f64, mean: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(Error::InvalidVariance(var));
    }
    let z = (x - mean) / libm::sqrt(2.0 * var);
    Ok(0.5 * libm::erfc(-z))
}

#[inline]
fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard-normal quantile.
///
/// Acklam's rational approximation, then Newton steps on the exact CDF.
pub fn gaussian_icdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange { what: "probability", value: p });
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < P_LOW {
        tail(libm::sqrt(-2.0 * libm::log(p)))
    } else if p > 1.0 - P_LOW {
        -tail(libm::sqrt(-2.0 * libm::log(1.0 - p)))
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let inv_sqrt_2pi = 1.0 / libm::sqrt(2.0 * core::f64::consts::PI);
    for _ in 0..3 {
        let density = inv_sqrt_2pi * libm::exp(-0.5 * x * x);
        if density <= 0.0 {
            break;
        }
        let step = (std_normal_cdf(x) - p) / density;
        x -= step;
        if libm::fabs(step) < 1e-15 {
            break;
        }
    }
    Ok(x)
}

/// Sample mean and unbiased (n - 1) variance.
pub fn sample_stats(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, ss / (n - 1) as f64))
}
