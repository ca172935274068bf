//! Per-modality MLP encoders with unit-sphere output, explicit backprop,
//! Adam updates and a cosine learning-rate schedule.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{dot, NORM_EPS};

/// `x -> normalize(W2 relu(W1 x + b1) + b2)`.
///
/// Parameters live in one flat buffer laid out as `W1 | b1 | W2 | b2`, with
/// both weight matrices row-major (one row per output unit).
#[derive(Debug, Clone)]
pub struct MlpEncoder {
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    params: Vec<f64>,
    version: u64,
}

/// Equality ignores the internal cache-invalidation counter.
impl PartialEq for MlpEncoder {
    fn eq(&self, other: &Self) -> bool {
        (self.input_dim, self.hidden_dim, self.output_dim) == (other.input_dim, other.hidden_dim, other.output_dim)
            && self.params == other.params
    }
}

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    input: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    /// Unit output.
    output: Vec<f64>,
    /// Norm of the pre-normalization projection.
    z_norm: f64,
    version: u64,
}

impl ForwardCache {
    pub fn embedding(&self) -> &[f64] {
        &self.output
    }
}

impl MlpEncoder {
    pub fn param_count(input_dim: usize, hidden_dim: usize, output_dim: usize) -> usize {
        hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim
    }

    /// Uniform fan-in initialization: each layer's weights and biases are
    /// drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init(input_dim: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 || output_dim < 2 {
            return Err(Error::InvalidShape("encoder needs input, hidden >= 1 and output >= 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::param_count(input_dim, hidden_dim, output_dim));
        let b1 = 1.0 / libm::sqrt(input_dim as f64);
        params.extend((0..hidden_dim * input_dim + hidden_dim).map(|_| rng.random_range(-b1..b1)));
        let b2 = 1.0 / libm::sqrt(hidden_dim as f64);
        params.extend((0..output_dim * hidden_dim + output_dim).map(|_| rng.random_range(-b2..b2)));
        Ok(Self { input_dim, hidden_dim, output_dim, params, version: 0 })
    }

    pub fn from_params(input_dim: usize, hidden_dim: usize, output_dim: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(input_dim, hidden_dim, output_dim);
        if params.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidShape("encoder parameters must be finite"));
        }
        Ok(Self { input_dim, hidden_dim, output_dim, params, version: 0 })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden_dim * self.input_dim;
        let b1 = w1 + self.hidden_dim;
        let w2 = b1 + self.output_dim * self.hidden_dim;
        (w1, b1, w2)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if x.len() != self.input_dim {
            return Err(Error::ShapeMismatch { expected: self.input_dim, got: x.len() });
        }
        let (o_b1, o_w2, o_b2) = self.offsets();
        let p = &self.params;
        let hidden_pre: Vec<f64> = p[..o_b1]
            .chunks_exact(self.input_dim)
            .zip(&p[o_b1..o_w2])
            .map(|(row, b)| dot(row, x) + b)
            .collect();
        let hidden: Vec<f64> = hidden_pre.iter().map(|&h| h.max(0.0)).collect();
        let mut output: Vec<f64> = p[o_w2..o_b2]
            .chunks_exact(self.hidden_dim)
            .zip(&p[o_b2..])
            .map(|(row, b)| dot(row, &hidden) + b)
            .collect();
        let z_norm = libm::sqrt(dot(&output, &output));
        if !(z_norm > NORM_EPS) {
            return Err(Error::ZeroVector { eps: NORM_EPS });
        }
        output.iter_mut().for_each(|o| *o /= z_norm);
        let cache = ForwardCache {
            input: x.to_vec(),
            hidden_pre,
            hidden,
            output: output.clone(),
            z_norm,
            version: self.version,
        };
        Ok((output, cache))
    }

    /// Embedding only.
    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(e, _)| e)
    }

    /// Adds the parameter gradient for upstream gradient `grad_out`
    /// (w.r.t. the unit embedding) into `acc`; optionally writes the input gradient.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad_out: &[f64],
        acc: &mut [f64],
        input_grad: Option<&mut [f64]>,
    ) -> Result<()> {
        if cache.version != self.version || cache.input.len() != self.input_dim || cache.output.len() != self.output_dim {
            return Err(Error::StaleCache);
        }
        if grad_out.len() != self.output_dim {
            return Err(Error::ShapeMismatch { expected: self.output_dim, got: grad_out.len() });
        }
        if acc.len() != self.params.len() {
            return Err(Error::ShapeMismatch { expected: self.params.len(), got: acc.len() });
        }
        let (o_b1, o_w2, o_b2) = self.offsets();
        let u = &cache.output;

        // Normalization Jacobian: (I - u u^T) / |z|.
        let radial = dot(u, grad_out);
        let grad_z: Vec<f64> = grad_out.iter().zip(u).map(|(g, ui)| (g - ui * radial) / cache.z_norm).collect();

        let (acc_l1, acc_l2) = acc.split_at_mut(o_w2);
        let (acc_w2, acc_b2) = acc_l2.split_at_mut(o_b2 - o_w2);
        let mut grad_h = vec![0.0; self.hidden_dim];
        for (o, &gz) in grad_z.iter().enumerate() {
            acc_b2[o] += gz;
            let w_row = &self.params[o_w2 + o * self.hidden_dim..o_w2 + (o + 1) * self.hidden_dim];
            let a_row = &mut acc_w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            for ((a, h), (gh, w)) in a_row.iter_mut().zip(&cache.hidden).zip(grad_h.iter_mut().zip(w_row)) {
                *a += gz * h;
                *gh += gz * w;
            }
        }
        for (gh, pre) in grad_h.iter_mut().zip(&cache.hidden_pre) {
            if *pre <= 0.0 {
                *gh = 0.0;
            }
        }
        let (acc_w1, acc_b1) = acc_l1.split_at_mut(o_b1);
        for (k, &g) in grad_h.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            acc_b1[k] += g;
            let a_row = &mut acc_w1[k * self.input_dim..(k + 1) * self.input_dim];
            a_row.iter_mut().zip(&cache.input).for_each(|(a, x)| *a += g * x);
        }
        if let Some(gx) = input_grad {
            if gx.len() != self.input_dim {
                return Err(Error::ShapeMismatch { expected: self.input_dim, got: gx.len() });
            }
            gx.iter_mut().for_each(|v| *v = 0.0);
            for (k, &g) in grad_h.iter().enumerate() {
                let w_row = &self.params[k * self.input_dim..(k + 1) * self.input_dim];
                gx.iter_mut().zip(w_row).for_each(|(v, w)| *v += g * w);
            }
        }
        Ok(())
    }

    /// Parameter gradient for a single upstream gradient.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.params.len()];
        self.backward_into(cache, grad_out, &mut acc, None)?;
        Ok(acc)
    }

    pub fn apply_adam(&mut self, grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
        state.step(self.params_mut(), grads, lr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    /// Fresh state with the standard defaults (0.9, 0.999, 1e-8).
    pub fn new(len: usize) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }

    /// One bias-corrected Adam update of `params`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::ShapeMismatch { expected: self.m.len(), got: params.len() });
        }
        if grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch { expected: self.m.len(), got: grads.len() });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
        Ok(())
    }
}

/// `lr_end + (lr_start - lr_end) * (1 + cos(pi * epoch / total)) / 2`.
pub fn cosine_lr(epoch: usize, total: usize, lr_start: f64, lr_end: f64) -> Result<f64> {
    if epoch > total {
        return Err(Error::OutOfRange { what: "epoch", value: epoch as f64 });
    }
    if total == 0 {
        return Ok(lr_start);
    }
    let phase = core::f64::consts::PI * epoch as f64 / total as f64;
    Ok(lr_end + 0.5 * (lr_start - lr_end) * (1.0 + libm::cos(phase)))
}
