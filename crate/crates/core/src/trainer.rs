//! Two-stage training: plain cross-modal discrimination first, then the
//! robust stage with per-instance weights and softened targets.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{cosine_lr, AdamState, ForwardCache, MlpEncoder};
use crate::error::{Error, Result};
use crate::losses::{soft_xid_grad, weighted_mean, xid_grad, ContrastInstance, LossGrad};
use crate::math::entropy;
use crate::memory_bank::{MemoryBank, Modality};
use crate::soft_targets::{soft_targets, CandidateSet, SoftTargetParams, Strategy};
use crate::synth::SynthDataset;
use crate::weighting::{compute_weight_state_or_uniform, WeightParams, WeightState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Warmup,
    Robust,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Warmup => "warmup",
            Stage::Robust => "robust",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub warmup_epochs: usize,
    pub robust_epochs: usize,
    pub batch_size: usize,
    pub num_negatives: usize,
    pub tau: f64,
    /// Strategy, temperatures and mixing coefficient of the robust stage.
    pub soft: SoftTargetParams,
    pub weight: WeightParams,
    pub enable_weighting: bool,
    pub enable_soft_targets: bool,
    /// Zero weight for every flagged instance instead of score-based weights.
    pub oracle_weights: bool,
    pub lr_warmup: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub bank_momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            warmup_epochs: 100,
            robust_epochs: 100,
            batch_size: 128,
            num_negatives: 256,
            tau: crate::losses::DEFAULT_TAU,
            soft: SoftTargetParams::default(),
            weight: WeightParams::default(),
            enable_weighting: true,
            enable_soft_targets: true,
            oracle_weights: false,
            lr_warmup: 1e-3,
            lr_start: 1e-3,
            lr_end: 1e-5,
            hidden_dim: 128,
            embed_dim: 32,
            bank_momentum: crate::memory_bank::DEFAULT_MOMENTUM,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Plain cross-modal discrimination in both stages.
    pub fn xid(mut self) -> Self {
        self.enable_weighting = false;
        self.enable_soft_targets = false;
        self.oracle_weights = false;
        self
    }

    pub fn total_epochs(&self) -> usize {
        self.warmup_epochs + self.robust_epochs
    }

    pub fn validate(&self, num_instances: usize) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > num_instances {
            return Err(Error::InvalidConfig("batch_size must be in 1..=N"));
        }
        if self.num_negatives == 0 || self.num_negatives >= num_instances {
            return Err(Error::InvalidConfig("num_negatives must be in 1..N"));
        }
        for t in [self.tau, self.soft.tau_s, self.soft.tau_t] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidTemperature(t));
            }
        }
        if !(0.0..=1.0).contains(&self.soft.lambda) {
            return Err(Error::OutOfRange { what: "lambda", value: self.soft.lambda });
        }
        for lr in [self.lr_warmup, self.lr_start, self.lr_end] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::OutOfRange { what: "learning rate", value: lr });
            }
        }
        if !(0.0..1.0).contains(&self.bank_momentum) {
            return Err(Error::OutOfRange { what: "bank momentum", value: self.bank_momentum });
        }
        if self.hidden_dim == 0 || self.embed_dim < 2 {
            return Err(Error::InvalidConfig("hidden_dim must be >= 1 and embed_dim >= 2"));
        }
        self.weight.validate()
    }

    pub fn stage_of(&self, epoch: usize) -> Stage {
        if epoch < self.warmup_epochs {
            Stage::Warmup
        } else {
            Stage::Robust
        }
    }

    /// Constant rate during warmup; cosine decay across the robust epochs.
    pub fn lr_at(&self, epoch: usize) -> Result<f64> {
        match self.stage_of(epoch) {
            Stage::Warmup => Ok(self.lr_warmup),
            Stage::Robust => cosine_lr(epoch - self.warmup_epochs, self.robust_epochs, self.lr_start, self.lr_end),
        }
    }
}

/// Raw inputs in `f64`, row-major, plus the ground truth used by oracle modes
/// and metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub input_dim: usize,
    pub video: Vec<f64>,
    pub audio: Vec<f64>,
    pub labels: Vec<u32>,
    pub faulty: Vec<bool>,
}

impl TrainData {
    pub fn from_dataset(ds: &SynthDataset) -> Self {
        Self {
            input_dim: ds.config.raw_dim,
            video: ds.raw_matrix(Modality::Video),
            audio: ds.raw_matrix(Modality::Audio),
            labels: ds.labels(),
            faulty: ds.faulty_flags(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, modality: Modality, i: usize) -> &[f64] {
        let src = match modality {
            Modality::Video => &self.video,
            Modality::Audio => &self.audio,
        };
        &src[i * self.input_dim..(i + 1) * self.input_dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub video_encoder: MlpEncoder,
    pub audio_encoder: MlpEncoder,
    pub video_adam: AdamState,
    pub audio_adam: AdamState,
    pub video_bank: MemoryBank,
    pub audio_bank: MemoryBank,
    /// Weights in force for the current epoch.
    pub weights: WeightState,
    /// Number of completed epochs.
    pub epoch: usize,
    /// Root seed; per-epoch randomness is derived from it and `epoch`.
    pub seed: u64,
}

fn encoder_seed(seed: u64, modality: Modality) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(1 + u64::from(modality.tag())))
}

impl TrainState {
    /// Fresh encoders and randomly initialized banks.
    pub fn init(config: &TrainConfig, data: &TrainData) -> Result<Self> {
        let n = data.len();
        config.validate(n)?;
        let enc = |m| MlpEncoder::init(data.input_dim, config.hidden_dim, config.embed_dim, encoder_seed(config.seed, m));
        let video_encoder = enc(Modality::Video)?;
        let audio_encoder = enc(Modality::Audio)?;
        let p = video_encoder.params().len();
        Ok(Self {
            video_adam: AdamState::new(p),
            audio_adam: AdamState::new(audio_encoder.params().len()),
            video_encoder,
            audio_encoder,
            video_bank: MemoryBank::init(n, config.embed_dim, config.bank_momentum, Modality::Video, config.seed)?,
            audio_bank: MemoryBank::init(n, config.embed_dim, config.bank_momentum, Modality::Audio, config.seed)?,
            weights: WeightState::uniform(n, config.weight),
            epoch: 0,
            seed: config.seed,
        })
    }

    pub fn encoder(&self, modality: Modality) -> &MlpEncoder {
        match modality {
            Modality::Video => &self.video_encoder,
            Modality::Audio => &self.audio_encoder,
        }
    }

    /// Embeds every row of a row-major raw matrix.
    pub fn embed_all(&self, modality: Modality, raw: &[f64]) -> Result<Vec<f64>> {
        let enc = self.encoder(modality);
        let mut out = Vec::with_capacity(raw.len() / enc.input_dim() * enc.output_dim());
        for x in raw.chunks_exact(enc.input_dim()) {
            out.extend(enc.embed(x)?);
        }
        Ok(out)
    }
}

/// Randomness for one epoch, independent of how earlier epochs were run.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x7472_6169_6e00_0000 | epoch as u64);
    rng
}

/// Seeded shuffle split into consecutive batches; the last may be short.
pub fn epoch_batches(n: usize, batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Weights for the upcoming robust epoch, from a snapshot of the banks.
pub fn refresh_weights(state: &mut TrainState, config: &TrainConfig, data: &TrainData) -> Result<()> {
    state.weights = if config.oracle_weights {
        WeightState::oracle(&data.faulty, config.weight)
    } else if config.enable_weighting {
        compute_weight_state_or_uniform(&state.video_bank, &state.audio_bank, config.weight)?
    } else {
        WeightState::uniform(data.len(), config.weight)
    };
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Weighted mean loss of the batch.
    pub loss: f64,
    pub mean_weight: f64,
    /// Mean entropy of the video- and audio-side targets.
    pub target_entropy: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// Zero-based index of the epoch just completed.
    pub epoch: usize,
    pub stage: Stage,
    pub lr: f64,
    /// Batch losses averaged with batch sizes as weights.
    pub loss: f64,
    pub mean_weight_clean: Option<f64>,
    pub mean_weight_faulty: Option<f64>,
    pub target_entropy: f64,
}

fn uses_weights(stage: Stage, config: &TrainConfig) -> bool {
    stage == Stage::Robust && (config.enable_weighting || config.oracle_weights)
}

/// One optimizer step on `batch`. Negatives are drawn from `rng` in batch
/// order; bank rows of the batch are refreshed after the parameter update.
pub fn train_step(
    state: &mut TrainState,
    config: &TrainConfig,
    data: &TrainData,
    batch: &[usize],
    stage: Stage,
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<StepStats> {
    let n = data.len();
    if let Some(&bad) = batch.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    if batch.is_empty() {
        return Err(Error::InvalidShape("empty batch"));
    }
    let soft = stage == Stage::Robust && config.enable_soft_targets;
    let weighted = uses_weights(stage, config);

    let mut caches: Vec<(ForwardCache, ForwardCache)> = Vec::with_capacity(batch.len());
    let mut grads: Vec<LossGrad> = Vec::with_capacity(batch.len());
    let mut weights = Vec::with_capacity(batch.len());
    let mut entropy_sum = 0.0;
    for &i in batch {
        let (v, cache_v) = state.video_encoder.forward(data.row(Modality::Video, i))?;
        let (a, cache_a) = state.audio_encoder.forward(data.row(Modality::Audio, i))?;
        let negs = state.video_bank.sample_negatives(i, config.num_negatives, rng)?;
        let cands = CandidateSet::gather(&state.video_bank, &state.audio_bank, &negs)?;
        let inst = ContrastInstance::new(&v, &a, &cands, config.tau)?;
        let g = if soft {
            let labels: Option<Vec<u32>> = (config.soft.strategy == Strategy::Oracle)
                .then(|| core::iter::once(i).chain(negs.indices.iter().copied()).map(|j| data.labels[j]).collect());
            let (tv, ta) = soft_targets(&cands, &config.soft, labels.as_deref())?;
            entropy_sum += 0.5 * (entropy(&tv.probs) + entropy(&ta.probs));
            soft_xid_grad(&inst, &tv, &ta)?
        } else {
            xid_grad(&inst)?
        };
        grads.push(g);
        weights.push(if weighted { state.weights.weights[i] } else { 1.0 });
        caches.push((cache_v, cache_a));
    }
    let batch_loss = weighted_mean(grads, &weights)?;

    let mut acc_v = vec![0.0; state.video_encoder.params().len()];
    let mut acc_a = vec![0.0; state.audio_encoder.params().len()];
    for (g, (cv, ca)) in batch_loss.grads.iter().zip(&caches) {
        state.video_encoder.backward_into(cv, &g.grad_video, &mut acc_v, None)?;
        state.audio_encoder.backward_into(ca, &g.grad_audio, &mut acc_a, None)?;
    }
    state.video_encoder.apply_adam(&acc_v, &mut state.video_adam, lr)?;
    state.audio_encoder.apply_adam(&acc_a, &mut state.audio_adam, lr)?;

    for (&i, (cv, ca)) in batch.iter().zip(&caches) {
        state.video_bank.ema_update(i, cv.embedding())?;
        state.audio_bank.ema_update(i, ca.embedding())?;
    }
    if !batch_loss.loss.is_finite() {
        return Err(Error::OutOfRange { what: "batch loss", value: batch_loss.loss });
    }
    Ok(StepStats {
        loss: batch_loss.loss,
        mean_weight: weights.iter().sum::<f64>() / weights.len() as f64,
        target_entropy: entropy_sum / batch.len() as f64,
        batch_size: batch.len(),
    })
}

fn mean_by_flag(weights: &[f64], flags: &[bool], want: bool) -> Option<f64> {
    let (sum, count) = weights
        .iter()
        .zip(flags)
        .filter(|(_, &f)| f == want)
        .fold((0.0, 0usize), |(s, c), (w, _)| (s + w, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Runs the next epoch, calling `on_step` after every batch.
pub fn run_epoch_with(
    state: &mut TrainState,
    config: &TrainConfig,
    data: &TrainData,
    on_step: &mut dyn FnMut(&TrainState, &StepStats),
) -> Result<EpochStats> {
    let epoch = state.epoch;
    if epoch >= config.total_epochs() {
        return Err(Error::OutOfRange { what: "epoch", value: epoch as f64 });
    }
    if state.video_bank.len() != data.len() {
        return Err(Error::ShapeMismatch { expected: state.video_bank.len(), got: data.len() });
    }
    let stage = config.stage_of(epoch);
    let lr = config.lr_at(epoch)?;
    if stage == Stage::Robust {
        refresh_weights(state, config, data)?;
    } else {
        state.weights = WeightState::uniform(data.len(), config.weight);
    }
    let mut rng = epoch_rng(state.seed, epoch);
    let batches = epoch_batches(data.len(), config.batch_size, &mut rng);
    let (mut loss_sum, mut entropy_sum) = (0.0, 0.0);
    for batch in &batches {
        let s = train_step(state, config, data, batch, stage, lr, &mut rng)?;
        loss_sum += s.loss * s.batch_size as f64;
        entropy_sum += s.target_entropy * s.batch_size as f64;
        on_step(state, &s);
    }
    state.epoch += 1;
    let effective: Vec<f64> = if uses_weights(stage, config) {
        state.weights.weights.clone()
    } else {
        vec![1.0; data.len()]
    };
    Ok(EpochStats {
        epoch,
        stage,
        lr,
        loss: loss_sum / data.len() as f64,
        mean_weight_clean: mean_by_flag(&effective, &data.faulty, false),
        mean_weight_faulty: mean_by_flag(&effective, &data.faulty, true),
        target_entropy: entropy_sum / data.len() as f64,
    })
}

pub fn run_epoch(state: &mut TrainState, config: &TrainConfig, data: &TrainData) -> Result<EpochStats> {
    run_epoch_with(state, config, data, &mut |_, _| {})
}

/// Runs epochs until `state.epoch == until`, reporting each one.
pub fn run_until(
    state: &mut TrainState,
    config: &TrainConfig,
    data: &TrainData,
    until: usize,
    on_epoch: &mut dyn FnMut(&TrainState, &EpochStats) -> Result<()>,
) -> Result<()> {
    if until > config.total_epochs() {
        return Err(Error::OutOfRange { what: "epoch", value: until as f64 });
    }
    while state.epoch < until {
        let stats = run_epoch(state, config, data)?;
        on_epoch(state, &stats)?;
    }
    Ok(())
}

/// Fresh state trained through the warmup epochs.
pub fn warmup(data: &TrainData, config: &TrainConfig) -> Result<TrainState> {
    let mut state = TrainState::init(config, data)?;
    run_until(&mut state, config, data, config.warmup_epochs, &mut |_, _| Ok(()))?;
    Ok(state)
}

/// Continues a warmed-up state through the robust epochs.
pub fn robust_stage(mut state: TrainState, data: &TrainData, config: &TrainConfig) -> Result<TrainState> {
    if state.epoch < config.warmup_epochs {
        return Err(Error::InvalidConfig("robust stage needs a warmed-up state"));
    }
    run_until(&mut state, config, data, config.total_epochs(), &mut |_, _| Ok(()))?;
    Ok(state)
}
