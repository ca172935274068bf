//! Declarative experiment configuration (`[data]`, `[train]`, `[eval]`,
//! `[output]`). Unknown keys are rejected; every key has a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rxid_core::soft_targets::{SoftTargetParams, Strategy};
use rxid_core::synth::SynthConfig;
use rxid_core::trainer::TrainConfig;
use rxid_core::weighting::WeightParams;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub num_classes: usize,
    pub instances_per_class: usize,
    pub latent_dim: usize,
    pub raw_dim: usize,
    pub within_class_noise: f64,
    pub faulty_fraction: f64,
    pub seed: u64,
    pub heldout_per_class: usize,
    pub distractor_classes: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self::from(SynthConfig::default())
    }
}

impl From<SynthConfig> for DataSection {
    fn from(c: SynthConfig) -> Self {
        Self {
            num_classes: c.num_classes,
            instances_per_class: c.instances_per_class,
            latent_dim: c.latent_dim,
            raw_dim: c.raw_dim,
            within_class_noise: c.within_class_noise,
            faulty_fraction: c.faulty_fraction,
            seed: c.seed,
            heldout_per_class: c.heldout_per_class,
            distractor_classes: c.distractor_classes,
        }
    }
}

impl DataSection {
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            num_classes: self.num_classes,
            instances_per_class: self.instances_per_class,
            latent_dim: self.latent_dim,
            raw_dim: self.raw_dim,
            within_class_noise: self.within_class_noise,
            faulty_fraction: self.faulty_fraction,
            seed: self.seed,
            heldout_per_class: self.heldout_per_class,
            distractor_classes: self.distractor_classes,
        }
    }
}

/// Which parts of the robust objective are active after warmup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Plain cross-modal instance discrimination throughout.
    Xid,
    /// Score-based instance weights only.
    WeightedXid,
    /// Softened targets only.
    SoftXid,
    /// Weights and softened targets.
    RobustXid,
    /// Zero weight on instances flagged faulty in the data.
    OracleXid,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Xid, Mode::WeightedXid, Mode::SoftXid, Mode::RobustXid, Mode::OracleXid];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Xid => "xid",
            Mode::WeightedXid => "weighted-xid",
            Mode::SoftXid => "soft-xid",
            Mode::RobustXid => "robust-xid",
            Mode::OracleXid => "oracle-xid",
        }
    }

    /// `(enable_weighting, enable_soft_targets, oracle_weights)`.
    pub fn flags(self) -> (bool, bool, bool) {
        match self {
            Mode::Xid => (false, false, false),
            Mode::WeightedXid => (true, false, false),
            Mode::SoftXid => (false, true, false),
            Mode::RobustXid => (true, true, false),
            Mode::OracleXid => (false, false, true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub mode: Mode,
    pub warmup_epochs: usize,
    pub robust_epochs: usize,
    pub batch_size: usize,
    pub num_negatives: usize,
    pub tau: f64,
    /// One of onehot, bootstrap, swapped, neighbor, ccp, oracle.
    pub strategy: String,
    pub tau_s: f64,
    pub tau_t: f64,
    pub lambda: f64,
    pub include_self_in_softening: bool,
    pub delta: f64,
    pub kappa: f64,
    pub w_min: f64,
    pub lr_warmup: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub bank_momentum: f64,
    /// Training seed; defaults to the data seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            mode: Mode::RobustXid,
            warmup_epochs: t.warmup_epochs,
            robust_epochs: t.robust_epochs,
            batch_size: t.batch_size,
            num_negatives: t.num_negatives,
            tau: t.tau,
            strategy: t.soft.strategy.as_str().to_owned(),
            tau_s: t.soft.tau_s,
            tau_t: t.soft.tau_t,
            lambda: t.soft.lambda,
            include_self_in_softening: t.soft.include_self,
            delta: t.weight.delta,
            kappa: t.weight.kappa,
            w_min: t.weight.w_min,
            lr_warmup: t.lr_warmup,
            lr_start: t.lr_start,
            lr_end: t.lr_end,
            hidden_dim: t.hidden_dim,
            embed_dim: t.embed_dim,
            bank_momentum: t.bank_momentum,
            seed: None,
        }
    }
}

impl TrainSection {
    pub fn strategy(&self) -> Result<Strategy> {
        self.strategy.parse().map_err(|_| {
            let known: Vec<&str> = Strategy::ALL.iter().map(|s| s.as_str()).collect();
            Error::Config(format!("train.strategy: unknown strategy `{}` (expected one of {})", self.strategy, known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Epoch cadence of retrieval/AUC columns in metrics.csv; 0 leaves them empty.
    pub eval_every: usize,
    pub histogram_bins: usize,
    pub histogram_lo: f64,
    pub histogram_hi: f64,
    pub few_shot: Vec<usize>,
    pub few_shot_trials: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { eval_every: 1, histogram_bins: 20, histogram_lo: -1.0, histogram_hi: 1.0, few_shot: vec![1, 5, 10], few_shot_trials: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also save `checkpoint-epoch-NNNN.rxck` every this many epochs (0 = final only).
    pub checkpoint_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("runs/default"), checkpoint_every: 0 }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Overrides both the data and the training seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.data.seed = seed;
        self.train.seed = Some(seed);
        self
    }

    pub fn train_seed(&self) -> u64 {
        self.train.seed.unwrap_or(self.data.seed)
    }

    /// Same configuration with every default made explicit.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.train.seed = Some(self.train_seed());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: rxid_core::Error| Error::Config(e.to_string());
        self.data.synth_config().validate().map_err(cfg)?;
        let train = self.train_config()?;
        train.validate(self.data.synth_config().num_instances()).map_err(cfg)?;
        let e = &self.eval;
        if e.histogram_bins == 0 {
            return Err(Error::Config("eval.histogram_bins must be at least 1".into()));
        }
        if !(e.histogram_lo < e.histogram_hi) {
            return Err(Error::Config("eval.histogram_lo must be below eval.histogram_hi".into()));
        }
        if e.few_shot.contains(&0) || e.few_shot_trials == 0 {
            return Err(Error::Config("eval.few_shot entries and eval.few_shot_trials must be positive".into()));
        }
        Ok(())
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let (enable_weighting, enable_soft_targets, oracle_weights) = t.mode.flags();
        Ok(TrainConfig {
            warmup_epochs: t.warmup_epochs,
            robust_epochs: t.robust_epochs,
            batch_size: t.batch_size,
            num_negatives: t.num_negatives,
            tau: t.tau,
            soft: SoftTargetParams {
                strategy: t.strategy()?,
                tau_s: t.tau_s,
                tau_t: t.tau_t,
                lambda: t.lambda,
                include_self: t.include_self_in_softening,
            },
            weight: WeightParams { delta: t.delta, kappa: t.kappa, w_min: t.w_min },
            enable_weighting,
            enable_soft_targets,
            oracle_weights,
            lr_warmup: t.lr_warmup,
            lr_start: t.lr_start,
            lr_end: t.lr_end,
            hidden_dim: t.hidden_dim,
            embed_dim: t.embed_dim,
            bank_momentum: t.bank_momentum,
            seed: self.train_seed(),
        })
    }
}
