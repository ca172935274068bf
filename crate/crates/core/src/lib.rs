//! Robust cross-modal instance discrimination on embeddings.
//!
//! Two encoders map paired video/audio inputs onto the unit sphere; memory
//! banks hold a running estimate of every instance's embedding. Training
//! contrasts each instance's pair against negatives drawn from the banks,
//! down-weights pairs whose modalities disagree and softens targets toward
//! negatives that look semantically related.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod encoder;
pub mod error;
pub mod eval;
pub mod losses;
pub mod math;
pub mod memory_bank;
pub mod soft_targets;
pub mod synth;
pub mod trainer;
pub mod weighting;

pub use encoder::{AdamState, MlpEncoder};
pub use error::{Error, Result};
pub use memory_bank::{MemoryBank, Modality};
pub use soft_targets::{SoftTargetParams, Strategy};
pub use synth::{SynthConfig, SynthDataset};
pub use trainer::{TrainConfig, TrainData, TrainState};
pub use weighting::{WeightParams, WeightState};
