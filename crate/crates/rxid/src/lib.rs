//! File formats, configuration and experiment drivers for the `rxid`
//! command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod binio;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod format;
pub mod run;

pub use config::{ExperimentConfig, Mode};
pub use error::{Error, Result};
