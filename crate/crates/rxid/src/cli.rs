//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use rxid_core::synth::generate_with_faults;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiments::{ablation, cells_csv, noise_curve, noise_curve_csv, strategy_table, sweep, sweep_csv, SweepParam};
use crate::run::{create_dir, write_text, Prepared};
use crate::{checkpoint, dataset, run};

#[derive(Debug, Parser)]
#[command(name = "rxid", version, about = "Robust cross-modal instance discrimination on synthetic paired data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides both data.seed and train.seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (with faulty positives per data.faulty_fraction).
    Generate {
        #[command(flatten)]
        common: Common,
        /// Dataset file to write; a `.csv` summary is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Warmup plus robust stage; writes metrics.csv, weights.csv and checkpoints.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset file; generated from [data] when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output directory (default: output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Resume from this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Retrieval, detection AUC, score histogram and few-shot probe for a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// xID, Weighted-xID and Oracle-xID across injected noise fractions.
    NoiseCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.5")]
        fractions: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One run per value of `delta` or `lambda`.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vanilla xID against every soft-target strategy.
    Strategies {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// xID / Weighted-xID / Soft-xID / Robust-xID grid.
    Ablation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration.
    Defaults,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = match common.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| cfg.output.dir.clone())
}

/// Writes a table plus the resolved configuration into `dir`.
fn write_table(cfg: &ExperimentConfig, dir: &Path, name: &str, csv: &crate::format::Csv) -> Result<()> {
    create_dir(dir)?;
    let mut resolved = cfg.resolved();
    resolved.output.dir = dir.to_path_buf();
    write_text(&dir.join("config.toml"), &resolved.to_toml_string())?;
    csv.write(&dir.join(name))?;
    println!("wrote {} ({} rows)", dir.join(name).display(), csv.rows());
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, out } => {
            let cfg = load_config(&common)?;
            let ds = generate_with_faults(&cfg.data.synth_config())?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_dir(parent)?;
            }
            dataset::save(&ds, &out)?;
            dataset::write_summary_csv(&ds, &out.with_extension("csv"))?;
            println!("N={} C={} injected={}", ds.len(), ds.config.num_classes, ds.num_faulty());
        }
        Command::Train { common, data, out, checkpoint: resume } => {
            let cfg = load_config(&common)?;
            let prep = match &data {
                Some(p) => Prepared::from_dataset(dataset::load(p)?)?,
                None => Prepared::generate(&cfg)?,
            };
            let resume = resume.as_deref().map(checkpoint::load).transpose()?;
            let dir = out_dir(&cfg, &out);
            let outcome = run::train(&cfg, &prep, resume, &dir)?;
            println!("trained {} epochs; checkpoint {}", outcome.state.epoch, outcome.checkpoint.display());
        }
        Command::Eval { common, checkpoint: ckpt, data, out } => {
            let cfg = load_config(&common)?;
            let state = checkpoint::load(&ckpt)?;
            let prep = Prepared::from_dataset(dataset::load(&data)?)?;
            let dir = out_dir(&cfg, &out);
            let report = run::eval(&cfg, &state, &prep, &dir)?;
            let r = |k| report.r_at_k.get(&k).copied().unwrap_or(f64::NAN);
            println!(
                "R@1 {} R@5 {} R@20 {} AUC {}",
                crate::format::fmt_g(r(1)),
                crate::format::fmt_g(r(5)),
                crate::format::fmt_g(r(20)),
                crate::format::fmt_opt(report.faulty_auc)
            );
        }
        Command::NoiseCurve { common, fractions, seeds, out } => {
            let cfg = load_config(&common)?;
            let rows = noise_curve(&cfg, &fractions, &seeds)?;
            write_table(&cfg, &out_dir(&cfg, &out), "noise_curve.csv", &noise_curve_csv(&rows))?;
        }
        Command::Sweep { common, param, values, seeds, out } => {
            let cfg = load_config(&common)?;
            let param: SweepParam = param.parse()?;
            let rows = sweep(&cfg, param, &values, &seeds)?;
            write_table(&cfg, &out_dir(&cfg, &out), &format!("sweep_{}.csv", param.as_str()), &sweep_csv(&rows))?;
        }
        Command::Strategies { common, seeds, out } => {
            let cfg = load_config(&common)?;
            let rows = strategy_table(&cfg, &seeds)?;
            write_table(&cfg, &out_dir(&cfg, &out), "strategies.csv", &cells_csv(&rows))?;
        }
        Command::Ablation { common, seeds, out } => {
            let cfg = load_config(&common)?;
            let rows = ablation(&cfg, &seeds)?;
            write_table(&cfg, &out_dir(&cfg, &out), "ablation.csv", &cells_csv(&rows))?;
        }
        Command::Defaults => print!("{}", ExperimentConfig::default().to_toml_string()),
    }
    Ok(())
}

/// Exit status for an outcome: 0 success, 2 configuration error, 1 otherwise.
pub fn exit_code(result: &std::result::Result<(), Error>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) => e.exit_code(),
    }
}
