//! Training and evaluation driver behind the `train` and `eval` commands.

use std::path::{Path, PathBuf};

use rxid_core::eval::{evaluate, retrieval_recall, EvalInputs, EvalOptions, EvalReport, LabeledFeatures};
use rxid_core::memory_bank::Modality;
use rxid_core::synth::{generate_heldout, generate_with_faults, SynthDataset};
use rxid_core::trainer::{run_until, EpochStats, TrainData, TrainState};
use rxid_core::weighting::correspondence_scores;

use crate::checkpoint;
use crate::config::{EvalSection, ExperimentConfig};
use crate::error::{Error, Result};
use crate::format::{fmt_g, fmt_opt, Csv};

/// A dataset together with its held-out retrieval queries.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: SynthDataset,
    pub data: TrainData,
    pub heldout_video: Vec<f64>,
    pub heldout_labels: Vec<u32>,
}

impl Prepared {
    /// Held-out queries are regenerated from the configuration in the dataset.
    pub fn from_dataset(dataset: SynthDataset) -> Result<Self> {
        let heldout = generate_heldout(&dataset.config)?;
        Ok(Self {
            data: TrainData::from_dataset(&dataset),
            heldout_video: heldout.iter().flat_map(|i| i.video.iter().map(|&x| f64::from(x))).collect(),
            heldout_labels: heldout.iter().map(|i| i.label).collect(),
            dataset,
        })
    }

    pub fn generate(cfg: &ExperimentConfig) -> Result<Self> {
        Self::from_dataset(generate_with_faults(&cfg.data.synth_config())?)
    }
}

/// Training-set and held-out video embeddings.
pub fn embeddings(state: &TrainState, prep: &Prepared) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((
        state.embed_all(Modality::Video, &prep.data.video)?,
        state.embed_all(Modality::Video, &prep.heldout_video)?,
    ))
}

/// R@K of held-out queries against the training gallery.
pub fn retrieval(state: &TrainState, prep: &Prepared, ks: &[usize]) -> Result<Vec<f64>> {
    let (gallery, queries) = embeddings(state, prep)?;
    let dim = state.video_encoder.output_dim();
    Ok(retrieval_recall(
        &LabeledFeatures::new(&queries, &prep.heldout_labels, dim)?,
        &LabeledFeatures::new(&gallery, &prep.data.labels, dim)?,
        ks,
    )?)
}

/// Detection AUC of bank correspondence scores; `None` without both kinds of instance.
pub fn faulty_auc(state: &TrainState, prep: &Prepared) -> Result<Option<f64>> {
    let scores = correspondence_scores(&state.video_bank, &state.audio_bank)?;
    match rxid_core::eval::faulty_detection_auc(&scores, &prep.data.faulty) {
        Ok(a) => Ok(Some(a)),
        Err(rxid_core::Error::DegenerateLabels) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn eval_options(e: &EvalSection, seed: u64) -> EvalOptions {
    EvalOptions {
        ks: vec![1, 5, 20],
        histogram_bins: e.histogram_bins,
        histogram_lo: e.histogram_lo,
        histogram_hi: e.histogram_hi,
        few_shot: e.few_shot.clone(),
        few_shot_trials: e.few_shot_trials,
        seed,
    }
}

pub fn full_report(state: &TrainState, prep: &Prepared, options: &EvalOptions) -> Result<EvalReport> {
    let (gallery, queries) = embeddings(state, prep)?;
    let dim = state.video_encoder.output_dim();
    let scores = correspondence_scores(&state.video_bank, &state.audio_bank)?;
    Ok(evaluate(
        &EvalInputs {
            gallery: LabeledFeatures::new(&gallery, &prep.data.labels, dim)?,
            queries: LabeledFeatures::new(&queries, &prep.heldout_labels, dim)?,
            scores: &scores,
            faulty: &prep.data.faulty,
        },
        options,
    )?)
}

pub const METRICS_HEADER: [&str; 9] =
    ["epoch", "stage", "lr", "loss", "mean_weight_clean", "mean_weight_faulty", "r_at_1", "r_at_5", "faulty_auc"];

pub fn metrics_row(stats: &EpochStats, retrieval: Option<(f64, f64)>, auc: Option<f64>) -> Vec<String> {
    vec![
        stats.epoch.to_string(),
        stats.stage.as_str().to_owned(),
        fmt_g(stats.lr),
        fmt_g(stats.loss),
        fmt_opt(stats.mean_weight_clean),
        fmt_opt(stats.mean_weight_faulty),
        fmt_opt(retrieval.map(|r| r.0)),
        fmt_opt(retrieval.map(|r| r.1)),
        fmt_opt(auc),
    ]
}

/// Per-instance `(score, weight, faulty)` from the state's banks and weights.
pub fn weights_csv(state: &TrainState, prep: &Prepared) -> Result<Csv> {
    let scores = correspondence_scores(&state.video_bank, &state.audio_bank)?;
    let mut csv = Csv::new(&["id", "class", "faulty", "score", "weight"]);
    for (i, inst) in prep.dataset.instances.iter().enumerate() {
        csv.row(&[
            inst.id.to_string(),
            inst.label.to_string(),
            u8::from(inst.faulty).to_string(),
            fmt_g(scores[i]),
            fmt_g(state.weights.weights[i]),
        ]);
    }
    Ok(csv)
}

pub fn histogram_csv(report: &EvalReport) -> Csv {
    let mut csv = Csv::new(&["bin_left", "bin_right", "count", "count_faulty", "count_clean"]);
    for b in &report.histogram {
        csv.row(&[fmt_g(b.left), fmt_g(b.right), b.count.to_string(), b.count_faulty.to_string(), b.count_clean.to_string()]);
    }
    csv
}

pub fn report_json(report: &EvalReport, prep: &Prepared) -> serde_json::Value {
    let r = |k: usize| report.r_at_k.get(&k).copied();
    serde_json::json!({
        "num_instances": prep.data.len(),
        "num_faulty": prep.dataset.num_faulty(),
        "num_queries": prep.heldout_labels.len(),
        "r_at_1": r(1),
        "r_at_5": r(5),
        "r_at_20": r(20),
        "faulty_auc": report.faulty_auc,
        "per_class_r_at_1": report.per_class_r_at_1.iter().map(|(c, v)| (c.to_string(), serde_json::Value::from(*v))).collect::<serde_json::Map<_, _>>(),
        "few_shot": report.few_shot.iter().map(|(s, a)| serde_json::json!({"shots": s, "accuracy": a})).collect::<Vec<_>>(),
    })
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub metrics: Csv,
    pub checkpoint: PathBuf,
}

pub fn checkpoint_name(epoch: usize) -> String {
    format!("checkpoint-epoch-{epoch:04}.rxck")
}

/// Trains (or resumes) to the configured epoch count, writing the resolved
/// config, `metrics.csv`, `weights.csv` and `checkpoint.rxck` into `out`.
pub fn train(cfg: &ExperimentConfig, prep: &Prepared, resume: Option<TrainState>, out: &Path) -> Result<TrainOutcome> {
    let train_cfg = cfg.train_config()?;
    train_cfg.validate(prep.data.len()).map_err(|e| Error::Config(e.to_string()))?;
    create_dir(out)?;
    let mut resolved = cfg.resolved();
    resolved.data = prep.dataset.config.into();
    resolved.output.dir = out.to_path_buf();
    write_text(&out.join("config.toml"), &resolved.to_toml_string())?;

    let mut state = match resume {
        Some(s) => {
            if s.seed != train_cfg.seed {
                return Err(Error::Config(format!("checkpoint seed {} differs from configured seed {}", s.seed, train_cfg.seed)));
            }
            if s.video_bank.len() != prep.data.len() {
                return Err(Error::Config("checkpoint was trained on a dataset of a different size".into()));
            }
            s
        }
        None => TrainState::init(&train_cfg, &prep.data)?,
    };
    let mut metrics = Csv::new(&METRICS_HEADER);
    let eval_every = cfg.eval.eval_every;
    let every = cfg.output.checkpoint_every;
    let total = train_cfg.total_epochs();
    let mut failure: Option<Error> = None;
    let mut record = |st: &TrainState, stats: &EpochStats| -> Result<()> {
        let due = eval_every > 0 && ((stats.epoch + 1).is_multiple_of(eval_every) || stats.epoch + 1 == total);
        let (r, auc) = if due {
            let r = retrieval(st, prep, &[1, 5])?;
            (Some((r[0], r[1])), faulty_auc(st, prep)?)
        } else {
            (None, None)
        };
        metrics.row(&metrics_row(stats, r, auc));
        log::info!("epoch {} [{}] loss {} r@1 {}", stats.epoch, stats.stage.as_str(), fmt_g(stats.loss), fmt_opt(r.map(|x| x.0)));
        if every > 0 && st.epoch.is_multiple_of(every) {
            checkpoint::save(st, &out.join(checkpoint_name(st.epoch)))?;
        }
        Ok(())
    };
    let result = run_until(&mut state, &train_cfg, &prep.data, total, &mut |st, stats| {
        record(st, stats).map_err(|e| {
            failure = Some(e);
            rxid_core::Error::InvalidShape("epoch output failed")
        })
    });
    metrics.write(&out.join("metrics.csv"))?;
    if let Some(e) = failure {
        return Err(e);
    }
    result?;
    let ckpt = out.join("checkpoint.rxck");
    checkpoint::save(&state, &ckpt)?;
    weights_csv(&state, prep)?.write(&out.join("weights.csv"))?;
    Ok(TrainOutcome { state, metrics, checkpoint: ckpt })
}

/// Writes `report.json` and `histograms.csv` for a trained state.
pub fn eval(cfg: &ExperimentConfig, state: &TrainState, prep: &Prepared, out: &Path) -> Result<EvalReport> {
    if state.video_bank.len() != prep.data.len() {
        return Err(Error::Config("checkpoint and dataset disagree on the number of instances".into()));
    }
    create_dir(out)?;
    let report = full_report(state, prep, &eval_options(&cfg.eval, cfg.train_seed()))?;
    let json = serde_json::to_string_pretty(&report_json(&report, prep))?;
    write_text(&out.join("report.json"), &json)?;
    histogram_csv(&report).write(&out.join("histograms.csv"))?;
    Ok(report)
}
