//! Multi-run experiments: noise curve, parameter sweeps, target-strategy
//! table and the weighting/soft-target ablation grid.
//!
//! Runs that differ only in robust-stage settings share one warmup per
//! (data, seed): the warmup never reads those settings, so each cell is
//! identical to a standalone run.

use rxid_core::soft_targets::Strategy;
use rxid_core::trainer::{robust_stage, warmup, TrainConfig, TrainState};
use rxid_core::weighting::{delta_for_noise_fraction, WeightParams};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::format::{fmt_g, fmt_opt, Csv};
use crate::run::{retrieval, Prepared};

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub label: String,
    pub seed: u64,
    pub r_at_1: f64,
    pub r_at_5: f64,
    pub mean_weight_clean: Option<f64>,
    pub mean_weight_faulty: Option<f64>,
}

/// Warmup settings only; two configs with equal keys warm up identically.
fn warmup_key(cfg: &TrainConfig) -> TrainConfig {
    TrainConfig {
        robust_epochs: 0,
        soft: Default::default(),
        weight: WeightParams::default(),
        lr_start: 0.0,
        lr_end: 0.0,
        ..cfg.clone().xid()
    }
}

fn mean_where(weights: &[f64], flags: &[bool], want: bool) -> Option<f64> {
    let picked: Vec<f64> = weights.iter().zip(flags).filter(|(_, &f)| f == want).map(|(w, _)| *w).collect();
    (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
}

/// Warms up once, then runs the robust stage of every variant from that state.
pub fn run_variants(prep: &Prepared, seed: u64, variants: &[Variant]) -> Result<(TrainState, Vec<CellResult>)> {
    let first = variants.first().ok_or_else(|| Error::Config("no variants to run".into()))?;
    let key = warmup_key(&first.train);
    if variants.iter().any(|v| warmup_key(&v.train) != key) {
        return Err(Error::Config("variants must share their warmup settings".into()));
    }
    let warm = warmup(&prep.data, &first.train)?;
    let mut cells = Vec::with_capacity(variants.len());
    for v in variants {
        let state = robust_stage(warm.clone(), &prep.data, &v.train)?;
        let r = retrieval(&state, prep, &[1, 5])?;
        let used = v.train.robust_epochs > 0 && (v.train.enable_weighting || v.train.oracle_weights);
        let (wc, wf) = if used {
            (mean_where(&state.weights.weights, &prep.data.faulty, false), mean_where(&state.weights.weights, &prep.data.faulty, true))
        } else {
            (None, None)
        };
        log::info!("seed {seed} {}: r@1 {}", v.label, fmt_g(r[0]));
        cells.push(CellResult {
            label: v.label.clone(),
            seed,
            r_at_1: r[0],
            r_at_5: r[1],
            mean_weight_clean: wc,
            mean_weight_faulty: wf,
        });
    }
    Ok((warm, cells))
}

fn seeded(base: &ExperimentConfig, seed: u64, fraction: Option<f64>) -> ExperimentConfig {
    let mut cfg = base.clone().with_seed(seed);
    if let Some(f) = fraction {
        cfg.data.faulty_fraction = f;
    }
    cfg
}

fn with_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<TrainConfig> {
    let mut c = cfg.clone();
    c.train.mode = mode;
    c.train_config()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMethod {
    Xid,
    Weighted,
    Oracle,
}

impl NoiseMethod {
    pub const ALL: [NoiseMethod; 3] = [NoiseMethod::Xid, NoiseMethod::Weighted, NoiseMethod::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMethod::Xid => "xid",
            NoiseMethod::Weighted => "weighted-xid",
            NoiseMethod::Oracle => "oracle-xid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub fraction: f64,
    pub method: NoiseMethod,
    pub delta: Option<f64>,
    pub cell: CellResult,
}

/// Weighted runs place the weight midpoint at the injected fraction; with no
/// injection they keep the configured offset.
pub fn noise_curve(base: &ExperimentConfig, fractions: &[f64], seeds: &[u64]) -> Result<Vec<NoiseRow>> {
    if let Some(&bad) = fractions.iter().find(|&&f| !(0.0..=0.9).contains(&f)) {
        return Err(Error::Config(format!("noise fraction {bad} outside [0, 0.9]")));
    }
    let mut rows = Vec::new();
    for &fraction in fractions {
        for &seed in seeds {
            let cfg = seeded(base, seed, Some(fraction));
            let prep = Prepared::generate(&cfg)?;
            let delta = if fraction > 0.0 { delta_for_noise_fraction(fraction)? } else { cfg.train.delta };
            let mut variants = Vec::new();
            for m in NoiseMethod::ALL {
                let mut train = with_mode(
                    &cfg,
                    match m {
                        NoiseMethod::Xid => Mode::Xid,
                        NoiseMethod::Weighted => Mode::WeightedXid,
                        NoiseMethod::Oracle => Mode::OracleXid,
                    },
                )?;
                train.weight.delta = delta;
                variants.push(Variant { label: m.as_str().into(), train });
            }
            let (_, cells) = run_variants(&prep, seed, &variants)?;
            for (m, cell) in NoiseMethod::ALL.into_iter().zip(cells) {
                let delta = (m == NoiseMethod::Weighted).then_some(delta);
                rows.push(NoiseRow { fraction, method: m, delta, cell });
            }
        }
    }
    Ok(rows)
}

pub fn noise_curve_csv(rows: &[NoiseRow]) -> Csv {
    let mut csv = Csv::new(&["fraction", "method", "seed", "delta", "r_at_1", "r_at_5", "mean_weight_clean", "mean_weight_faulty"]);
    for r in rows {
        csv.row(&[
            fmt_g(r.fraction),
            r.method.as_str().to_owned(),
            r.cell.seed.to_string(),
            fmt_opt(r.delta),
            fmt_g(r.cell.r_at_1),
            fmt_g(r.cell.r_at_5),
            fmt_opt(r.cell.mean_weight_clean),
            fmt_opt(r.cell.mean_weight_faulty),
        ]);
    }
    csv
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Delta,
    Lambda,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(SweepParam::Delta),
            "lambda" => Ok(SweepParam::Lambda),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}` (expected delta or lambda)"))),
        }
    }
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Delta => "delta",
            SweepParam::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub cell: CellResult,
}

/// One run per value and seed, in the configured mode, which must use the
/// swept parameter.
pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    let (weighting, soft, _) = base.train.mode.flags();
    let used = match param {
        SweepParam::Delta => weighting,
        SweepParam::Lambda => soft,
    };
    if !used {
        return Err(Error::Config(format!("train.mode `{}` does not use {}", base.train.mode.as_str(), param.as_str())));
    }
    let mut rows = Vec::new();
    for &seed in seeds {
        let cfg = seeded(base, seed, None);
        let prep = Prepared::generate(&cfg)?;
        let mut variants = Vec::new();
        for &v in values {
            let mut c = cfg.clone();
            match param {
                SweepParam::Delta => c.train.delta = v,
                SweepParam::Lambda => c.train.lambda = v,
            }
            c.validate()?;
            variants.push(Variant { label: fmt_g(v), train: c.train_config()? });
        }
        let (_, cells) = run_variants(&prep, seed, &variants)?;
        rows.extend(values.iter().zip(cells).map(|(&value, cell)| SweepRow { param, value, cell }));
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Csv {
    let mut csv = Csv::new(&["param", "value", "seed", "r_at_1", "r_at_5"]);
    for r in rows {
        csv.row(&[r.param.as_str().to_owned(), fmt_g(r.value), r.cell.seed.to_string(), fmt_g(r.cell.r_at_1), fmt_g(r.cell.r_at_5)]);
    }
    csv
}

/// Vanilla xID against each target strategy (soft targets only, no weights).
pub fn strategy_table(base: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<CellResult>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let cfg = seeded(base, seed, None);
        let prep = Prepared::generate(&cfg)?;
        let mut variants = vec![Variant { label: "xid".into(), train: with_mode(&cfg, Mode::Xid)? }];
        for s in [Strategy::Bootstrap, Strategy::Swapped, Strategy::Neighbor, Strategy::Ccp, Strategy::Oracle] {
            let mut train = with_mode(&cfg, Mode::SoftXid)?;
            train.soft.strategy = s;
            variants.push(Variant { label: s.as_str().into(), train });
        }
        rows.extend(run_variants(&prep, seed, &variants)?.1);
    }
    Ok(rows)
}

/// xID, Weighted-xID, Soft-xID and Robust-xID on the configured data.
pub fn ablation(base: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<CellResult>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let cfg = seeded(base, seed, None);
        let prep = Prepared::generate(&cfg)?;
        let variants = [Mode::Xid, Mode::WeightedXid, Mode::SoftXid, Mode::RobustXid]
            .into_iter()
            .map(|m| Ok(Variant { label: m.as_str().into(), train: with_mode(&cfg, m)? }))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(run_variants(&prep, seed, &variants)?.1);
    }
    Ok(rows)
}

pub fn cells_csv(rows: &[CellResult]) -> Csv {
    let mut csv = Csv::new(&["method", "seed", "r_at_1", "r_at_5", "mean_weight_clean", "mean_weight_faulty"]);
    for r in rows {
        csv.row(&[
            r.label.clone(),
            r.seed.to_string(),
            fmt_g(r.r_at_1),
            fmt_g(r.r_at_5),
            fmt_opt(r.mean_weight_clean),
            fmt_opt(r.mean_weight_faulty),
        ]);
    }
    csv
}

/// Mean R@1 per label, in first-seen order.
pub fn mean_r_at_1<'a>(cells: impl IntoIterator<Item = &'a CellResult>) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64, usize)> = Vec::new();
    for c in cells {
        match out.iter_mut().find(|(l, _, _)| *l == c.label) {
            Some(e) => {
                e.1 += c.r_at_1;
                e.2 += 1;
            }
            None => out.push((c.label.clone(), c.r_at_1, 1)),
        }
    }
    out.into_iter().map(|(l, s, n)| (l, s / n as f64)).collect()
}
