//! Retrieval recall, faulty-positive detection AUC, score histograms and a
//! nearest-class-mean few-shot probe.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{dot, norm};

/// Row-major feature matrix with one label per row.
#[derive(Debug, Clone, Copy)]
pub struct LabeledFeatures<'a> {
    pub features: &'a [f64],
    pub labels: &'a [u32],
    pub dim: usize,
}

impl<'a> LabeledFeatures<'a> {
    pub fn new(features: &'a [f64], labels: &'a [u32], dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::ShapeMismatch { expected: labels.len() * dim, got: features.len() });
        }
        Ok(Self { features, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn row(&self, i: usize) -> &'a [f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d > 0.0 {
        dot(a, b) / d
    } else {
        0.0
    }
}

/// Gallery indices ordered by descending cosine similarity; ties go to the lower index.
fn ranking(query: &[f64], gallery: &LabeledFeatures<'_>, top: usize) -> Vec<usize> {
    let sims: Vec<f64> = (0..gallery.len()).map(|j| cosine(query, gallery.row(j))).collect();
    let mut order: Vec<usize> = (0..gallery.len()).collect();
    let by_rank = |&a: &usize, &b: &usize| sims[b].partial_cmp(&sims[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b));
    let top = top.min(order.len());
    if top < order.len() && top > 0 {
        order.select_nth_unstable_by(top - 1, by_rank);
        order.truncate(top);
    }
    order.sort_unstable_by(by_rank);
    order.truncate(top);
    order
}

/// R@K for several `k` at once: fraction of queries whose `k` nearest
/// gallery items include one of the query's class.
pub fn retrieval_recall(query: &LabeledFeatures<'_>, gallery: &LabeledFeatures<'_>, ks: &[usize]) -> Result<Vec<f64>> {
    if query.dim != gallery.dim {
        return Err(Error::ShapeMismatch { expected: gallery.dim, got: query.dim });
    }
    if ks.contains(&0) {
        return Err(Error::OutOfRange { what: "k", value: 0.0 });
    }
    if query.is_empty() {
        return Err(Error::InsufficientSamples("no queries"));
    }
    let k_max = ks.iter().copied().max().unwrap_or(1);
    let mut hits = vec![0usize; ks.len()];
    for q in 0..query.len() {
        let ranked = ranking(query.row(q), gallery, k_max);
        let first_hit = ranked.iter().position(|&j| gallery.labels[j] == query.labels[q]);
        if let Some(pos) = first_hit {
            for (h, &k) in hits.iter_mut().zip(ks) {
                if pos < k {
                    *h += 1;
                }
            }
        }
    }
    Ok(hits.into_iter().map(|h| h as f64 / query.len() as f64).collect())
}

pub fn retrieval_r_at_k(query: &LabeledFeatures<'_>, gallery: &LabeledFeatures<'_>, k: usize) -> Result<f64> {
    Ok(retrieval_recall(query, gallery, &[k])?[0])
}

/// R@1 per query class.
pub fn per_class_r_at_1(query: &LabeledFeatures<'_>, gallery: &LabeledFeatures<'_>) -> Result<BTreeMap<u32, f64>> {
    if query.dim != gallery.dim {
        return Err(Error::ShapeMismatch { expected: gallery.dim, got: query.dim });
    }
    let mut tally: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for q in 0..query.len() {
        let ranked = ranking(query.row(q), gallery, 1);
        let hit = ranked.first().is_some_and(|&j| gallery.labels[j] == query.labels[q]);
        let e = tally.entry(query.labels[q]).or_default();
        e.0 += usize::from(hit);
        e.1 += 1;
    }
    Ok(tally.into_iter().map(|(c, (h, n))| (c, h as f64 / n as f64)).collect())
}

/// Probability that a random clean instance outscores a random faulty one,
/// ties counting one half. Computed from mid-ranks.
pub fn faulty_detection_auc(scores: &[f64], faulty: &[bool]) -> Result<f64> {
    if scores.len() != faulty.len() {
        return Err(Error::ShapeMismatch { expected: scores.len(), got: faulty.len() });
    }
    let n_faulty = faulty.iter().filter(|&&f| f).count();
    let n_clean = faulty.len() - n_faulty;
    if n_faulty == 0 || n_clean == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum_clean = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based mid-rank of the tie group.
        let mid = (start + end + 1) as f64 / 2.0;
        rank_sum_clean += mid * order[start..end].iter().filter(|&&i| !faulty[i]).count() as f64;
        start = end;
    }
    let nc = n_clean as f64;
    Ok((rank_sum_clean - nc * (nc + 1.0) / 2.0) / (nc * n_faulty as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
    pub count_faulty: usize,
    pub count_clean: usize,
}

/// Equal-width bins over `[lo, hi)`; values outside the range are clamped
/// into the first or last bin so the counts always total `scores.len()`.
pub fn score_histogram(scores: &[f64], faulty: Option<&[bool]>, num_bins: usize, lo: f64, hi: f64) -> Result<Vec<HistogramBin>> {
    if num_bins == 0 {
        return Err(Error::OutOfRange { what: "num_bins", value: 0.0 });
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidRange { lo, hi });
    }
    if let Some(f) = faulty {
        if f.len() != scores.len() {
            return Err(Error::ShapeMismatch { expected: scores.len(), got: f.len() });
        }
    }
    let width = (hi - lo) / num_bins as f64;
    let mut bins: Vec<HistogramBin> = (0..num_bins)
        .map(|b| HistogramBin {
            left: lo + b as f64 * width,
            right: if b + 1 == num_bins { hi } else { lo + (b + 1) as f64 * width },
            count: 0,
            count_faulty: 0,
            count_clean: 0,
        })
        .collect();
    for (i, &s) in scores.iter().enumerate() {
        let raw = libm::floor((s - lo) / width);
        let b = if raw < 0.0 || raw.is_nan() { 0 } else { (raw as usize).min(num_bins - 1) };
        bins[b].count += 1;
        if faulty.is_some_and(|f| f[i]) {
            bins[b].count_faulty += 1;
        } else {
            bins[b].count_clean += 1;
        }
    }
    Ok(bins)
}

/// Nearest-class-mean accuracy with `shots` random training examples per
/// class, averaged over `trials`.
pub fn few_shot_probe(
    train: &LabeledFeatures<'_>,
    shots: usize,
    test: &LabeledFeatures<'_>,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if train.dim != test.dim {
        return Err(Error::ShapeMismatch { expected: train.dim, got: test.dim });
    }
    if shots == 0 || trials == 0 || test.is_empty() {
        return Err(Error::InsufficientSamples("need shots >= 1, trials >= 1 and a test set"));
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in train.labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.values().any(|members| members.len() < shots) {
        return Err(Error::InsufficientSamples("a class has fewer training examples than shots"));
    }
    let d = train.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let mut classes = Vec::with_capacity(by_class.len());
        let mut means = Vec::with_capacity(by_class.len() * d);
        for (&c, members) in &by_class {
            let mut mean = vec![0.0; d];
            for pick in index::sample(&mut rng, members.len(), shots) {
                mean.iter_mut().zip(train.row(members[pick])).for_each(|(m, x)| *m += x);
            }
            classes.push(c);
            means.extend(mean);
        }
        let centroids = LabeledFeatures { features: &means, labels: &classes, dim: d };
        let mut correct = 0usize;
        for t in 0..test.len() {
            let best = ranking(test.row(t), &centroids, 1)[0];
            correct += usize::from(classes[best] == test.labels[t]);
        }
        total += correct as f64 / test.len() as f64;
    }
    Ok(total / trials as f64)
}

/// Inputs of a full evaluation: training-set gallery, held-out queries and
/// per-instance correspondence scores with their ground-truth flags.
#[derive(Debug, Clone, Copy)]
pub struct EvalInputs<'a> {
    pub gallery: LabeledFeatures<'a>,
    pub queries: LabeledFeatures<'a>,
    pub scores: &'a [f64],
    pub faulty: &'a [bool],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    pub histogram_bins: usize,
    pub histogram_lo: f64,
    pub histogram_hi: f64,
    /// Shots per class; values above the smallest class size are skipped.
    pub few_shot: Vec<usize>,
    pub few_shot_trials: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ks: vec![1, 5, 20],
            histogram_bins: 20,
            histogram_lo: -1.0,
            histogram_hi: 1.0,
            few_shot: vec![1, 5, 10],
            few_shot_trials: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub r_at_k: BTreeMap<usize, f64>,
    /// `None` when the flags are all clean or all faulty.
    pub faulty_auc: Option<f64>,
    pub per_class_r_at_1: BTreeMap<u32, f64>,
    pub histogram: Vec<HistogramBin>,
    /// Shots per class to mean nearest-class-mean accuracy.
    pub few_shot: BTreeMap<usize, f64>,
}

pub fn evaluate(inputs: &EvalInputs<'_>, options: &EvalOptions) -> Result<EvalReport> {
    let recalls = retrieval_recall(&inputs.queries, &inputs.gallery, &options.ks)?;
    let faulty_auc = match faulty_detection_auc(inputs.scores, inputs.faulty) {
        Ok(a) => Some(a),
        Err(Error::DegenerateLabels) => None,
        Err(e) => return Err(e),
    };
    let histogram = score_histogram(
        inputs.scores,
        Some(inputs.faulty),
        options.histogram_bins,
        options.histogram_lo,
        options.histogram_hi,
    )?;
    let mut class_sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in inputs.gallery.labels {
        *class_sizes.entry(l).or_default() += 1;
    }
    let smallest = class_sizes.values().copied().min().unwrap_or(0);
    let mut few_shot = BTreeMap::new();
    for &shots in options.few_shot.iter().filter(|&&s| s <= smallest) {
        let acc = few_shot_probe(&inputs.gallery, shots, &inputs.queries, options.few_shot_trials, options.seed)?;
        few_shot.insert(shots, acc);
    }
    Ok(EvalReport {
        r_at_k: options.ks.iter().copied().zip(recalls).collect(),
        faulty_auc,
        per_class_r_at_1: per_class_r_at_1(&inputs.queries, &inputs.gallery)?,
        histogram,
        few_shot,
    })
}
