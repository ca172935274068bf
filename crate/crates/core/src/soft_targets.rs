//! Softening scores and soft target distributions.
//!
//! Every vector here is aligned with a [`CandidateSet`]: slot 0 is the base
//! instance, slots `1..=K` are its negatives. Softening scores put no mass on
//! slot 0 unless `include_self` is set; the self mass of a target comes from
//! the `(1 - lambda)` one-hot term.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{dot, softmax_in_place};
use crate::memory_bank::{MemoryBank, NegativeSet};

/// How softening scores are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// No softening; targets stay one-hot.
    OneHot,
    Bootstrap,
    Swapped,
    Neighbor,
    /// Cycle-consistent prediction.
    Ccp,
    /// Uniform over same-class negatives, from ground-truth labels.
    Oracle,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::OneHot,
        Strategy::Bootstrap,
        Strategy::Swapped,
        Strategy::Neighbor,
        Strategy::Ccp,
        Strategy::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::OneHot => "onehot",
            Strategy::Bootstrap => "bootstrap",
            Strategy::Swapped => "swapped",
            Strategy::Neighbor => "neighbor",
            Strategy::Ccp => "ccp",
            Strategy::Oracle => "oracle",
        }
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStrategy;

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected one of onehot, bootstrap, swapped, neighbor, ccp, oracle")
    }
}

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Self::ALL.iter().copied().find(|st| st.as_str() == s).ok_or(UnknownStrategy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftTargetParams {
    pub strategy: Strategy,
    /// Temperature of the cross- and within-modal similarity terms.
    pub tau_s: f64,
    /// Temperature of the correspondence terms in CCP.
    pub tau_t: f64,
    pub lambda: f64,
    pub include_self: bool,
}

impl Default for SoftTargetParams {
    fn default() -> Self {
        Self { strategy: Strategy::Ccp, tau_s: 0.02, tau_t: 0.07, lambda: 0.5, include_self: false }
    }
}

/// Bank rows of a base instance and its negatives, base first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub base: usize,
    pub negatives: Vec<usize>,
    pub dim: usize,
    /// `(K + 1) x d` video bank rows.
    pub video: Vec<f64>,
    /// `(K + 1) x d` audio bank rows.
    pub audio: Vec<f64>,
}

impl CandidateSet {
    pub fn gather(bank_v: &MemoryBank, bank_a: &MemoryBank, negatives: &NegativeSet) -> Result<Self> {
        if bank_v.dim() != bank_a.dim() {
            return Err(Error::ShapeMismatch { expected: bank_v.dim(), got: bank_a.dim() });
        }
        let d = bank_v.dim();
        let k = negatives.indices.len();
        let mut video = Vec::with_capacity((k + 1) * d);
        let mut audio = Vec::with_capacity((k + 1) * d);
        video.extend_from_slice(bank_v.row(negatives.base)?);
        audio.extend_from_slice(bank_a.row(negatives.base)?);
        for &j in &negatives.indices {
            video.extend_from_slice(bank_v.row(j)?);
            audio.extend_from_slice(bank_a.row(j)?);
        }
        Ok(Self { base: negatives.base, negatives: negatives.indices.clone(), dim: d, video, audio })
    }

    /// Builds a candidate set from explicit rows (base first).
    pub fn from_rows(video: Vec<f64>, audio: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || video.len() != audio.len() || !video.len().is_multiple_of(dim) || video.len() < dim {
            return Err(Error::InvalidShape("candidate rows must be (K + 1) x d for both modalities"));
        }
        let count = video.len() / dim;
        Ok(Self { base: 0, negatives: (1..count).collect(), dim, video, audio })
    }

    /// Number of candidates, base included.
    pub fn len(&self) -> usize {
        self.video.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.video.is_empty()
    }

    pub fn num_negatives(&self) -> usize {
        self.len() - 1
    }

    #[inline]
    pub fn video_row(&self, j: usize) -> &[f64] {
        &self.video[j * self.dim..(j + 1) * self.dim]
    }

    #[inline]
    pub fn audio_row(&self, j: usize) -> &[f64] {
        &self.audio[j * self.dim..(j + 1) * self.dim]
    }
}

/// Softening scores for both directions, aligned with the candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct SofteningScores {
    pub video: Vec<f64>,
    pub audio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    pub probs: Vec<f64>,
    pub strategy: Strategy,
    pub lambda: f64,
}

impl TargetDistribution {
    pub fn one_hot(len: usize) -> Self {
        let mut probs = alloc::vec![0.0; len];
        probs[0] = 1.0;
        Self { probs, strategy: Strategy::OneHot, lambda: 0.0 }
    }

    pub fn is_one_hot(&self) -> bool {
        self.probs[0] == 1.0 && self.probs[1..].iter().all(|&p| p == 0.0)
    }
}

/// Softmax over the negatives (or all candidates when `include_self`),
/// given one logit per candidate.
fn normalize_scores(mut logits: Vec<f64>, tau: f64, include_self: bool) -> Result<Vec<f64>> {
    if include_self {
        softmax_in_place(&mut logits, tau)?;
    } else {
        softmax_in_place(&mut logits[1..], tau)?;
        logits[0] = 0.0;
    }
    Ok(logits)
}

fn scores_from<F, G>(cands: &CandidateSet, tau: f64, include_self: bool, video_logit: F, audio_logit: G) -> Result<SofteningScores>
where
    F: Fn(usize) -> f64,
    G: Fn(usize) -> f64,
{
    if !(tau > 0.0) {
        return Err(Error::InvalidTemperature(tau));
    }
    let n = cands.len();
    let video = normalize_scores((0..n).map(video_logit).collect(), tau, include_self)?;
    let audio = normalize_scores((0..n).map(audio_logit).collect(), tau, include_self)?;
    Ok(SofteningScores { video, audio })
}

/// The model's own posteriors at temperature `tau_s`.
pub fn bootstrap_scores(cands: &CandidateSet, tau_s: f64, include_self: bool) -> Result<SofteningScores> {
    let (v_i, a_i) = (cands.video_row(0), cands.audio_row(0));
    scores_from(
        cands,
        tau_s,
        include_self,
        |j| dot(v_i, cands.audio_row(j)),
        |j| dot(a_i, cands.video_row(j)),
    )
}

/// Posteriors of the opposite modality.
pub fn swapped_scores(cands: &CandidateSet, tau_s: f64, include_self: bool) -> Result<SofteningScores> {
    let (v_i, a_i) = (cands.video_row(0), cands.audio_row(0));
    scores_from(
        cands,
        tau_s,
        include_self,
        |j| dot(a_i, cands.video_row(j)),
        |j| dot(v_i, cands.audio_row(j)),
    )
}

/// Within-modal similarities.
pub fn neighbor_scores(cands: &CandidateSet, tau_s: f64, include_self: bool) -> Result<SofteningScores> {
    let (v_i, a_i) = (cands.video_row(0), cands.audio_row(0));
    scores_from(
        cands,
        tau_s,
        include_self,
        |j| dot(v_i, cands.video_row(j)),
        |j| dot(a_i, cands.audio_row(j)),
    )
}

/// Cycle-consistent prediction: swapped similarity plus the correspondence
/// of the base and of each negative, summed as logits at temperature 1.
pub fn ccp_scores(cands: &CandidateSet, tau_s: f64, tau_t: f64, include_self: bool) -> Result<SofteningScores> {
    if !(tau_s > 0.0) {
        return Err(Error::InvalidTemperature(tau_s));
    }
    if !(tau_t > 0.0) {
        return Err(Error::InvalidTemperature(tau_t));
    }
    let (v_i, a_i) = (cands.video_row(0), cands.audio_row(0));
    let base_corr = dot(v_i, a_i) / tau_t;
    let corr = |j: usize| dot(cands.video_row(j), cands.audio_row(j)) / tau_t;
    scores_from(
        cands,
        1.0,
        include_self,
        |j| base_corr + dot(a_i, cands.video_row(j)) / tau_s + corr(j),
        |j| base_corr + dot(v_i, cands.audio_row(j)) / tau_s + corr(j),
    )
}

/// Uniform over candidates sharing the base label; `None` when no negative does.
///
/// `labels` is aligned with the candidate set (base label first).
pub fn oracle_scores(labels: &[u32], include_self: bool) -> Option<Vec<f64>> {
    let base = *labels.first()?;
    let start = if include_self { 0 } else { 1 };
    let matches = labels[1..].iter().filter(|&&l| l == base).count();
    if matches == 0 {
        return None;
    }
    let mass = 1.0 / (matches + usize::from(include_self)) as f64;
    Some(
        labels
            .iter()
            .enumerate()
            .map(|(j, &l)| if j >= start && l == base { mass } else { 0.0 })
            .collect(),
    )
}

/// `T = (1 - lambda) * onehot(self) + lambda * S`; `None` scores give the one-hot target.
pub fn mix_targets(scores: Option<&[f64]>, len: usize, lambda: f64, strategy: Strategy) -> Result<TargetDistribution> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange { what: "lambda", value: lambda });
    }
    let Some(scores) = scores else {
        let mut t = TargetDistribution::one_hot(len);
        t.strategy = strategy;
        t.lambda = lambda;
        return Ok(t);
    };
    if scores.len() != len {
        return Err(Error::ShapeMismatch { expected: len, got: scores.len() });
    }
    let mut probs: Vec<f64> = scores.iter().map(|s| lambda * s).collect();
    probs[0] += 1.0 - lambda;
    Ok(TargetDistribution { probs, strategy, lambda })
}

/// Video- and audio-side targets for one candidate set.
///
/// `labels` (aligned with the candidates) is required by [`Strategy::Oracle`]
/// and ignored otherwise.
pub fn soft_targets(
    cands: &CandidateSet,
    params: &SoftTargetParams,
    labels: Option<&[u32]>,
) -> Result<(TargetDistribution, TargetDistribution)> {
    let n = cands.len();
    let (lambda, strategy, inc) = (params.lambda, params.strategy, params.include_self);
    let scores = match strategy {
        Strategy::OneHot => None,
        Strategy::Bootstrap => Some(bootstrap_scores(cands, params.tau_s, inc)?),
        Strategy::Swapped => Some(swapped_scores(cands, params.tau_s, inc)?),
        Strategy::Neighbor => Some(neighbor_scores(cands, params.tau_s, inc)?),
        Strategy::Ccp => Some(ccp_scores(cands, params.tau_s, params.tau_t, inc)?),
        Strategy::Oracle => {
            let labels = labels.ok_or(Error::InvalidConfig("oracle targets need class labels"))?;
            if labels.len() != n {
                return Err(Error::ShapeMismatch { expected: n, got: labels.len() });
            }
            let s = oracle_scores(labels, inc);
            let t = mix_targets(s.as_deref(), n, lambda, strategy)?;
            return Ok((t.clone(), t));
        }
    };
    match scores {
        None => {
            let t = mix_targets(None, n, lambda, strategy)?;
            Ok((t.clone(), t))
        }
        Some(s) => Ok((
            mix_targets(Some(&s.video), n, lambda, strategy)?,
            mix_targets(Some(&s.audio), n, lambda, strategy)?,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::l2_normalize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::vec;
    use std::vec::Vec;

    fn random_rows(rng: &mut ChaCha8Rng, count: usize, d: usize) -> Vec<f64> {
        (0..count)
            .flat_map(|_| {
                let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
                l2_normalize(&raw).unwrap()
            })
            .collect()
    }

    fn random_cands(seed: u64, k: usize, d: usize) -> CandidateSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_rows(&mut rng, k + 1, d);
        let a = random_rows(&mut rng, k + 1, d);
        CandidateSet::from_rows(v, a, d).unwrap()
    }

    fn assert_uniform_over_negatives(s: &[f64]) {
        let k = s.len() - 1;
        assert_eq!(s[0], 0.0);
        for p in &s[1..] {
            assert!((p - 1.0 / k as f64).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            assert_eq!(Strategy::from_tag(s.tag()), Some(s));
        }
        assert!("cyclic".parse::<Strategy>().is_err());
    }

    #[test]
    fn bootstrap_examples() {
        // Identical audio rows on every negative.
        let mut c = random_cands(1, 5, 4);
        let shared = c.audio_row(1).to_vec();
        for j in 2..6 {
            c.audio[j * 4..(j + 1) * 4].copy_from_slice(&shared);
        }
        assert_uniform_over_negatives(&bootstrap_scores(&c, 0.02, false).unwrap().video);

        // One negative aligned with v̄_i, the rest orthogonal.
        let v = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let a = vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let c = CandidateSet::from_rows(v, a, 3).unwrap();
        let s = bootstrap_scores(&c, 0.02, false).unwrap();
        assert!(s.video[1] >= 1.0 - 1e-9);

        // Two negatives with logits {0.5, 0}.
        let h = (0.75f64).sqrt();
        let v = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let a = vec![0.0, 1.0, 0.5, h, 0.0, 1.0];
        let c = CandidateSet::from_rows(v, a, 2).unwrap();
        let s = bootstrap_scores(&c, 0.02, false).unwrap();
        let expected_small = 1.0 / (1.0 + 25f64.exp());
        assert!((s.video[2] - expected_small).abs() < 1e-20);
        assert!((s.video[2] - 1.4e-11).abs() < 0.05e-11);
        assert!((s.video[1] - (1.0 - expected_small)).abs() < 1e-15);
    }

    #[test]
    fn swapped_examples() {
        let mut c = random_cands(2, 8, 5);
        c.audio = c.video.clone();
        let b = bootstrap_scores(&c, 0.02, false).unwrap();
        let s = swapped_scores(&c, 0.02, false).unwrap();
        for (x, y) in b.video.iter().zip(&s.video).chain(b.audio.iter().zip(&s.audio)) {
            assert!((x - y).abs() < 1e-12);
        }

        let mut c = random_cands(3, 6, 4);
        let shared = c.video_row(1).to_vec();
        for j in 2..7 {
            c.video[j * 4..(j + 1) * 4].copy_from_slice(&shared);
        }
        assert_uniform_over_negatives(&swapped_scores(&c, 0.02, false).unwrap().video);

        // Exchanging the banks turns swapped into bootstrap with the roles flipped.
        let c = random_cands(4, 10, 6);
        let flipped = CandidateSet::from_rows(c.audio.clone(), c.video.clone(), 6).unwrap();
        let s = swapped_scores(&c, 0.07, false).unwrap();
        let b = bootstrap_scores(&flipped, 0.07, false).unwrap();
        assert_eq!(s.video, b.video);
        assert_eq!(s.audio, b.audio);
    }

    #[test]
    fn neighbor_examples() {
        let v = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0];
        let a = vec![0.6, 0.8, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let c = CandidateSet::from_rows(v, a, 3).unwrap();
        assert_uniform_over_negatives(&neighbor_scores(&c, 0.02, false).unwrap().video);

        let mut c = random_cands(5, 12, 8);
        let base = c.video_row(0).to_vec();
        c.video[7 * 8..8 * 8].copy_from_slice(&base);
        let s = neighbor_scores(&c, 0.02, false).unwrap();
        assert!(s.video[7] > 0.999, "{:?}", s.video);

        let before = neighbor_scores(&c, 0.02, false).unwrap().video;
        let mut perturbed = c.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        perturbed.audio = random_rows(&mut rng, 13, 8);
        assert_eq!(neighbor_scores(&perturbed, 0.02, false).unwrap().video, before);
    }

    #[test]
    fn ccp_examples() {
        // Identical swapped terms and correspondences on every negative.
        let v = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let a = vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let c = CandidateSet::from_rows(v, a, 2).unwrap();
        assert_uniform_over_negatives(&ccp_scores(&c, 0.02, 0.07, false).unwrap().video);

        // Equal swapped terms, correspondences 0.9 and 0.1.
        let d = 3;
        let ang = |c: f64| [c, (1.0 - c * c).sqrt(), 0.0];
        let mut v = vec![0.0, 0.0, 1.0];
        let mut a = vec![0.0, 0.0, 1.0];
        // a_i = e3, so dot(a_i, v̄_j) = 0 for both negatives.
        v.extend_from_slice(&[1.0, 0.0, 0.0]);
        a.extend_from_slice(&ang(0.9));
        v.extend_from_slice(&[1.0, 0.0, 0.0]);
        a.extend_from_slice(&ang(0.1));
        let c = CandidateSet::from_rows(v, a, d).unwrap();
        let s = ccp_scores(&c, 0.02, 0.07, false).unwrap();
        let odds = s.video[1] / s.video[2];
        assert!((odds / (0.8f64 / 0.07).exp() - 1.0).abs() < 1e-9, "odds {odds}");
        assert!(ccp_scores(&c, 0.02, 0.0, false).is_err());
        assert!(ccp_scores(&c, -1.0, 0.07, false).is_err());
    }

    #[test]
    fn ccp_ignores_base_correspondence() {
        let c = random_cands(6, 16, 6);
        let s = ccp_scores(&c, 0.02, 0.07, false).unwrap();
        // Rotate v̄_i within the plane spanned with ā_i: changes dot(v̄_i, ā_i)
        // but also the swapped term for S_a, so perturb only through S_v's inputs.
        let mut moved = c.clone();
        let a_i = c.audio_row(0).to_vec();
        let mut new_v: Vec<f64> = c.video_row(0).iter().zip(&a_i).map(|(v, a)| v + 0.7 * a).collect();
        crate::math::normalize_in_place(&mut new_v).unwrap();
        moved.video[..6].copy_from_slice(&new_v);
        let s2 = ccp_scores(&moved, 0.02, 0.07, false).unwrap();
        for (x, y) in s.video.iter().zip(&s2.video) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        let s = oracle_scores(&[3, 3, 1, 3, 2], false).unwrap();
        assert_eq!(s, vec![0.0, 0.5, 0.0, 0.5, 0.0]);
        assert_eq!(oracle_scores(&[3, 1, 2, 0], false), None);
        let s = oracle_scores(&[3, 3, 3, 3, 3], false).unwrap();
        assert_eq!(s, vec![0.0, 0.25, 0.25, 0.25, 0.25]);
        let s = oracle_scores(&[3, 3, 1], true).unwrap();
        assert_eq!(s, vec![0.5, 0.5, 0.0]);

        let t = mix_targets(None, 4, 0.5, Strategy::Oracle).unwrap();
        assert_eq!(t.probs, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mix_examples() {
        let s = [0.0, 0.1, 0.2, 0.7];
        assert_eq!(mix_targets(Some(&s), 4, 0.0, Strategy::Ccp).unwrap().probs, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(mix_targets(Some(&s), 4, 1.0, Strategy::Ccp).unwrap().probs, s.to_vec());
        let u = [0.0, 0.25, 0.25, 0.25, 0.25];
        assert_eq!(
            mix_targets(Some(&u), 5, 0.5, Strategy::Ccp).unwrap().probs,
            vec![0.5, 0.125, 0.125, 0.125, 0.125]
        );
        assert!(mix_targets(Some(&s), 4, 1.5, Strategy::Ccp).is_err());
        assert!(mix_targets(Some(&s), 5, 0.5, Strategy::Ccp).is_err());
    }

    #[test]
    fn identical_banks_collapse_strategies() {
        let mut c = random_cands(8, 32, 8);
        c.audio = c.video.clone();
        let b = bootstrap_scores(&c, 0.02, false).unwrap();
        let s = swapped_scores(&c, 0.02, false).unwrap();
        let n = neighbor_scores(&c, 0.02, false).unwrap();
        for ((x, y), z) in b.video.iter().zip(&s.video).zip(&n.video) {
            assert!((x - y).abs() < 1e-12 && (x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_tau_gives_uniform() {
        let c = random_cands(9, 20, 6);
        let all = [
            bootstrap_scores(&c, 1e6, false).unwrap(),
            swapped_scores(&c, 1e6, false).unwrap(),
            neighbor_scores(&c, 1e6, false).unwrap(),
            ccp_scores(&c, 1e6, 1e6, false).unwrap(),
        ];
        for s in &all {
            for p in s.video[1..].iter().chain(&s.audio[1..]) {
                assert!((p - 1.0 / 20.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn include_self_spreads_over_base_too() {
        let c = random_cands(10, 6, 4);
        let s = neighbor_scores(&c, 0.02, true).unwrap();
        assert!(s.video[0] > 0.0);
        assert!((s.video.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (tv, _) = soft_targets(
            &c,
            &SoftTargetParams { strategy: Strategy::Neighbor, include_self: true, ..Default::default() },
            None,
        )
        .unwrap();
        assert!(tv.probs[0] > 0.5);
    }

    #[test]
    fn oracle_needs_labels() {
        let c = random_cands(11, 3, 4);
        let p = SoftTargetParams { strategy: Strategy::Oracle, ..Default::default() };
        assert!(soft_targets(&c, &p, None).is_err());
        assert!(soft_targets(&c, &p, Some(&[1, 2])).is_err());
        let (tv, ta) = soft_targets(&c, &p, Some(&[1, 1, 2, 1])).unwrap();
        assert_eq!(tv.probs, vec![0.5, 0.25, 0.0, 0.25]);
        assert_eq!(tv, ta);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn targets_are_distributions(
                seed in 0u64..1_000_000,
                k in prop::sample::select(vec![4usize, 64, 256]),
                strategy in prop::sample::select(crate::soft_targets::Strategy::ALL.to_vec()),
                lambda in 0.0f64..=1.0,
                include_self in any::<bool>(),
            ) {
                let c = random_cands(seed, k, 8);
                let labels: Vec<u32> = (0..=k as u64).map(|j| ((seed + j * 7) % 5) as u32).collect();
                let p = SoftTargetParams { strategy, lambda, include_self, ..Default::default() };
                let (tv, ta) = soft_targets(&c, &p, Some(&labels)).unwrap();
                for t in [&tv, &ta] {
                    prop_assert!((t.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    prop_assert!(t.probs.iter().all(|&x| x >= 0.0));
                    prop_assert!(t.probs[0] >= 1.0 - lambda - 1e-12);
                }
            }
        }
    }
}
