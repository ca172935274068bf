//! Cross-modal instance discrimination losses and their embedding gradients.
//!
//! The video direction scores the live video embedding `v_i` against the
//! audio bank rows of the candidate set; the audio direction scores `a_i`
//! against the video bank rows. Gradients are taken with respect to the live
//! embeddings only; bank rows are constants.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{dot, log_softmax, softmax_in_place};
use crate::soft_targets::{CandidateSet, TargetDistribution};

/// Default contrastive temperature.
pub const DEFAULT_TAU: f64 = 0.07;

#[derive(Debug, Clone, Copy)]
pub struct ContrastInstance<'a> {
    /// Live video embedding `v_i`.
    pub video: &'a [f64],
    /// Live audio embedding `a_i`.
    pub audio: &'a [f64],
    pub cands: &'a CandidateSet,
    pub tau: f64,
}

impl<'a> ContrastInstance<'a> {
    pub fn new(video: &'a [f64], audio: &'a [f64], cands: &'a CandidateSet, tau: f64) -> Result<Self> {
        if video.len() != cands.dim {
            return Err(Error::ShapeMismatch { expected: cands.dim, got: video.len() });
        }
        if audio.len() != cands.dim {
            return Err(Error::ShapeMismatch { expected: cands.dim, got: audio.len() });
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidTemperature(tau));
        }
        Ok(Self { video, audio, cands, tau })
    }

    /// The same instance with the two modalities exchanged.
    pub fn swapped(&self, swapped_cands: &'a CandidateSet) -> Self {
        Self { video: self.audio, audio: self.video, cands: swapped_cands, tau: self.tau }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// dL/dv_i.
    pub grad_video: Vec<f64>,
    /// dL/da_i.
    pub grad_audio: Vec<f64>,
}

impl LossGrad {
    fn scale(&mut self, c: f64) {
        self.loss *= c;
        self.grad_video.iter_mut().for_each(|g| *g *= c);
        self.grad_audio.iter_mut().for_each(|g| *g *= c);
    }
}

fn logits(query: &[f64], targets: &[f64], dim: usize) -> Vec<f64> {
    targets.chunks_exact(dim).map(|t| dot(query, t)).collect()
}

/// `P(t̄_k | s)` over the rows of `targets` (row-major, `dim` wide).
pub fn xid_posterior(query: &[f64], targets: &[f64], dim: usize, tau: f64) -> Result<Vec<f64>> {
    if query.len() != dim || !targets.len().is_multiple_of(dim) {
        return Err(Error::ShapeMismatch { expected: dim, got: query.len() });
    }
    let mut p = logits(query, targets, dim);
    softmax_in_place(&mut p, tau)?;
    Ok(p)
}

/// `(P(ā_k | v_i), P(v̄_k | a_i))` over the candidate set.
pub fn posteriors(inst: &ContrastInstance<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = inst.cands;
    Ok((
        xid_posterior(inst.video, &c.audio, c.dim, inst.tau)?,
        xid_posterior(inst.audio, &c.video, c.dim, inst.tau)?,
    ))
}

/// `-log P(ā_i | v_i) - log P(v̄_i | a_i)`.
pub fn xid_loss(inst: &ContrastInstance<'_>) -> Result<f64> {
    let c = inst.cands;
    let lv = log_softmax(&logits(inst.video, &c.audio, c.dim), inst.tau)?;
    let la = log_softmax(&logits(inst.audio, &c.video, c.dim), inst.tau)?;
    Ok(-lv[0] - la[0])
}

/// Attraction toward the positive target, repulsion from each negative,
/// weighted by the posteriors.
pub fn xid_grad(inst: &ContrastInstance<'_>) -> Result<LossGrad> {
    let c = inst.cands;
    let d = c.dim;
    let (pv, pa) = posteriors(inst)?;
    let loss = xid_loss(inst)?;

    // -dL/dv_i = ā_i (1 - P_0) / tau - sum_n ā_n P_n / tau
    let directional = |p: &[f64], rows: &[f64]| -> Vec<f64> {
        let mut neg_grad: Vec<f64> = rows[..d].iter().map(|t| t * (1.0 - p[0]) / inst.tau).collect();
        for (n, row) in rows.chunks_exact(d).enumerate().skip(1) {
            let coeff = p[n] / inst.tau;
            neg_grad.iter_mut().zip(row).for_each(|(g, t)| *g -= t * coeff);
        }
        neg_grad.into_iter().map(|g| -g).collect()
    };
    Ok(LossGrad { loss, grad_video: directional(&pv, &c.audio), grad_audio: directional(&pa, &c.video) })
}

fn check_target(t: &TargetDistribution, len: usize) -> Result<()> {
    if t.probs.len() != len {
        return Err(Error::InvalidTarget("target length does not match the candidate set"));
    }
    if t.probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidTarget("target has negative or non-finite entries"));
    }
    if libm::fabs(t.probs.iter().sum::<f64>() - 1.0) > 1e-9 {
        return Err(Error::InvalidTarget("target does not sum to one"));
    }
    Ok(())
}

fn cross_entropy(target: &[f64], log_probs: &[f64]) -> f64 {
    -target
        .iter()
        .zip(log_probs)
        .filter(|(&t, _)| t > 0.0)
        .map(|(t, lp)| t * lp)
        .sum::<f64>()
}

/// `-sum_j T_v(j) log P(ā_j | v_i) - sum_j T_a(j) log P(v̄_j | a_i)`.
pub fn soft_xid_loss(inst: &ContrastInstance<'_>, t_video: &TargetDistribution, t_audio: &TargetDistribution) -> Result<f64> {
    let c = inst.cands;
    check_target(t_video, c.len())?;
    check_target(t_audio, c.len())?;
    let lv = log_softmax(&logits(inst.video, &c.audio, c.dim), inst.tau)?;
    let la = log_softmax(&logits(inst.audio, &c.video, c.dim), inst.tau)?;
    Ok(cross_entropy(&t_video.probs, &lv) + cross_entropy(&t_audio.probs, &la))
}

/// `-dL/dv_i = sum_j ā_j (T_v(j) - P(ā_j | v_i)) / tau`, and symmetrically for `a_i`.
pub fn soft_xid_grad(inst: &ContrastInstance<'_>, t_video: &TargetDistribution, t_audio: &TargetDistribution) -> Result<LossGrad> {
    let c = inst.cands;
    let d = c.dim;
    let loss = soft_xid_loss(inst, t_video, t_audio)?;
    let (pv, pa) = posteriors(inst)?;
    let directional = |t: &[f64], p: &[f64], rows: &[f64]| -> Vec<f64> {
        let mut grad = vec![0.0; d];
        for ((row, tj), pj) in rows.chunks_exact(d).zip(t).zip(p) {
            let coeff = (pj - tj) / inst.tau;
            grad.iter_mut().zip(row).for_each(|(g, r)| *g += r * coeff);
        }
        grad
    };
    Ok(LossGrad {
        loss,
        grad_video: directional(&t_video.probs, &pv, &c.audio),
        grad_audio: directional(&t_audio.probs, &pa, &c.video),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    /// `sum_i w_i L_i / sum_k w_k`.
    pub loss: f64,
    /// Per-instance gradients already scaled by `w_i / sum_k w_k`.
    pub grads: Vec<LossGrad>,
    /// Unweighted per-instance losses.
    pub per_instance: Vec<f64>,
}

/// Weighted mean of soft losses over a batch.
pub fn robust_batch_loss(
    instances: &[ContrastInstance<'_>],
    weights: &[f64],
    targets: &[(TargetDistribution, TargetDistribution)],
) -> Result<BatchLoss> {
    if weights.len() != instances.len() {
        return Err(Error::ShapeMismatch { expected: instances.len(), got: weights.len() });
    }
    if targets.len() != instances.len() {
        return Err(Error::ShapeMismatch { expected: instances.len(), got: targets.len() });
    }
    let grads = instances
        .iter()
        .zip(targets)
        .map(|(inst, (tv, ta))| soft_xid_grad(inst, tv, ta))
        .collect::<Result<Vec<_>>>()?;
    weighted_mean(grads, weights)
}

/// Combines per-instance losses and gradients with normalized weights.
pub fn weighted_mean(mut grads: Vec<LossGrad>, weights: &[f64]) -> Result<BatchLoss> {
    if weights.len() != grads.len() {
        return Err(Error::ShapeMismatch { expected: grads.len(), got: weights.len() });
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::OutOfRange { what: "sample weight", value: weights.iter().copied().fold(0.0, f64::min) });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let per_instance: Vec<f64> = grads.iter().map(|g| g.loss).collect();
    let mut loss = 0.0;
    for (g, &w) in grads.iter_mut().zip(weights) {
        g.scale(w / total);
        loss += g.loss;
    }
    Ok(BatchLoss { loss, grads, per_instance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::l2_normalize;
    use crate::soft_targets::{mix_targets, Strategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::vec::Vec;

    fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
        l2_normalize(&raw).unwrap()
    }

    fn random_setup(seed: u64, k: usize, d: usize) -> (Vec<f64>, Vec<f64>, CandidateSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = unit(&mut rng, d);
        let a = unit(&mut rng, d);
        let vb: Vec<f64> = (0..=k).flat_map(|_| unit(&mut rng, d)).collect();
        let ab: Vec<f64> = (0..=k).flat_map(|_| unit(&mut rng, d)).collect();
        (v, a, CandidateSet::from_rows(vb, ab, d).unwrap())
    }

    #[test]
    fn posterior_examples() {
        let rows = [0.6, 0.8, 0.6, 0.8, 0.6, 0.8];
        let p = xid_posterior(&[1.0, 0.0], &rows, 2, 0.07).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));

        let e = core::f64::consts::E;
        let rows = [1.0, 0.0, 0.0, 1.0, 0.0, -1.0];
        let p = xid_posterior(&[1.0, 0.0], &rows, 2, 1.0).unwrap();
        assert!((p[0] - e / (e + 2.0)).abs() < 1e-15);
        assert!((p[0] - 0.5761).abs() < 1e-4);

        let p = xid_posterior(&[1.0, 0.0], &rows, 2, 1e9).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-6));
    }

    #[test]
    fn loss_examples() {
        // dot(v_i, ā_i) = dot(a_i, v̄_i) = 1 with one orthogonal negative per side.
        let c = CandidateSet::from_rows(vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let inst = ContrastInstance::new(&[1.0, 0.0], &[0.0, 1.0], &c, 1.0).unwrap();
        let e = core::f64::consts::E;
        let l = xid_loss(&inst).unwrap();
        assert!((l - 2.0 * -(e / (e + 1.0)).ln()).abs() < 1e-14);
        assert!((l - 0.6266).abs() < 1e-4);

        let (v, a, c) = random_setup(1, 6, 5);
        let inst = ContrastInstance::new(&v, &a, &c, 0.07).unwrap();
        let flipped = CandidateSet::from_rows(c.audio.clone(), c.video.clone(), 5).unwrap();
        let l1 = xid_loss(&inst).unwrap();
        let l2 = xid_loss(&inst.swapped(&flipped)).unwrap();
        assert!((l1 - l2).abs() < 1e-12);

        let k = 9;
        let same: Vec<f64> = (0..=k).flat_map(|_| [0.0, 1.0, 0.0]).collect();
        let c = CandidateSet::from_rows(same.clone(), same, 3).unwrap();
        let inst = ContrastInstance::new(&[1.0, 0.0, 0.0], &[0.6, 0.8, 0.0], &c, 0.07).unwrap();
        assert!((xid_loss(&inst).unwrap() - 2.0 * ((k + 1) as f64).ln()).abs() < 1e-12);
    }

    fn fd_check(inst_grad: impl Fn(&[f64], &[f64]) -> LossGrad, loss: impl Fn(&[f64], &[f64]) -> f64, v: &[f64], a: &[f64]) -> f64 {
        let g = inst_grad(v, a);
        let h = 1e-6;
        let mut num_v = Vec::new();
        let mut num_a = Vec::new();
        for k in 0..v.len() {
            let (mut p, mut m) = (v.to_vec(), v.to_vec());
            p[k] += h;
            m[k] -= h;
            num_v.push((loss(&p, a) - loss(&m, a)) / (2.0 * h));
            let (mut p, mut m) = (a.to_vec(), a.to_vec());
            p[k] += h;
            m[k] -= h;
            num_a.push((loss(v, &p) - loss(v, &m)) / (2.0 * h));
        }
        let diff: f64 = g.grad_video.iter().zip(&num_v).chain(g.grad_audio.iter().zip(&num_a)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = num_v.iter().chain(&num_a).map(|x| x * x).sum::<f64>().sqrt();
        diff / scale.max(1e-12)
    }

    #[test]
    fn xid_grad_matches_finite_differences() {
        for seed in 0..20 {
            let (v, a, c) = random_setup(seed, 8, 16);
            let tau = if seed % 2 == 0 { 0.07 } else { 0.5 };
            let rel = fd_check(
                |v, a| xid_grad(&ContrastInstance::new(v, a, &c, tau).unwrap()).unwrap(),
                |v, a| xid_loss(&ContrastInstance::new(v, a, &c, tau).unwrap()).unwrap(),
                &v,
                &a,
            );
            assert!(rel <= 1e-5, "seed {seed}: rel err {rel}");
        }
    }

    #[test]
    fn xid_grad_vanishes_when_converged() {
        // Positive far more aligned than any negative at a cold temperature.
        let c = CandidateSet::from_rows(vec![0.0, 1.0, 1.0, 0.0, -1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0], 2).unwrap();
        let g = xid_grad(&ContrastInstance::new(&[1.0, 0.0], &[0.0, 1.0], &c, 0.01).unwrap()).unwrap();
        assert!(g.grad_video.iter().chain(&g.grad_audio).all(|x| x.abs() < 1e-30));
    }

    #[test]
    fn halving_tau_doubles_gradient_at_fixed_posteriors() {
        // All candidate rows orthogonal to the query: posteriors are uniform at any tau.
        let c = CandidateSet::from_rows(
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0],
            3,
        )
        .unwrap();
        let g1 = xid_grad(&ContrastInstance::new(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &c, 0.5).unwrap()).unwrap();
        let g2 = xid_grad(&ContrastInstance::new(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &c, 0.25).unwrap()).unwrap();
        for (x, y) in g1.grad_video.iter().zip(&g2.grad_video) {
            assert!((2.0 * x - y).abs() < 1e-15);
        }
        assert!(g1.grad_video.iter().any(|x| x.abs() > 0.1));
    }

    #[test]
    fn soft_loss_reductions() {
        let (v, a, c) = random_setup(3, 8, 6);
        let inst = ContrastInstance::new(&v, &a, &c, 0.07).unwrap();
        let s: Vec<f64> = std::iter::once(0.0).chain((0..8).map(|_| 1.0 / 8.0)).collect();
        let t = mix_targets(Some(&s), 9, 0.0, Strategy::Ccp).unwrap();
        assert!((soft_xid_loss(&inst, &t, &t).unwrap() - xid_loss(&inst).unwrap()).abs() < 1e-12);

        let (pv, pa) = posteriors(&inst).unwrap();
        let tv = TargetDistribution { probs: pv.clone(), strategy: Strategy::Bootstrap, lambda: 1.0 };
        let ta = TargetDistribution { probs: pa.clone(), strategy: Strategy::Bootstrap, lambda: 1.0 };
        let h = crate::math::entropy(&pv) + crate::math::entropy(&pa);
        assert!((soft_xid_loss(&inst, &tv, &ta).unwrap() - h).abs() < 1e-12);
        let g = soft_xid_grad(&inst, &tv, &ta).unwrap();
        assert!(g.grad_video.iter().chain(&g.grad_audio).all(|x| x.abs() < 1e-12));

        let k = 5;
        let same: Vec<f64> = (0..=k).flat_map(|_| [0.0, 1.0]).collect();
        let c = CandidateSet::from_rows(same.clone(), same, 2).unwrap();
        let inst = ContrastInstance::new(&[1.0, 0.0], &[0.0, 1.0], &c, 0.07).unwrap();
        let u = TargetDistribution { probs: vec![1.0 / 6.0; 6], strategy: Strategy::Oracle, lambda: 1.0 };
        assert!((soft_xid_loss(&inst, &u, &u).unwrap() - 2.0 * 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn soft_grad_one_hot_equals_xid_grad() {
        for seed in 0..10 {
            let (v, a, c) = random_setup(seed, 16, 8);
            let inst = ContrastInstance::new(&v, &a, &c, 0.07).unwrap();
            let t = TargetDistribution::one_hot(17);
            let s = soft_xid_grad(&inst, &t, &t).unwrap();
            let x = xid_grad(&inst).unwrap();
            assert!((s.loss - x.loss).abs() < 1e-12);
            for (p, q) in s.grad_video.iter().zip(&x.grad_video).chain(s.grad_audio.iter().zip(&x.grad_audio)) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn soft_grad_matches_finite_differences() {
        for seed in 0..20 {
            let (v, a, c) = random_setup(100 + seed, 8, 16);
            let inst = ContrastInstance::new(&v, &a, &c, 0.07).unwrap();
            let (tv, ta) = crate::soft_targets::soft_targets(&c, &Default::default(), None).unwrap();
            let _ = inst;
            let rel = fd_check(
                |v, a| soft_xid_grad(&ContrastInstance::new(v, a, &c, 0.07).unwrap(), &tv, &ta).unwrap(),
                |v, a| soft_xid_loss(&ContrastInstance::new(v, a, &c, 0.07).unwrap(), &tv, &ta).unwrap(),
                &v,
                &a,
            );
            assert!(rel <= 1e-5, "seed {seed}: rel err {rel}");
        }
    }

    #[test]
    fn malformed_targets_rejected() {
        let (v, a, c) = random_setup(4, 3, 4);
        let inst = ContrastInstance::new(&v, &a, &c, 0.07).unwrap();
        let bad = TargetDistribution { probs: vec![0.5, 0.2, 0.2, 0.2], strategy: Strategy::Ccp, lambda: 0.5 };
        let ok = TargetDistribution::one_hot(4);
        assert!(matches!(soft_xid_loss(&inst, &bad, &ok), Err(Error::InvalidTarget(_))));
        let short = TargetDistribution::one_hot(3);
        assert!(matches!(soft_xid_loss(&inst, &ok, &short), Err(Error::InvalidTarget(_))));
        let neg = TargetDistribution { probs: vec![1.2, -0.2, 0.0, 0.0], strategy: Strategy::Ccp, lambda: 0.5 };
        assert!(matches!(soft_xid_grad(&inst, &neg, &ok), Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn batch_loss_weighting() {
        let setups: Vec<_> = (0..4).map(|s| random_setup(200 + s, 6, 5)).collect();
        let insts: Vec<ContrastInstance> = setups.iter().map(|(v, a, c)| ContrastInstance::new(v, a, c, 0.07).unwrap()).collect();
        let targets: Vec<_> = setups
            .iter()
            .map(|(_, _, c)| crate::soft_targets::soft_targets(c, &Default::default(), None).unwrap())
            .collect();
        let singles: Vec<f64> = insts.iter().zip(&targets).map(|(i, (tv, ta))| soft_xid_loss(i, tv, ta).unwrap()).collect();

        let unit = robust_batch_loss(&insts, &[1.0; 4], &targets).unwrap();
        assert!((unit.loss - singles.iter().sum::<f64>() / 4.0).abs() < 1e-12);

        let pick = robust_batch_loss(&insts, &[0.0, 0.0, 1.0, 0.0], &targets).unwrap();
        assert!((pick.loss - singles[2]).abs() < 1e-12);

        let w = [0.3, 1.7, 0.25, 0.9];
        let base = robust_batch_loss(&insts, &w, &targets).unwrap();
        let scaled = robust_batch_loss(&insts, &w.map(|x| x * 13.0), &targets).unwrap();
        assert!((base.loss - scaled.loss).abs() < 1e-12);
        for (g, h) in base.grads.iter().zip(&scaled.grads) {
            for (x, y) in g.grad_video.iter().zip(&h.grad_video) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert_eq!(robust_batch_loss(&insts, &[0.0; 4], &targets), Err(Error::AllZeroWeights));
    }

    #[test]
    fn batch_reduces_to_mean_xid() {
        let setups: Vec<_> = (0..5).map(|s| random_setup(300 + s, 10, 6)).collect();
        let insts: Vec<ContrastInstance> = setups.iter().map(|(v, a, c)| ContrastInstance::new(v, a, c, 0.07).unwrap()).collect();
        let targets: Vec<_> = (0..5).map(|_| (TargetDistribution::one_hot(11), TargetDistribution::one_hot(11))).collect();
        let b = robust_batch_loss(&insts, &[1.0; 5], &targets).unwrap();
        let mean = insts.iter().map(|i| xid_loss(i).unwrap()).sum::<f64>() / 5.0;
        assert!((b.loss - mean).abs() < 1e-12);
    }

    fn geodesic_grad_norms(c: &CandidateSet, a: &[f64], ortho: &[f64]) -> Vec<f64> {
        let target = c.audio_row(0);
        (0..=100)
            .map(|k| {
                let theta = core::f64::consts::FRAC_PI_2 * (1.0 - k as f64 / 100.0);
                let v: Vec<f64> = target.iter().zip(ortho).map(|(t, o)| theta.cos() * t + theta.sin() * o).collect();
                let g = xid_grad(&ContrastInstance::new(&v, a, c, 0.07).unwrap()).unwrap();
                g.grad_video.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .collect()
    }

    #[test]
    fn faulty_positive_gets_larger_gradient() {
        // Sweep v_i from orthogonal to ā_i toward ā_i with the negatives held
        // off the sweep plane: the gradient norm never increases.
        let d = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut audio = vec![0.0; d];
        audio[0] = 1.0;
        let mut ortho = vec![0.0; d];
        ortho[1] = 1.0;
        for _ in 0..8 {
            let mut row = unit(&mut rng, d);
            row[0] = 0.0;
            row[1] = 0.0;
            audio.extend(l2_normalize(&row).unwrap());
        }
        let video: Vec<f64> = (0..9).flat_map(|_| unit(&mut rng, d)).collect();
        let c = CandidateSet::from_rows(video, audio, d).unwrap();
        let a = unit(&mut rng, d);
        let norms = geodesic_grad_norms(&c, &a, &ortho);
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{norms:?}");

        // Generic negatives: the trend holds, faulty end several times larger.
        let (_, a, c) = random_setup(7, 8, 16);
        let target = c.audio_row(0).to_vec();
        let mut ortho = c.video_row(3).to_vec();
        let proj = dot(&ortho, &target);
        ortho.iter_mut().zip(&target).for_each(|(o, t)| *o -= proj * t);
        let ortho = l2_normalize(&ortho).unwrap();
        let norms = geodesic_grad_norms(&c, &a, &ortho);
        assert!(norms[0] > 5.0 * norms[100]);
        assert!(norms[..50].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn repulsion_grows_with_negative_similarity() {
        // Query e1; negative 1 moves from orthogonal to aligned, others fixed.
        let mut prev = 0.0;
        for k in 0..=50 {
            let c_ = k as f64 / 50.0;
            let s_ = (1.0 - c_ * c_).sqrt();
            let audio = vec![0.8, 0.6, 0.0, c_, 0.0, s_, 0.0, 1.0, 0.0];
            let c = CandidateSet::from_rows(audio.clone(), audio, 3).unwrap();
            let p = xid_posterior(&[1.0, 0.0, 0.0], &c.audio, 3, 0.07).unwrap();
            assert!(p[1] > prev);
            prev = p[1];
        }
    }
}
