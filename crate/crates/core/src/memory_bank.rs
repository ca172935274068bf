//! Per-modality stores of target embeddings.
//!
//! Each bank keeps one unit-norm row per training instance. Rows are blended
//! with fresh encoder outputs by exponential moving average and renormalized
//! after every blend, so dot products against bank rows are always cosines.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{dot, normalize_in_place};

/// EMA constant used for both banks unless configured otherwise.
pub const DEFAULT_MOMENTUM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Video,
    Audio,
}

impl Modality {
    pub fn tag(self) -> u8 {
        match self {
            Modality::Video => 0,
            Modality::Audio => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Modality::Video),
            1 => Some(Modality::Audio),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    rows: Vec<f64>,
    len: usize,
    dim: usize,
    momentum: f64,
    modality: Modality,
}

/// Negatives drawn for one base instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSet {
    pub base: usize,
    pub indices: Vec<usize>,
}

impl MemoryBank {
    /// Random unit rows from normalized Gaussian draws, deterministic in `seed`.
    pub fn init(len: usize, dim: usize, momentum: f64, modality: Modality, seed: u64) -> Result<Self> {
        if len < 2 || dim < 2 {
            return Err(Error::InvalidShape("memory bank needs at least 2 rows and 2 dims"));
        }
        check_momentum(momentum)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x6261_6e6b + modality.tag() as u64);
        let mut rows = Vec::with_capacity(len * dim);
        for _ in 0..len {
            let start = rows.len();
            loop {
                rows.extend((0..dim).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
                if normalize_in_place(&mut rows[start..]).is_ok() {
                    break;
                }
                rows.truncate(start);
            }
        }
        Ok(Self { rows, len, dim, momentum, modality })
    }

    /// Rebuilds a bank from stored rows; every row must be unit-norm within 1e-6.
    pub fn from_rows(rows: Vec<f64>, dim: usize, momentum: f64, modality: Modality) -> Result<Self> {
        if dim < 2 || !rows.len().is_multiple_of(dim) || rows.len() / dim < 2 {
            return Err(Error::InvalidShape("bank rows do not form an N x d matrix with N, d >= 2"));
        }
        check_momentum(momentum)?;
        for row in rows.chunks_exact(dim) {
            let n = libm::sqrt(dot(row, row));
            if !(libm::fabs(n - 1.0) <= 1e-6) {
                return Err(Error::InvalidShape("bank row is not unit norm"));
            }
        }
        let len = rows.len() / dim;
        Ok(Self { rows, len, dim, momentum, modality })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    /// Row-major N x d storage.
    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Result<&[f64]> {
        self.check_index(i)?;
        Ok(&self.rows[i * self.dim..(i + 1) * self.dim])
    }

    /// `row_i <- normalize(momentum * row_i + (1 - momentum) * feat)`.
    ///
    /// The row is left untouched if the blend cancels to zero.
    pub fn ema_update(&mut self, i: usize, feat: &[f64]) -> Result<&[f64]> {
        self.check_index(i)?;
        if feat.len() != self.dim {
            return Err(Error::ShapeMismatch { expected: self.dim, got: feat.len() });
        }
        let m = self.momentum;
        let mut blended: Vec<f64> = self.rows[i * self.dim..(i + 1) * self.dim]
            .iter()
            .zip(feat)
            .map(|(old, new)| m * old + (1.0 - m) * new)
            .collect();
        normalize_in_place(&mut blended)?;
        let row = &mut self.rows[i * self.dim..(i + 1) * self.dim];
        row.copy_from_slice(&blended);
        Ok(row)
    }

    /// `k` distinct indices drawn uniformly without replacement from `0..N`, excluding `base`.
    pub fn sample_negatives<R: Rng + ?Sized>(&self, base: usize, k: usize, rng: &mut R) -> Result<NegativeSet> {
        self.check_index(base)?;
        let available = self.len - 1;
        if k > available {
            return Err(Error::TooManyNegatives { requested: k, available });
        }
        let indices = rand::seq::index::sample(rng, available, k)
            .into_iter()
            .map(|j| if j >= base { j + 1 } else { j })
            .collect();
        Ok(NegativeSet { base, indices })
    }

    /// Copies the requested rows, in order, into a flat `indices.len() x d` buffer.
    pub fn lookup(&self, indices: &[usize]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            out.extend_from_slice(self.row(i)?);
        }
        Ok(out)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len {
            Err(Error::IndexOutOfRange { index: i, len: self.len })
        } else {
            Ok(())
        }
    }
}

fn check_momentum(momentum: f64) -> Result<()> {
    if (0.0..=1.0).contains(&momentum) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what: "momentum", value: momentum })
    }
}
