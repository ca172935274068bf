//! Synthetic paired-modality data.
//!
//! Each class owns one latent prototype per modality. An instance samples a
//! latent near its class prototype in each modality independently and maps it
//! through a fixed random matrix and `tanh`, so the class is the only signal
//! the two modalities share. Faulty positives replace the audio with a sample
//! from a held-out distractor class.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{dot, normalize_in_place};
use crate::memory_bank::Modality;

const STREAM_WORLD: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_HELDOUT: u64 = 2;
const STREAM_INJECT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub instances_per_class: usize,
    pub latent_dim: usize,
    /// Raw vector length, shared by both modalities.
    pub raw_dim: usize,
    pub within_class_noise: f64,
    pub faulty_fraction: f64,
    pub seed: u64,
    /// Held-out instances per class for retrieval queries.
    pub heldout_per_class: usize,
    /// Number of distractor classes used for replaced audio.
    pub distractor_classes: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 20,
            instances_per_class: 100,
            latent_dim: 16,
            raw_dim: 64,
            within_class_noise: 0.25,
            faulty_fraction: 0.0,
            seed: 1,
            heldout_per_class: 100,
            distractor_classes: 20,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("num_classes must be at least 2"));
        }
        if self.instances_per_class < 1 {
            return Err(Error::InvalidConfig("instances_per_class must be at least 1"));
        }
        if self.latent_dim < 2 || self.raw_dim < 2 {
            return Err(Error::InvalidConfig("latent_dim and raw_dim must be at least 2"));
        }
        if !(self.within_class_noise >= 0.0 && self.within_class_noise.is_finite()) {
            return Err(Error::InvalidConfig("within_class_noise must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.faulty_fraction) {
            return Err(Error::InvalidConfig("faulty_fraction must lie in [0, 1)"));
        }
        if self.distractor_classes < 1 {
            return Err(Error::InvalidConfig("distractor_classes must be at least 1"));
        }
        Ok(())
    }

    pub fn num_instances(&self) -> usize {
        self.num_classes * self.instances_per_class
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    pub id: u64,
    pub label: u32,
    pub video: Vec<f32>,
    pub audio: Vec<f32>,
    /// Set exactly when the audio was replaced.
    pub faulty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub config: SynthConfig,
    /// Fraction passed to the last injection (0 for a clean dataset).
    pub injected_fraction: f64,
    pub injection_seed: u64,
    pub instances: Vec<SynthInstance>,
}

impl SynthDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn faulty_flags(&self) -> Vec<bool> {
        self.instances.iter().map(|i| i.faulty).collect()
    }

    pub fn num_faulty(&self) -> usize {
        self.instances.iter().filter(|i| i.faulty).count()
    }

    /// Row-major raw inputs of one modality, widened to `f64`.
    pub fn raw_matrix(&self, modality: Modality) -> Vec<f64> {
        self.instances
            .iter()
            .flat_map(|i| match modality {
                Modality::Video => i.video.iter(),
                Modality::Audio => i.audio.iter(),
            })
            .map(|&x| x as f64)
            .collect()
    }
}

/// Prototypes and mixing matrices, fully determined by the config seed.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub config: SynthConfig,
    /// `C x latent` video prototypes.
    pub video_prototypes: Vec<f64>,
    /// `C x latent` audio prototypes.
    pub audio_prototypes: Vec<f64>,
    /// `distractor_classes x latent` audio prototypes outside the training classes.
    pub distractor_prototypes: Vec<f64>,
    video_mix: Vec<f64>,
    audio_mix: Vec<f64>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn unit_vectors(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count * dim);
    while out.len() < count * dim {
        let start = out.len();
        out.extend((0..dim).map(|_| gaussian(rng)));
        if normalize_in_place(&mut out[start..]).is_err() {
            out.truncate(start);
        }
    }
    out
}

impl World {
    pub fn new(config: SynthConfig) -> Result<Self> {
        config.validate()?;
        let l = config.latent_dim;
        let mut rng = stream(config.seed, STREAM_WORLD);
        let video_prototypes = unit_vectors(&mut rng, config.num_classes, l);
        let audio_prototypes = unit_vectors(&mut rng, config.num_classes, l);
        let distractor_prototypes = unit_vectors(&mut rng, config.distractor_classes, l);
        let scale = 1.0 / libm::sqrt(l as f64);
        let matrix = |rng: &mut ChaCha8Rng| (0..config.raw_dim * l).map(|_| scale * gaussian(rng)).collect::<Vec<_>>();
        let video_mix = matrix(&mut rng);
        let audio_mix = matrix(&mut rng);
        Ok(Self { config, video_prototypes, audio_prototypes, distractor_prototypes, video_mix, audio_mix })
    }

    fn prototype(&self, source: LatentSource) -> &[f64] {
        let l = self.config.latent_dim;
        let (table, c) = match source {
            LatentSource::Class(Modality::Video, c) => (&self.video_prototypes, c),
            LatentSource::Class(Modality::Audio, c) => (&self.audio_prototypes, c),
            LatentSource::Distractor(c) => (&self.distractor_prototypes, c),
        };
        &table[c * l..(c + 1) * l]
    }

    /// `normalize(prototype + sigma * gaussian)`.
    pub fn sample_latent<R: Rng + ?Sized>(&self, source: LatentSource, rng: &mut R) -> Vec<f64> {
        let sigma = self.config.within_class_noise;
        loop {
            let mut z: Vec<f64> =
                self.prototype(source).iter().map(|p| p + sigma * gaussian(rng)).collect();
            if normalize_in_place(&mut z).is_ok() {
                return z;
            }
        }
    }

    /// `tanh(M z)` for the given modality, stored as `f32`.
    pub fn render(&self, modality: Modality, latent: &[f64]) -> Vec<f32> {
        let mix = match modality {
            Modality::Video => &self.video_mix,
            Modality::Audio => &self.audio_mix,
        };
        mix.chunks_exact(self.config.latent_dim).map(|row| libm::tanh(dot(row, latent)) as f32).collect()
    }

    fn instance<R: Rng + ?Sized>(&self, id: u64, label: u32, rng: &mut R) -> SynthInstance {
        let zv = self.sample_latent(LatentSource::Class(Modality::Video, label as usize), rng);
        let za = self.sample_latent(LatentSource::Class(Modality::Audio, label as usize), rng);
        SynthInstance {
            id,
            label,
            video: self.render(Modality::Video, &zv),
            audio: self.render(Modality::Audio, &za),
            faulty: false,
        }
    }

    fn split(&self, per_class: usize, stream_id: u64) -> Vec<SynthInstance> {
        let mut rng = stream(self.config.seed, stream_id);
        let mut out = Vec::with_capacity(per_class * self.config.num_classes);
        for c in 0..self.config.num_classes {
            for _ in 0..per_class {
                let id = out.len() as u64;
                out.push(self.instance(id, c as u32, &mut rng));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentSource {
    Class(Modality, usize),
    Distractor(usize),
}

/// Clean training split, class-major order.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    let world = World::new(*config)?;
    Ok(SynthDataset {
        config: *config,
        injected_fraction: 0.0,
        injection_seed: 0,
        instances: world.split(config.instances_per_class, STREAM_TRAIN),
    })
}

/// Held-out split drawn from the same prototypes; never contains faulty pairs.
pub fn generate_heldout(config: &SynthConfig) -> Result<Vec<SynthInstance>> {
    Ok(World::new(*config)?.split(config.heldout_per_class, STREAM_HELDOUT))
}

/// Replaces the audio of `floor(fraction * N)` uniformly chosen instances
/// with audio from distractor classes and flags them.
pub fn inject_faulty_positives(dataset: &mut SynthDataset, fraction: f64, seed: u64) -> Result<usize> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::OutOfRange { what: "faulty fraction", value: fraction });
    }
    let world = World::new(dataset.config)?;
    let n = dataset.len();
    let count = libm::floor(fraction * n as f64) as usize;
    let mut rng = stream(seed, STREAM_INJECT);
    let mut chosen = index::sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();
    let distractors = world.config.distractor_classes;
    for i in chosen {
        let d = rng.random_range(0..distractors);
        let z = world.sample_latent(LatentSource::Distractor(d), &mut rng);
        let inst = &mut dataset.instances[i];
        inst.audio = world.render(Modality::Audio, &z);
        inst.faulty = true;
    }
    dataset.injected_fraction = fraction;
    dataset.injection_seed = seed;
    Ok(count)
}

/// Clean split followed by injection at `config.faulty_fraction`, seeded by `config.seed`.
pub fn generate_with_faults(config: &SynthConfig) -> Result<SynthDataset> {
    let mut data = generate(config)?;
    inject_faulty_positives(&mut data, config.faulty_fraction, config.seed)?;
    Ok(data)
}
