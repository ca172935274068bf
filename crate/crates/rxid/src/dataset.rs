//! `RXID` dataset files: a header carrying the generator configuration,
//! then one fixed-size record per instance.

use std::io::Write;
use std::path::Path;

use rxid_core::synth::{SynthConfig, SynthDataset, SynthInstance};

use crate::binio::{check_header, read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RXID";
pub const VERSION: u32 = 1;

fn u32_field(v: usize, name: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{name} = {v} does not fit in 32 bits")))
}

pub fn encode(ds: &SynthDataset) -> Result<Vec<u8>> {
    let c = &ds.config;
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.u64(ds.len() as u64);
    w.u32(u32_field(c.num_classes, "num_classes")?);
    w.u32(u32_field(c.instances_per_class, "instances_per_class")?);
    w.u32(u32_field(c.latent_dim, "latent_dim")?);
    w.u32(u32_field(c.raw_dim, "raw_dim")?);
    w.f64(c.within_class_noise);
    w.f64(c.faulty_fraction);
    w.u64(c.seed);
    w.u32(u32_field(c.heldout_per_class, "heldout_per_class")?);
    w.u32(u32_field(c.distractor_classes, "distractor_classes")?);
    w.f64(ds.injected_fraction);
    w.u64(ds.injection_seed);
    for inst in &ds.instances {
        if inst.video.len() != c.raw_dim || inst.audio.len() != c.raw_dim {
            return Err(Error::Format(format!("instance {} has the wrong raw dimension", inst.id)));
        }
        w.u64(inst.id);
        w.u32(inst.label);
        w.u8(u8::from(inst.faulty));
        inst.video.iter().chain(&inst.audio).for_each(|&x| w.f32(x));
    }
    Ok(w.buf)
}

pub fn decode(bytes: &[u8]) -> Result<SynthDataset> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, MAGIC, VERSION)?;
    let n = r.u64()?;
    let config = SynthConfig {
        num_classes: r.u32()? as usize,
        instances_per_class: r.u32()? as usize,
        latent_dim: r.u32()? as usize,
        raw_dim: r.u32()? as usize,
        within_class_noise: r.f64()?,
        faulty_fraction: r.f64()?,
        seed: r.u64()?,
        heldout_per_class: r.u32()? as usize,
        distractor_classes: r.u32()? as usize,
    };
    let injected_fraction = r.f64()?;
    let injection_seed = r.u64()?;
    config.validate().map_err(|e| Error::Format(format!("header: {e}")))?;
    let record = 8 + 4 + 1 + 8 * config.raw_dim;
    let expected = n.checked_mul(record as u64);
    if expected != Some(r.remaining() as u64) {
        return Err(Error::Format(format!(
            "{n} records of {record} bytes do not match the {} bytes after the header",
            r.remaining()
        )));
    }
    let mut instances = Vec::with_capacity(n as usize);
    for index in 0..n as usize {
        let id = r.u64()?;
        let label = r.u32()?;
        let faulty = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(Error::CorruptRecord { index, reason: format!("faulty flag byte {other}") }),
        };
        if label as usize >= config.num_classes {
            return Err(Error::CorruptRecord { index, reason: format!("class {label} out of range") });
        }
        let mut raw = (0..2 * config.raw_dim).map(|_| r.f32()).collect::<Result<Vec<f32>>>()?;
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::CorruptRecord { index, reason: "non-finite value".into() });
        }
        let audio = raw.split_off(config.raw_dim);
        instances.push(SynthInstance { id, label, video: raw, audio, faulty });
    }
    r.finish()?;
    Ok(SynthDataset { config, injected_fraction, injection_seed, instances })
}

pub fn save(ds: &SynthDataset, path: &Path) -> Result<()> {
    write_file(path, &encode(ds)?)
}

pub fn load(path: &Path) -> Result<SynthDataset> {
    decode(&read_file(path)?)
}

/// `id,class,faulty` per instance.
pub fn write_summary_csv(ds: &SynthDataset, path: &Path) -> Result<()> {
    let mut out = String::from("id,class,faulty\n");
    for inst in &ds.instances {
        out.push_str(&format!("{},{},{}\n", inst.id, inst.label, u8::from(inst.faulty)));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
