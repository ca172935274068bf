//! `RXCK` checkpoints: everything needed to resume training bit-for-bit.

use std::path::Path;

use rxid_core::encoder::{AdamState, MlpEncoder};
use rxid_core::memory_bank::{MemoryBank, Modality};
use rxid_core::trainer::TrainState;
use rxid_core::weighting::{WeightParams, WeightState};

use crate::binio::{check_header, read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RXCK";
pub const VERSION: u32 = 1;

fn put_encoder(w: &mut Writer, e: &MlpEncoder) {
    w.len(e.input_dim());
    w.len(e.hidden_dim());
    w.len(e.output_dim());
    w.f64s(e.params());
}

fn get_encoder(r: &mut Reader<'_>) -> Result<MlpEncoder> {
    let (i, h, o) = (r.u64()? as usize, r.u64()? as usize, r.u64()? as usize);
    MlpEncoder::from_params(i, h, o, r.f64s()?).map_err(|e| Error::Format(format!("encoder: {e}")))
}

fn put_adam(w: &mut Writer, a: &AdamState) {
    w.f64(a.beta1);
    w.f64(a.beta2);
    w.f64(a.eps);
    w.u64(a.step);
    w.f64s(&a.m);
    w.f64s(&a.v);
}

fn get_adam(r: &mut Reader<'_>) -> Result<AdamState> {
    Ok(AdamState { beta1: r.f64()?, beta2: r.f64()?, eps: r.f64()?, step: r.u64()?, m: r.f64s()?, v: r.f64s()? })
}

fn put_bank(w: &mut Writer, b: &MemoryBank) {
    w.u8(b.modality().tag());
    w.len(b.dim());
    w.f64(b.momentum());
    w.f64s(b.rows());
}

fn get_bank(r: &mut Reader<'_>) -> Result<MemoryBank> {
    let tag = r.u8()?;
    let modality = Modality::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown modality tag {tag}")))?;
    let dim = r.u64()? as usize;
    let momentum = r.f64()?;
    MemoryBank::from_rows(r.f64s()?, dim, momentum, modality).map_err(|e| Error::Format(format!("memory bank: {e}")))
}

pub fn encode(state: &TrainState) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.len(state.epoch);
    w.u64(state.seed);
    put_encoder(&mut w, &state.video_encoder);
    put_encoder(&mut w, &state.audio_encoder);
    put_adam(&mut w, &state.video_adam);
    put_adam(&mut w, &state.audio_adam);
    put_bank(&mut w, &state.video_bank);
    put_bank(&mut w, &state.audio_bank);
    let ws = &state.weights;
    w.f64(ws.params.delta);
    w.f64(ws.params.kappa);
    w.f64(ws.params.w_min);
    w.f64(ws.score_mean);
    w.f64(ws.score_std);
    w.f64s(&ws.weights);
    w.buf
}

pub fn decode(bytes: &[u8]) -> Result<TrainState> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, MAGIC, VERSION)?;
    let epoch = r.u64()? as usize;
    let seed = r.u64()?;
    let video_encoder = get_encoder(&mut r)?;
    let audio_encoder = get_encoder(&mut r)?;
    let video_adam = get_adam(&mut r)?;
    let audio_adam = get_adam(&mut r)?;
    let video_bank = get_bank(&mut r)?;
    let audio_bank = get_bank(&mut r)?;
    let params = WeightParams { delta: r.f64()?, kappa: r.f64()?, w_min: r.f64()? };
    let weights = WeightState { params, score_mean: r.f64()?, score_std: r.f64()?, weights: r.f64s()? };
    r.finish()?;

    if video_adam.m.len() != video_encoder.params().len() || audio_adam.m.len() != audio_encoder.params().len() {
        return Err(Error::Format("optimizer state does not match encoder size".into()));
    }
    if video_bank.len() != audio_bank.len() || weights.weights.len() != video_bank.len() {
        return Err(Error::Format("banks and weights disagree on the number of instances".into()));
    }
    Ok(TrainState { video_encoder, audio_encoder, video_adam, audio_adam, video_bank, audio_bank, weights, epoch, seed })
}

pub fn save(state: &TrainState, path: &Path) -> Result<()> {
    write_file(path, &encode(state))
}

pub fn load(path: &Path) -> Result<TrainState> {
    decode(&read_file(path)?)
}
