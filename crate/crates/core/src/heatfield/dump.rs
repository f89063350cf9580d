//! Field dumps for inspection and rendering.
//!
//! Binary layout (all little-endian):
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 4 | magic `TPFD` |
//! | 4 | 4 | u32 format version (1) |
//! | 8 | 4 | u32 width in cells |
//! | 12 | 4 | u32 height in cells |
//! | 16 | 4 | u32 level `t` |
//! | 20 | 4 | u32 level count `T` |
//! | 24 | 8 | f64 sigma |
//! | 32 | 8 | f64 heat time |
//! | 40 | 8 | f64 alpha |
//! | 48 | 64 | map hash, ASCII hex (sha256) |
//! | 112 | 8·w·h | f32 pairs `(sx, sy)` per cell, row-major, row 0 at the bottom |

use serde::{Deserialize, Serialize};

use super::{FieldStack, HeatError};

pub const FIELD_DUMP_MAGIC: &[u8; 4] = b"TPFD";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 112;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDump {
    pub map_hash: String,
    pub width: usize,
    pub height: usize,
    pub t: usize,
    pub levels: usize,
    pub sigma: f64,
    pub heat_time: f64,
    pub alpha: f64,
    /// Row-major `[sx, sy]` per cell.
    pub vectors: Vec<[f32; 2]>,
}

impl FieldDump {
    pub fn from_stack(stack: &FieldStack, t: usize) -> Result<FieldDump, HeatError> {
        if !(1..=stack.len()).contains(&t) {
            return Err(HeatError::Parameter(format!(
                "level {t} outside 1..={}",
                stack.len()
            )));
        }
        let field = stack.level(t);
        let map = field.map();
        Ok(FieldDump {
            map_hash: stack.map_hash.clone(),
            width: map.width(),
            height: map.height(),
            t,
            levels: stack.len(),
            sigma: stack.schedule.sigma(t),
            heat_time: stack.schedule.heat_time(t),
            alpha: stack.schedule.alpha(t),
            vectors: field.vectors().iter().map(|v| [v.x as f32, v.y as f32]).collect(),
        })
    }
}

pub fn encode_field_binary(dump: &FieldDump) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + dump.vectors.len() * 8);
    out.extend_from_slice(FIELD_DUMP_MAGIC);
    for v in [VERSION, dump.width as u32, dump.height as u32, dump.t as u32, dump.levels as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [dump.sigma, dump.heat_time, dump.alpha] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut hash = [b'0'; 64];
    let src = dump.map_hash.as_bytes();
    let n = src.len().min(64);
    hash[..n].copy_from_slice(&src[..n]);
    out.extend_from_slice(&hash);
    for v in &dump.vectors {
        out.extend_from_slice(&v[0].to_le_bytes());
        out.extend_from_slice(&v[1].to_le_bytes());
    }
    out
}

pub fn encode_field_json(dump: &FieldDump) -> String {
    serde_json::to_string(dump).expect("field dump serializes")
}

/// Decodes either format (binary is recognized by its magic).
pub fn decode_field_dump(bytes: &[u8]) -> Result<FieldDump, HeatError> {
    if !bytes.starts_with(FIELD_DUMP_MAGIC) {
        return serde_json::from_slice(bytes).map_err(|e| HeatError::Dump(e.to_string()));
    }
    let bad = |m: &str| HeatError::Dump(m.to_string());
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) != VERSION as usize {
        return Err(bad("unsupported version"));
    }
    let (width, height) = (u32_at(8), u32_at(12));
    let cells = width
        .checked_mul(height)
        .ok_or_else(|| bad("dimensions overflow"))?;
    if bytes.len() != HEADER_LEN + cells * 8 {
        return Err(bad("payload length does not match dimensions"));
    }
    let map_hash = std::str::from_utf8(&bytes[48..112])
        .map_err(|_| bad("map hash is not ASCII"))?
        .to_string();
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let vectors = (0..cells)
        .map(|i| {
            let o = HEADER_LEN + i * 8;
            [f32_at(o), f32_at(o + 4)]
        })
        .collect();
    Ok(FieldDump {
        map_hash,
        width,
        height,
        t: u32_at(16),
        levels: u32_at(20),
        sigma: f64_at(24),
        heat_time: f64_at(32),
        alpha: f64_at(40),
        vectors,
    })
}
