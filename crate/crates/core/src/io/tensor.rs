//! Softmax tensors as little-endian binary files.
//!
//! Layout: magic `ELSM`, version `u16`, width `u32`, height `u32`,
//! channel count `u8` (always 8), then `width * height * 8` `f32` values,
//! row-major with the channel index varying fastest.

use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::labels::{SoftmaxMap, NUM_CATEGORIES};

pub const SOFTMAX_MAGIC: &[u8; 4] = b"ELSM";
pub const SOFTMAX_VERSION: u16 = 1;
pub const SOFTMAX_HEADER_LEN: usize = 15;

/// Largest tolerated deviation of a pixel's channel sum from 1.
const SUM_TOLERANCE: f64 = 1e-4;

pub fn encode_softmax(map: &SoftmaxMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(SOFTMAX_HEADER_LEN + 4 * map.as_slice().len());
    out.extend_from_slice(SOFTMAX_MAGIC);
    out.extend_from_slice(&SOFTMAX_VERSION.to_le_bytes());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.push(NUM_CATEGORIES as u8);
    for v in map.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_softmax(path: &Path, map: &SoftmaxMap) -> Result<()> {
    write_bytes(path, &encode_softmax(map))
}

pub fn read_softmax(path: &Path) -> Result<SoftmaxMap> {
    decode_softmax(&read_bytes(path)?).map_err(|e| match e {
        Error::Parse { offset, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            offset,
            message,
        },
        other => other,
    })
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: "<memory>".into(),
        offset: offset as u64,
        message: message.into(),
    }
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_softmax(bytes: &[u8]) -> Result<SoftmaxMap> {
    if bytes.len() < SOFTMAX_HEADER_LEN {
        return Err(parse_err(bytes.len(), "truncated softmax header"));
    }
    if &bytes[..4] != SOFTMAX_MAGIC {
        return Err(parse_err(0, "bad magic, expected ELSM"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != SOFTMAX_VERSION {
        return Err(parse_err(4, format!("unsupported softmax format version {version}")));
    }
    let width = u32_at(bytes, 6) as usize;
    let height = u32_at(bytes, 10) as usize;
    if width == 0 || height == 0 {
        return Err(parse_err(6, format!("empty softmax tensor {width}x{height}")));
    }
    let channels = bytes[14] as usize;
    if channels != NUM_CATEGORIES {
        return Err(parse_err(
            14,
            format!("expected {NUM_CATEGORIES} channels, found {channels}"),
        ));
    }
    let expected = SOFTMAX_HEADER_LEN + 4 * NUM_CATEGORIES * width * height;
    if bytes.len() != expected {
        return Err(parse_err(
            bytes.len().min(expected),
            format!("expected {expected} bytes for {width}x{height}, found {}", bytes.len()),
        ));
    }
    let body = &bytes[SOFTMAX_HEADER_LEN..];
    let probs: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    for (i, px) in probs.chunks_exact(NUM_CATEGORIES).enumerate() {
        let offset = SOFTMAX_HEADER_LEN + i * 4 * NUM_CATEGORIES;
        if let Some(j) = px.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(parse_err(
                offset + 4 * j,
                format!("probability {} outside [0, 1]", px[j]),
            ));
        }
        let sum: f64 = px.iter().map(|&v| v as f64).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(parse_err(
                offset,
                format!("pixel ({}, {}) sums to {sum}", i % width, i / width),
            ));
        }
    }
    SoftmaxMap::from_probs(width, height, probs)
}
