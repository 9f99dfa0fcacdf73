//! File formats: label-map PNGs, softmax tensors, candidate CSVs, JSON-lines
//! readouts, manifests and diagnostic overlays.

mod labelmap;
mod overlay;
mod precomputed;
mod tensor;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use labelmap::{decode_label_map, encode_label_map, read_label_map, write_label_map};
pub use overlay::{read_rgb_png, render_overlay, write_rgb_png, OverlayMark, OverlayStatus, RgbImage};
pub use precomputed::PrecomputedSegmenter;
pub use tensor::{
    decode_softmax, encode_softmax, read_softmax, write_softmax, SOFTMAX_HEADER_LEN, SOFTMAX_MAGIC, SOFTMAX_VERSION,
};

use crate::candidates::Candidate;
use crate::error::{Error, Result};
use crate::hazard::ScoredCandidate;

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a JSON-lines file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut offset = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        if !line.trim().is_empty() {
            let rec = serde_json::from_str(line.trim_end()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                offset: offset + e.column().saturating_sub(1) as u64,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        offset += n as u64;
    }
    Ok(out)
}

/// One row of a candidate records file. Ranking fields are empty before ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: usize,
    pub x: usize,
    pub y: usize,
    pub radius_px: usize,
    pub side_px: usize,
    pub cluster_id: usize,
    pub h_s: Option<f64>,
    pub h_d: Option<f64>,
    pub h: Option<f64>,
    pub rank: Option<usize>,
}

impl From<&Candidate> for CandidateRecord {
    fn from(c: &Candidate) -> Self {
        CandidateRecord {
            id: c.id,
            x: c.x,
            y: c.y,
            radius_px: c.radius_px,
            side_px: c.side_px,
            cluster_id: c.cluster_id,
            h_s: None,
            h_d: None,
            h: None,
            rank: None,
        }
    }
}

impl From<&ScoredCandidate> for CandidateRecord {
    fn from(s: &ScoredCandidate) -> Self {
        CandidateRecord {
            h_s: Some(s.h_s),
            h_d: Some(s.h_d),
            h: Some(s.h),
            rank: Some(s.rank),
            ..CandidateRecord::from(&s.candidate)
        }
    }
}

impl CandidateRecord {
    pub fn candidate(&self) -> Candidate {
        Candidate {
            id: self.id,
            x: self.x,
            y: self.y,
            radius_px: self.radius_px,
            side_px: self.side_px,
            cluster_id: self.cluster_id,
            cell_size: 0,
        }
    }
}

pub fn write_candidates(path: &Path, records: &[CandidateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    if records.is_empty() {
        w.write_record([
            "id",
            "x",
            "y",
            "radius_px",
            "side_px",
            "cluster_id",
            "h_s",
            "h_d",
            "h",
            "rank",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_candidates(path: &Path) -> Result<Vec<CandidateRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    r.deserialize()
        .map(|rec| {
            rec.map_err(|e| {
                let offset = e.position().map_or(0, |p| p.byte());
                Error::Parse {
                    path: path.to_path_buf(),
                    offset,
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

/// A file a command read or wrote, with its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Provenance of one command run. Holds no timestamps so reruns compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub details: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_text: &str) -> Self {
        Manifest {
            format_version: 1,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config_sha256: sha256_hex(config_text.as_bytes()),
            inputs: Vec::new(),
            outputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_bytes(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let bytes = read_bytes(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            offset: 0,
            message: e.to_string(),
        })
    }
}
