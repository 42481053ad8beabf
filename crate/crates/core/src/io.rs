//! Set and measure files.
//!
//! * `FRS1`: one JSON header line
//!   `{"format":"FRS1","dim","resolution","origin","extent","count"}`, then
//!   `count` little-endian `u64` flat cell indices.
//! * `FRSJ`: the same header with an extra `"cells"` array of index tuples,
//!   as a single JSON text.
//! * `FRM1`: an `FRS1` body followed by `count` little-endian `f64` weights.
//!
//! `origin` is written as real coordinates (lower corner of the bounding
//! box); it is read back as the nearest grid point.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSet, WeightedMeasure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetFormat {
    Frs1,
    Frsj,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    dim: usize,
    resolution: u64,
    origin: Vec<f64>,
    extent: Vec<u64>,
    count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<Vec<u64>>>,
}

fn header(set: &GridSet, format: &str) -> Header {
    let n = set.resolution() as f64;
    Header {
        format: format.into(),
        dim: set.dim(),
        resolution: set.resolution(),
        origin: set.origin().iter().map(|&o| o as f64 / n).collect(),
        extent: set.extent().to_vec(),
        count: set.len(),
        cells: None,
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn encode_set(set: &GridSet, format: SetFormat) -> Vec<u8> {
    match format {
        SetFormat::Frs1 => {
            let mut out = serde_json::to_vec(&header(set, "FRS1")).expect("header serializes");
            out.push(b'\n');
            for &c in set.cells() {
                out.extend_from_slice(&c.to_le_bytes());
            }
            out
        }
        SetFormat::Frsj => {
            let mut h = header(set, "FRSJ");
            h.cells = Some(set.tuples().collect());
            let mut out = serde_json::to_vec(&h).expect("header serializes");
            out.push(b'\n');
            out
        }
    }
}

pub fn encode_measure(m: &WeightedMeasure) -> Vec<u8> {
    let mut out = serde_json::to_vec(&header(m.support(), "FRM1")).expect("header serializes");
    out.push(b'\n');
    for &c in m.support().cells() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for &w in m.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn write_set(path: &Path, set: &GridSet, format: SetFormat) -> Result<()> {
    write_bytes(path, &encode_set(set, format))
}

pub fn write_measure(path: &Path, m: &WeightedMeasure) -> Result<()> {
    write_bytes(path, &encode_measure(m))
}

enum Decoded {
    Set(GridSet),
    Measure(WeightedMeasure),
}

fn decode(path: &Path, bytes: &[u8]) -> Result<Decoded> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let split = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
    let h: Header = serde_json::from_slice(&bytes[..split]).map_err(|e| bad(format!("header: {e}")))?;
    let body = bytes.get(split + 1..).unwrap_or(&[]);
    if h.origin.len() != h.dim || h.extent.len() != h.dim || h.dim == 0 {
        return Err(bad("header dim, origin and extent disagree".into()));
    }
    let n = h.resolution as f64;
    let origin: Vec<i64> = h.origin.iter().map(|x| (x * n).round() as i64).collect();
    let read_u64 = |chunk: &[u8]| u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    let (cells, rest): (Vec<u64>, &[u8]) = match h.format.as_str() {
        "FRSJ" => {
            let tuples = h.cells.as_ref().ok_or_else(|| bad("FRSJ without a cells array".into()))?;
            if tuples.len() != h.count {
                return Err(bad(format!("count {} but {} tuples", h.count, tuples.len())));
            }
            let set = GridSet::from_tuples(h.resolution, origin, h.extent.clone(), tuples)
                .map_err(|e| bad(e.to_string()))?;
            if set.len() != h.count {
                return Err(bad("duplicate cells".into()));
            }
            return Ok(Decoded::Set(set));
        }
        "FRS1" | "FRM1" => {
            let need = h.count.checked_mul(8).ok_or_else(|| bad("count overflows".into()))?;
            if body.len() < need {
                return Err(bad(format!("expected {need} index bytes, found {}", body.len())));
            }
            (body[..need].chunks_exact(8).map(read_u64).collect(), &body[need..])
        }
        other => return Err(bad(format!("unknown format {other:?}"))),
    };
    if cells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("cell indices are not strictly increasing".into()));
    }
    let set = GridSet::new(h.resolution, origin, h.extent.clone(), cells).map_err(|e| bad(e.to_string()))?;
    if h.format == "FRS1" {
        if !rest.is_empty() {
            return Err(bad(format!("{} trailing bytes", rest.len())));
        }
        return Ok(Decoded::Set(set));
    }
    if rest.len() != h.count * 8 {
        return Err(bad(format!("expected {} weight bytes, found {}", h.count * 8, rest.len())));
    }
    let weights = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let m = WeightedMeasure::new(set, weights).map_err(|e| bad(e.to_string()))?;
    Ok(Decoded::Measure(m))
}

/// Reads an `FRS1` or `FRSJ` file; the support of an `FRM1` file is
/// accepted too.
pub fn read_set(path: &Path) -> Result<GridSet> {
    match decode(path, &read_bytes(path)?)? {
        Decoded::Set(s) => Ok(s),
        Decoded::Measure(m) => Ok(m.support().clone()),
    }
}

/// Reads an `FRM1` file; a plain set file is read as its uniform measure.
pub fn read_measure(path: &Path) -> Result<WeightedMeasure> {
    match decode(path, &read_bytes(path)?)? {
        Decoded::Measure(m) => Ok(m),
        Decoded::Set(s) => crate::grid::uniform_measure(&s),
    }
}
