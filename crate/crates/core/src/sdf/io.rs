//! Binary sample-set format.
//!
//! ```text
//! magic    4 bytes  "NZS1"
//! version  u16 LE   1
//! mode     u16 LE   0 = NearZero, 1 = UniformGrid
//! count    u64 LE
//! records  count x [f32 LE; 4] = (x, y, z, d)
//! ```
//!
//! A JSON sidecar ([`SampleSidecar`]) carries the geometry id, seed and family box.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SamplingMode, SdfSampleSet};
use crate::geom::Aabb;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NZS1";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub geometry_id: usize,
    pub seed: u64,
    pub family_bounds: Aabb<f64>,
    pub sampling_mode: SamplingMode,
    pub count: usize,
}

pub fn encode_sample_set<W: Write>(set: &SdfSampleSet, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&set.mode.code().to_le_bytes())?;
    w.write_all(&(set.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(set.len() * 16);
    for (c, v) in set.coords.iter().zip(&set.values) {
        for x in [c[0], c[1], c[2], *v] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn decode_sample_set<R: Read>(mut r: R, geometry_id: usize) -> Result<SdfSampleSet> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &header[0..4])));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let code = u16::from_le_bytes([header[6], header[7]]);
    let mode = SamplingMode::from_code(code).ok_or_else(|| Error::Format(format!("unknown sampling mode {code}")))?;
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let bytes = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(16))
        .ok_or_else(|| Error::Format(format!("count {count} too large")))?;
    let mut body = Vec::new();
    r.take(bytes as u64).read_to_end(&mut body)?;
    if body.len() != bytes {
        return Err(Error::Format(format!(
            "truncated body: expected {bytes} bytes, found {}",
            body.len()
        )));
    }
    let f = |i: usize| f32::from_le_bytes(body[4 * i..4 * i + 4].try_into().expect("4 bytes"));
    let n = count as usize;
    let coords = (0..n).map(|k| [f(4 * k), f(4 * k + 1), f(4 * k + 2)]).collect();
    let values = (0..n).map(|k| f(4 * k + 3)).collect();
    Ok(SdfSampleSet::new(geometry_id, mode, coords, values))
}

pub fn write_sample_set(set: &SdfSampleSet, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    encode_sample_set(set, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_sample_set(path: &Path, geometry_id: usize) -> Result<SdfSampleSet> {
    let file = std::fs::File::open(path)?;
    decode_sample_set(std::io::BufReader::new(file), geometry_id)
}
