//! FTNS tensor container.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "FTNS"
//! 4       2           version (u16 LE) = 1
//! 6       2           rank (u16 LE), at most 4
//! 8       4 * rank    dims (u32 LE each)
//! ...     4 * prod    payload, row-major f32 LE
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const FTNS_MAGIC: &[u8; 4] = b"FTNS";
pub const FTNS_VERSION: u16 = 1;
pub const MAX_RANK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.len() > MAX_RANK {
            return Err(Error::input(format!("rank {} exceeds {MAX_RANK}", dims.len())));
        }
        if dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::input("dimension does not fit in u32"));
        }
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::input(format!(
                "tensor of shape {dims:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(FTNS_MAGIC);
        out.extend_from_slice(&FTNS_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u16).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parse and validate an FTNS byte stream; `origin` names the source in
    /// error messages.
    pub fn decode(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::format(origin, reason);
        if bytes.len() < 8 {
            return Err(bad(format!("{} bytes is too short for a header", bytes.len())));
        }
        if &bytes[..4] != FTNS_MAGIC {
            return Err(bad("missing FTNS magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FTNS_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let rank = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
        if rank > MAX_RANK {
            return Err(bad(format!("rank {rank} exceeds {MAX_RANK}")));
        }
        let header = 8 + 4 * rank;
        if bytes.len() < header {
            return Err(bad("truncated dimension list".into()));
        }
        let dims: Vec<usize> = bytes[8..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
            .collect();
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| bad("element count overflows".into()))?;
        let payload = &bytes[header..];
        if Some(payload.len()) != count.checked_mul(4) {
            return Err(bad(format!(
                "payload is {} bytes, shape {dims:?} needs {}",
                payload.len(),
                count.saturating_mul(4)
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { dims, data })
    }
}

pub fn write_ftns(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tensor.encode()).map_err(|e| Error::io(path, e))
}

pub fn read_ftns(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::decode(&bytes, path)
}
