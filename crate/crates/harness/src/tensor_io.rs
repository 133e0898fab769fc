//! Named tensor container.
//!
//! The binary file holds, little-endian throughout:
//!
//! ```text
//! magic     8 bytes  "WSDTENS1"
//! count     u64
//! count × { rank u64, rank × dim u64, prod(dims) × f64 }
//! ```
//!
//! Names live in a JSON sidecar next to it (`<file>.json`) listing
//! `{name, shape, offset}` per tensor in file order, where `offset` is the
//! byte position of the tensor's rank field.

use crate::fsutil::{atomic_write, read_json, write_json};
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use wsd_core::numerics::Tensor;

pub const MAGIC: &[u8; 8] = b"WSDTENS1";
pub const SIDECAR_FORMAT: &str = "wsd-tensors/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub tensors: Vec<SidecarEntry>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Serialize tensors to the binary layout, returning bytes and sidecar.
pub fn encode(tensors: &[(String, Tensor)]) -> (Vec<u8>, Sidecar) {
    let mut out = Vec::with_capacity(
        16 + tensors
            .iter()
            .map(|(_, t)| 8 * (1 + t.shape().len() + t.len()))
            .sum::<usize>(),
    );
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    let mut entries = Vec::with_capacity(tensors.len());
    for (name, t) in tensors {
        entries.push(SidecarEntry {
            name: name.clone(),
            shape: t.shape().to_vec(),
            offset: out.len() as u64,
        });
        out.extend_from_slice(&(t.shape().len() as u64).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    (
        out,
        Sidecar {
            format: SIDECAR_FORMAT.into(),
            tensors: entries,
        },
    )
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u64(&mut self) -> Result<u64> {
        let Some(chunk) = self.bytes.get(self.pos..self.pos + 8) else {
            bail!("tensor file truncated at byte {}", self.pos);
        };
        self.pos += 8;
        Ok(u64::from_le_bytes(chunk.try_into().expect("8-byte slice")))
    }
}

/// Parse the binary layout; tensors come back unnamed, in file order.
pub fn decode(bytes: &[u8]) -> Result<Vec<Tensor>> {
    ensure!(
        bytes.len() >= 16 && &bytes[..8] == MAGIC,
        "not a tensor container (bad magic)"
    );
    let mut r = Reader { bytes, pos: 8 };
    let count = r.u64()?;
    let mut out = Vec::new();
    for i in 0..count {
        let rank = r.u64()? as usize;
        ensure!(rank <= 8, "tensor {i} has implausible rank {rank}");
        let shape = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .context("tensor size overflows")?;
        ensure!(
            len <= (bytes.len() - r.pos) / 8,
            "tensor {i} ({shape:?}) runs past the end of the file"
        );
        let data = (0..len)
            .map(|_| r.u64().map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        out.push(Tensor::new(shape, data).map_err(anyhow::Error::msg)?);
    }
    ensure!(
        r.pos == bytes.len(),
        "{} trailing bytes after the last tensor",
        bytes.len() - r.pos
    );
    Ok(out)
}

pub fn write_tensors(path: &Path, tensors: &[(String, Tensor)]) -> Result<()> {
    let (bytes, sidecar) = encode(tensors);
    atomic_write(path, &bytes)?;
    write_json(&sidecar_path(path), &sidecar)
}

pub fn read_tensors(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let tensors = decode(&bytes).with_context(|| format!("decoding {}", path.display()))?;
    let sidecar: Sidecar = read_json(&sidecar_path(path))?;
    ensure!(
        sidecar.format == SIDECAR_FORMAT,
        "unsupported sidecar format {}",
        sidecar.format
    );
    ensure!(
        sidecar.tensors.len() == tensors.len(),
        "sidecar names {} tensors, file holds {}",
        sidecar.tensors.len(),
        tensors.len()
    );
    sidecar
        .tensors
        .into_iter()
        .zip(tensors)
        .map(|(e, t)| {
            ensure!(
                e.shape == t.shape(),
                "sidecar shape {:?} for {} disagrees with file {:?}",
                e.shape,
                e.name,
                t.shape()
            );
            Ok((e.name, t))
        })
        .collect()
}
