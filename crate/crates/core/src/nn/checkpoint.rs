//! Generator checkpoints.
//!
//! Binary container, all integers and floats little-endian:
//!
//! | offset | type      | field                                         |
//! |--------|-----------|-----------------------------------------------|
//! | 0      | `[u8; 4]` | magic `FSDF`                                  |
//! | 4      | `u32`     | format version (1)                            |
//! | 8      | `u32`     | bytes per parameter (4 or 8)                  |
//! | 12     | `u32`     | hidden layers                                 |
//! | 16     | `u32`     | width                                         |
//! | 20     | `i32`     | skip layer, -1 for none                       |
//! | 24     | `f64`     | softplus beta                                 |
//! | 32     | `u32`     | encoding frequencies, `u32::MAX` when disabled |
//! | 36     | `u32`     | encoding includes raw input (0/1)             |
//! | 40     | `u64`     | parameter count                               |
//! | 48     | ...       | parameters: per layer, weight row-major then bias |
//!
//! A JSON sidecar (`<file>.json`) records the network config, the seed and
//! the training step.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{NetworkConfig, PositionalEncoding, Real, SdfNetwork};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"FSDF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub network: NetworkConfig,
    pub seed: u64,
    pub step: usize,
    pub precision_bytes: usize,
}

pub fn write_checkpoint<T: Real>(net: &SdfNetwork<T>) -> Vec<u8> {
    let cfg = net.config();
    let mut out = Vec::with_capacity(HEADER_LEN + net.param_count() * T::BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(T::BYTES as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.hidden_layers as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.width as u32).to_le_bytes());
    out.extend_from_slice(&cfg.skip_layer.map_or(-1i32, |s| s as i32).to_le_bytes());
    out.extend_from_slice(&cfg.softplus_beta.to_le_bytes());
    let (freqs, include) = cfg
        .encoding
        .map_or((u32::MAX, 1), |e| (e.num_frequencies as u32, u32::from(e.include_input)));
    out.extend_from_slice(&freqs.to_le_bytes());
    out.extend_from_slice(&include.to_le_bytes());
    out.extend_from_slice(&(net.param_count() as u64).to_le_bytes());
    for v in net.params() {
        v.write_le(&mut out);
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

pub fn read_checkpoint<T: Real>(bytes: &[u8]) -> Result<SdfNetwork<T>> {
    let err = |at: usize, msg: &str| Error::parse(format!("checkpoint byte {at}"), msg);
    if bytes.len() < HEADER_LEN {
        return Err(err(bytes.len(), "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(err(0, "bad magic, expected FSDF"));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(err(4, &format!("unsupported version {version}")));
    }
    let width_bytes = u32_at(bytes, 8) as usize;
    if width_bytes != T::BYTES {
        return Err(err(8, &format!("stored {width_bytes}-byte parameters, reader expects {}", T::BYTES)));
    }
    let skip = i32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes"));
    let beta = f64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    let freqs = u32_at(bytes, 32);
    let include = u32_at(bytes, 36);
    let config = NetworkConfig {
        hidden_layers: u32_at(bytes, 12) as usize,
        width: u32_at(bytes, 16) as usize,
        skip_layer: (skip >= 0).then_some(skip as usize),
        softplus_beta: beta,
        encoding: (freqs != u32::MAX).then_some(PositionalEncoding {
            num_frequencies: freqs as usize,
            include_input: include != 0,
        }),
    };
    config.validate().map_err(|e| err(12, &e.to_string()))?;
    let count = u64::from_le_bytes(bytes[40..48].try_into().expect("8 bytes")) as usize;
    if count != config.param_count() {
        return Err(err(40, &format!("parameter count {count} does not match architecture ({})", config.param_count())));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * T::BYTES {
        return Err(err(HEADER_LEN + body.len(), "parameter blob length mismatch"));
    }
    let params: Vec<T> = body.chunks_exact(T::BYTES).map(T::read_le).collect();
    let mut net = SdfNetwork::zeros(config)?;
    net.set_params(&params)?;
    Ok(net)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_checkpoint<T: Real>(path: &Path, net: &SdfNetwork<T>, seed: u64, step: usize) -> Result<()> {
    fs::write(path, write_checkpoint(net))?;
    let meta = CheckpointMeta {
        network: net.config().clone(),
        seed,
        step,
        precision_bytes: T::BYTES,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Invariant(e.to_string()))?;
    fs::write(sidecar(path), json)?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<(SdfNetwork<T>, Option<CheckpointMeta>)> {
    let net = read_checkpoint(&fs::read(path)?)?;
    let meta = match fs::read_to_string(sidecar(path)) {
        Ok(text) => Some(
            serde_json::from_str(&text)
                .map_err(|e| Error::parse(sidecar(path).display().to_string(), e.to_string()))?,
        ),
        Err(_) => None,
    };
    Ok((net, meta))
}
