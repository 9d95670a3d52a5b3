//! Checkpoint container.
//!
//! ```text
//! magic      4 bytes  "SAMC"
//! version    u32 LE   1
//! header_len u32 LE   length of the JSON header in bytes
//! header     UTF-8 JSON {"arch": {...}, "init_seed": u64,
//!                        "tensors": [{"name": str, "shape": [usize]}, ...]}
//! payload    for each header tensor in order, prod(shape) f32 LE values
//! ```
//!
//! Nothing may follow the payload.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::ArchitectureConfig;
use super::params::{ModelParams, Tensor};
use crate::error::{Error, Result};
use crate::io_util::read_exact_or_corrupt;

pub const MAGIC: &[u8; 4] = b"SAMC";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    arch: ArchitectureConfig,
    init_seed: u64,
    tensors: Vec<TensorEntry>,
}

pub fn write_checkpoint(params: &ModelParams, sink: &mut impl Write) -> Result<()> {
    let header = Header {
        arch: params.arch.clone(),
        init_seed: params.init_seed,
        tensors: params
            .tensors
            .iter()
            .map(|t| TensorEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(12 + json.len() + 4 * params.n_params());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for t in &params.tensors {
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    sink.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint(source: &mut impl Read) -> Result<ModelParams> {
    let mut head = [0u8; 12];
    read_exact_or_corrupt(source, &mut head, "checkpoint preamble")?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let header_len = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut json = vec![0u8; header_len];
    read_exact_or_corrupt(source, &mut json, "checkpoint header")?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in header.tensors {
        let n: usize = entry.shape.iter().product();
        let mut bytes = vec![0u8; 4 * n];
        read_exact_or_corrupt(source, &mut bytes, &format!("tensor `{}`", entry.name))?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Tensor {
            name: entry.name,
            shape: entry.shape,
            data,
        });
    }
    let mut trailing = [0u8; 1];
    if source.read(&mut trailing)? != 0 {
        return Err(Error::Corruption("trailing bytes after checkpoint payload".into()));
    }

    let params = ModelParams {
        arch: header.arch,
        init_seed: header.init_seed,
        tensors,
    };
    params.validate()?;
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(params, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(&mut bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    fn encoded(params: &ModelParams) -> Vec<u8> {
        let mut out = Vec::new();
        write_checkpoint(params, &mut out).unwrap();
        out
    }

    #[test]
    fn round_trip_bit_exact() {
        let p = init_params(&ArchitectureConfig::tiny(), 3).unwrap();
        let bytes = encoded(&p);
        let back = read_checkpoint(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, p);
        assert_eq!(encoded(&back), bytes);
    }

    #[test]
    fn corrupted_streams_are_typed() {
        let p = init_params(&ArchitectureConfig::tiny().ssl_only(), 3).unwrap();
        let bytes = encoded(&p);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(&mut bad.as_slice()), Err(Error::Format(_))));

        let short = &bytes[..bytes.len() - 3];
        assert!(matches!(read_checkpoint(&mut &short[..]), Err(Error::Corruption(_))));

        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            read_checkpoint(&mut long.as_slice()),
            Err(Error::Corruption(_))
        ));

        let mut nan = bytes.clone();
        let at = nan.len() - 4;
        nan[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            read_checkpoint(&mut nan.as_slice()),
            Err(Error::Numeric { .. })
        ));
    }
}
