//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! magic    8 bytes  "CSIPOSE\0"
//! version  u32      1
//! widths   15 × u32 encoder[6], se_hidden, fc_channels, decoder[7]
//! count    u32      number of tensors
//! per tensor:
//!   ndim   u32
//!   dims   ndim × u32
//!   data   product(dims) × f64 (IEEE 754 little-endian)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::model::{Architecture, NetworkParams};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"CSIPOSE\0";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} overflows u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode_checkpoint(params: &NetworkParams) -> Result<Vec<u8>> {
    let tensors = params.tensors();
    let total: usize = tensors.iter().map(|(_, _, d)| d.len()).sum();
    let mut out = Vec::with_capacity(8 * total + 1024);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let a = params.arch;
    for w in a
        .encoder_channels
        .iter()
        .chain([&a.se_hidden, &a.fc_channels])
        .chain(&a.decoder_channels)
    {
        put_u32(&mut out, *w)?;
    }
    put_u32(&mut out, tensors.len())?;
    for (_, shape, data) in &tensors {
        put_u32(&mut out, shape.len())?;
        for d in shape {
            put_u32(&mut out, *d)?;
        }
        for v in data.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<NetworkParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut widths = [0usize; 15];
    for w in widths.iter_mut() {
        *w = r.u32()?;
    }
    let arch = Architecture {
        encoder_channels: widths[..6].try_into().expect("6"),
        se_hidden: widths[6],
        fc_channels: widths[7],
        decoder_channels: widths[8..].try_into().expect("7"),
    };
    let mut params = NetworkParams::zeros(arch)?;
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|(n, s, _)| (n, s))
        .collect();
    let count = r.u32()?;
    if count != expected.len() {
        return Err(Error::Checkpoint(format!(
            "{count} tensors, architecture has {}",
            expected.len()
        )));
    }
    for ((name, shape), dest) in expected.iter().zip(params.tensors_mut()) {
        let ndim = r.u32()?;
        let dims = (0..ndim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        if &dims != shape {
            return Err(Error::Checkpoint(format!(
                "{name}: shape {dims:?}, expected {shape:?}"
            )));
        }
        let raw = r.take(8 * dest.len())?;
        for (v, chunk) in dest.iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
        if let Some(i) = dest.iter().position(|v| !v.is_finite()) {
            return Err(Error::Checkpoint(format!("{name}: non-finite entry {i}")));
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(params)
}

pub fn write_checkpoint(params: &NetworkParams, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_checkpoint(params)?;
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}
