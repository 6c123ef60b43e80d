//! Little-endian tensor container used for network weights and logits.
//!
//! Layout: magic `DSPW`, `u32` version, `u32` entry count, then per entry a
//! `u16` name length, the UTF-8 name, a `u8` rank, `rank` `u32` dimensions
//! and the `f32` payload.

use std::path::Path;

use dspass_core::swaftnet::{NetworkWeights, ParamArray};
use dspass_core::Tensor;

use crate::error::{CliError, FormatError};

pub const MAGIC: &[u8; 4] = b"DSPW";
pub const VERSION: u32 = 1;

pub fn encode(weights: &NetworkWeights) -> Vec<u8> {
    let payload: usize = weights
        .iter()
        .map(|(n, a)| 3 + n.len() + 4 * a.shape.len() + 4 * a.data.len())
        .sum();
    let mut out = Vec::with_capacity(12 + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(weights.len() as u32).to_le_bytes());
    for (name, a) in weights.iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(a.shape.len() as u8);
        for &d in &a.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &a.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, offset: usize, message: impl Into<String>) -> FormatError {
        FormatError {
            path: None,
            offset,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], FormatError> {
        if self.bytes.len() - self.pos < n {
            return Err(self.fail(
                self.pos,
                format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<NetworkWeights, FormatError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.fail(0, "bad magic, expected \"DSPW\""));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.fail(4, format!("unsupported version {version}")));
    }
    let count = r.u32("entry count")?;
    let mut weights = NetworkWeights::new();
    for _ in 0..count {
        let start = r.pos;
        let len = r.u16("name length")? as usize;
        let name_at = r.pos;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| r.fail(name_at, "name is not UTF-8"))?
            .to_owned();
        let rank = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dimension")? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| r.fail(start, format!("`{name}` has an overflowing shape {shape:?}")))?;
        let data = r
            .take(n, &format!("payload of `{name}`"))?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let array = ParamArray::new(shape, data).map_err(|e| r.fail(start, e.to_string()))?;
        if weights.insert(name.clone(), array).is_some() {
            return Err(r.fail(start, format!("duplicate entry `{name}`")));
        }
    }
    if r.pos != bytes.len() {
        return Err(r.fail(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(weights)
}

pub fn save_weights(weights: &NetworkWeights, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, encode(weights)).map_err(|e| CliError::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<NetworkWeights, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|mut e| {
        e.path = Some(path.to_owned());
        e.into()
    })
}

/// Stores a logit tensor as a single `logits` entry of shape `[C, H, W]`.
pub fn encode_logits(logits: &Tensor) -> Vec<u8> {
    let (c, h, w) = logits.shape();
    let mut t = NetworkWeights::new();
    t.insert(
        "logits",
        ParamArray::new(vec![c, h, w], logits.data().to_vec()).expect("shape matches data"),
    );
    encode(&t)
}

pub fn decode_logits(bytes: &[u8]) -> Result<Tensor, FormatError> {
    let t = decode(bytes)?;
    let bad = |m: &str| FormatError {
        path: None,
        offset: 12,
        message: m.into(),
    };
    let a = t.get("logits").ok_or_else(|| bad("no `logits` entry"))?;
    match a.shape[..] {
        [c, h, w] => Tensor::new(c, h, w, a.data.clone()).map_err(|e| bad(&e.to_string())),
        _ => Err(bad("`logits` is not rank 3")),
    }
}
