//! Binary weight file.
//!
//! Little-endian layout: magic `VGL1`, format version (u32), the model's
//! canonical config text with a `seed` entry (u32 length + UTF-8), tensor
//! count (u32), then per tensor its name (u16 length + UTF-8), rank (u8),
//! extents (u32 each) and raw f32 values. A CRC-32 of every preceding byte
//! closes the file.

use std::fs;
use std::path::Path;

use super::spec::ModelSpec;
use super::weights::{ModelWeights, Param, ParamRole, Program};
use crate::config::ConfigText;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

pub const MAGIC: &[u8; 4] = b"VGL1";
pub const FORMAT_VERSION: u32 = 1;

/// Extents as stored on disk: kernels keep rank 4, fully-connected weights
/// rank 2, per-channel vectors rank 1.
fn stored_extents(role: ParamRole, shape: Shape, fc: bool) -> Vec<usize> {
    match role {
        ParamRole::Weight if fc => vec![shape.n, shape.c],
        ParamRole::Weight => shape.dims().to_vec(),
        _ => vec![shape.n],
    }
}

fn is_fc(name: &str) -> bool {
    name.contains(".fc.")
}

/// Serializes `weights` for `spec`. Values are stored as f32.
pub fn encode_weights<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>) -> Result<Vec<u8>> {
    let program = Program::compile(spec)?;
    program.check(weights)?;

    let mut config = spec.to_config();
    config.set("seed", weights.seed);
    let text = config.to_string();

    let mut out = Vec::with_capacity(64 + text.len() + 4 * weights.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&u32::try_from(text.len()).map_err(|_| Error::config("config text too long"))?.to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out.extend_from_slice(&(weights.params.len() as u32).to_le_bytes());
    for p in &weights.params {
        let name = p.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        let extents = stored_extents(p.role, p.tensor.shape(), is_fc(&p.name));
        out.push(extents.len() as u8);
        for e in extents {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for v in p.tensor.data() {
            out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos,
                message: format!("truncated: {what} needs {n} bytes, {} left", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn utf8(&mut self, n: usize, what: &str) -> Result<&'a str> {
        let at = self.pos;
        std::str::from_utf8(self.take(n, what)?).map_err(|e| Error::Format {
            offset: at + e.valid_up_to(),
            message: format!("{what} is not UTF-8"),
        })
    }
}

/// Parses a weight file produced by [`encode_weights`].
pub fn decode_weights(bytes: &[u8]) -> Result<(ModelSpec, ModelWeights<f32>)> {
    // The trailing checksum is excluded from the structural parse so that
    // truncation reports the offset where data ran out.
    let body_len = bytes.len().saturating_sub(4);
    let mut r = Reader { bytes: &bytes[..body_len], pos: 0 };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {:?}, expected \"VGL1\"", &bytes[..bytes.len().min(4)]),
        });
    }
    r.take(4, "magic")?;
    let version_at = r.pos;
    let version = r.u32("format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: version_at,
            message: format!("unsupported format version {version}"),
        });
    }
    let text_len = r.u32("config length")? as usize;
    let text_at = r.pos;
    let text = r.utf8(text_len, "config text")?;
    let fmt_err = |e: Error| Error::Format {
        offset: text_at,
        message: format!("embedded model config: {e}"),
    };
    let config = ConfigText::parse(text).map_err(fmt_err)?;
    let spec = ModelSpec::from_config(&config).map_err(fmt_err)?;
    let seed: u64 = config.required("seed").map_err(fmt_err)?;
    let program = Program::compile(&spec).map_err(fmt_err)?;

    let count_at = r.pos;
    let count = r.u32("tensor count")? as usize;
    if count != program.slots.len() {
        return Err(Error::Format {
            offset: count_at,
            message: format!("{count} tensors, model needs {}", program.slots.len()),
        });
    }
    let mut params = Vec::with_capacity(count);
    for slot in &program.slots {
        let name_at = r.pos;
        let name_len = r.u16("tensor name length")? as usize;
        let name = r.utf8(name_len, "tensor name")?;
        if name != slot.name {
            return Err(Error::Format {
                offset: name_at,
                message: format!("tensor {name:?} where {:?} expected", slot.name),
            });
        }
        let rank_at = r.pos;
        let rank = r.u8("tensor rank")? as usize;
        let mut extents = Vec::with_capacity(rank);
        for _ in 0..rank {
            extents.push(r.u32("tensor extent")? as usize);
        }
        let expected = stored_extents(slot.role, slot.shape, is_fc(&slot.name));
        if extents != expected {
            return Err(Error::Format {
                offset: rank_at,
                message: format!("tensor {name:?} has extents {extents:?}, model needs {expected:?}"),
            });
        }
        let payload = r.take(4 * slot.shape.len(), "tensor payload")?;
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        params.push(Param {
            name: slot.name.clone(),
            role: slot.role,
            tensor: Tensor::from_vec(slot.shape, data)?,
        });
    }
    if r.pos != body_len || bytes.len() < r.pos + 4 {
        return Err(Error::Format {
            offset: r.pos,
            message: format!("{} unexpected bytes before the checksum", body_len.saturating_sub(r.pos)),
        });
    }
    let stored = u32::from_le_bytes(bytes[body_len..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..body_len]);
    if stored != computed {
        return Err(Error::Integrity { stored, computed });
    }
    Ok((spec, ModelWeights { seed, params }))
}

pub fn save_weights<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_weights(spec, weights)?)?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<(ModelSpec, ModelWeights<f32>)> {
    decode_weights(&fs::read(path)?)
}
