//! Binary model files.
//!
//! Subspace model: `b"SRBM"`, version byte `0x01`, then `D`, `M`, `K` as
//! little-endian `u32`, then `W` (visible index outermost, then gate, then
//! subspace unit), `b`, `c` and `D` (row-major) as little-endian `f64`.
//!
//! RBM: `b"RBM0"`, version byte `0x01`, `D` and `M` as little-endian `u32`,
//! then `W` (`D × M` row-major), `b`, `c` as little-endian `f64`.

use std::fs;
use std::path::Path;

use srbm_core::{ModelParams, RbmParams, Shape};

use crate::error::{Error, Result};

pub const SUBSPACE_MAGIC: &[u8; 4] = b"SRBM";
pub const RBM_MAGIC: &[u8; 4] = b"RBM0";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Subspace(ModelParams),
    Rbm(RbmParams),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Subspace(_) => "subspace",
            SavedModel::Rbm(_) => "rbm",
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            SavedModel::Subspace(p) => encode_subspace(p),
            SavedModel::Rbm(p) => encode_rbm(p),
        }
    }
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_u32(out: &mut Vec<u8>, value: usize) {
    let v = u32::try_from(value).expect("layer sizes fit in u32");
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode_subspace(p: &ModelParams) -> Vec<u8> {
    let s = p.shape();
    let mut out = Vec::with_capacity(17 + 8 * s.parameter_count());
    out.extend_from_slice(SUBSPACE_MAGIC);
    out.push(VERSION);
    put_u32(&mut out, s.visible());
    put_u32(&mut out, s.gates());
    put_u32(&mut out, s.subspace());
    put_f64s(&mut out, p.w());
    put_f64s(&mut out, p.b());
    put_f64s(&mut out, p.c());
    put_f64s(&mut out, p.d());
    out
}

pub fn encode_rbm(p: &RbmParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(13 + 8 * p.parameter_count());
    out.extend_from_slice(RBM_MAGIC);
    out.push(VERSION);
    put_u32(&mut out, p.visible());
    put_u32(&mut out, p.hidden());
    put_f64s(&mut out, p.w());
    put_f64s(&mut out, p.b());
    put_f64s(&mut out, p.c());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> std::result::Result<&'a [u8], String> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(format!("truncated while reading {field}: need {n} bytes, {available} left"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, field: &str) -> std::result::Result<usize, String> {
        let b = self.take(4, field)?;
        let v = u32::from_le_bytes(b.try_into().expect("four bytes")) as usize;
        if v == 0 {
            return Err(format!("{field} is zero"));
        }
        Ok(v)
    }

    fn f64s(&mut self, n: usize, field: &str) -> std::result::Result<Vec<f64>, String> {
        let len = n.checked_mul(8).ok_or_else(|| format!("{field} is too large"))?;
        let b = self.take(len, field)?;
        let values: Vec<f64> = b
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(format!("{field} has a non-finite value at index {i}"));
        }
        Ok(values)
    }

    fn finish(&self) -> std::result::Result<(), String> {
        let extra = self.bytes.len() - self.pos;
        if extra != 0 {
            return Err(format!("{extra} trailing bytes after the parameters"));
        }
        Ok(())
    }
}

fn decode_inner(bytes: &[u8]) -> std::result::Result<SavedModel, String> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    let subspace = match magic {
        m if m == SUBSPACE_MAGIC => true,
        m if m == RBM_MAGIC => false,
        m => return Err(format!("magic: expected \"SRBM\" or \"RBM0\", found {m:02x?}")),
    };
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(format!("version: expected {VERSION}, found {version}"));
    }
    let model = if subspace {
        let d = r.u32("D")?;
        let m = r.u32("M")?;
        let k = r.u32("K")?;
        let shape = Shape::new(d, m, k).map_err(|e| e.to_string())?;
        let w = r.f64s(shape.weight_len(), "W")?;
        let b = r.f64s(d, "b")?;
        let c = r.f64s(m, "c")?;
        let dm = r.f64s(shape.hidden_pairs(), "D matrix")?;
        SavedModel::Subspace(ModelParams::from_parts(shape, w, b, c, dm).map_err(|e| e.to_string())?)
    } else {
        let d = r.u32("D")?;
        let m = r.u32("M")?;
        let w = r.f64s(d * m, "W")?;
        let b = r.f64s(d, "b")?;
        let c = r.f64s(m, "c")?;
        SavedModel::Rbm(RbmParams::from_parts(d, m, w, b, c).map_err(|e| e.to_string())?)
    };
    r.finish()?;
    Ok(model)
}

/// Parses a model from bytes; `origin` names the source in error messages.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<SavedModel> {
    decode_inner(bytes).map_err(|m| Error::format(origin, m))
}

pub fn read_model(path: &Path) -> Result<SavedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn write_model(path: &Path, model: &SavedModel) -> Result<()> {
    fs::write(path, model.encode()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use srbm_core::sampler::chain_rng;

    #[test]
    fn subspace_layout_is_exact() {
        let shape = Shape::new(2, 1, 2).unwrap();
        let p = ModelParams::from_parts(shape, vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0], vec![7.0], vec![8.0, 9.0]).unwrap();
        let bytes = encode_subspace(&p);
        assert_eq!(&bytes[..5], b"SRBM\x01");
        assert_eq!(&bytes[5..17], &[2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(bytes.len(), 17 + 9 * 8);
        for (n, chunk) in bytes[17..].chunks(8).enumerate() {
            assert_eq!(f64::from_le_bytes(chunk.try_into().unwrap()), (n + 1) as f64);
        }
        assert_eq!(decode(&bytes, Path::new("m")).unwrap(), SavedModel::Subspace(p));
    }

    #[test]
    fn rbm_layout_is_exact() {
        let p = RbmParams::from_parts(1, 2, vec![1.5, -2.0], vec![0.25], vec![3.0, 4.0]).unwrap();
        let bytes = encode_rbm(&p);
        assert_eq!(&bytes[..13], b"RBM0\x01\x01\x00\x00\x00\x02\x00\x00\x00");
        assert_eq!(bytes.len(), 13 + 5 * 8);
        assert_eq!(decode(&bytes, Path::new("m")).unwrap(), SavedModel::Rbm(p));
    }

    fn message(bytes: &[u8]) -> String {
        decode(bytes, Path::new("model.bin")).unwrap_err().to_string()
    }

    #[test]
    fn corrupt_files_name_the_field() {
        let p = ModelParams::random_normal(Shape::new(3, 2, 2).unwrap(), 1.0, &mut chain_rng(0, 0)).unwrap();
        let good = encode_subspace(&p);
        assert!(message(b"XXXX\x01").contains("magic"));
        let mut v = good.clone();
        v[4] = 2;
        assert!(message(&v).contains("version"));
        assert!(message(&good[..20]).contains("truncated while reading W"));
        assert!(message(&good[..good.len() - 3]).contains("D matrix"));
        let mut v = good.clone();
        v.push(0);
        assert!(message(&v).contains("trailing"));
        let mut v = good.clone();
        let c_offset = 17 + 8 * (12 + 3);
        v[c_offset..c_offset + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(message(&v).contains("c has a non-finite value"));
        let mut v = good;
        v[9..13].copy_from_slice(&0u32.to_le_bytes());
        assert!(message(&v).contains("M is zero"));
    }
}
