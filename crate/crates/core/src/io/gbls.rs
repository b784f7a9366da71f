//! `GBLS` layer-stack files.
//!
//! Layout (little-endian): magic `GBLS`, version `u16`, width `u32`,
//! height `u32`, layer count `u16`, one NUL-terminated UTF-8 name per layer,
//! then `K × height × width` `f32` values, layer-major and row-major.

use std::fs;
use std::path::Path;

use crate::error::{GbError, Result};
use crate::layers::LayerStack;

pub const GBLS_MAGIC: &[u8; 4] = b"GBLS";
pub const GBLS_VERSION: u16 = 1;

pub fn encode_gbls(stack: &LayerStack) -> Result<Vec<u8>> {
    let (w, h) = stack.dims();
    let k = stack.layer_count();
    if w > u32::MAX as usize || h > u32::MAX as usize || k > u16::MAX as usize {
        return Err(GbError::InvalidStack("stack too large for the GBLS header".into()));
    }
    let mut out = Vec::with_capacity(16 + k * (8 + 4 * w * h));
    out.extend_from_slice(GBLS_MAGIC);
    out.extend_from_slice(&GBLS_VERSION.to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(k as u16).to_le_bytes());
    for name in stack.names() {
        if name.as_bytes().contains(&0) {
            return Err(GbError::InvalidStack(format!("layer name {name:?} contains NUL")));
        }
        out.extend_from_slice(name.as_bytes());
        out.push(0);
    }
    for i in 0..k {
        for &v in stack.layer(i) {
            let f = v as f32;
            if !f.is_finite() {
                return Err(GbError::InvalidStack("value does not fit in f32".into()));
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| GbError::Corrupt("truncated GBLS file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_gbls(bytes: &[u8]) -> Result<LayerStack> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4).map_err(|_| GbError::UnsupportedFormat("not a GBLS file".into()))? != GBLS_MAGIC {
        return Err(GbError::UnsupportedFormat("not a GBLS file".into()));
    }
    let version = c.u16()?;
    if version != GBLS_VERSION {
        return Err(GbError::UnsupportedFormat(format!("GBLS version {version}")));
    }
    let w = c.u32()? as usize;
    let h = c.u32()? as usize;
    let k = c.u16()? as usize;
    let mut names = Vec::with_capacity(k);
    for _ in 0..k {
        let rest = &bytes[c.pos..];
        let len = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or_else(|| GbError::Corrupt("unterminated layer name".into()))?;
        let name = std::str::from_utf8(&rest[..len])
            .map_err(|_| GbError::Corrupt("layer name is not UTF-8".into()))?
            .to_string();
        c.pos += len + 1;
        names.push(name);
    }
    let n = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(k))
        .ok_or_else(|| GbError::Corrupt("header dimensions overflow".into()))?;
    if bytes.len() - c.pos != 4 * n {
        return Err(GbError::Corrupt(format!(
            "payload has {} bytes, header implies {}",
            bytes.len() - c.pos,
            4 * n
        )));
    }
    let mut stack = LayerStack::new(w, h);
    for name in names {
        let raw = c.take(4 * w * h)?;
        let values = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        stack.push_layer(name, values)?;
    }
    Ok(stack)
}

pub fn read_gbls(path: impl AsRef<Path>) -> Result<LayerStack> {
    decode_gbls(&fs::read(path)?)
}

pub fn write_gbls(path: impl AsRef<Path>, stack: &LayerStack) -> Result<()> {
    fs::write(path, encode_gbls(stack)?)?;
    Ok(())
}
