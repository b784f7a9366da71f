//! Middlebury `.flo` optical flow files.

use std::fs;
use std::path::Path;

use crate::error::{GbError, Result};
use crate::layers::LayerStack;

pub const FLO_MAGIC: f32 = 202021.25;

pub fn encode_flo(stack: &LayerStack) -> Result<Vec<u8>> {
    if stack.layer_count() != 2 {
        return Err(GbError::InvalidStack("flow needs exactly two layers (u, v)".into()));
    }
    let (w, h) = stack.dims();
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    let (u, v) = (stack.layer(0), stack.layer(1));
    for i in 0..w * h {
        out.extend_from_slice(&(u[i] as f32).to_le_bytes());
        out.extend_from_slice(&(v[i] as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_flo(bytes: &[u8]) -> Result<LayerStack> {
    if bytes.len() < 4 || f32::from_le_bytes(bytes[..4].try_into().unwrap()) != FLO_MAGIC {
        return Err(GbError::NotAFlowFile);
    }
    if bytes.len() < 12 {
        return Err(GbError::Corrupt("truncated flow header".into()));
    }
    let w = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let h = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if w <= 0 || h <= 0 {
        return Err(GbError::Corrupt(format!("invalid flow size {w}×{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let payload = &bytes[12..];
    if payload.len() != 8 * w * h {
        return Err(GbError::Corrupt(format!(
            "flow payload has {} bytes, expected {}",
            payload.len(),
            8 * w * h
        )));
    }
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for px in payload.chunks_exact(8) {
        u.push(f32::from_le_bytes(px[..4].try_into().unwrap()) as f64);
        v.push(f32::from_le_bytes(px[4..].try_into().unwrap()) as f64);
    }
    LayerStack::from_layers(w, h, vec![("flow_u".into(), u), ("flow_v".into(), v)])
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<LayerStack> {
    decode_flo(&fs::read(path)?)
}

pub fn write_flo(path: impl AsRef<Path>, stack: &LayerStack) -> Result<()> {
    fs::write(path, encode_flo(stack)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(w: usize, h: usize, u: Vec<f64>, v: Vec<f64>) -> LayerStack {
        LayerStack::from_layers(w, h, vec![("flow_u".into(), u), ("flow_v".into(), v)]).unwrap()
    }

    #[test]
    fn single_pixel_round_trip() {
        let s = flow(1, 1, vec![1.5], vec![-2.0]);
        let bytes = encode_flo(&s).unwrap();
        assert_eq!(bytes.len(), 20);
        let back = decode_flo(&bytes).unwrap();
        assert_eq!(back.layer(0), &[1.5]);
        assert_eq!(back.layer(1), &[-2.0]);
        assert_eq!(encode_flo(&back).unwrap(), bytes);
    }

    #[test]
    fn zero_flow() {
        let s = flow(3, 2, vec![0.0; 6], vec![0.0; 6]);
        let back = decode_flo(&encode_flo(&s).unwrap()).unwrap();
        assert!(back.layer(0).iter().chain(back.layer(1)).all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_magic_and_size() {
        let s = flow(1, 1, vec![0.0], vec![0.0]);
        let mut bytes = encode_flo(&s).unwrap();
        let good = bytes.clone();
        bytes[..4].copy_from_slice(&202021.24f32.to_le_bytes());
        assert!(matches!(decode_flo(&bytes), Err(GbError::NotAFlowFile)));
        assert!(matches!(decode_flo(&good[..16]), Err(GbError::Corrupt(_))));
    }

    #[test]
    fn rejects_non_flow_stacks() {
        let s = LayerStack::from_layers(1, 1, vec![("a".into(), vec![0.0])]).unwrap();
        assert!(encode_flo(&s).is_err());
    }
}
