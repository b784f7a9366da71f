//! PGM/PPM (binary) and PNG ingestion, CIE Lab conversion, and simple writers.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{GbError, Result};
use crate::eval::RgbImage;
use crate::grid::{Mask, ScalarMap};
use crate::layers::LayerStack;

/// Working colour space for three-channel images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorSpace {
    #[default]
    Rgb,
    /// CIE Lab (D65) rescaled to `[0, 1]`: `L/100`, `(a+128)/255`, `(b+128)/255`.
    Lab,
}

/// Decoded raster: channel-interleaved samples in `[0, 1]`.
struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<f64>,
}

pub fn read_image(path: impl AsRef<Path>, color: ColorSpace) -> Result<LayerStack> {
    let path = path.as_ref();
    decode_image(&fs::read(path)?, color)
        .map_err(|e| match e {
            GbError::UnsupportedFormat(m) => GbError::UnsupportedFormat(format!("{}: {m}", path.display())),
            other => other,
        })
}

/// Decodes PGM (P5), PPM (P6) or PNG bytes into a 1- or 3-layer stack.
pub fn decode_image(bytes: &[u8], color: ColorSpace) -> Result<LayerStack> {
    let raster = if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)?
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(bytes)?
    } else {
        return Err(GbError::UnsupportedFormat("expected binary PGM/PPM or PNG".into()));
    };
    raster_to_stack(raster, color)
}

fn raster_to_stack(r: Raster, color: ColorSpace) -> Result<LayerStack> {
    let n = r.width * r.height;
    let mut stack = LayerStack::new(r.width, r.height);
    if r.channels == 1 {
        stack.push_layer("gray", r.samples)?;
        return Ok(stack);
    }
    let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for px in r.samples.chunks_exact(r.channels) {
        let rgb = [px[0], px[1], px[2]];
        let out = match color {
            ColorSpace::Rgb => rgb,
            ColorSpace::Lab => lab_to_unit(srgb_to_lab(rgb)),
        };
        for (p, v) in planes.iter_mut().zip(out) {
            p.push(v);
        }
    }
    let names = match color {
        ColorSpace::Rgb => ["r", "g", "b"],
        ColorSpace::Lab => ["lab_l", "lab_a", "lab_b"],
    };
    for (name, plane) in names.iter().zip(planes) {
        stack.push_layer(*name, plane)?;
    }
    Ok(stack)
}

fn decode_pnm(bytes: &[u8]) -> Result<Raster> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(GbError::Corrupt("truncated PNM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GbError::Corrupt("malformed PNM header".into()))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(GbError::Corrupt("malformed PNM header".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(GbError::Corrupt("invalid PNM dimensions or maxval".into()));
    }
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = width * height * channels * bps;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| GbError::Corrupt("truncated PNM raster".into()))?;
    let scale = 1.0 / maxval as f64;
    let samples = if bps == 1 {
        data.iter().map(|&b| b as f64 * scale).collect()
    } else {
        data.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    Ok(Raster {
        width,
        height,
        channels,
        samples,
    })
}

fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let corrupt = |e: png::DecodingError| GbError::Corrupt(format!("PNG: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(corrupt)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| GbError::Corrupt("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(corrupt)?;
    let (src_channels, keep) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(GbError::UnsupportedFormat("unexpanded palette PNG".into()))
        }
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let sixteen = info.bit_depth == png::BitDepth::Sixteen;
    let bps = if sixteen { 2 } else { 1 };
    let max = if sixteen { 65535.0 } else { 255.0 };
    let mut samples = Vec::with_capacity(width * height * keep);
    for y in 0..height {
        let row = &buf[y * info.line_size..(y + 1) * info.line_size];
        for x in 0..width {
            for c in 0..keep {
                let i = (x * src_channels + c) * bps;
                let v = if sixteen {
                    u16::from_be_bytes([row[i], row[i + 1]]) as f64
                } else {
                    row[i] as f64
                };
                samples.push(v / max);
            }
        }
    }
    Ok(Raster {
        width,
        height,
        channels: keep,
        samples,
    })
}

/// sRGB in `[0, 1]` to CIE Lab under D65.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| {
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    });
    let x = 0.4124564 * lin[0] + 0.3575761 * lin[1] + 0.1804375 * lin[2];
    let y = 0.2126729 * lin[0] + 0.7151522 * lin[1] + 0.0721750 * lin[2];
    let z = 0.0193339 * lin[0] + 0.1191920 * lin[1] + 0.9503041 * lin[2];
    const DELTA: f64 = 6.0 / 29.0;
    let f = |t: f64| {
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x / 0.95047), f(y), f(z / 1.08883));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn lab_to_unit(lab: [f64; 3]) -> [f64; 3] {
    [lab[0] / 100.0, (lab[1] + 128.0) / 255.0, (lab[2] + 128.0) / 255.0]
}

/// Any nonzero sample (or layer value above 0.5 for stacks) marks a boundary pixel.
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let is_gbls = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gbls"));
    let stack = if is_gbls {
        super::read_gbls(path)?
    } else {
        read_image(path, ColorSpace::Rgb)?
    };
    let threshold = if is_gbls { 0.5 } else { 0.0 };
    let (w, h) = stack.dims();
    Ok(Mask::from_fn(w, h, |x, y| {
        (0..stack.layer_count()).any(|k| stack.value(x, y, k) > threshold)
    }))
}

fn write_png(path: &Path, width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let enc_err = |e: png::EncodingError| GbError::Io(std::io::Error::other(e.to_string()));
    let mut writer = enc.write_header().map_err(enc_err)?;
    writer.write_image_data(data).map_err(enc_err)?;
    writer.finish().map_err(enc_err)?;
    Ok(())
}

/// Writes `map` as 8-bit gray, mapping `[lo, hi]` linearly onto `[0, 255]`.
pub fn write_gray_png(path: impl AsRef<Path>, map: &ScalarMap, lo: f64, hi: f64) -> Result<()> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let data: Vec<u8> = map
        .as_slice()
        .iter()
        .map(|&v| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    write_png(path.as_ref(), map.width(), map.height(), png::ColorType::Grayscale, &data)
}

pub fn write_rgb_png(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    write_png(path.as_ref(), image.width, image.height, png::ColorType::Rgb, &image.pixels)
}

/// Binary PGM with 255 for boundary pixels.
pub fn write_mask_pgm(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.as_slice().iter().map(|&b| if b { 255u8 } else { 0 }));
    fs::write(path, out)?;
    Ok(())
}
