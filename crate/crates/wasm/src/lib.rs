//! Browser bindings: boundary detection, soft segmentation and synthetic
//! scenes on RGBA canvas buffers.

use gbound::eval::RgbImage;
use gbound::io::{lab_to_unit, srgb_to_lab};
use gbound::{
    gb1_detect, gb2_detect, nms, soft_segment, synth_generate, GbConfig, GbError, LayerStack, Mask, ScalarMap,
    SoftSegConfig, SynthSpec,
};
use wasm_bindgen::prelude::*;

/// RGBA bytes (as from `getImageData`) to three colour layers in `[0, 1]`.
pub fn stack_from_rgba(rgba: &[u8], width: usize, height: usize, lab: bool) -> gbound::Result<LayerStack> {
    if rgba.len() != width * height * 4 {
        return Err(GbError::InvalidConfig(format!(
            "expected {} RGBA bytes for {width}x{height}, got {}",
            width * height * 4,
            rgba.len()
        )));
    }
    let mut planes = [Vec::new(), Vec::new(), Vec::new()];
    for px in rgba.chunks_exact(4) {
        let mut c = [px[0], px[1], px[2]].map(|v| v as f64 / 255.0);
        if lab {
            c = lab_to_unit(srgb_to_lab(c));
        }
        for (plane, v) in planes.iter_mut().zip(c) {
            plane.push(v);
        }
    }
    let mut stack = LayerStack::new(width, height);
    for (name, plane) in ["c0", "c1", "c2"].into_iter().zip(planes) {
        stack.push_layer(name, plane)?;
    }
    Ok(stack)
}

/// Grey RGBA rendering of a nonnegative map, scaled so its maximum is white.
pub fn map_to_rgba(map: &ScalarMap) -> Vec<u8> {
    let max = map.max_value();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    map.as_slice()
        .iter()
        .flat_map(|&v| {
            let g = (v * scale).round().clamp(0.0, 255.0) as u8;
            [g, g, g, 255]
        })
        .collect()
}

fn rgb_to_rgba(img: &RgbImage) -> Vec<u8> {
    img.pixels.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

fn stack_to_rgba(stack: &LayerStack) -> Vec<u8> {
    let (w, h) = stack.dims();
    let k = stack.layer_count();
    (0..w * h)
        .flat_map(|i| {
            let c = |l: usize| (stack.layer(l.min(k - 1))[i].clamp(0.0, 1.0) * 255.0).round() as u8;
            [c(0), c(1), c(2), 255]
        })
        .collect()
}

fn mask_to_rgba(mask: &Mask) -> Vec<u8> {
    mask.as_slice()
        .iter()
        .flat_map(|&b| if b { [0, 0, 0, 255] } else { [255, 255, 255, 255] })
        .collect()
}

pub fn detect_rgba(
    rgba: &[u8],
    width: usize,
    height: usize,
    radius: usize,
    fast: bool,
    thin: bool,
    lab: bool,
) -> gbound::Result<Vec<u8>> {
    let stack = stack_from_rgba(rgba, width, height, lab)?;
    let raw = if fast {
        gb2_detect(&stack, &GbConfig::new(radius))?
    } else {
        gb1_detect(&stack, &GbConfig::new(radius).with_gaussian(true))?
    };
    Ok(map_to_rgba(&if thin { nms(&raw) } else { raw.strength }))
}

pub fn softseg_rgba(rgba: &[u8], width: usize, height: usize, samples: usize) -> gbound::Result<Vec<u8>> {
    let stack = stack_from_rgba(rgba, width, height, false)?;
    let cfg = SoftSegConfig {
        samples,
        ..SoftSegConfig::default()
    };
    Ok(rgb_to_rgba(&soft_segment(&stack, &cfg)?.visualize()))
}

/// Scene colours and ground truth, each as RGBA.
pub fn synth_rgba(seed: u64, width: usize, height: usize, noise: f64) -> gbound::Result<(Vec<u8>, Vec<u8>)> {
    let scene = synth_generate(&SynthSpec::random_scene(seed, width, height, 3, noise))?;
    Ok((stack_to_rgba(&scene.stack), mask_to_rgba(&scene.ground_truth)))
}

fn js(e: GbError) -> JsError {
    JsError::new(&e.to_string())
}

/// Boundary strength of an RGBA image as grey RGBA.
///
/// `fast` selects the integral-image detector; otherwise the exact detector
/// with Gaussian weights runs. `thin` applies non-maxima suppression.
#[wasm_bindgen]
pub fn detect(rgba: &[u8], width: u32, height: u32, radius: u32, fast: bool, thin: bool, lab: bool) -> Result<Vec<u8>, JsError> {
    detect_rgba(rgba, width as usize, height as usize, radius as usize, fast, thin, lab).map_err(js)
}

/// First three soft-segmentation layers as RGB.
#[wasm_bindgen]
pub fn softseg(rgba: &[u8], width: u32, height: u32, samples: u32) -> Result<Vec<u8>, JsError> {
    softseg_rgba(rgba, width as usize, height as usize, samples as usize).map_err(js)
}

#[wasm_bindgen]
pub fn synth_image(seed: u32, width: u32, height: u32, noise: f64) -> Result<Vec<u8>, JsError> {
    synth_rgba(seed as u64, width as usize, height as usize, noise).map(|p| p.0).map_err(js)
}

#[wasm_bindgen]
pub fn synth_ground_truth(seed: u32, width: u32, height: u32) -> Result<Vec<u8>, JsError> {
    synth_rgba(seed as u64, width as usize, height as usize, 0.0).map(|p| p.1).map_err(js)
}
