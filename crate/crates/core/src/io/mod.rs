//! File formats: layer stacks, Middlebury flow, raster images, parameter files.

mod flo;
mod gbls;
mod params;
mod raster;

pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};
pub use gbls::{decode_gbls, encode_gbls, read_gbls, write_gbls, GBLS_MAGIC, GBLS_VERSION};
pub use params::{read_params, write_params, ModelParams};
pub use raster::{
    decode_image, lab_to_unit, read_image, read_mask, srgb_to_lab, write_gray_png, write_mask_pgm,
    write_rgb_png, ColorSpace,
};

use std::path::Path;

use crate::error::{GbError, Result};
use crate::layers::LayerStack;

/// Loads any supported layer source, choosing the decoder from the extension:
/// `.gbls` stacks, `.flo` flow, otherwise PGM/PPM/PNG images.
pub fn read_layers(path: impl AsRef<Path>, color: ColorSpace) -> Result<LayerStack> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "gbls" => read_gbls(path),
        "flo" => read_flo(path),
        "pgm" | "ppm" | "pnm" | "png" => read_image(path, color),
        other => Err(GbError::UnsupportedFormat(format!(
            "{}: unknown extension '{other}'",
            path.display()
        ))),
    }
}
