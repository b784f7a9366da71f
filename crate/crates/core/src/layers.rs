//! Multi-layer image interpretations.

use crate::error::{GbError, Result};
use crate::grid::ScalarMap;

/// `K` real-valued layers sharing one `width × height` grid.
///
/// Values are stored layer-major, row-major. Each layer carries a name tag and
/// a positive scale factor that the detectors apply multiplicatively.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    width: usize,
    height: usize,
    names: Vec<String>,
    scales: Vec<f64>,
    data: Vec<f64>,
}

impl LayerStack {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            names: Vec::new(),
            scales: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Builds a stack from whole layers. Rejects non-finite values and mismatched sizes.
    pub fn from_layers(width: usize, height: usize, layers: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut stack = Self::new(width, height);
        for (name, values) in layers {
            stack.push_layer(name, values)?;
        }
        Ok(stack)
    }

    pub fn push_layer(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(GbError::InvalidStack("empty image grid".into()));
        }
        if values.len() != self.width * self.height {
            return Err(GbError::InvalidStack(format!(
                "layer has {} values, expected {}",
                values.len(),
                self.width * self.height
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GbError::InvalidStack(format!(
                "non-finite value at index {i}"
            )));
        }
        self.names.push(name.into());
        self.scales.push(1.0);
        self.data.extend(values);
        Ok(())
    }

    pub fn push_map(&mut self, name: impl Into<String>, map: &ScalarMap) -> Result<()> {
        if map.dims() != self.dims() {
            return Err(GbError::DimensionMismatch {
                expected: self.dims(),
                actual: map.dims(),
            });
        }
        self.push_layer(name, map.as_slice().to_vec())
    }

    /// Appends every layer of `other`, keeping its names and scales.
    pub fn extend(&mut self, other: &LayerStack) -> Result<()> {
        if other.dims() != self.dims() {
            return Err(GbError::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        self.names.extend(other.names.iter().cloned());
        self.scales.extend(other.scales.iter().copied());
        self.data.extend(other.data.iter().copied());
        Ok(())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn layer_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn set_scales(&mut self, scales: &[f64]) -> Result<()> {
        if scales.len() != self.layer_count() {
            return Err(GbError::InvalidStack(format!(
                "{} scales for {} layers",
                scales.len(),
                self.layer_count()
            )));
        }
        if scales.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(GbError::InvalidStack("layer scales must be positive".into()));
        }
        self.scales.copy_from_slice(scales);
        Ok(())
    }

    #[inline]
    pub fn layer(&self, k: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[k * n..(k + 1) * n]
    }

    pub fn layer_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.width * self.height;
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn layer_map(&self, k: usize) -> ScalarMap {
        ScalarMap::from_vec(self.width, self.height, self.layer(k).to_vec())
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize, k: usize) -> f64 {
        self.data[k * self.width * self.height + y * self.width + x]
    }

    /// Re-checks every invariant; useful after mutating layers in place.
    pub fn validate(&self) -> Result<()> {
        if self.layer_count() == 0 {
            return Err(GbError::InvalidStack("stack has no layers".into()));
        }
        if self.data.len() != self.width * self.height * self.layer_count() {
            return Err(GbError::InvalidStack("payload length mismatch".into()));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(GbError::InvalidStack("non-finite layer value".into()));
        }
        if self.scales.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(GbError::InvalidStack("layer scales must be positive".into()));
        }
        Ok(())
    }

    /// Every layer multiplied by `c`. Scales are left untouched.
    pub fn scaled_by(&self, c: f64) -> LayerStack {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Element-wise mean of stacks with identical shape; names come from the first.
    pub fn average(stacks: &[LayerStack]) -> Result<LayerStack> {
        let first = stacks
            .first()
            .ok_or_else(|| GbError::InvalidStack("nothing to average".into()))?;
        let mut out = first.clone();
        for s in &stacks[1..] {
            if s.dims() != first.dims() || s.layer_count() != first.layer_count() {
                return Err(GbError::InvalidStack(
                    "averaged stacks must share shape and layer count".into(),
                ));
            }
            for (o, v) in out.data.iter_mut().zip(&s.data) {
                *o += v;
            }
        }
        let n = stacks.len() as f64;
        out.data.iter_mut().for_each(|v| *v /= n);
        Ok(out)
    }

    /// Layer `k` with `pad` pixels of replicated border on every side,
    /// already multiplied by the layer's scale.
    pub(crate) fn padded_scaled_layer(&self, k: usize, pad: usize) -> ScalarMap {
        let src = self.layer(k);
        let g = self.scales[k];
        let (w, h) = self.dims();
        let pw = w + 2 * pad;
        let ph = h + 2 * pad;
        let mut out = Vec::with_capacity(pw * ph);
        for y in 0..ph {
            let sy = (y as isize - pad as isize).clamp(0, h as isize - 1) as usize;
            let row = &src[sy * w..(sy + 1) * w];
            out.extend(std::iter::repeat_n(g * row[0], pad));
            out.extend(row.iter().map(|&v| g * v));
            out.extend(std::iter::repeat_n(g * row[w - 1], pad));
        }
        ScalarMap::from_vec(pw, ph, out)
    }
}
