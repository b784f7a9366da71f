//! Linear-time detection with summed-area tables.
//!
//! With the disk projection inactive and no row weighting, `PᵀX` splits into
//! sums over the window of `x·L`, `y·L` and `L` in absolute coordinates:
//! `Σ (x − x0) L = Σ xL − x0 ΣL`. Each of those is a constant-time rectangle
//! query on a prefix-sum table, so the per-pixel cost no longer depends on
//! the window size.

use crate::error::{GbError, Result};
use crate::layers::LayerStack;
use crate::model::{pixel_output, GbConfig, JacobianField, RawBoundaryMap};
use crate::par;

/// Axis-aligned rectangle in padded-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: isize,
    pub y: isize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: isize, y: isize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    /// Inclusive corners `(x0, y0)`–`(x1, y1)`; `x1 < x0` gives an empty rectangle.
    pub fn inclusive(x0: isize, y0: isize, x1: isize, y1: isize) -> Self {
        Self {
            x: x0,
            y: y0,
            width: (x1 - x0 + 1).max(0) as usize,
            height: (y1 - y0 + 1).max(0) as usize,
        }
    }
}

/// Sums of `L`, `x·L` and `y·L` over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RectSums {
    pub sum: f64,
    pub sum_x: f64,
    pub sum_y: f64,
}

/// Three summed-area tables per layer over the replicate-padded stack.
///
/// Coordinates are absolute within the padded image, origin at its top-left.
/// Tables have one extra leading row and column of zeros.
#[derive(Debug, Clone)]
pub struct IntegralImages {
    pad: usize,
    width: usize,
    height: usize,
    layers: Vec<LayerTables>,
}

#[derive(Debug, Clone)]
struct LayerTables {
    s: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
}

impl IntegralImages {
    /// Padded width.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Padded height.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    fn stride(&self) -> usize {
        self.width + 1
    }

    /// Rectangle sums for layer `k` by four-corner inclusion-exclusion.
    pub fn rect_sums(&self, rect: Rect, k: usize) -> Result<RectSums> {
        if k >= self.layers.len() {
            return Err(GbError::InvalidConfig(format!("no layer {k}")));
        }
        let bounds = (
            rect.x,
            rect.y,
            rect.x + rect.width as isize - 1,
            rect.y + rect.height as isize - 1,
        );
        if rect.width == 0 || rect.height == 0 {
            return Ok(RectSums::default());
        }
        if rect.x < 0
            || rect.y < 0
            || rect.x as usize + rect.width > self.width
            || rect.y as usize + rect.height > self.height
        {
            return Err(GbError::OutOfBounds(bounds));
        }
        let (x0, y0) = (rect.x as usize, rect.y as usize);
        Ok(self.sums_unchecked(x0, y0, x0 + rect.width, y0 + rect.height, k))
    }

    /// Half-open table corners `[x0, x1) × [y0, y1)`.
    #[inline]
    fn sums_unchecked(&self, x0: usize, y0: usize, x1: usize, y1: usize, k: usize) -> RectSums {
        let st = self.stride();
        let (a, b, c, d) = (y0 * st + x0, y0 * st + x1, y1 * st + x0, y1 * st + x1);
        let t = &self.layers[k];
        RectSums {
            sum: t.s[d] - t.s[b] - t.s[c] + t.s[a],
            sum_x: t.sx[d] - t.sx[b] - t.sx[c] + t.sx[a],
            sum_y: t.sy[d] - t.sy[b] - t.sy[c] + t.sy[a],
        }
    }
}

/// Builds the tables for every layer of `stack`, replicate-padded by `pad`
/// and multiplied by the layer scales.
pub fn build_integrals(stack: &LayerStack, pad: usize) -> Result<IntegralImages> {
    stack.validate()?;
    let width = stack.width() + 2 * pad;
    let height = stack.height() + 2 * pad;
    let ks: Vec<usize> = (0..stack.layer_count()).collect();
    let layers = par::map_items(&ks, |&k| {
        let padded = stack.padded_scaled_layer(k, pad);
        prefix_tables(padded.as_slice(), width, height)
    });
    Ok(IntegralImages {
        pad,
        width,
        height,
        layers,
    })
}

fn prefix_tables(values: &[f64], width: usize, height: usize) -> LayerTables {
    let st = width + 1;
    let n = st * (height + 1);
    let mut s = vec![0.0; n];
    let mut sx = vec![0.0; n];
    let mut sy = vec![0.0; n];
    for y in 0..height {
        let (mut rs, mut rsx, mut rsy) = (0.0, 0.0, 0.0);
        let yf = y as f64;
        let row = &values[y * width..(y + 1) * width];
        for (x, &v) in row.iter().enumerate() {
            rs += v;
            rsx += x as f64 * v;
            rsy += yf * v;
            let above = y * st + x + 1;
            let here = above + st;
            s[here] = s[above] + rs;
            sx[here] = sx[above] + rsx;
            sy[here] = sy[above] + rsy;
        }
    }
    LayerTables { s, sx, sy }
}

/// `α = Σ dx²` over an unweighted, unprojected `(2r+1)²` window.
pub fn planar_alpha(radius: usize) -> f64 {
    let r = radius as f64;
    (2.0 * r + 1.0) * r * (r + 1.0) * (2.0 * r + 1.0) / 3.0
}

/// `J` at image pixel `(x, y)` from the tables, for a window of radius
/// `radius ≤ ii.pad()`.
pub fn gb2_local_j(ii: &IntegralImages, x: usize, y: usize, radius: usize, alpha: f64) -> Vec<[f64; 2]> {
    let mut j = vec![[0.0; 2]; ii.layer_count()];
    local_j_into(ii, x, y, radius, alpha, &mut j);
    j
}

#[inline]
fn local_j_into(ii: &IntegralImages, x: usize, y: usize, radius: usize, alpha: f64, j: &mut [[f64; 2]]) {
    debug_assert!(radius <= ii.pad);
    let cx = x + ii.pad;
    let cy = y + ii.pad;
    let (x0, y0, x1, y1) = (cx - radius, cy - radius, cx + radius + 1, cy + radius + 1);
    let inv = 1.0 / alpha;
    for (k, jk) in j.iter_mut().enumerate() {
        let s = ii.sums_unchecked(x0, y0, x1, y1, k);
        *jk = [
            (s.sum_x - cx as f64 * s.sum) * inv,
            (s.sum_y - cy as f64 * s.sum) * inv,
        ];
    }
}

fn table_rows<T: Send>(ii: &IntegralImages, dims: (usize, usize), radius: usize, per_pixel: impl Fn(&[[f64; 2]]) -> T + Sync + Send) -> Vec<T> {
    let (w, h) = dims;
    let alpha = planar_alpha(radius);
    let k_count = ii.layer_count();
    par::map_rows(h, |y| {
        let mut j = vec![[0.0f64; 2]; k_count];
        (0..w)
            .map(|x| {
                local_j_into(ii, x, y, radius, alpha, &mut j);
                per_pixel(&j)
            })
            .collect()
    })
}

fn detect_from_tables(ii: &IntegralImages, dims: (usize, usize), radius: usize) -> RawBoundaryMap {
    let px = table_rows(ii, dims, radius, |j| {
        let mut m = [[0.0; 2]; 2];
        for c in j {
            m[0][0] += c[0] * c[0];
            m[0][1] += c[0] * c[1];
            m[1][1] += c[1] * c[1];
        }
        m[1][0] = m[0][1];
        pixel_output(m)
    });
    RawBoundaryMap::from_pixels(dims.0, dims.1, px)
}

/// Per-pixel, per-layer `J` columns of the integral-image detector.
pub fn gb2_jacobians(stack: &LayerStack, config: &GbConfig) -> Result<JacobianField> {
    check_gb2_config(config)?;
    let ii = build_integrals(stack, config.window_radius)?;
    let rows = table_rows(&ii, stack.dims(), config.window_radius, |j| j.to_vec());
    Ok(JacobianField {
        width: stack.width(),
        height: stack.height(),
        layer_count: stack.layer_count(),
        j: rows.into_iter().flatten().collect(),
    })
}

fn check_gb2_config(config: &GbConfig) -> Result<()> {
    config.validate()?;
    if config.use_gaussian_weights {
        return Err(GbError::InvalidConfig(
            "the integral-image detector does not support Gaussian weighting; use multiscale".into(),
        ));
    }
    Ok(())
}

/// Integral-image detector. Always fits the planar model (the disk projection
/// is treated as inactive whatever `config.epsilon` says); Gaussian weighting
/// is rejected.
pub fn gb2_detect(stack: &LayerStack, config: &GbConfig) -> Result<RawBoundaryMap> {
    check_gb2_config(config)?;
    let ii = build_integrals(stack, config.window_radius)?;
    Ok(detect_from_tables(&ii, stack.dims(), config.window_radius))
}

/// Default scale set `{r/2, r, 2r}` (smallest clamped to 1, duplicates dropped).
pub fn default_radii(radius: usize) -> Vec<usize> {
    let mut radii = vec![(radius / 2).max(1), radius.max(1), 2 * radius.max(1)];
    radii.dedup();
    radii
}

/// Runs the integral-image detector at several radii.
///
/// Strength is the weighted mean of the per-scale strengths (weights are
/// normalised to sum to one); orientation and the degenerate flag come from
/// the scale with the largest strength at each pixel, the first one on ties.
pub fn multiscale_detect(stack: &LayerStack, radii: &[usize], weights: &[f64]) -> Result<RawBoundaryMap> {
    if radii.is_empty() {
        return Err(GbError::InvalidConfig("multiscale detection needs at least one radius".into()));
    }
    if weights.len() != radii.len() {
        return Err(GbError::InvalidConfig(format!(
            "{} weights for {} radii",
            weights.len(),
            radii.len()
        )));
    }
    if radii.contains(&0) {
        return Err(GbError::InvalidConfig("radii must be at least 1".into()));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) || total <= 0.0 {
        return Err(GbError::InvalidConfig(
            "combination weights must be nonnegative with a positive sum".into(),
        ));
    }
    let pad = *radii.iter().max().unwrap();
    let ii = build_integrals(stack, pad)?;
    let maps: Vec<RawBoundaryMap> = radii
        .iter()
        .map(|&r| detect_from_tables(&ii, stack.dims(), r))
        .collect();

    let mut out = maps[0].clone();
    let n = stack.width() * stack.height();
    let mut best = maps[0].strength.as_slice().to_vec();
    out.strength.as_mut_slice().iter_mut().for_each(|v| *v *= weights[0] / total);
    for (map, &w) in maps.iter().zip(weights).skip(1) {
        let s = map.strength.as_slice();
        for i in 0..n {
            out.strength.as_mut_slice()[i] += w / total * s[i];
            if s[i] > best[i] {
                best[i] = s[i];
                out.orientation.as_mut_slice()[i] = map.orientation.as_slice()[i];
                out.degenerate.as_mut_slice()[i] = map.degenerate.as_slice()[i];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gb1_detect, gb1_local_j};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stack(w: usize, h: usize, k: usize, seed: u64) -> LayerStack {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..k)
            .map(|i| (format!("l{i}"), (0..w * h).map(|_| rng.random::<f64>()).collect()))
            .collect();
        LayerStack::from_layers(w, h, layers).unwrap()
    }

    #[test]
    fn single_pixel_table() {
        let s = LayerStack::from_layers(1, 1, vec![("a".into(), vec![5.0])]).unwrap();
        let ii = build_integrals(&s, 0).unwrap();
        let r = ii.rect_sums(Rect::new(0, 0, 1, 1), 0).unwrap();
        assert_eq!((r.sum, r.sum_x, r.sum_y), (5.0, 0.0, 0.0));
    }

    #[test]
    fn all_ones_total() {
        let s = LayerStack::from_layers(4, 4, vec![("a".into(), vec![1.0; 16])]).unwrap();
        let ii = build_integrals(&s, 0).unwrap();
        assert_eq!(ii.rect_sums(Rect::new(0, 0, 4, 4), 0).unwrap().sum, 16.0);
    }

    #[test]
    fn rect_sums_match_direct_loop() {
        let s = random_stack(8, 8, 1, 9);
        let pad = 2;
        let ii = build_integrals(&s, pad).unwrap();
        let padded = s.padded_scaled_layer(0, pad);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let x0 = rng.random_range(0..12i64) as isize;
            let y0 = rng.random_range(0..12i64) as isize;
            let w = rng.random_range(0..=(12 - x0) as usize);
            let h = rng.random_range(0..=(12 - y0) as usize);
            let got = ii.rect_sums(Rect::new(x0, y0, w, h), 0).unwrap();
            let mut want = RectSums::default();
            for y in y0..y0 + h as isize {
                for x in x0..x0 + w as isize {
                    let v = *padded.get(x as usize, y as usize);
                    want.sum += v;
                    want.sum_x += x as f64 * v;
                    want.sum_y += y as f64 * v;
                }
            }
            assert!((got.sum - want.sum).abs() < 1e-12);
            assert!((got.sum_x - want.sum_x).abs() < 1e-11);
            assert!((got.sum_y - want.sum_y).abs() < 1e-11);
        }
    }

    #[test]
    fn single_pixel_rect_and_empty_rect() {
        let s = random_stack(6, 5, 1, 1);
        let ii = build_integrals(&s, 0).unwrap();
        let v = s.value(3, 2, 0);
        let r = ii.rect_sums(Rect::inclusive(3, 2, 3, 2), 0).unwrap();
        assert_eq!(r.sum, v);
        assert!((r.sum_x - 3.0 * v).abs() < 1e-14);
        assert!((r.sum_y - 2.0 * v).abs() < 1e-14);
        assert_eq!(ii.rect_sums(Rect::inclusive(3, 2, 2, 4), 0).unwrap(), RectSums::default());
    }

    #[test]
    fn out_of_bounds_rect_is_error() {
        let s = random_stack(4, 4, 1, 2);
        let ii = build_integrals(&s, 1).unwrap();
        assert!(ii.rect_sums(Rect::new(-1, 0, 2, 2), 0).is_err());
        assert!(ii.rect_sums(Rect::new(4, 4, 3, 1), 0).is_err());
        assert!(ii.rect_sums(Rect::new(0, 0, 6, 6), 0).is_ok());
    }

    #[test]
    fn planar_alpha_matches_sum() {
        for r in 1..8usize {
            let ri = r as i64;
            let direct: i64 = (-ri..=ri).map(|x| x * x).sum::<i64>() * (2 * ri + 1);
            assert_eq!(planar_alpha(r), direct as f64);
        }
    }

    #[test]
    fn local_j_constant_and_ramp() {
        let c = LayerStack::from_layers(5, 5, vec![("c".into(), vec![0.4; 25])]).unwrap();
        let ii = build_integrals(&c, 1).unwrap();
        let j = gb2_local_j(&ii, 2, 2, 1, planar_alpha(1));
        assert!(j[0][0].abs() < 1e-14 && j[0][1].abs() < 1e-14);

        let ramp = LayerStack::from_layers(5, 5, vec![("x".into(), (0..25).map(|i| (i % 5) as f64).collect())])
            .unwrap();
        let ii = build_integrals(&ramp, 1).unwrap();
        let j = gb2_local_j(&ii, 2, 2, 1, planar_alpha(1));
        assert!((j[0][0] - 1.0).abs() < 1e-14 && j[0][1].abs() < 1e-14);
    }

    #[test]
    fn local_j_matches_gb1() {
        let s = random_stack(20, 17, 3, 4);
        for r in 1..=4 {
            let cfg = GbConfig::new(r).with_epsilon(GbConfig::planar_epsilon(r) + 1e-9);
            let ii = build_integrals(&s, r).unwrap();
            for &(x, y) in &[(0, 0), (5, 9), (19, 16), (10, 3)] {
                let fast = gb2_local_j(&ii, x, y, r, planar_alpha(r));
                let exact = gb1_local_j(&s, &cfg, x, y).unwrap();
                for (a, b) in fast.iter().zip(&exact) {
                    assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn gb2_equals_gb1_when_planar() {
        let s = random_stack(40, 30, 2, 6);
        let r = 3;
        let cfg = GbConfig::new(r).with_epsilon(GbConfig::planar_epsilon(r));
        let a = gb1_detect(&s, &cfg).unwrap();
        let b = gb2_detect(&s, &cfg).unwrap();
        for (x, y) in a.strength.as_slice().iter().zip(b.strength.as_slice()) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn gb2_rejects_gaussian() {
        let s = random_stack(5, 5, 1, 0);
        assert!(gb2_detect(&s, &GbConfig::new(1).with_gaussian(true)).is_err());
    }

    #[test]
    fn gb2_constant_is_zero() {
        let c = LayerStack::from_layers(9, 9, vec![("c".into(), vec![0.25; 81])]).unwrap();
        let out = gb2_detect(&c, &GbConfig::new(2)).unwrap();
        assert!(out.strength.as_slice().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn multiscale_trivial_cases() {
        let s = random_stack(16, 16, 2, 8);
        let single = gb2_detect(&s, &GbConfig::new(3)).unwrap();
        assert_eq!(multiscale_detect(&s, &[3], &[1.0]).unwrap(), single);
        let twice = multiscale_detect(&s, &[3, 3], &[0.5, 0.5]).unwrap();
        for (a, b) in twice.strength.as_slice().iter().zip(single.strength.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(twice.orientation, single.orientation);
    }

    #[test]
    fn multiscale_errors() {
        let s = random_stack(4, 4, 1, 8);
        assert!(multiscale_detect(&s, &[], &[]).is_err());
        assert!(multiscale_detect(&s, &[1, 2], &[1.0]).is_err());
        assert!(multiscale_detect(&s, &[1], &[-1.0]).is_err());
    }

    #[test]
    fn multiscale_keeps_step_ridge() {
        let (w, h) = (32, 16);
        let data = (0..w * h).map(|i| if i % w >= 16 { 1.0 } else { 0.0 }).collect();
        let s = LayerStack::from_layers(w, h, vec![("s".into(), data)]).unwrap();
        let argmax = |m: &RawBoundaryMap, y: usize| {
            let row: Vec<f64> = (0..w).map(|x| *m.strength.get(x, y)).collect();
            let max = row.iter().copied().fold(0.0, f64::max);
            (0..w).filter(|&x| row[x] >= max - 1e-12).collect::<Vec<_>>()
        };
        let combined = multiscale_detect(&s, &[2, 4], &[1.0, 1.0]).unwrap();
        let s2 = gb2_detect(&s, &GbConfig::new(2)).unwrap();
        let s4 = gb2_detect(&s, &GbConfig::new(4)).unwrap();
        for y in 0..h {
            assert_eq!(argmax(&combined, y), vec![15, 16]);
            assert_eq!(argmax(&s2, y), argmax(&combined, y));
            assert_eq!(argmax(&s4, y), argmax(&combined, y));
        }
    }

    #[test]
    fn default_radii_set() {
        assert_eq!(default_radii(4), vec![2, 4, 8]);
        assert_eq!(default_radii(1), vec![1, 2]);
    }
}
