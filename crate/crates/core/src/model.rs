//! The local linear boundary model and the exact per-window detector.
//!
//! Inside a window centred at `p0` every layer is modelled as
//! `L_k(p) ≈ C_k + b_k (p̂ − p0)·n`, where `p̂` is `p` projected onto the disk
//! of radius `ε` around `p0`. Stacking the window into `X ≈ C + P J`, the
//! constant columns vanish under `Pᵀ` (every column of `P` sums to zero) and
//! `PᵀP = αI`, so `J = PᵀX / α` in closed form. The boundary normal is the
//! principal eigenvector of `M = J Jᵀ` and the strength is `√λ_max`.

use std::f64::consts::PI;

use crate::error::{GbError, Result};
use crate::grid::{Mask, ScalarMap};
use crate::layers::LayerStack;
use crate::par;

/// Detector parameters shared by every algorithm variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbConfig {
    /// The window is the `(2r+1) × (2r+1)` square around each pixel.
    pub window_radius: usize,
    /// Radius of the projection disk, in pixels.
    pub epsilon: f64,
    /// Weight rows by a Gaussian centred on the window with `σ = r/2`.
    pub use_gaussian_weights: bool,
}

impl GbConfig {
    /// `ε = r/2`, no weighting.
    pub fn new(window_radius: usize) -> Self {
        Self {
            window_radius,
            epsilon: window_radius as f64 / 2.0,
            use_gaussian_weights: false,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_gaussian(mut self, on: bool) -> Self {
        self.use_gaussian_weights = on;
        self
    }

    /// Smallest ε for which the disk projection never moves a window pixel.
    pub fn planar_epsilon(window_radius: usize) -> f64 {
        window_radius as f64 * std::f64::consts::SQRT_2
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_radius < 1 {
            return Err(GbError::InvalidConfig("window radius must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(GbError::InvalidConfig("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Closest point to `offset` on the closed disk of radius `epsilon` about the origin.
pub fn project_to_disk(offset: [f64; 2], epsilon: f64) -> [f64; 2] {
    let norm = offset[0].hypot(offset[1]);
    if norm <= epsilon {
        offset
    } else {
        let s = epsilon / norm;
        [offset[0] * s, offset[1] * s]
    }
}

/// Precomputed window geometry: the weighted, projected offset matrix `P`.
#[derive(Debug, Clone)]
pub struct PositionBasis {
    radius: usize,
    epsilon: f64,
    /// Integer window offsets `(dx, dy)`, row-major over the window.
    grid: Vec<(isize, isize)>,
    /// Rows of `P`: `w_i · p̂_i`.
    offsets: Vec<[f64; 2]>,
    weights: Vec<f64>,
    alpha: f64,
}

impl PositionBasis {
    pub fn new(radius: usize, epsilon: f64, use_gaussian: bool) -> Result<Self> {
        GbConfig {
            window_radius: radius,
            epsilon,
            use_gaussian_weights: use_gaussian,
        }
        .validate()?;
        let r = radius as isize;
        let sigma = radius as f64 / 2.0;
        let n = (2 * radius + 1).pow(2);
        let mut grid = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for dy in -r..=r {
            for dx in -r..=r {
                let w = if use_gaussian {
                    (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp()
                } else {
                    1.0
                };
                let p = project_to_disk([dx as f64, dy as f64], epsilon);
                grid.push((dx, dy));
                offsets.push([w * p[0], w * p[1]]);
                weights.push(w);
            }
        }
        let alpha: f64 = offsets.iter().map(|p| p[0] * p[0]).sum();
        Ok(Self {
            radius,
            epsilon,
            grid,
            offsets,
            weights,
            alpha,
        })
    }

    pub fn from_config(config: &GbConfig) -> Result<Self> {
        Self::new(
            config.window_radius,
            config.epsilon,
            config.use_gaussian_weights,
        )
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of window pixels `N_W`.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[[f64; 2]] {
        &self.offsets
    }

    pub fn grid(&self) -> &[(isize, isize)] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `PᵀP` as `[[xx, xy], [xy, yy]]`.
    pub fn gram(&self) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for p in &self.offsets {
            g[0][0] += p[0] * p[0];
            g[0][1] += p[0] * p[1];
            g[1][1] += p[1] * p[1];
        }
        g[1][0] = g[0][1];
        g
    }

    /// Multiplies window samples (`N_W × K`, row-major) by the row weights in place.
    pub fn weight_rows(&self, samples: &mut [f64], layer_count: usize) {
        for (row, &w) in samples.chunks_mut(layer_count).zip(&self.weights) {
            row.iter_mut().for_each(|v| *v *= w);
        }
    }

    /// Per-row factors `w_i · P_i / α` such that `J_k = Σ_i factor_i · L_k(p_i)`
    /// for unweighted window samples.
    fn j_factors(&self) -> Vec<[f64; 2]> {
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| [w * p[0] / self.alpha, w * p[1] / self.alpha])
            .collect()
    }
}

/// Largest eigenpair of a symmetric 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// Unit eigenvector for `lambda_max`; `(1, 0)` when degenerate.
    pub vector: [f64; 2],
    /// The two eigenvalues coincide (isotropic matrix).
    pub degenerate: bool,
}

pub fn eigen2x2_sym(m: [[f64; 2]; 2]) -> Eigen2 {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let half_trace = 0.5 * (a + c);
    // (t/2)² − det written without the cancellation.
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lambda_max = half_trace + disc;
    let lambda_min = half_trace - disc;
    let degenerate = lambda_max - lambda_min <= 1e-12 * lambda_max.max(1.0);
    if degenerate {
        return Eigen2 {
            lambda_max,
            lambda_min,
            vector: [1.0, 0.0],
            degenerate,
        };
    }
    // Two candidate rows of (M − λI)'s null space; take the better conditioned one.
    let u = [b, lambda_max - a];
    let v = [lambda_max - c, b];
    let nu = u[0].hypot(u[1]);
    let nv = v[0].hypot(v[1]);
    let vector = if nv >= nu {
        [v[0] / nv, v[1] / nv]
    } else {
        [u[0] / nu, u[1] / nu]
    };
    Eigen2 {
        lambda_max,
        lambda_min,
        vector,
        degenerate,
    }
}

/// Result of fitting the boundary model in one window.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFit {
    /// Column `k` of the 2×K matrix `J`.
    pub j: Vec<[f64; 2]>,
    /// `J Jᵀ`.
    pub m: [[f64; 2]; 2],
    pub lambda: f64,
    pub lambda_min: f64,
    pub normal: [f64; 2],
    pub degenerate: bool,
}

impl LocalFit {
    fn from_j(j: Vec<[f64; 2]>) -> Self {
        let m = outer_sum(&j);
        let eig = eigen2x2_sym(m);
        Self {
            j,
            m,
            lambda: eig.lambda_max.max(0.0),
            lambda_min: eig.lambda_min.max(0.0),
            normal: eig.vector,
            degenerate: eig.degenerate,
        }
    }

    pub fn strength(&self) -> f64 {
        self.lambda.sqrt()
    }

    pub fn orientation(&self) -> f64 {
        fold_angle(self.normal[1].atan2(self.normal[0]))
    }
}

#[inline]
fn outer_sum(j: &[[f64; 2]]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for c in j {
        m[0][0] += c[0] * c[0];
        m[0][1] += c[0] * c[1];
        m[1][1] += c[1] * c[1];
    }
    m[1][0] = m[0][1];
    m
}

/// Folds an angle to `[0, π)`; antipodal normals describe the same boundary.
pub fn fold_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Closed-form fit `J = PᵀX / α` for one window.
///
/// `samples` is `N_W × K` row-major, rows in the basis order, already
/// multiplied by the basis row weights.
pub fn local_fit(samples: &[f64], layer_count: usize, basis: &PositionBasis) -> LocalFit {
    assert_eq!(samples.len(), basis.len() * layer_count, "window sample count");
    let mut j = vec![[0.0; 2]; layer_count];
    for (row, p) in samples.chunks(layer_count).zip(basis.offsets()) {
        for (jk, &x) in j.iter_mut().zip(row) {
            jk[0] += p[0] * x;
            jk[1] += p[1] * x;
        }
    }
    let inv = 1.0 / basis.alpha();
    for jk in &mut j {
        jk[0] *= inv;
        jk[1] *= inv;
    }
    LocalFit::from_j(j)
}

/// Per-pixel boundary strength `√λ` and normal orientation before calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBoundaryMap {
    pub strength: ScalarMap,
    /// Normal angle folded to `[0, π)`.
    pub orientation: ScalarMap,
    pub degenerate: Mask,
}

impl RawBoundaryMap {
    pub fn dims(&self) -> (usize, usize) {
        self.strength.dims()
    }

    pub(crate) fn from_pixels(width: usize, height: usize, px: Vec<(f64, f64, bool)>) -> Self {
        let mut strength = Vec::with_capacity(px.len());
        let mut orientation = Vec::with_capacity(px.len());
        let mut degenerate = Vec::with_capacity(px.len());
        for (s, t, d) in px {
            strength.push(s);
            orientation.push(t);
            degenerate.push(d);
        }
        Self {
            strength: ScalarMap::from_vec(width, height, strength),
            orientation: ScalarMap::from_vec(width, height, orientation),
            degenerate: Mask::from_vec(width, height, degenerate),
        }
    }
}

/// Converts the summed `J` columns at one pixel into `(strength, θ, degenerate)`.
#[inline]
/// Strength, folded normal angle and degeneracy from `M`.
///
/// Same result as [`eigen2x2_sym`], but the principal direction comes straight
/// from `θ = ½·atan2(2b, a − c)`.
pub(crate) fn pixel_output(m: [[f64; 2]; 2]) -> (f64, f64, bool) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lambda_max = 0.5 * (a + c) + disc;
    let degenerate = 2.0 * disc <= 1e-12 * lambda_max.max(1.0);
    let theta = if degenerate {
        0.0
    } else {
        // ½·atan2 lies in (−π/2, π/2]
        let t = 0.5 * (2.0 * b).atan2(a - c);
        let t = if t < 0.0 { t + PI } else { t };
        if t >= PI {
            0.0
        } else {
            t
        }
    };
    (lambda_max.max(0.0).sqrt(), theta, degenerate)
}

/// Exact detector: fits the model in the full window around every pixel.
///
/// Borders are handled by replicating the outermost pixels `r` times.
/// Layer scales stored in the stack are applied before fitting.
pub fn gb1_detect(stack: &LayerStack, config: &GbConfig) -> Result<RawBoundaryMap> {
    let (w, h) = stack.dims();
    let px = gb1_rows(stack, config, |j| pixel_output(outer_sum(j)))?;
    Ok(RawBoundaryMap::from_pixels(w, h, px))
}

/// Per-pixel, per-layer `J` columns of the exact detector.
pub fn gb1_jacobians(stack: &LayerStack, config: &GbConfig) -> Result<JacobianField> {
    let (w, h) = stack.dims();
    let rows = gb1_rows(stack, config, |j| j.to_vec())?;
    Ok(JacobianField {
        width: w,
        height: h,
        layer_count: stack.layer_count(),
        j: rows.into_iter().flatten().collect(),
    })
}

fn gb1_rows<T: Send>(stack: &LayerStack, config: &GbConfig, per_pixel: impl Fn(&[[f64; 2]]) -> T + Sync + Send) -> Result<Vec<T>> {
    stack.validate()?;
    let basis = PositionBasis::from_config(config)?;
    let r = config.window_radius;
    let k_count = stack.layer_count();
    let padded: Vec<ScalarMap> = (0..k_count)
        .map(|k| stack.padded_scaled_layer(k, r))
        .collect();
    let factors = basis.j_factors();
    let pw = stack.width() + 2 * r;
    // Start of the padded row segment each window offset reads, relative to the output row.
    let starts: Vec<usize> = basis
        .grid()
        .iter()
        .map(|&(dx, dy)| (dy + r as isize) as usize * pw + (dx + r as isize) as usize)
        .collect();
    let (w, h) = stack.dims();

    Ok(par::map_rows(h, |y| {
        // Window sums for the whole row, one offset at a time, so the inner
        // loop runs over contiguous memory.
        let mut jx = vec![0.0f64; k_count * w];
        let mut jy = vec![0.0f64; k_count * w];
        for (k, layer) in padded.iter().enumerate() {
            let data = &layer.as_slice()[y * pw..];
            let (sx, sy) = (&mut jx[k * w..(k + 1) * w], &mut jy[k * w..(k + 1) * w]);
            for (f, &start) in factors.iter().zip(&starts) {
                let src = &data[start..start + w];
                for ((ax, ay), &v) in sx.iter_mut().zip(sy.iter_mut()).zip(src) {
                    *ax += f[0] * v;
                    *ay += f[1] * v;
                }
            }
        }
        let mut j = vec![[0.0f64; 2]; k_count];
        (0..w)
            .map(|x| {
                for (k, jk) in j.iter_mut().enumerate() {
                    *jk = [jx[k * w + x], jy[k * w + x]];
                }
                per_pixel(&j)
            })
            .collect()
    }))
}

/// Unscaled `J` columns for every pixel and layer.
///
/// `J` is linear in each layer, so rescaling layer `k` by `γ_k` rescales its
/// column by `γ_k`; this lets detections under many scale vectors be
/// evaluated without refitting.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianField {
    pub width: usize,
    pub height: usize,
    pub layer_count: usize,
    /// Pixel-major: entry `(y * width + x) * layer_count + k`.
    pub j: Vec<[f64; 2]>,
}

impl JacobianField {
    /// Boundary map for layer scales `gamma`.
    pub fn boundary_map(&self, gamma: &[f64]) -> Result<RawBoundaryMap> {
        if gamma.len() != self.layer_count {
            return Err(GbError::InvalidConfig(format!(
                "{} scales for {} layers",
                gamma.len(),
                self.layer_count
            )));
        }
        let g2: Vec<f64> = gamma.iter().map(|g| g * g).collect();
        let k = self.layer_count;
        let w = self.width;
        let px = par::map_rows(self.height, |y| {
            (0..w)
                .map(|x| {
                    let base = (y * w + x) * k;
                    let mut m = [[0.0; 2]; 2];
                    for (c, s) in self.j[base..base + k].iter().zip(&g2) {
                        m[0][0] += s * c[0] * c[0];
                        m[0][1] += s * c[0] * c[1];
                        m[1][1] += s * c[1] * c[1];
                    }
                    m[1][0] = m[0][1];
                    pixel_output(m)
                })
                .collect()
        });
        Ok(RawBoundaryMap::from_pixels(self.width, self.height, px))
    }
}

/// The `J` matrix Gb1 would compute at `(x, y)`; exposed for cross-checks.
pub fn gb1_local_j(stack: &LayerStack, config: &GbConfig, x: usize, y: usize) -> Result<Vec<[f64; 2]>> {
    stack.validate()?;
    let basis = PositionBasis::from_config(config)?;
    let k_count = stack.layer_count();
    let mut samples = Vec::with_capacity(basis.len() * k_count);
    for &(dx, dy) in basis.grid() {
        let sx = (x as isize + dx).clamp(0, stack.width() as isize - 1) as usize;
        let sy = (y as isize + dy).clamp(0, stack.height() as isize - 1) as usize;
        for k in 0..k_count {
            samples.push(stack.scales()[k] * stack.value(sx, sy, k));
        }
    }
    basis.weight_rows(&mut samples, k_count);
    Ok(local_fit(&samples, k_count, &basis).j)
}
