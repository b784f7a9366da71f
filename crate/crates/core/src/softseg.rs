//! Figure/ground soft segmentation from PCA over patch colour-indicator vectors.
//!
//! Every patch is summarised by the set of quantized colours it contains. PCA
//! over these indicator vectors yields a low-dimensional colour subspace; each
//! sampled patch then classifies every pixel by its reconstructed figure versus
//! background distribution, and a second PCA compresses the per-pixel stack of
//! classifications into a few soft layers.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{GbError, Result};
use crate::eval::RgbImage;
use crate::grid::ScalarMap;
use crate::layers::LayerStack;
use crate::par;

/// Number of layers in a soft segmentation.
pub const SOFTSEG_LAYERS: usize = 8;
pub const DEFAULT_SAMPLES: usize = 150;
pub const DEFAULT_PATCH_RADIUS: usize = 2;
pub const DEFAULT_SUBSPACE_DIM: usize = 4;

/// Uniform per-channel quantizer over a three-channel colour space.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorQuantizer {
    pub bins: [usize; 3],
    pub ranges: [(f64, f64); 3],
}

impl Default for ColorQuantizer {
    fn default() -> Self {
        Self::uniform(8)
    }
}

impl ColorQuantizer {
    /// `n` bins per channel over `[0, 1]`.
    pub fn uniform(n: usize) -> Self {
        Self {
            bins: [n; 3],
            ranges: [(0.0, 1.0); 3],
        }
    }

    pub fn bin_count(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        for (&n, &(lo, hi)) in self.bins.iter().zip(&self.ranges) {
            if n == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(GbError::InvalidConfig("quantizer needs bins > 0 and lo < hi".into()));
            }
        }
        Ok(())
    }

    /// Values outside a channel range fall into the nearest end bin.
    pub fn bin(&self, color: [f64; 3]) -> usize {
        let mut idx = 0;
        for c in 0..3 {
            let (lo, hi) = self.ranges[c];
            let n = self.bins[c];
            let t = ((color[c] - lo) / (hi - lo) * n as f64).floor();
            let b = if t.is_nan() { 0 } else { (t.max(0.0) as usize).min(n - 1) };
            idx = idx * n + b;
        }
        idx
    }

    fn bin_map(&self, image: &LayerStack) -> Vec<usize> {
        let (r, g, b) = (image.layer(0), image.layer(1), image.layer(2));
        (0..r.len()).map(|i| self.bin([r[i], g[i], b[i]])).collect()
    }
}

/// Mean indicator vector and orthonormal principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorSubspace {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    /// Variances along `components`, descending.
    pub variances: Vec<f64>,
    /// Set when the samples have no variance; components are then canonical axes.
    pub degenerate: bool,
}

impl ColorSubspace {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Coefficients `a_i = (c - h0)·v_i`; all zero for a degenerate subspace.
    pub fn coefficients(&self, c: &[f64]) -> Vec<f64> {
        if self.degenerate {
            return vec![0.0; self.dim()];
        }
        self.components
            .iter()
            .map(|v| v.iter().zip(c).zip(&self.mean).map(|((vi, ci), hi)| vi * (ci - hi)).sum())
            .collect()
    }

    /// Per-bin score `Σ a_i v_i[bin]`, half the figure/background difference.
    pub fn bin_scores(&self, c: &[f64]) -> Vec<f64> {
        let a = self.coefficients(c);
        let mut t = vec![0.0; self.mean.len()];
        for (ai, v) in a.iter().zip(&self.components) {
            for (tb, vb) in t.iter_mut().zip(v) {
                *tb += ai * vb;
            }
        }
        t
    }
}

fn require_color(image: &LayerStack) -> Result<()> {
    if image.layer_count() != 3 {
        return Err(GbError::InvalidStack(format!(
            "soft segmentation needs 3 colour layers, got {}",
            image.layer_count()
        )));
    }
    Ok(())
}

fn patch_bins(bins: &[usize], width: usize, height: usize, cx: usize, cy: usize, radius: usize, out: &mut Vec<usize>) {
    out.clear();
    for y in cy.saturating_sub(radius)..(cy + radius + 1).min(height) {
        for x in cx.saturating_sub(radius)..(cx + radius + 1).min(width) {
            out.push(bins[y * width + x]);
        }
    }
    out.sort_unstable();
    out.dedup();
}

/// Binary indicator of the quantized colours present in the (clipped) patch.
pub fn patch_indicator(image: &LayerStack, center: (usize, usize), radius: usize, q: &ColorQuantizer) -> Result<Vec<f64>> {
    require_color(image)?;
    let (w, h) = image.dims();
    if center.0 >= w || center.1 >= h {
        return Err(GbError::OutOfBounds((center.0 as isize, center.1 as isize, w as isize, h as isize)));
    }
    let bins = q.bin_map(image);
    let mut present = Vec::new();
    patch_bins(&bins, w, h, center.0, center.1, radius, &mut present);
    let mut c = vec![0.0; q.bin_count()];
    for b in present {
        c[b] = 1.0;
    }
    Ok(c)
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Top-`d` eigenpairs of a symmetric matrix, descending, sign-normalized.
fn top_eigen(cov: DMatrix<f64>, d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(d)
        .map(|i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            (eig.eigenvalues[i].max(0.0), v)
        })
        .unzip()
}

fn is_negligible(lambda: f64, scale: f64) -> bool {
    lambda <= 1e-12 * scale.max(1.0)
}

/// Second moments of indicator vectors restricted to `active` bins.
struct Moments {
    dim: usize,
    active: Vec<usize>,
    count: f64,
    sum: Vec<f64>,
    outer: DMatrix<f64>,
}

impl Moments {
    fn finish(self, d: usize) -> Result<ColorSubspace> {
        if d == 0 || d > self.dim {
            return Err(GbError::InvalidConfig(format!("subspace dimension {d} outside 1..={}", self.dim)));
        }
        let n = self.count;
        let m = self.active.len();
        let mut mean = vec![0.0; self.dim];
        for (j, &b) in self.active.iter().enumerate() {
            mean[b] = self.sum[j] / n;
        }
        let mut cov = self.outer / n;
        for i in 0..m {
            for j in 0..m {
                cov[(i, j)] -= mean[self.active[i]] * mean[self.active[j]];
            }
        }
        let trace = cov.trace();
        let (mut variances, local) = if m > 0 { top_eigen(cov, d) } else { (vec![], vec![]) };
        let degenerate = variances.first().is_none_or(|&l| is_negligible(l, trace));
        let components: Vec<Vec<f64>> = if degenerate {
            variances = vec![0.0; d];
            (0..d)
                .map(|i| {
                    let mut e = vec![0.0; self.dim];
                    e[i] = 1.0;
                    e
                })
                .collect()
        } else {
            // Directions beyond the active bins carry no variance.
            let mut comps = Vec::with_capacity(d);
            for lv in &local {
                let mut v = vec![0.0; self.dim];
                for (j, &b) in self.active.iter().enumerate() {
                    v[b] = lv[j];
                }
                comps.push(v);
            }
            let mut next = 0;
            while comps.len() < d {
                if !self.active.contains(&next) {
                    let mut e = vec![0.0; self.dim];
                    e[next] = 1.0;
                    comps.push(e);
                    variances.push(0.0);
                }
                next += 1;
            }
            comps
        };
        Ok(ColorSubspace {
            mean,
            components,
            variances,
            degenerate,
        })
    }
}

/// PCA of indicator (or any real) vectors: sample mean and top-`d` directions.
pub fn fit_color_subspace(samples: &[Vec<f64>], d: usize) -> Result<ColorSubspace> {
    if samples.len() < d + 1 {
        return Err(GbError::InsufficientData(format!(
            "{} samples for a {d}-dimensional subspace",
            samples.len()
        )));
    }
    let dim = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(GbError::InvalidConfig(format!(
            "sample lengths differ: {dim} vs {}",
            bad.len()
        )));
    }
    let active: Vec<usize> = (0..dim).filter(|&b| samples.iter().any(|s| s[b] != 0.0)).collect();
    let m = active.len();
    let mut sum = vec![0.0; m];
    let mut outer = DMatrix::zeros(m, m);
    for s in samples {
        for i in 0..m {
            let si = s[active[i]];
            sum[i] += si;
            for j in 0..m {
                outer[(i, j)] += si * s[active[j]];
            }
        }
    }
    Moments {
        dim,
        active,
        count: samples.len() as f64,
        sum,
        outer,
    }
    .finish(d)
}

/// Score map `s(p) = Σ a_i v_i[bin(p)]`; positive where the pixel looks like the patch.
pub fn figure_ground_score(image: &LayerStack, c: &[f64], sub: &ColorSubspace, q: &ColorQuantizer) -> Result<ScalarMap> {
    require_color(image)?;
    if c.len() != sub.mean.len() || q.bin_count() != sub.mean.len() {
        return Err(GbError::InvalidConfig(format!(
            "indicator length {}, subspace {}, quantizer {} disagree",
            c.len(),
            sub.mean.len(),
            q.bin_count()
        )));
    }
    let t = sub.bin_scores(c);
    let (w, h) = image.dims();
    Ok(ScalarMap::from_vec(w, h, q.bin_map(image).into_iter().map(|b| t[b]).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftSegConfig {
    pub samples: usize,
    pub patch_radius: usize,
    pub subspace_dim: usize,
    pub quantizer: ColorQuantizer,
}

impl Default for SoftSegConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            patch_radius: DEFAULT_PATCH_RADIUS,
            subspace_dim: DEFAULT_SUBSPACE_DIM,
            quantizer: ColorQuantizer::default(),
        }
    }
}

impl SoftSegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < SOFTSEG_LAYERS {
            return Err(GbError::InvalidConfig(format!("need at least {SOFTSEG_LAYERS} samples")));
        }
        if self.subspace_dim == 0 {
            return Err(GbError::InvalidConfig("subspace dimension must be positive".into()));
        }
        self.quantizer.validate()
    }
}

/// Eight soft layers in `[0, 1]` with the settings that produced them.
#[derive(Debug, Clone)]
pub struct SoftSegStack {
    pub layers: LayerStack,
    pub config: SoftSegConfig,
    /// Constant image or no variance across classifications; all layers constant.
    pub degenerate: bool,
}

impl SoftSegStack {
    pub fn into_layers(self) -> LayerStack {
        self.layers
    }

    /// First three layers as an RGB picture.
    pub fn visualize(&self) -> RgbImage {
        let (w, h) = self.layers.dims();
        let mut pixels = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            for k in 0..3 {
                pixels.push((self.layers.layer(k)[i].clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        RgbImage {
            width: w,
            height: h,
            pixels,
        }
    }
}

/// `n` centres on a regular grid matched to the image aspect ratio.
pub fn sample_grid(width: usize, height: usize, n: usize) -> Vec<(usize, usize)> {
    if n == 0 || width == 0 || height == 0 {
        return Vec::new();
    }
    let cols = ((n as f64 * width as f64 / height as f64).sqrt().round() as usize).clamp(1, n);
    let rows = n.div_ceil(cols);
    let total = cols * rows;
    (0..n)
        .map(|i| {
            let j = i * total / n;
            let (col, row) = (j % cols, j / cols);
            let x = ((col as f64 + 0.5) * width as f64 / cols as f64) as usize;
            let y = ((row as f64 + 0.5) * height as f64 / rows as f64) as usize;
            (x.min(width - 1), y.min(height - 1))
        })
        .collect()
}

/// Soft segmentation with grid-sampled classification centres.
pub fn soft_segment(image: &LayerStack, cfg: &SoftSegConfig) -> Result<SoftSegStack> {
    let (w, h) = image.dims();
    soft_segment_at(image, &sample_grid(w, h, cfg.samples), cfg)
}

/// Soft segmentation classifying against the patches at `centers`.
pub fn soft_segment_at(image: &LayerStack, centers: &[(usize, usize)], cfg: &SoftSegConfig) -> Result<SoftSegStack> {
    cfg.validate()?;
    require_color(image)?;
    image.validate()?;
    let (w, h) = image.dims();
    let side = 2 * cfg.patch_radius + 1;
    if w < side || h < side {
        return Err(GbError::InvalidStack(format!("image {w}x{h} smaller than a {side}x{side} patch")));
    }
    if centers.len() < SOFTSEG_LAYERS {
        return Err(GbError::InvalidConfig(format!("need at least {SOFTSEG_LAYERS} sample centres")));
    }
    if let Some(&(x, y)) = centers.iter().find(|&&(x, y)| x >= w || y >= h) {
        return Err(GbError::OutOfBounds((x as isize, y as isize, w as isize, h as isize)));
    }

    let q = &cfg.quantizer;
    let nbins = q.bin_count();
    let bins = q.bin_map(image);
    let mut slot = vec![usize::MAX; nbins];
    let mut active = Vec::new();
    let mut population = Vec::new();
    for &b in &bins {
        if slot[b] == usize::MAX {
            slot[b] = active.len();
            active.push(b);
            population.push(0.0);
        }
        population[slot[b]] += 1.0;
    }
    let m = active.len();

    // Colour subspace from every pixel-centred patch.
    let patch_sets: Vec<Vec<usize>> = par::map_rows(h, |y| {
        let mut buf = Vec::new();
        (0..w)
            .map(|x| {
                patch_bins(&bins, w, h, x, y, cfg.patch_radius, &mut buf);
                buf.iter().map(|&b| slot[b]).collect()
            })
            .collect()
    });
    let mut sum = vec![0.0; m];
    let mut outer = DMatrix::<f64>::zeros(m, m);
    for set in &patch_sets {
        for &i in set {
            sum[i] += 1.0;
            for &j in set {
                outer[(i, j)] += 1.0;
            }
        }
    }
    let d = cfg.subspace_dim.min(nbins);
    let sub = Moments {
        dim: nbins,
        active: active.clone(),
        count: patch_sets.len() as f64,
        sum,
        outer,
    }
    .finish(d)?;

    let constant = |degenerate| {
        let mut layers = LayerStack::new(w, h);
        for k in 0..SOFTSEG_LAYERS {
            layers.push_layer(format!("softseg_{k}"), vec![0.0; w * h])?;
        }
        Ok(SoftSegStack {
            layers,
            config: cfg.clone(),
            degenerate,
        })
    };
    if sub.degenerate {
        return constant(true);
    }

    // Classification scores depend on the pixel only through its bin.
    let ns = centers.len();
    let tables: Vec<Vec<f64>> = par::map_items(centers, |&(x, y)| {
        let mut c = vec![0.0; nbins];
        for &s in &patch_sets[y * w + x] {
            c[active[s]] = 1.0;
        }
        let t = sub.bin_scores(&c);
        active.iter().map(|&b| t[b]).collect()
    });

    // Pixel-weighted PCA of the per-bin score vectors.
    let total = (w * h) as f64;
    let mut mu = vec![0.0; ns];
    for (j, t) in tables.iter().enumerate() {
        mu[j] = t.iter().zip(&population).map(|(v, n)| v * n).sum::<f64>() / total;
    }
    let centered = DMatrix::from_fn(m, ns, |b, j| tables[j][b] - mu[j]);
    let weighted = DMatrix::from_fn(m, ns, |b, j| centered[(b, j)] * population[b] / total);
    let cov = centered.transpose() * &weighted;
    let trace = cov.trace();
    let (lambdas, dirs) = top_eigen(cov, SOFTSEG_LAYERS.min(ns));
    if lambdas.first().is_none_or(|&l| is_negligible(l, trace)) {
        return constant(true);
    }

    let mut layers = LayerStack::new(w, h);
    for k in 0..SOFTSEG_LAYERS {
        let mut per_bin = vec![0.0; m];
        if k < dirs.len() && !is_negligible(lambdas[k], lambdas[0]) {
            let u = nalgebra::DVector::from_column_slice(&dirs[k]);
            let proj = &centered * u;
            let (lo, hi) = proj.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if hi - lo > 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
                for (p, v) in per_bin.iter_mut().zip(proj.iter()) {
                    *p = (v - lo) / (hi - lo);
                }
            }
        }
        layers.push_layer(format!("softseg_{k}"), bins.iter().map(|&b| per_bin[slot[b]]).collect())?;
    }
    Ok(SoftSegStack {
        layers,
        config: cfg.clone(),
        degenerate: false,
    })
}
