//! Boundary benchmark: tolerance matching, precision/recall curves and ODS-F.

use std::fmt::Write as _;

use crate::error::{GbError, Result};
use crate::grid::{Mask, ScalarMap};
use crate::postprocess::thin_mask;

/// Default number of evenly spaced thresholds in `(0, 1)`.
pub const DEFAULT_THRESHOLD_COUNT: usize = 33;

/// Matching tolerance as a fraction of the image diagonal.
pub const DEFAULT_DMAX_FRACTION: f64 = 0.0075;

/// `count` thresholds `i/(count+1)`, `i = 1..=count`.
pub fn default_thresholds(count: usize) -> Vec<f64> {
    (1..=count).map(|i| i as f64 / (count + 1) as f64).collect()
}

pub fn default_dmax(width: usize, height: usize) -> f64 {
    DEFAULT_DMAX_FRACTION * (width as f64).hypot(height as f64)
}

/// Counts from a one-to-one matching of predicted to ground-truth pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub d_max: f64,
}

impl MatchResult {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, zero when both inputs are zero.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Greedy one-to-one matching within Euclidean distance `d_max`.
///
/// Candidate pairs are visited by increasing distance; among equal distances
/// by the raster order of the lower, then higher, endpoint index, which makes
/// the result symmetric in `pred` and `gt`.
pub fn match_boundaries(pred: &Mask, gt: &Mask, d_max: f64) -> Result<MatchResult> {
    if pred.dims() != gt.dims() {
        return Err(GbError::DimensionMismatch {
            expected: gt.dims(),
            actual: pred.dims(),
        });
    }
    if !(d_max > 0.0) {
        return Err(GbError::InvalidConfig("d_max must be positive".into()));
    }
    let (w, h) = gt.dims();
    let reach = d_max.floor() as isize;
    let limit = d_max * d_max;

    let mut pairs: Vec<(i64, usize, usize, usize, usize)> = Vec::new();
    for py in 0..h {
        for px in 0..w {
            if !pred.get(px, py) {
                continue;
            }
            let pi = py * w + px;
            for dy in -reach..=reach {
                let gy = py as isize + dy;
                if gy < 0 || gy >= h as isize {
                    continue;
                }
                for dx in -reach..=reach {
                    let gx = px as isize + dx;
                    if gx < 0 || gx >= w as isize {
                        continue;
                    }
                    let d2 = (dx * dx + dy * dy) as i64;
                    if d2 as f64 > limit || !gt.get(gx as usize, gy as usize) {
                        continue;
                    }
                    let gi = gy as usize * w + gx as usize;
                    pairs.push((d2, pi.min(gi), pi.max(gi), pi, gi));
                }
            }
        }
    }
    pairs.sort_unstable();

    let mut pred_used = vec![false; w * h];
    let mut gt_used = vec![false; w * h];
    let mut tp = 0;
    for &(_, _, _, pi, gi) in &pairs {
        if !pred_used[pi] && !gt_used[gi] {
            pred_used[pi] = true;
            gt_used[gi] = true;
            tp += 1;
        }
    }
    Ok(MatchResult {
        true_positives: tp,
        false_positives: pred.count() - tp,
        false_negatives: gt.count() - tp,
        d_max,
    })
}

/// One point of a precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl PrPoint {
    fn from_counts(threshold: f64, tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            threshold,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f: f_measure(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// The point with the best F (earliest threshold on ties).
    pub fn ods(&self) -> Option<PrPoint> {
        self.points
            .iter()
            .copied()
            .fold(None, |best: Option<PrPoint>, p| match best {
                Some(b) if b.f >= p.f => Some(b),
                _ => Some(p),
            })
    }

    pub fn ods_f(&self) -> f64 {
        self.ods().map_or(0.0, |p| p.f)
    }

    /// `threshold,tp,fp,fn,precision,recall,f` rows, then an `ODS` summary row
    /// carrying the best point's counts and scores.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,tp,fp,fn,precision,recall,f\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6}",
                p.threshold, p.true_positives, p.false_positives, p.false_negatives, p.precision, p.recall, p.f
            );
        }
        if let Some(p) = self.ods() {
            let _ = writeln!(
                out,
                "ODS,{},{},{},{:.6},{:.6},{:.6}",
                p.true_positives, p.false_positives, p.false_negatives, p.precision, p.recall, p.f
            );
        }
        out
    }
}

/// Binarizes `prob ≥ t` for each threshold, thins the binary map and matches
/// it against `gt`.
///
/// `prob` should already be non-maxima suppressed (see [`crate::postprocess::nms`]).
pub fn pr_curve(prob: &ScalarMap, gt: &Mask, thresholds: &[f64], d_max: f64) -> Result<PrCurve> {
    let mut acc = PrAccumulator::new(thresholds.to_vec())?;
    acc.add(prob, gt, d_max)?;
    Ok(acc.finish())
}

/// Dataset-level curve: counts are summed across images before computing P/R.
///
/// Each binarized map is reduced to one-pixel-wide curves with
/// [`thin_mask`] before matching, unless disabled with
/// [`PrAccumulator::with_thinning`].
#[derive(Debug, Clone)]
pub struct PrAccumulator {
    thresholds: Vec<f64>,
    counts: Vec<(usize, usize, usize)>,
    thin: bool,
}

impl PrAccumulator {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(GbError::InvalidConfig("thresholds must be sorted ascending".into()));
        }
        let counts = vec![(0, 0, 0); thresholds.len()];
        Ok(Self { thresholds, counts, thin: true })
    }

    pub fn with_thinning(mut self, thin: bool) -> Self {
        self.thin = thin;
        self
    }

    pub fn add(&mut self, prob: &ScalarMap, gt: &Mask, d_max: f64) -> Result<()> {
        for (t, c) in self.thresholds.iter().zip(self.counts.iter_mut()) {
            let mut pred = prob.map(|&v| v >= *t);
            if self.thin {
                pred = thin_mask(&pred);
            }
            let m = match_boundaries(&pred, gt, d_max)?;
            c.0 += m.true_positives;
            c.1 += m.false_positives;
            c.2 += m.false_negatives;
        }
        Ok(())
    }

    /// Adds counts computed elsewhere (e.g. by a parallel worker).
    pub fn merge(&mut self, other: &PrAccumulator) -> Result<()> {
        if other.thresholds != self.thresholds || other.thin != self.thin {
            return Err(GbError::InvalidConfig("accumulators use different settings".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.0 += b.0;
            a.1 += b.1;
            a.2 += b.2;
        }
        Ok(())
    }

    pub fn finish(&self) -> PrCurve {
        PrCurve {
            points: self
                .thresholds
                .iter()
                .zip(&self.counts)
                .map(|(&t, &(tp, fp, fn_))| PrPoint::from_counts(t, tp, fp, fn_))
                .collect(),
        }
    }
}

/// Plain RGB8 raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl RgbImage {
    fn new(width: usize, height: usize, fill: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: fill.iter().copied().cycle().take(width * height * 3).collect(),
        }
    }

    fn put(&mut self, x: isize, y: isize, c: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            return;
        }
        let i = 3 * (y as usize * self.width + x as usize);
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), c: [u8; 3]) {
        let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let x = a.0 + t * (b.0 - a.0);
            let y = a.1 + t * (b.1 - a.1);
            self.put(x.round() as isize, y.round() as isize, c);
        }
    }
}

/// Draws recall (x) against precision (y) with iso-F contours at 0.5, 0.7, 0.9
/// and the ODS point marked.
pub fn render_pr_curve(curve: &PrCurve, size: usize) -> RgbImage {
    let size = size.max(64);
    let margin = (size / 10) as f64;
    let span = size as f64 - 2.0 * margin;
    let to_px = |r: f64, p: f64| (margin + r * span, size as f64 - margin - p * span);
    let mut img = RgbImage::new(size, size, [255, 255, 255]);

    let axis = [0, 0, 0];
    img.line(to_px(0.0, 0.0), to_px(1.0, 0.0), axis);
    img.line(to_px(0.0, 0.0), to_px(0.0, 1.0), axis);
    for i in 1..=10 {
        let t = i as f64 / 10.0;
        let (x, y) = to_px(t, 0.0);
        img.line((x, y), (x, y + 3.0), axis);
        let (x, y) = to_px(0.0, t);
        img.line((x - 3.0, y), (x, y), axis);
    }

    for &f in &[0.5, 0.7, 0.9] {
        // P = fR / (2R − f) on R ∈ (f/2, 1].
        let mut prev = None;
        for i in 0..=200 {
            let r = f / 2.0 + (1.0 - f / 2.0) * i as f64 / 200.0;
            let den = 2.0 * r - f;
            if den <= 0.0 {
                continue;
            }
            let p = f * r / den;
            if p > 1.0 {
                prev = None;
                continue;
            }
            let pt = to_px(r, p);
            if let Some(q) = prev {
                img.line(q, pt, [190, 190, 190]);
            }
            prev = Some(pt);
        }
    }

    let mut pts: Vec<&PrPoint> = curve.points.iter().filter(|p| p.precision + p.recall > 0.0).collect();
    pts.sort_by(|a, b| a.recall.total_cmp(&b.recall));
    for w in pts.windows(2) {
        img.line(to_px(w[0].recall, w[0].precision), to_px(w[1].recall, w[1].precision), [200, 30, 30]);
    }
    if let Some(best) = curve.ods() {
        let (x, y) = to_px(best.recall, best.precision);
        for d in -3..=3 {
            img.put(x as isize + d, y as isize, [20, 60, 200]);
            img.put(x as isize, y as isize + d, [20, 60, 200]);
        }
    }
    img
}
