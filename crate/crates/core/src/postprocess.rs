//! Calibration of raw strengths and thinning along the recovered normals.

use crate::error::{GbError, Result};
use crate::grid::{Mask, ScalarMap};
use crate::model::RawBoundaryMap;

/// Parameters of `p = 1 / (1 + exp(w0 + w1·s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub w0: f64,
    pub w1: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self { w0: 0.0, w1: -1.0 }
    }
}

pub fn logistic_prob(strength: f64, params: &LogisticParams) -> f64 {
    let z = params.w0 + params.w1 * strength;
    // Same value as 1/(1+e^z), arranged so neither branch overflows.
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Applies the logistic to every pixel of a strength map.
pub fn calibrate(strength: &ScalarMap, params: &LogisticParams) -> ScalarMap {
    strength.map(|&s| logistic_prob(s, params))
}

#[inline]
fn bilinear(map: &ScalarMap, x: f64, y: f64) -> f64 {
    let (w, h) = map.dims();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = map.get(x0, y0) * (1.0 - fx) + map.get(x1, y0) * fx;
    let bottom = map.get(x0, y1) * (1.0 - fx) + map.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Non-maxima suppression along the boundary normal.
///
/// A pixel survives when its strength is at least the bilinearly interpolated
/// strength one pixel away on both sides along the normal. Pixels whose
/// normal is undefined (degenerate) survive when they are a maximum of their
/// 3×3 neighbourhood. Suppressed pixels become zero; survivors keep their value.
pub fn nms(map: &RawBoundaryMap) -> ScalarMap {
    let s = &map.strength;
    let (w, h) = s.dims();
    ScalarMap::from_fn(w, h, |x, y| {
        let v = *s.get(x, y);
        let keep = if *map.degenerate.get(x, y) {
            let mut max = f64::NEG_INFINITY;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx != 0 || dy != 0 {
                        max = max.max(s.clamped(x as isize + dx, y as isize + dy));
                    }
                }
            }
            v >= max
        } else {
            let theta = *map.orientation.get(x, y);
            let (ny, nx) = theta.sin_cos();
            let (xf, yf) = (x as f64, y as f64);
            v >= bilinear(s, xf + nx, yf + ny) && v >= bilinear(s, xf - nx, yf - ny)
        };
        if keep {
            v
        } else {
            0.0
        }
    })
}

/// Binary thinning to one-pixel-wide, 8-connected curves.
///
/// Two-subiteration Guo-Hall scheme, repeated until nothing changes.
/// Isolated pixels and curve end points are kept, connectivity is preserved,
/// and the result is a fixed point: `thin_mask(&thin_mask(m)) == thin_mask(m)`.
pub fn thin_mask(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    let mut on: Vec<u8> = mask.as_slice().iter().map(|&b| b as u8).collect();
    let at = |on: &[u8], x: usize, y: usize, dx: isize, dy: isize| -> u8 {
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
            0
        } else {
            on[ny as usize * w + nx as usize]
        }
    };
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            doomed.clear();
            for y in 0..h {
                for x in 0..w {
                    if on[y * w + x] == 0 {
                        continue;
                    }
                    // p2..p9 clockwise from north
                    let p2 = at(&on, x, y, 0, -1);
                    let p3 = at(&on, x, y, 1, -1);
                    let p4 = at(&on, x, y, 1, 0);
                    let p5 = at(&on, x, y, 1, 1);
                    let p6 = at(&on, x, y, 0, 1);
                    let p7 = at(&on, x, y, -1, 1);
                    let p8 = at(&on, x, y, -1, 0);
                    let p9 = at(&on, x, y, -1, -1);
                    let c = ((p2 ^ 1) & (p3 | p4))
                        + ((p4 ^ 1) & (p5 | p6))
                        + ((p6 ^ 1) & (p7 | p8))
                        + ((p8 ^ 1) & (p9 | p2));
                    let n1 = (p9 | p2) + (p3 | p4) + (p5 | p6) + (p7 | p8);
                    let n2 = (p2 | p3) + (p4 | p5) + (p6 | p7) + (p8 | p9);
                    let n = n1.min(n2);
                    let m = if pass == 0 {
                        (p6 | p7 | (p9 ^ 1)) & p8
                    } else {
                        (p2 | p3 | (p5 ^ 1)) & p4
                    };
                    if c == 1 && (2..=3).contains(&n) && m == 0 {
                        doomed.push(y * w + x);
                    }
                }
            }
            changed |= !doomed.is_empty();
            for &i in &doomed {
                on[i] = 0;
            }
        }
        if !changed {
            break;
        }
    }
    Mask::from_vec(w, h, on.into_iter().map(|v| v == 1).collect())
}

const RIDGE: f64 = 1e-4;
const MAX_ITERS: usize = 100;
const GRAD_TOL: f64 = 1e-8;

/// Maximum-likelihood logistic fit of binary labels on strength.
///
/// Maximises the mean log-likelihood minus `1e-4/2 · (w0² + w1²)` with
/// damped Newton steps, stopping when the gradient norm reaches `1e-8` or
/// after 100 iterations.
pub fn fit_logistic(strengths: &[f64], labels: &[bool]) -> Result<LogisticParams> {
    if strengths.len() != labels.len() {
        return Err(GbError::InsufficientData(format!(
            "{} strengths for {} labels",
            strengths.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(GbError::InsufficientData(
            "logistic fit needs both classes".into(),
        ));
    }
    let n = strengths.len() as f64;

    // Fit q = σ(a + b s) with q the boundary probability; the stored parameters
    // use the opposite sign (w = −(a, b)).
    let objective = |a: f64, b: f64| {
        let mut ll = 0.0;
        for (&s, &l) in strengths.iter().zip(labels) {
            let z = a + b * s;
            // log σ(z) = −softplus(−z); log(1−σ(z)) = −softplus(z)
            ll -= if l { softplus(-z) } else { softplus(z) };
        }
        ll / n - 0.5 * RIDGE * (a * a + b * b)
    };

    let (mut a, mut b) = (0.0f64, 0.0f64);
    let mut current = objective(a, b);
    for _ in 0..MAX_ITERS {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&s, &l) in strengths.iter().zip(labels) {
            let q = sigmoid(a + b * s);
            let r = if l { 1.0 } else { 0.0 } - q;
            let wgt = q * (1.0 - q);
            g0 += r;
            g1 += r * s;
            h00 += wgt;
            h01 += wgt * s;
            h11 += wgt * s * s;
        }
        g0 = g0 / n - RIDGE * a;
        g1 = g1 / n - RIDGE * b;
        if g0.hypot(g1) <= GRAD_TOL {
            break;
        }
        // Negative Hessian is positive definite thanks to the ridge term.
        let (h00, h01, h11) = (h00 / n + RIDGE, h01 / n, h11 / n + RIDGE);
        let det = h00 * h11 - h01 * h01;
        let da = (h11 * g0 - h01 * g1) / det;
        let db = (h00 * g1 - h01 * g0) / det;
        let mut step = 1.0;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            let next = objective(na, nb);
            if next >= current || step < 1e-10 {
                a = na;
                b = nb;
                current = next;
                break;
            }
            step *= 0.5;
        }
    }
    Ok(LogisticParams { w0: -a, w1: -b })
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw(strength: ScalarMap, theta: f64) -> RawBoundaryMap {
        let (w, h) = strength.dims();
        RawBoundaryMap {
            orientation: ScalarMap::filled(w, h, theta),
            degenerate: Mask::filled(w, h, false),
            strength,
        }
    }

    #[test]
    fn logistic_examples() {
        let zero = LogisticParams { w0: 0.0, w1: 0.0 };
        assert_eq!(logistic_prob(3.7, &zero), 0.5);
        assert_eq!(logistic_prob(2.0, &LogisticParams { w0: 2.0, w1: -1.0 }), 0.5);
        let steep = LogisticParams { w0: 0.0, w1: -1e300 };
        assert_eq!(logistic_prob(1.0, &steep), 1.0);
        let p = logistic_prob(1e6, &LogisticParams { w0: 0.0, w1: 1.0 });
        assert!((0.0..1e-300).contains(&p));
    }

    #[test]
    fn logistic_is_monotone_with_sign_of_minus_w1() {
        let p = LogisticParams { w0: 1.0, w1: -3.0 };
        let mut prev = 0.0;
        for i in 0..50 {
            let v = logistic_prob(i as f64 * 0.1, &p);
            assert!(v > prev && v < 1.0);
            prev = v;
        }
    }

    #[test]
    fn ideal_ridge_is_unchanged() {
        let m = ScalarMap::from_fn(7, 5, |x, _| if x == 3 { 1.0 } else { 0.0 });
        let out = nms(&raw(m.clone(), 0.0));
        assert_eq!(out, m);
    }

    #[test]
    fn wide_ridge_keeps_only_peak() {
        let profile = [0.0, 1.0, 2.0, 1.0, 0.0];
        let m = ScalarMap::from_fn(5, 5, |x, _| profile[x]);
        let out = nms(&raw(m, 0.0));
        for y in 0..5 {
            let row: Vec<f64> = (0..5).map(|x| *out.get(x, y)).collect();
            assert_eq!(row, vec![0.0, 0.0, 2.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn constant_map_plateau() {
        let m = ScalarMap::filled(4, 4, 0.3);
        assert_eq!(nms(&raw(m.clone(), 0.7)), m);
        let z = ScalarMap::filled(4, 4, 0.0);
        assert_eq!(nms(&raw(z.clone(), 0.7)), z);
    }

    #[test]
    fn degenerate_pixels_use_local_max() {
        let m = ScalarMap::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { 2.0 } else { 1.0 });
        let mut r = raw(m, 0.0);
        r.degenerate = Mask::filled(5, 5, true);
        let out = nms(&r);
        assert_eq!(*out.get(2, 2), 2.0);
        assert_eq!(*out.get(1, 2), 0.0);
        assert_eq!(*out.get(4, 4), 1.0);
    }

    #[test]
    fn fit_rejects_single_class() {
        assert!(fit_logistic(&[0.1, 0.2], &[true, true]).is_err());
        assert!(fit_logistic(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn fit_on_uninformative_labels_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let l: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let p = fit_logistic(&s, &l).unwrap();
        assert!(p.w1.abs() <= 0.1, "w1 = {}", p.w1);
    }

    #[test]
    fn fit_recovers_generating_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = LogisticParams { w0: 2.0, w1: -4.0 };
        let s: Vec<f64> = (0..20_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let l: Vec<bool> = s.iter().map(|&v| rng.random_bool(logistic_prob(v, &truth))).collect();
        let p = fit_logistic(&s, &l).unwrap();
        assert!((p.w0 - 2.0).abs() < 0.25 && (p.w1 + 4.0).abs() < 0.4, "{p:?}");
        assert!(p.w1 < 0.0);
    }

    #[test]
    fn separated_data_stays_finite() {
        let s: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let l: Vec<bool> = s.iter().map(|&v| v > 0.5).collect();
        let p = fit_logistic(&s, &l).unwrap();
        assert!(p.w1.is_finite() && p.w1 < -10.0);
    }

    #[test]
    fn duplicated_data_gives_same_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let l: Vec<bool> = s.iter().map(|&v| rng.random_bool(v)).collect();
        let a = fit_logistic(&s, &l).unwrap();
        let s2: Vec<f64> = s.iter().chain(&s).copied().collect();
        let l2: Vec<bool> = l.iter().chain(&l).copied().collect();
        let b = fit_logistic(&s2, &l2).unwrap();
        assert_abs_diff_eq!(a.w0, b.w0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.w1, b.w1, epsilon = 1e-9);
    }

    #[test]
    fn thinning_two_pixel_bar() {
        let m = Mask::from_fn(12, 6, |x, y| (1..11).contains(&x) && (2..4).contains(&y));
        let t = thin_mask(&m);
        for x in 2..10 {
            assert_eq!((0..6).filter(|&y| *t.get(x, y)).count(), 1, "column {x}");
        }
    }

    #[test]
    fn thinning_keeps_thin_curves() {
        let diag = Mask::from_fn(10, 10, |x, y| x == y);
        assert_eq!(thin_mask(&diag), diag);
        let dot = Mask::from_fn(5, 5, |x, y| (x, y) == (2, 2));
        assert_eq!(thin_mask(&dot), dot);
        let block = Mask::from_fn(4, 4, |x, y| (1..3).contains(&x) && (1..3).contains(&y));
        assert!(thin_mask(&block).count() > 0);
    }

    #[test]
    fn thinning_a_diagonal_staircase() {
        // 4-connected staircase: two pixels per row
        let m = Mask::from_fn(12, 12, |x, y| x == y || x == y + 1);
        let t = thin_mask(&m);
        assert!(t.count() <= 13, "{}", t.count());
        for y in 1..10 {
            assert!((0..12).any(|x| *t.get(x, y)));
        }
    }

    proptest! {
        #[test]
        fn thinning_is_a_subset_and_fixed_point(
            bits in proptest::collection::vec(proptest::bool::weighted(0.4), 100),
        ) {
            let m = Mask::from_vec(10, 10, bits);
            let t = thin_mask(&m);
            for (a, b) in t.as_slice().iter().zip(m.as_slice()) {
                prop_assert!(!*a || *b);
            }
            prop_assert_eq!(thin_mask(&t), t);
        }

        #[test]
        fn nms_is_idempotent(
            vals in proptest::collection::vec(0.0f64..1.0, 64),
            thetas in proptest::collection::vec(0.0f64..std::f64::consts::PI, 64),
            degen in proptest::collection::vec(proptest::bool::weighted(0.2), 64),
        ) {
            let m = RawBoundaryMap {
                strength: ScalarMap::from_vec(8, 8, vals),
                orientation: ScalarMap::from_vec(8, 8, thetas),
                degenerate: Mask::from_vec(8, 8, degen),
            };
            let once = nms(&m);
            let again = nms(&RawBoundaryMap { strength: once.clone(), ..m });
            prop_assert_eq!(once, again);
        }
    }
}
