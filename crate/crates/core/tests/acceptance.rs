//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Run with `cargo test -p gbound --test acceptance`. The BSDS300 check runs
//! only when `GBOUND_BSDS_DIR` points at a prepared dataset (see README).

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gbound::eval::{default_dmax, default_thresholds, DEFAULT_THRESHOLD_COUNT};
use gbound::io::{self, ColorSpace, ModelParams};
use gbound::{
    gb1_detect, gb1_jacobians, gb2_detect, match_boundaries, nms, pr_curve, soft_segment, synth_generate,
    GbConfig, LayerStack, LogisticParams, Mask, PositionBasis, PrAccumulator, RawBoundaryMap, ScalarMap,
    SoftSegConfig, SynthSpec,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn random_stack(rng: &mut ChaCha8Rng, w: usize, h: usize, k: usize) -> LayerStack {
    let layers = (0..k)
        .map(|i| (format!("l{i}"), (0..w * h).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    LayerStack::from_layers(w, h, layers).unwrap()
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

// ---------------------------------------------------------------- AC1

/// Weighted least squares `w·x ≈ w·(c + p̂·j)` by Gaussian elimination on the
/// 3×3 normal equations.
fn brute_force_j(offsets: &[[f64; 2]], weights: &[f64], values: &[f64]) -> [f64; 2] {
    let mut a = [[0.0f64; 4]; 3];
    for ((p, &w), &x) in offsets.iter().zip(weights).zip(values) {
        let row = [w, w * p[0], w * p[1]];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
            a[i][3] += row[i] * w * x;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    [a[1][3] / a[1][1], a[2][3] / a[2][2]]
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let k = [1, 2, 4][i % 3];
        let r = [2usize, 3, 5][(i / 3) % 3];
        let gaussian = (i / 9) % 2 == 1;
        let eps = rng.random_range(0.5..2.0 * r as f64);
        let (w, h) = (2 * r + 9, 2 * r + 7);
        let stack = random_stack(&mut rng, w, h, k);
        let cfg = GbConfig::new(r).with_epsilon(eps).with_gaussian(gaussian);
        let field = gb1_jacobians(&stack, &cfg).unwrap();
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));

        let sigma = r as f64 / 2.0;
        let ri = r as isize;
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut samples = vec![Vec::new(); k];
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                let d = (dx as f64).hypot(dy as f64);
                let s = if d > eps { eps / d } else { 1.0 };
                offsets.push([dx as f64 * s, dy as f64 * s]);
                weights.push(if gaussian { (-(d * d) / (2.0 * sigma * sigma)).exp() } else { 1.0 });
                let sx = (x0 as isize + dx).clamp(0, w as isize - 1) as usize;
                let sy = (y0 as isize + dy).clamp(0, h as isize - 1) as usize;
                for (kk, s) in samples.iter_mut().enumerate() {
                    s.push(stack.value(sx, sy, kk));
                }
            }
        }
        let base = (y0 * w + x0) * k;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for kk in 0..k {
            let oracle = brute_force_j(&offsets, &weights, &samples[kk]);
            let got = field.j[base + kk];
            num += (got[0] - oracle[0]).powi(2) + (got[1] - oracle[1]).powi(2);
            den += oracle[0].powi(2) + oracle[1].powi(2);
        }
        worst = worst.max(num.sqrt() / den.sqrt().max(1e-300));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-8 && secs < 5.0,
        format!("closed-form J vs least squares over 100 windows: max rel err {worst:.2e} (<= 1e-8), {secs:.2} s (< 5 s)"),
    )
}

// ---------------------------------------------------------------- AC2

fn ac2() -> Outcome {
    let start = Instant::now();
    let r = 7;
    let cfg = GbConfig::new(r).with_gaussian(true);
    let mut detail = Vec::new();
    let mut ok = true;
    for (noise, limit) in [(0.0, 2.0), (0.1, 5.0)] {
        let (mut err_sum, mut err_n) = (0.0, 0usize);
        let (mut hit, mut total) = (0usize, 0usize);
        for (i, deg) in (0..36).map(|i| (i, i as f64 * 5.0)) {
            let scene = synth_generate(&SynthSpec::step_edge(64, 64, deg, 0.0, 1.0, noise, 500 + i)).unwrap();
            let raw = gb1_detect(&scene.stack, &cfg).unwrap();
            let thin = nms(&raw);
            let strong = 0.5 * thin.max_value();
            let expected = deg.to_radians();
            for y in r..64 - r {
                for x in r..64 - r {
                    if !scene.ground_truth.get(x, y) {
                        continue;
                    }
                    err_sum += angle_diff(*raw.orientation.get(x, y), expected);
                    err_n += 1;
                    total += 1;
                    let near = (y - 1..=y + 1).any(|yy| (x - 1..=x + 1).any(|xx| *thin.get(xx, yy) >= strong && strong > 0.0));
                    hit += near as usize;
                }
            }
        }
        let mean_deg = (err_sum / err_n as f64).to_degrees();
        let frac = hit as f64 / total as f64;
        ok &= mean_deg < limit && frac >= 0.95;
        detail.push(format!(
            "noise {noise}: mean angle err {mean_deg:.3} deg (< {limit}), NMS within 1 px {:.1}% (>= 95%)",
            100.0 * frac
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    verdict(ok, format!("orientation recovery, 36 step angles, Gb1 r=7 Gaussian: {}; {secs:.1} s (< 30 s)", detail.join("; ")))
}

// ---------------------------------------------------------------- AC3

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let (mut worst_s, mut worst_t): (f64, f64) = (0.0, 0.0);
    for (r, k, w, h) in [(2, 1, 30, 20), (3, 3, 41, 37), (5, 2, 64, 48), (8, 4, 50, 50)] {
        let stack = random_stack(&mut rng, w, h, k);
        let cfg = GbConfig::new(r).with_epsilon(GbConfig::planar_epsilon(r) * 1.5);
        let a = gb1_detect(&stack, &cfg).unwrap();
        let b = gb2_detect(&stack, &cfg).unwrap();
        let range = a.strength.max_value() - a.strength.min_value();
        for i in 0..w * h {
            let ds = (a.strength.as_slice()[i] - b.strength.as_slice()[i]).abs() / range;
            worst_s = worst_s.max(ds);
            if !a.degenerate.as_slice()[i] {
                worst_t = worst_t.max(angle_diff(a.orientation.as_slice()[i], b.orientation.as_slice()[i]));
            }
        }
    }
    verdict(
        worst_s <= 1e-9 && worst_t <= 1e-6,
        format!("Gb1/Gb2 identity (eps >= r*sqrt2): max strength diff {worst_s:.2e} x range (<= 1e-9), max theta diff {worst_t:.2e} rad (<= 1e-6)"),
    )
}

// ---------------------------------------------------------------- AC4

fn min_time(repeats: usize, mut f: impl FnMut()) -> f64 {
    (0..repeats)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let cfg5 = GbConfig::new(5);
    let mut points = Vec::new();
    for side in [128usize, 256, 512, 1024] {
        let stack = random_stack(&mut rng, side, side, 3);
        let t = min_time(3, || {
            gb2_detect(&stack, &cfg5).unwrap();
        });
        points.push(((side * side) as f64, t));
    }
    let n = points.len() as f64;
    let (mx, my) = (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);

    // Radius doubling from r = 10, where the per-window work dominates the
    // fixed per-pixel cost of the eigen-solve and output.
    let stack = random_stack(&mut rng, 256, 256, 3);
    let (cfg_r, cfg_2r) = (GbConfig::new(10), GbConfig::new(20));
    let g2_r = min_time(5, || {
        gb2_detect(&stack, &cfg_r).unwrap();
    });
    let g2_2r = min_time(5, || {
        gb2_detect(&stack, &cfg_2r).unwrap();
    });
    let g1_r = min_time(3, || {
        gb1_detect(&stack, &cfg_r).unwrap();
    });
    let g1_2r = min_time(3, || {
        gb1_detect(&stack, &cfg_2r).unwrap();
    });
    let gb2_change = (g2_2r / g2_r - 1.0).abs();
    let gb1_growth = g1_2r / g1_r;
    let timings: Vec<String> = points.iter().map(|(p, t)| format!("{}px {:.3}s", p, t)).collect();
    verdict(
        r2 > 0.95 && gb2_change < 0.25 && gb1_growth >= 3.0,
        format!(
            "complexity: Gb2 time vs pixels R^2 {r2:.4} (> 0.95) [{}]; r 10->20 at 256^2: Gb2 change {:.1}% (< 25%), Gb1 growth {gb1_growth:.2}x (>= 3x)",
            timings.join(", "),
            100.0 * gb2_change
        ),
    )
}

// ---------------------------------------------------------------- AC5

type DetectFn = fn(&LayerStack, &GbConfig) -> gbound::Result<RawBoundaryMap>;

fn thinned_maps(maps: &[RawBoundaryMap]) -> Vec<ScalarMap> {
    let thin: Vec<ScalarMap> = maps.iter().map(nms).collect();
    let global = thin.iter().map(|t| t.max_value()).fold(0.0, f64::max);
    thin.iter().map(|t| t.map(|v| v / global)).collect()
}

fn ac5() -> Outcome {
    let start = Instant::now();
    let cfg = GbConfig::new(3).with_gaussian(true);
    let scenes: Vec<_> = (0..20)
        .map(|i| synth_generate(&SynthSpec::random_scene(9000 + i, 128, 128, 3, 0.05)).unwrap())
        .collect();
    let maps: Vec<RawBoundaryMap> = scenes.iter().map(|s| gb1_detect(&s.stack, &cfg).unwrap()).collect();
    let mut acc = PrAccumulator::new(default_thresholds(DEFAULT_THRESHOLD_COUNT)).unwrap();
    for (thin, scene) in thinned_maps(&maps).iter().zip(&scenes) {
        acc.add(thin, &scene.ground_truth, default_dmax(128, 128)).unwrap();
    }
    let best = acc.finish().ods().unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        best.f >= 0.90 && secs < 120.0,
        format!(
            "synthetic corpus (20 scenes 128x128, 3 layers, noise 0.05, Gb1 r=3 Gaussian): ODS-F {:.4} (>= 0.90; P {:.3}, R {:.3}), {secs:.1} s (< 120 s)",
            best.f, best.precision, best.recall
        ),
    )
}

// ---------------------------------------------------------------- AC6

fn bsds_pairs(root: &Path) -> Vec<(std::path::PathBuf, std::path::PathBuf)> {
    let mut pairs = Vec::new();
    let Ok(entries) = std::fs::read_dir(root.join("images")) else {
        return pairs;
    };
    let mut images: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    images.sort();
    for img in images {
        let stem = img.file_stem().unwrap().to_string_lossy().to_string();
        for ext in ["pgm", "png", "gbls"] {
            let gt = root.join("gt").join(format!("{stem}.{ext}"));
            if gt.exists() {
                pairs.push((img.clone(), gt));
                break;
            }
        }
    }
    pairs
}

fn dataset_f(stacks: &[LayerStack], gts: &[Mask], cfg: &GbConfig) -> f64 {
    let maps: Vec<RawBoundaryMap> = stacks.iter().map(|s| gb1_detect(s, cfg).unwrap()).collect();
    let mut acc = PrAccumulator::new(default_thresholds(DEFAULT_THRESHOLD_COUNT)).unwrap();
    for (thin, gt) in thinned_maps(&maps).iter().zip(gts) {
        acc.add(thin, gt, default_dmax(gt.width(), gt.height())).unwrap();
    }
    acc.finish().ods_f()
}

fn ac6() -> Outcome {
    let Ok(dir) = std::env::var("GBOUND_BSDS_DIR") else {
        return Outcome::Skip("BSDS300 integration: set GBOUND_BSDS_DIR to run (dataset not bundled)".into());
    };
    let pairs = bsds_pairs(Path::new(&dir));
    if pairs.is_empty() {
        return Outcome::Fail(format!("BSDS300 integration: no image/gt pairs under {dir}"));
    }
    let cfg = GbConfig::new(3).with_gaussian(true);
    let mut lab = Vec::new();
    let mut seg = Vec::new();
    let mut gts = Vec::new();
    for (img, gt) in &pairs {
        let stack = io::read_image(img, ColorSpace::Lab).unwrap();
        let soft = soft_segment(&stack, &SoftSegConfig::default()).unwrap().into_layers();
        let mut combined = stack.clone();
        combined.extend(&soft).unwrap();
        lab.push(stack);
        seg.push(combined);
        gts.push(io::read_mask(gt).unwrap());
    }
    let f_lab = dataset_f(&lab, &gts, &cfg);
    let f_seg = dataset_f(&seg, &gts, &cfg);
    verdict(
        (f_lab - 0.65).abs() <= 0.03 && (f_seg - 0.67).abs() <= 0.03,
        format!("BSDS300 ({} images): Lab F {f_lab:.3} (0.65 +- 0.03), Lab+soft-seg F {f_seg:.3} (0.67 +- 0.03)", pairs.len()),
    )
}

// ---------------------------------------------------------------- AC7

fn ac7() -> Outcome {
    let cfg = SoftSegConfig::default();
    let flat = LayerStack::from_layers(32, 24, (0..3).map(|k| (format!("c{k}"), vec![0.2 + 0.3 * k as f64; 32 * 24])).collect()).unwrap();
    let out = soft_segment(&flat, &cfg).unwrap();
    let constant = out.layers.layer_count() == 8
        && (0..8).all(|k| out.layers.layer(k).iter().all(|&v| v == out.layers.layer(k)[0]));

    let (w, h) = (48, 32);
    let two = LayerStack::from_layers(
        w,
        h,
        (0..3)
            .map(|k| {
                let left = [0.8, 0.2, 0.3][k];
                let right = [0.1, 0.6, 0.9][k];
                (format!("c{k}"), (0..w * h).map(|i| if i % w < w / 2 { left } else { right }).collect())
            })
            .collect(),
    )
    .unwrap();
    let l0 = soft_segment(&two, &cfg).unwrap().layers.layer_map(0);
    let separates = (0..h).all(|y| {
        let (a, b) = (*l0.get(0, y), *l0.get(w - 1, y));
        (a - b).abs() > 0.5 && (0..w).all(|x| (*l0.get(x, y) - if x < w / 2 { a } else { b }).abs() < 1e-9)
    });

    let image = synth_generate(&SynthSpec::random_scene(77, 300, 200, 3, 0.03)).unwrap().stack;
    let start = Instant::now();
    let big = soft_segment(&image, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let in_range = (0..8).all(|k| big.layers.layer(k).iter().all(|v| (0.0..=1.0).contains(v)));
    verdict(
        constant && separates && in_range && secs < 3.0,
        format!("soft segmentation: constant image -> 8 constant layers {constant}; two regions separated by layer 0 {separates}; 300x200 in {secs:.2} s (< 3 s), values in [0,1] {in_range}"),
    )
}

// ---------------------------------------------------------------- AC8

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let mut failures = Vec::new();

    // Gram matrix of P is a multiple of the identity.
    let mut gram_worst: f64 = 0.0;
    for r in 1..=8 {
        for gaussian in [false, true] {
            for eps in [0.3, 1.0, r as f64 / 2.0, r as f64 * 2.0] {
                let b = PositionBasis::new(r, eps, gaussian).unwrap();
                let g = b.gram();
                gram_worst = gram_worst.max(g[0][1].abs() / b.alpha()).max((g[0][0] - g[1][1]).abs() / b.alpha());
            }
        }
    }
    if gram_worst > 1e-12 {
        failures.push(format!("gram off-diagonal {gram_worst:.2e}"));
    }

    // Constant offsets leave J unchanged; global scaling multiplies strength and keeps theta.
    let (mut offset_worst, mut scale_worst, mut theta_worst): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for trial in 0..6 {
        let k = 1 + trial % 3;
        let stack = random_stack(&mut rng, 24, 20, k);
        let cfg = GbConfig::new(2 + trial % 3).with_gaussian(trial % 2 == 0);
        let base = gb1_jacobians(&stack, &cfg).unwrap();
        let mut shifted = stack.clone();
        for kk in 0..k {
            let c = rng.random_range(-10.0..10.0);
            shifted.layer_mut(kk).iter_mut().for_each(|v| *v += c);
        }
        let moved = gb1_jacobians(&shifted, &cfg).unwrap();
        for (a, b) in base.j.iter().zip(&moved.j) {
            offset_worst = offset_worst.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
        }
        let c = rng.random_range(0.1..10.0);
        let detectors: [(DetectFn, bool); 2] = [(gb1_detect, cfg.use_gaussian_weights), (gb2_detect, false)];
        for (detect, gaussian) in detectors {
            let cfg = cfg.with_gaussian(gaussian);
            let a = detect(&stack, &cfg).unwrap();
            let b = detect(&stack.scaled_by(c), &cfg).unwrap();
            for i in 0..a.strength.as_slice().len() {
                let sa = a.strength.as_slice()[i];
                scale_worst = scale_worst.max((b.strength.as_slice()[i] - c * sa).abs() / (c * sa).max(1e-12));
                if !a.degenerate.as_slice()[i] {
                    theta_worst = theta_worst.max(angle_diff(a.orientation.as_slice()[i], b.orientation.as_slice()[i]));
                }
            }
        }
    }
    if offset_worst > 1e-12 {
        failures.push(format!("offset changes J by {offset_worst:.2e}"));
    }
    if scale_worst > 1e-10 || theta_worst > 1e-8 {
        failures.push(format!("scaling covariance strength {scale_worst:.2e}, theta {theta_worst:.2e}"));
    }

    // NMS idempotence.
    let mut nms_ok = true;
    for seed in 0..5 {
        let scene = synth_generate(&SynthSpec::random_scene(seed, 40, 40, 2, 0.1)).unwrap();
        let raw = gb1_detect(&scene.stack, &GbConfig::new(2)).unwrap();
        let once = nms(&raw);
        let again = nms(&RawBoundaryMap {
            strength: once.clone(),
            ..raw.clone()
        });
        nms_ok &= once == again;
    }
    if !nms_ok {
        failures.push("nms not idempotent".into());
    }

    // PR curves invariant under a strictly increasing transform (logistic with w1 < 0).
    let scene = synth_generate(&SynthSpec::random_scene(5, 64, 64, 3, 0.05)).unwrap();
    let thin = nms(&gb1_detect(&scene.stack, &GbConfig::new(3)).unwrap());
    let params = LogisticParams { w0: 2.0, w1: -7.0 };
    let prob = thin.map(|&v| gbound::logistic_prob(v, &params));
    let ts: Vec<f64> = default_thresholds(15).iter().map(|t| t * thin.max_value()).collect();
    let mapped: Vec<f64> = ts.iter().map(|&t| gbound::logistic_prob(t, &params)).collect();
    let d = default_dmax(64, 64);
    let (a, b) = (pr_curve(&thin, &scene.ground_truth, &ts, d).unwrap(), pr_curve(&prob, &scene.ground_truth, &mapped, d).unwrap());
    let same = a.points.iter().zip(&b.points).all(|(p, q)| {
        (p.true_positives, p.false_positives, p.false_negatives) == (q.true_positives, q.false_positives, q.false_negatives)
    });
    let swap = {
        let pred = thin.map(|&v| v > 0.0);
        let m1 = match_boundaries(&pred, &scene.ground_truth, d).unwrap();
        let m2 = match_boundaries(&scene.ground_truth, &pred, d).unwrap();
        m1.precision() == m2.recall() && m1.recall() == m2.precision()
    };
    if !same || !swap {
        failures.push(format!("PR invariance {same}, P/R swap symmetry {swap}"));
    }

    // File formats round-trip bit-exactly.
    let dir = tempfile::tempdir().unwrap();
    let f32_stack = LayerStack::from_layers(
        7,
        5,
        vec![
            ("u".into(), (0..35).map(|_| rng.random_range(-5.0f32..5.0) as f64).collect()),
            ("v".into(), (0..35).map(|_| rng.random_range(-5.0f32..5.0) as f64).collect()),
        ],
    )
    .unwrap();
    io::write_gbls(dir.path().join("a.gbls"), &f32_stack).unwrap();
    io::write_flo(dir.path().join("a.flo"), &f32_stack).unwrap();
    let g = io::read_gbls(dir.path().join("a.gbls")).unwrap();
    let f = io::read_flo(dir.path().join("a.flo")).unwrap();
    let bits = |s: &LayerStack| -> Vec<u64> { (0..s.layer_count()).flat_map(|k| s.layer(k).iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect() };
    let params = ModelParams {
        logistic: LogisticParams { w0: -1.0 / 3.0, w1: -12.75 },
        gamma: vec![1.0, 0.1, 2.0 / 7.0],
    };
    io::write_params(dir.path().join("m.params"), &params).unwrap();
    let round = bits(&g) == bits(&f32_stack)
        && g.names() == f32_stack.names()
        && bits(&f) == bits(&f32_stack)
        && io::read_params(dir.path().join("m.params")).unwrap() == params;
    if !round {
        failures.push("file round-trip mismatch".into());
    }

    let detail = format!(
        "invariants: gram {gram_worst:.1e}, offset {offset_worst:.1e}, scaling {scale_worst:.1e}/{theta_worst:.1e} rad, nms idempotent {nms_ok}, PR monotone {same}, swap {swap}, round-trips {round}"
    );
    if failures.is_empty() {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(format!("{detail}; failures: {}", failures.join(", ")))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Outcome::Pass(d) => println!("{name} PASS  {d}"),
            Outcome::Skip(d) => println!("{name} SKIP  {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("{name} FAIL  {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
