//! Learning per-layer scales and the logistic calibration from labelled images.

use crate::error::{GbError, Result};
use crate::eval::{default_dmax, default_thresholds, pr_curve, DEFAULT_THRESHOLD_COUNT};
use crate::fast::gb2_jacobians;
use crate::grid::{Mask, ScalarMap};
use crate::layers::LayerStack;
use crate::model::{gb1_jacobians, GbConfig, JacobianField, RawBoundaryMap};
use crate::par;
use crate::postprocess::{fit_logistic, nms, LogisticParams};

/// Evaluation budget of the simplex search.
pub const MAX_EVALUATIONS: usize = 200;
/// Initial simplex edge in log-scale units.
pub const INITIAL_STEP: f64 = 0.5;

/// Positive per-layer scales `γ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector(Vec<f64>);

impl ScaleVector {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() || gamma.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(GbError::InvalidConfig("scales must be finite and positive".into()));
        }
        Ok(Self(gamma))
    }

    pub fn ones(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    /// Rescales so the largest entry is 1.
    pub fn normalized(&self) -> Self {
        let max = self.0.iter().copied().fold(0.0, f64::max);
        Self(self.0.iter().map(|g| g / max).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Gb1,
    Gb2,
}

impl Detector {
    fn jacobians(self, stack: &LayerStack, config: &GbConfig) -> Result<JacobianField> {
        let mut unit = stack.clone();
        unit.set_scales(&vec![1.0; stack.layer_count()])?;
        match self {
            Detector::Gb1 => gb1_jacobians(&unit, config),
            Detector::Gb2 => gb2_jacobians(&unit, config),
        }
    }
}

/// Threshold grid and matching tolerance used while training.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    /// Fixed tolerance in pixels; `None` uses the diagonal-relative default per image.
    pub d_max: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(DEFAULT_THRESHOLD_COUNT),
            d_max: None,
        }
    }
}

impl EvalConfig {
    fn d_max_for(&self, width: usize, height: usize) -> f64 {
        self.d_max.unwrap_or_else(|| default_dmax(width, height))
    }
}

/// One labelled training image.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub stack: LayerStack,
    pub ground_truth: Mask,
}

/// Thinned strengths divided by their maximum, ready for thresholds in `(0, 1)`.
pub fn normalized_thinned(map: &RawBoundaryMap) -> ScalarMap {
    let thin = nms(map);
    let max = thin.max_value();
    if max > 0.0 {
        thin.map(|&v| v / max)
    } else {
        thin
    }
}

/// Best F over thresholds for one image's raw detection.
pub fn image_ods_f(map: &RawBoundaryMap, gt: &Mask, eval: &EvalConfig) -> Result<f64> {
    let (w, h) = map.dims();
    Ok(pr_curve(&normalized_thinned(map), gt, &eval.thresholds, eval.d_max_for(w, h))?.ods_f())
}

/// Precomputed per-image `J` fields; evaluates the training objective for any scales.
pub struct ScaleObjective<'a> {
    fields: Vec<JacobianField>,
    examples: &'a [TrainingExample],
    eval: &'a EvalConfig,
}

impl<'a> ScaleObjective<'a> {
    pub fn new(examples: &'a [TrainingExample], detector: Detector, config: &GbConfig, eval: &'a EvalConfig) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| GbError::InsufficientData("empty training set".into()))?;
        let k = first.stack.layer_count();
        for ex in examples {
            if ex.stack.layer_count() != k {
                return Err(GbError::InvalidStack("training stacks differ in layer count".into()));
            }
            if ex.stack.dims() != ex.ground_truth.dims() {
                return Err(GbError::DimensionMismatch {
                    expected: ex.stack.dims(),
                    actual: ex.ground_truth.dims(),
                });
            }
        }
        let fields = examples
            .iter()
            .map(|ex| detector.jacobians(&ex.stack, config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { fields, examples, eval })
    }

    pub fn layer_count(&self) -> usize {
        self.fields[0].layer_count
    }

    /// Mean per-image ODS-F under scales `gamma`.
    pub fn mean_f(&self, gamma: &[f64]) -> Result<f64> {
        let idx: Vec<usize> = (0..self.fields.len()).collect();
        let scores = par::map_items(&idx, |&i| {
            let map = self.fields[i].boundary_map(gamma)?;
            image_ods_f(&map, &self.examples[i].ground_truth, self.eval)
        });
        let mut total = 0.0;
        for s in scores {
            total += s?;
        }
        Ok(total / self.fields.len() as f64)
    }

    pub fn boundary_map(&self, i: usize, gamma: &[f64]) -> Result<RawBoundaryMap> {
        self.fields[i].boundary_map(gamma)
    }
}

/// Outcome of the simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleLearning {
    pub gamma: ScaleVector,
    /// Mean training ODS-F at `gamma`.
    pub mean_f: f64,
    pub evaluations: usize,
}

/// Minimises `f` with the Nelder-Mead simplex method.
///
/// Reflection, expansion, contraction and shrink coefficients are
/// `(1, 2, 0.5, 0.5)`. The initial simplex is `x0` plus `step` along each
/// axis. Stops after `max_evals` evaluations or when every vertex lies within
/// `1e-6` of the best one. Returns the best point, its value and the
/// evaluation count.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, max_evals: usize) -> Result<(Vec<f64>, f64, usize)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)?));
    for i in 0..n {
        if evals >= max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x, &mut evals)?;
        simplex.push((x, fx));
    }
    let best = |s: &[(Vec<f64>, f64)]| {
        let b = s.iter().fold(&s[0], |b, v| if v.1 < b.1 { v } else { b });
        (b.0.clone(), b.1)
    };
    if simplex.len() < n + 1 {
        let (x, fx) = best(&simplex);
        return Ok((x, fx, evals));
    }

    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };
    while evals < max_evals {
        // Stable sort keeps earlier vertices first on ties.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size <= 1e-6 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let (worst, f_worst) = simplex[n].clone();
        let (f_best, f_second) = (simplex[0].1, simplex[n - 1].1);

        let xr = lerp(&centroid, &worst, -ALPHA);
        let fr = eval(&xr, &mut evals)?;
        if fr < f_best {
            if evals >= max_evals {
                simplex[n] = (xr, fr);
                break;
            }
            let xe = lerp(&centroid, &worst, -GAMMA);
            let fe = eval(&xe, &mut evals)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr);
            continue;
        }
        if evals >= max_evals {
            break;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = lerp(&centroid, &xr, RHO);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = lerp(&centroid, &worst, RHO);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc, fc < f_worst)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            if evals >= max_evals {
                break;
            }
            let x = lerp(&anchor, &v.0, SIGMA);
            let fx = eval(&x, &mut evals)?;
            *v = (x, fx);
        }
    }
    let (x, fx) = best(&simplex);
    Ok((x, fx, evals))
}

/// Searches log-scales from `γ = 1` to maximise mean training ODS-F.
///
/// A single layer needs no search and returns `γ = (1)`. The result is
/// normalized so that `max γ_k = 1`.
pub fn learn_layer_scales(examples: &[TrainingExample], detector: Detector, config: &GbConfig, eval: &EvalConfig) -> Result<ScaleLearning> {
    let objective = ScaleObjective::new(examples, detector, config, eval)?;
    learn_with_objective(&objective)
}

fn learn_with_objective(objective: &ScaleObjective) -> Result<ScaleLearning> {
    let k = objective.layer_count();
    if k == 1 {
        return Ok(ScaleLearning {
            gamma: ScaleVector::ones(1),
            mean_f: objective.mean_f(&[1.0])?,
            evaluations: 1,
        });
    }
    let (x, neg_f, evaluations) = nelder_mead(
        |logs| {
            let gamma: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
            objective.mean_f(&gamma).map(|f| -f)
        },
        &vec![0.0; k],
        INITIAL_STEP,
        MAX_EVALUATIONS,
    )?;
    let gamma = ScaleVector::new(x.iter().map(|l| l.exp()).collect())?.normalized();
    Ok(ScaleLearning {
        gamma,
        mean_f: -neg_f,
        evaluations,
    })
}

/// Labels every NMS survivor by whether a ground-truth pixel lies within `d_max`.
pub fn logistic_samples(map: &RawBoundaryMap, gt: &Mask, d_max: f64) -> (Vec<f64>, Vec<bool>) {
    let thin = nms(map);
    let (w, h) = thin.dims();
    let reach = d_max.floor() as isize;
    let near = |x: usize, y: usize| {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if ((dx * dx + dy * dy) as f64) > d_max * d_max {
                    continue;
                }
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h && *gt.get(nx as usize, ny as usize) {
                    return true;
                }
            }
        }
        false
    };
    let mut strengths = Vec::new();
    let mut labels = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let s = *thin.get(x, y);
            if s > 0.0 {
                strengths.push(s);
                labels.push(near(x, y));
            }
        }
    }
    (strengths, labels)
}

/// Learned scales plus logistic calibration fitted at those scales.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub scales: ScaleLearning,
    pub logistic: LogisticParams,
}

/// Learns scales, then fits the logistic on thinned strengths at the learned scales.
pub fn train(examples: &[TrainingExample], detector: Detector, config: &GbConfig, eval: &EvalConfig) -> Result<TrainedModel> {
    let objective = ScaleObjective::new(examples, detector, config, eval)?;
    let scales = learn_with_objective(&objective)?;
    let mut strengths = Vec::new();
    let mut labels = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        let map = objective.boundary_map(i, scales.gamma.as_slice())?;
        let (w, h) = ex.stack.dims();
        let (s, l) = logistic_samples(&map, &ex.ground_truth, eval.d_max_for(w, h));
        strengths.extend(s);
        labels.extend(l);
    }
    let logistic = fit_logistic(&strengths, &labels)?;
    Ok(TrainedModel { scales, logistic })
}
