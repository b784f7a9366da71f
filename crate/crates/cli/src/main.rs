//! Command-line front end for boundary detection, soft segmentation,
//! training, evaluation, benchmarking and synthetic data.

mod config;

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use gbound::eval::{default_dmax, default_thresholds, render_pr_curve, DEFAULT_THRESHOLD_COUNT};
use gbound::io::{self, ColorSpace, ModelParams};
use gbound::train::{Detector, EvalConfig, TrainingExample};
use gbound::{
    calibrate, depth_largest_component, gb1_detect, gb2_detect, multiscale_detect, nms, soft_segment, synth_generate,
    GbConfig, LayerStack, PrAccumulator, RawBoundaryMap, ScalarMap, SoftSegConfig, SynthSpec,
};

use config::KeyValues;

type CliResult<T> = std::result::Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Parser)]
#[command(name = "gbound", version, about = "Generalized boundary detection over multi-layer images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect boundaries in one or more layer sources.
    Detect(DetectArgs),
    /// Compute an 8-layer colour soft segmentation.
    Softseg(SoftsegArgs),
    /// Learn layer scales and logistic calibration from a manifest.
    Train(TrainArgs),
    /// Precision/recall evaluation of predictions against ground truth.
    Eval(EvalArgs),
    /// Timing sweep over image sizes and window radii.
    Bench(BenchArgs),
    /// Generate a synthetic layer stack with ground-truth boundaries.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algo {
    Gb1,
    Gb2,
    Multiscale,
}

impl std::str::FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Algo as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Clone, Default)]
struct ModelFlags {
    /// gb1 (exact), gb2 (integral images) or multiscale [default: gb1]
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    /// Window radius r in pixels [default: 5]
    #[arg(long)]
    radius: Option<usize>,
    /// Disk projection radius ε [default: r/2]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Gaussian window weighting (gb1 only)
    #[arg(long)]
    gaussian: bool,
    /// Convert colour images to CIE Lab
    #[arg(long)]
    lab: bool,
    /// Optional key=value file with the same keys as the flags; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Model {
    algo: Algo,
    config: GbConfig,
    color: ColorSpace,
}

impl ModelFlags {
    fn resolve(&self) -> CliResult<(Model, KeyValues)> {
        let kv = match &self.config {
            Some(p) => KeyValues::read(p)?,
            None => KeyValues::default(),
        };
        let algo = match self.algo {
            Some(a) => a,
            None => kv.get::<Algo>("algo")?.unwrap_or(Algo::Gb1),
        };
        let radius = match self.radius {
            Some(r) => r,
            None => kv.get("radius")?.unwrap_or(5),
        };
        let mut config = GbConfig::new(radius).with_gaussian(self.gaussian || kv.flag("gaussian")?);
        if let Some(eps) = self.epsilon.or(kv.get("epsilon")?) {
            config = config.with_epsilon(eps);
        }
        config.validate()?;
        let color = if self.lab || kv.flag("lab")? {
            ColorSpace::Lab
        } else {
            ColorSpace::Rgb
        };
        Ok((Model { algo, config, color }, kv))
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Input files (.gbls, .flo, .pgm, .ppm, .png); their layers are concatenated
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    /// Average the inputs element-wise instead of concatenating (e.g. flow from several frame pairs)
    #[arg(long)]
    average: bool,
    /// Depth map appended as a layer
    #[arg(long)]
    depth: Option<PathBuf>,
    /// Also append the largest connected component of similar depth (tolerance in depth units)
    #[arg(long, requires = "depth")]
    depth_tol: Option<f64>,
    /// Parameter file with layer scales and logistic calibration
    #[arg(long)]
    params: Option<PathBuf>,
    /// Add a non-maxima suppressed strength layer
    #[arg(long)]
    nms: bool,
    /// Output layer stack (.gbls)
    #[arg(long, short)]
    out: PathBuf,
    /// Optional PNG rendering of the (thinned, if --nms) strength
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(Args)]
struct SoftsegArgs {
    /// Colour image (.ppm, .png) or 3-layer .gbls
    input: PathBuf,
    /// Number of sampled classification patches
    #[arg(long, default_value_t = gbound::softseg::DEFAULT_SAMPLES)]
    ns: usize,
    #[arg(long, default_value_t = gbound::softseg::DEFAULT_PATCH_RADIUS)]
    patch_radius: usize,
    #[arg(long, default_value_t = gbound::softseg::DEFAULT_SUBSPACE_DIM)]
    subspace_dim: usize,
    /// Quantize image colours in RGB instead of CIE Lab
    #[arg(long)]
    rgb: bool,
    /// Output layer stack (.gbls)
    #[arg(long, short)]
    out: PathBuf,
    /// Optional PNG of the first three layers as RGB
    #[arg(long)]
    vis: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Lines of `input ground_truth` (paths relative to the manifest); `#` starts a comment
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    model: ModelFlags,
    /// Matching tolerance in pixels [default: 0.0075 × image diagonal]
    #[arg(long)]
    dmax: Option<f64>,
    /// Output parameter file
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of predictions (thinned maps; .gbls, .pgm or .png)
    #[arg(long)]
    pred_dir: PathBuf,
    /// Directory of ground-truth boundary masks with matching file stems
    #[arg(long)]
    gt_dir: PathBuf,
    /// Matching tolerance in pixels [default: 0.0075 × image diagonal]
    #[arg(long)]
    dmax: Option<f64>,
    /// Number of evenly spaced thresholds
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_COUNT)]
    thresholds: usize,
    /// Match binarized maps as they are, without morphological thinning
    #[arg(long)]
    no_thin: bool,
    /// CSV output
    #[arg(long)]
    csv: Option<PathBuf>,
    /// PR-curve PNG output
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Square image sides
    #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
    sizes: Vec<usize>,
    /// Window radii
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    radii: Vec<usize>,
    /// Layers per stack
    #[arg(long, default_value_t = 3)]
    layers: usize,
    /// Timed repetitions; the minimum is reported
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Skip the exact detector
    #[arg(long)]
    skip_gb1: bool,
    /// CSV output (printed to stdout otherwise)
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON scene description; a random scene is generated when absent
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Noise seed (overrides the seed in the --spec file)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Output stack (.gbls); ground truth goes next to it as `<stem>_gt.pgm`
    #[arg(long, short)]
    out: PathBuf,
}

fn main() -> ExitCode {
    if let Err(e) = init_threads() {
        eprintln!("gbound: {e}");
        return ExitCode::FAILURE;
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Softseg(a) => softseg(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gbound: {e}");
            ExitCode::FAILURE
        }
    }
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("GBOUND_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("GBOUND_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            return Err("GBOUND_THREADS must be a positive integer".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run_detector(stack: &LayerStack, model: &Model) -> CliResult<RawBoundaryMap> {
    Ok(match model.algo {
        Algo::Gb1 => gb1_detect(stack, &model.config)?,
        Algo::Gb2 => gb2_detect(stack, &model.config)?,
        Algo::Multiscale => {
            let radii = gbound::fast::default_radii(model.config.window_radius);
            let weights = vec![1.0; radii.len()];
            multiscale_detect(stack, &radii, &weights)?
        }
    })
}

fn load_inputs(inputs: &[PathBuf], color: ColorSpace, average: bool) -> CliResult<LayerStack> {
    let stacks = inputs
        .iter()
        .map(|p| io::read_layers(p, color))
        .collect::<gbound::Result<Vec<_>>>()?;
    if average {
        return Ok(LayerStack::average(&stacks)?);
    }
    let mut out = stacks[0].clone();
    for s in &stacks[1..] {
        out.extend(s)?;
    }
    Ok(out)
}

fn apply_scales(stack: &mut LayerStack, params: &ModelParams) -> CliResult<()> {
    if params.gamma.is_empty() {
        return Ok(());
    }
    if params.gamma.len() != stack.layer_count() {
        return Err(format!(
            "parameter file has {} scales but the input has {} layers",
            params.gamma.len(),
            stack.layer_count()
        )
        .into());
    }
    stack.set_scales(&params.gamma)?;
    Ok(())
}

fn detect(a: DetectArgs) -> CliResult<()> {
    let (model, kv) = a.model.resolve()?;
    let use_nms = a.nms || kv.flag("nms")?;
    let mut stack = load_inputs(&a.inputs, model.color, a.average)?;
    if let Some(depth_path) = &a.depth {
        let depth = io::read_layers(depth_path, ColorSpace::Rgb)?;
        if depth.dims() != stack.dims() {
            return Err(format!("depth map is {:?}, layers are {:?}", depth.dims(), stack.dims()).into());
        }
        let map = depth.layer_map(0);
        stack.push_map("depth", &map)?;
        if let Some(tol) = a.depth_tol {
            let mask = depth_largest_component(&map, tol)?;
            stack.push_layer("depth_component", mask.as_slice().iter().map(|&b| b as u8 as f64).collect())?;
        }
    }
    let params = a.params.as_ref().map(io::read_params).transpose()?;
    if let Some(p) = &params {
        apply_scales(&mut stack, p)?;
    }

    let raw = run_detector(&stack, &model)?;
    let (w, h) = raw.dims();
    let mut out = LayerStack::new(w, h);
    out.push_map("strength", &raw.strength)?;
    out.push_map("orientation", &raw.orientation)?;
    let thinned = use_nms.then(|| nms(&raw));
    if let Some(t) = &thinned {
        out.push_map("thinned", t)?;
    }
    if let Some(p) = &params {
        let source = thinned.as_ref().unwrap_or(&raw.strength);
        let mut prob = calibrate(source, &p.logistic);
        if let Some(t) = &thinned {
            for (pv, tv) in prob.as_mut_slice().iter_mut().zip(t.as_slice()) {
                if *tv <= 0.0 {
                    *pv = 0.0;
                }
            }
        }
        out.push_map("probability", &prob)?;
    }
    io::write_gbls(&a.out, &out)?;
    if let Some(png) = &a.png {
        let shown = thinned.as_ref().unwrap_or(&raw.strength);
        io::write_gray_png(png, shown, 0.0, shown.max_value())?;
    }
    Ok(())
}

fn softseg(a: SoftsegArgs) -> CliResult<()> {
    let color = if a.rgb { ColorSpace::Rgb } else { ColorSpace::Lab };
    let image = io::read_layers(&a.input, color)?;
    let cfg = SoftSegConfig {
        samples: a.ns,
        patch_radius: a.patch_radius,
        subspace_dim: a.subspace_dim,
        ..SoftSegConfig::default()
    };
    let seg = soft_segment(&image, &cfg)?;
    if seg.degenerate {
        eprintln!("gbound: warning: image has no colour variation; layers are constant");
    }
    if let Some(vis) = &a.vis {
        io::write_rgb_png(vis, &seg.visualize())?;
    }
    io::write_gbls(&a.out, &seg.layers)?;
    Ok(())
}

fn read_manifest(path: &Path) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(format!("{}:{}: expected `input ground_truth`", path.display(), i + 1).into());
        }
        pairs.push((base.join(fields[0]), base.join(fields[1])));
    }
    if pairs.is_empty() {
        return Err(format!("{}: no training pairs", path.display()).into());
    }
    Ok(pairs)
}

fn train(a: TrainArgs) -> CliResult<()> {
    let (model, _) = a.model.resolve()?;
    let detector = match model.algo {
        Algo::Gb1 => Detector::Gb1,
        Algo::Gb2 => Detector::Gb2,
        Algo::Multiscale => return Err("training supports --algo gb1 or gb2".into()),
    };
    let examples = read_manifest(&a.manifest)?
        .into_iter()
        .map(|(input, gt)| -> CliResult<TrainingExample> {
            Ok(TrainingExample {
                stack: io::read_layers(&input, model.color)?,
                ground_truth: io::read_mask(&gt)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let eval = EvalConfig {
        d_max: a.dmax,
        ..EvalConfig::default()
    };
    let trained = gbound::train(&examples, detector, &model.config, &eval)?;
    let params = ModelParams {
        logistic: trained.logistic,
        gamma: trained.scales.gamma.as_slice().to_vec(),
    };
    io::write_params(&a.out, &params)?;
    println!(
        "mean training F {:.4} after {} evaluations; gamma = {:?}; w0 = {:.4}, w1 = {:.4}",
        trained.scales.mean_f, trained.scales.evaluations, params.gamma, params.logistic.w0, params.logistic.w1
    );
    Ok(())
}

/// Picks the map to threshold from a prediction file, rescaled into `[0, 1]`.
fn prediction_map(path: &Path) -> CliResult<ScalarMap> {
    let stack = io::read_layers(path, ColorSpace::Rgb)?;
    let pick = ["probability", "thinned", "strength"]
        .iter()
        .find_map(|n| stack.names().iter().position(|s| s == n))
        .unwrap_or(0);
    let map = stack.layer_map(pick);
    let max = map.max_value();
    Ok(if max > 1.0 { map.map(|v| v / max) } else { map })
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let mut preds: Vec<PathBuf> = fs::read_dir(&a.pred_dir)
        .map_err(|e| format!("{}: {e}", a.pred_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    preds.sort();
    let gt_files: Vec<PathBuf> = fs::read_dir(&a.gt_dir)
        .map_err(|e| format!("{}: {e}", a.gt_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    let mut pairs = Vec::new();
    for p in preds {
        let stem = p.file_stem().map(|s| s.to_os_string());
        let gt = gt_files.iter().find(|g| g.file_stem().map(|s| s.to_os_string()) == stem);
        match gt {
            Some(g) => pairs.push((p, g.clone())),
            None => eprintln!("gbound: warning: no ground truth for {}", p.display()),
        }
    }
    if pairs.is_empty() {
        return Err("no prediction/ground-truth pairs found".into());
    }
    let thresholds = default_thresholds(a.thresholds);
    let accs = pairs
        .par_iter()
        .map(|(p, g)| -> CliResult<PrAccumulator> {
            let pred = prediction_map(p)?;
            let gt = io::read_mask(g)?;
            let d = a.dmax.unwrap_or_else(|| default_dmax(gt.width(), gt.height()));
            let mut acc = PrAccumulator::new(thresholds.clone())?.with_thinning(!a.no_thin);
            acc.add(&pred, &gt, d).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(acc)
        })
        .collect::<Vec<_>>();
    let mut total = PrAccumulator::new(thresholds)?.with_thinning(!a.no_thin);
    for acc in accs {
        total.merge(&acc?)?;
    }
    let curve = total.finish();
    if let Some(csv) = &a.csv {
        fs::write(csv, curve.to_csv())?;
    }
    if let Some(plot) = &a.plot {
        io::write_rgb_png(plot, &render_pr_curve(&curve, 400))?;
    }
    let best = curve.ods().ok_or("empty threshold list")?;
    println!(
        "images {}  ODS-F {:.4}  (P {:.4}, R {:.4} at threshold {:.4})",
        pairs.len(),
        best.f,
        best.precision,
        best.recall,
        best.threshold
    );
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let mut csv = String::from("algo,size,pixels,radius,seconds\n");
    for &size in &a.sizes {
        let spec = SynthSpec::random_scene(size as u64, size, size, a.layers, 0.05);
        let stack = synth_generate(&spec)?.stack;
        for &r in &a.radii {
            let cfg = GbConfig::new(r).with_epsilon(GbConfig::planar_epsilon(r));
            let mut algos: Vec<(&str, Algo)> = vec![("gb2", Algo::Gb2)];
            if !a.skip_gb1 {
                algos.push(("gb1", Algo::Gb1));
            }
            for (name, algo) in algos {
                let model = Model {
                    algo,
                    config: cfg,
                    color: ColorSpace::Rgb,
                };
                let mut best = f64::INFINITY;
                for _ in 0..a.repeats.max(1) {
                    let t = Instant::now();
                    run_detector(&stack, &model)?;
                    best = best.min(t.elapsed().as_secs_f64());
                }
                let line = format!("{name},{size},{},{r},{best:.6}\n", size * size);
                eprint!("{line}");
                csv.push_str(&line);
            }
        }
    }
    match &a.csv {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str::<SynthSpec>(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => SynthSpec::random_scene(a.seed.unwrap_or(0), a.width, a.height, a.layers, a.noise),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let scene = synth_generate(&spec)?;
    io::write_gbls(&a.out, &scene.stack)?;
    let stem = a.out.file_stem().ok_or("output path needs a file name")?.to_string_lossy();
    let gt_path = a.out.with_file_name(format!("{stem}_gt.pgm"));
    io::write_mask_pgm(&gt_path, &scene.ground_truth)?;
    Ok(())
}
