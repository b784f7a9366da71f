//! Generalized boundary detection over stacks of image interpretation layers.
//!
//! Every layer (colour channel, flow component, depth, soft segmentation,
//! classifier output) is treated uniformly: a local linear model with a
//! shared boundary normal is fitted around each pixel and the boundary
//! strength is read off a 2×2 eigenproblem.

pub mod depth;
pub mod error;
pub mod grid;
pub mod io;
pub mod layers;
pub mod eval;
pub mod fast;
pub mod model;
mod par;
pub mod postprocess;
pub mod softseg;
pub mod synth;
pub mod train;

pub use error::{GbError, Result};
pub use grid::{Grid, Mask, ScalarMap};
pub use layers::LayerStack;
pub use model::{
    eigen2x2_sym, gb1_detect, gb1_jacobians, local_fit, JacobianField, project_to_disk, Eigen2, GbConfig, LocalFit,
    PositionBasis, RawBoundaryMap,
};
pub use fast::{build_integrals, gb2_detect, gb2_jacobians, gb2_local_j, multiscale_detect, IntegralImages, Rect, RectSums};
pub use postprocess::{calibrate, fit_logistic, logistic_prob, nms, thin_mask, LogisticParams};
pub use eval::{match_boundaries, pr_curve, MatchResult, PrAccumulator, PrCurve, PrPoint};
pub use depth::depth_largest_component;
pub use softseg::{
    figure_ground_score, fit_color_subspace, patch_indicator, sample_grid, soft_segment, soft_segment_at,
    ColorQuantizer, ColorSubspace, SoftSegConfig, SoftSegStack,
};
pub use synth::{synth_generate, Region, Shape, SynthScene, SynthSpec};
pub use train::{
    learn_layer_scales, nelder_mead, train, Detector, EvalConfig, ScaleLearning, ScaleObjective, ScaleVector,
    TrainedModel, TrainingExample,
};
