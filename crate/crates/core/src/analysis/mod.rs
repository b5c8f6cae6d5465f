//! Closed forms, derivative-free optimization, sharing sweeps and noise
//! robustness built on top of the exact pipeline.

pub mod closed_form;
pub mod evaluator;
pub mod noise;
pub mod optimize;
pub mod sweep;

pub use closed_form::{
    closed_form_active, closed_form_passive, closed_form_passive_noisy, ActiveSolution, BrgpQuad, Pair,
};
pub use evaluator::{fast_brgp, pipeline_brgp, SourceCorrelations};
pub use noise::{double_violation_window, noise_sweep, NoiseAnalysis};
pub use optimize::{
    optimize_angles, optimize_passive, optimize_precisions, Ansatz, Mode, Objective, OptimizationResult,
    OptimizerSettings, PrecisionOptimum,
};
pub use sweep::{active_sweep, passive_sweep, summarize_active, summarize_passive, SweepPoint, SweepSummary};
