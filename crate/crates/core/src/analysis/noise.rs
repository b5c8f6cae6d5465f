//! Robustness of double violation (`B11 > 1` and `B22 > 1`) against white
//! noise in the sources.
//!
//! At θ = π/4 every value scales with `V = √(v1 v2)`, so double violation
//! is possible exactly when `V · max_G min(B11, B22) > 1`.

use serde::{Deserialize, Serialize};

use crate::analysis::optimize::maximize_1d;
use crate::analysis::sweep::{closed_form_equal, violation_window};
use crate::brgp::BILOCAL_BOUND;
use crate::error::{Error, Result};
use crate::format_f64;
use crate::measurement::PointerModel;

/// Finest accepted visibility resolution.
pub const MIN_RESOLUTION: f64 = 1e-4;

const G_GRID: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub v: f64,
    pub g_low: f64,
    pub g_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAnalysis {
    pub model1: PointerModel,
    pub model2: PointerModel,
    /// Largest `min(B11, B22)` over `G` for noiseless sources.
    pub peak_double: f64,
    /// Precision at which `peak_double` is reached.
    pub g_at_peak: f64,
    /// `1 / peak_double`, or `None` when no visibility allows double violation.
    pub critical_visibility: Option<f64>,
    /// For each visibility above the critical one, the `G` interval with
    /// double violation.
    pub boundary: Vec<BoundaryPoint>,
}

fn double_value(model1: PointerModel, model2: PointerModel, g: f64, v: f64) -> f64 {
    closed_form_equal(model1, model2, g, v, v)
        .expect("g inside [0, 1]")
        .min_double()
}

/// `G` window of double violation for visibilities `(v1, v2)`.
pub fn double_violation_window(
    model1: PointerModel,
    model2: PointerModel,
    v1: f64,
    v2: f64,
) -> Result<Option<(f64, f64)>> {
    for v in [v1, v2] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidVisibility(v));
        }
    }
    let v = (v1 * v2).sqrt();
    Ok(violation_window(
        |g| double_value(model1, model2, g, v) - BILOCAL_BOUND,
        0.0,
        1.0,
        G_GRID,
    ))
}

/// Critical visibility and the `(V, G)` violation region sampled every
/// `resolution` in `V`.
pub fn noise_sweep(model1: PointerModel, model2: PointerModel, resolution: f64) -> Result<NoiseAnalysis> {
    if !(MIN_RESOLUTION..=1.0).contains(&resolution) {
        return Err(Error::Optimizer(format!(
            "visibility resolution {resolution} outside [{MIN_RESOLUTION}, 1]"
        )));
    }
    if model1 == PointerModel::Explicit || model2 == PointerModel::Explicit {
        return Err(Error::Optimizer("noise sweep needs optimal or square pointers".into()));
    }
    let (g_at_peak, peak_double) = maximize_1d(|g| double_value(model1, model2, g, 1.0), 0.0, 1.0, G_GRID, 1e-12)?;
    let critical_visibility = (peak_double > BILOCAL_BOUND).then(|| BILOCAL_BOUND / peak_double);

    let mut boundary = Vec::new();
    if let Some(v_star) = critical_visibility {
        let steps = (1.0 / resolution).round() as usize;
        for k in 1..=steps {
            let v = (k as f64 * resolution).min(1.0);
            if v <= v_star {
                continue;
            }
            let window = violation_window(|g| double_value(model1, model2, g, v) - BILOCAL_BOUND, 0.0, 1.0, G_GRID);
            if let Some((g_low, g_high)) = window {
                boundary.push(BoundaryPoint { v, g_low, g_high });
            }
        }
    }
    Ok(NoiseAnalysis {
        model1,
        model2,
        peak_double,
        g_at_peak,
        critical_visibility,
        boundary,
    })
}

/// CSV with header `V,G_low,G_high`.
pub fn boundary_csv(points: &[BoundaryPoint]) -> String {
    let mut out = String::from("V,G_low,G_high\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            format_f64(p.v),
            format_f64(p.g_low),
            format_f64(p.g_high)
        ));
    }
    out
}
