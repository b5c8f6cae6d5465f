//! Sweeps over the common precision factor `G1 = G2 = G`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::closed_form::{closed_form_active, closed_form_passive_noisy, BrgpQuad};
use crate::analysis::evaluator::pipeline_brgp;
use crate::analysis::optimize::maximize_1d;
use crate::brgp::BILOCAL_BOUND;
use crate::error::{Error, Result};
use crate::format_f64;
use crate::measurement::{PointerModel, PointerSpec};
use crate::network::{Angles, ScenarioConfig};

/// Bisection tolerance on window endpoints.
pub const WINDOW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Passive,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub g: f64,
    pub model1: PointerModel,
    pub model2: PointerModel,
    pub f1: f64,
    pub f2: f64,
    pub values: BrgpQuad,
    pub all_violated: bool,
}

impl SweepPoint {
    fn new(cfg: &ScenarioConfig, values: BrgpQuad) -> Self {
        Self {
            g: cfg.alice1.g,
            model1: cfg.alice1.model,
            model2: cfg.charlie1.model,
            f1: cfg.alice1.f,
            f2: cfg.charlie1.f,
            values,
            all_violated: values.min_all() > BILOCAL_BOUND,
        }
    }
}

/// `start:stop:step`, inclusive of `stop` within half a step.
pub fn parse_range(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("range `{spec}` must look like start:stop:step"));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number `{s}` in range: {e}"))
    };
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    grid(start, stop, step)
}

pub fn grid(start: f64, stop: f64, step: f64) -> std::result::Result<Vec<f64>, String> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(format!("invalid range {start}:{stop}:{step}"));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    // Points within rounding of `stop` land exactly on it.
    let snap = |x: f64| if (x - stop).abs() <= 1e-9 * step { stop } else { x };
    Ok((0..=n).map(|k| snap(start + k as f64 * step)).collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    match grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        Some(&g) => Err(Error::InvalidPrecision(g)),
        None => Ok(()),
    }
}

/// All four values from the full pipeline at θ = π/4 for every `G`.
pub fn passive_sweep(model1: PointerModel, model2: PointerModel, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&g| {
            let cfg = ScenarioConfig::noiseless(
                PointerSpec::from_model(model1, g, None)?,
                PointerSpec::from_model(model2, g, None)?,
                Angles::default(),
            );
            Ok(SweepPoint::new(&cfg, pipeline_brgp(&cfg)?))
        })
        .collect()
}

/// Full-pipeline values at the piecewise active-sharing angles, optimal
/// pointer on both wings.
pub fn active_sweep(grid: &[f64]) -> Result<Vec<SweepPoint>> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&g| {
            let sol = closed_form_active(g)?;
            let cfg = ScenarioConfig::noiseless(
                PointerSpec::optimal(g)?,
                PointerSpec::optimal(g)?,
                Angles::rounds(sol.theta1, sol.theta2),
            );
            Ok(SweepPoint::new(&cfg, pipeline_brgp(&cfg)?))
        })
        .collect()
}

/// CSV with header `G,F1,F2,B11,B12,B21,B22,all_violated`.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("G,F1,F2,B11,B12,B21,B22,all_violated\n");
    for p in points {
        let mut fields = vec![format_f64(p.g), format_f64(p.f1), format_f64(p.f2)];
        fields.extend(p.values.to_array().map(format_f64));
        fields.push(p.all_violated.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Passive closed forms at equal precision `g` and visibilities `(v1, v2)`.
pub fn closed_form_equal(model1: PointerModel, model2: PointerModel, g: f64, v1: f64, v2: f64) -> Result<BrgpQuad> {
    let p1 = PointerSpec::from_model(model1, g, None)?;
    let p2 = PointerSpec::from_model(model2, g, None)?;
    Ok(closed_form_passive_noisy(p1.g, p1.f, p2.g, p2.f, v1, v2))
}

/// Interval of `x ∈ [lo, hi]` where `h(x) > 0`, taken as the run of
/// positive grid points around the largest value and refined by bisection.
/// An endpoint where `h` is still positive at the range boundary is
/// reported as that boundary.
pub fn violation_window<H: Fn(f64) -> f64>(h: H, lo: f64, hi: f64, grid_points: usize) -> Option<(f64, f64)> {
    let step = (hi - lo) / (grid_points - 1) as f64;
    let xs: Vec<f64> = (0..grid_points).map(|k| lo + k as f64 * step).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
    let (best, &best_val) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if best_val <= 0.0 {
        return None;
    }
    let mut left = best;
    while left > 0 && vals[left - 1] > 0.0 {
        left -= 1;
    }
    let mut right = best;
    while right + 1 < xs.len() && vals[right + 1] > 0.0 {
        right += 1;
    }
    let start = if left == 0 {
        lo
    } else {
        bisect(&h, xs[left - 1], xs[left])
    };
    let end = if right + 1 == xs.len() {
        hi
    } else {
        bisect(&h, xs[right], xs[right + 1])
    };
    Some((start, end))
}

/// Root of `h` between `a` and `b`, where `h(a)` and `h(b)` differ in sign.
pub fn bisect<H: Fn(f64) -> f64>(h: &H, mut a: f64, mut b: f64) -> f64 {
    let positive_at_a = h(a) > 0.0;
    while b - a > WINDOW_TOLERANCE {
        let mid = 0.5 * (a + b);
        if (h(mid) > 0.0) == positive_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub g: f64,
    pub value: f64,
}

/// Windows and peaks of a sweep, located on the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub mode: SweepMode,
    pub model1: PointerModel,
    pub model2: PointerModel,
    /// Where all four values exceed 1.
    pub quadruple_window: Option<(f64, f64)>,
    /// Where `B11` and `B22` both exceed 1.
    pub double_window: Option<(f64, f64)>,
    /// Maximum over `G` of the smallest of the four values.
    pub peak_all: Extremum,
    /// Maximum over `G` of `min(B11, B22)`.
    pub peak_double: Extremum,
}

const SUMMARY_GRID: usize = 1001;

/// Summary of a passive sweep over `[lo, hi]`.
pub fn summarize_passive(model1: PointerModel, model2: PointerModel, lo: f64, hi: f64) -> Result<SweepSummary> {
    let quad = |g: f64| closed_form_equal(model1, model2, g, 1.0, 1.0).expect("g inside [0, 1]");
    summarize(SweepMode::Passive, model1, model2, lo, hi, quad)
}

/// Summary of an active sweep over `[lo, hi]`. Only `B11` and `B22` have
/// active closed forms, so the quadruple window and `peak_all` are taken
/// over those two as well.
pub fn summarize_active(lo: f64, hi: f64) -> Result<SweepSummary> {
    let quad = |g: f64| {
        let s = closed_form_active(g).expect("g inside [0, 1]");
        BrgpQuad {
            b11: s.b11,
            b12: s.b11,
            b21: s.b22,
            b22: s.b22,
        }
    };
    summarize(
        SweepMode::Active,
        PointerModel::Optimal,
        PointerModel::Optimal,
        lo,
        hi,
        quad,
    )
}

fn summarize<Q: Fn(f64) -> BrgpQuad>(
    mode: SweepMode,
    model1: PointerModel,
    model2: PointerModel,
    lo: f64,
    hi: f64,
    quad: Q,
) -> Result<SweepSummary> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || hi <= lo {
        return Err(Error::InvalidPrecision(if hi <= lo { hi } else { lo.min(hi) }));
    }
    let all = |g: f64| quad(g).min_all();
    let double = |g: f64| quad(g).min_double();
    let (g_all, v_all) = maximize_1d(all, lo, hi, SUMMARY_GRID, 1e-12)?;
    let (g_double, v_double) = maximize_1d(double, lo, hi, SUMMARY_GRID, 1e-12)?;
    Ok(SweepSummary {
        mode,
        model1,
        model2,
        quadruple_window: violation_window(|g| all(g) - BILOCAL_BOUND, lo, hi, SUMMARY_GRID),
        double_window: violation_window(|g| double(g) - BILOCAL_BOUND, lo, hi, SUMMARY_GRID),
        peak_all: Extremum { g: g_all, value: v_all },
        peak_double: Extremum {
            g: g_double,
            value: v_double,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        // 0.5 + 500 * 0.001 lands within half a step of 1.0.
        let g = parse_range("0.5:1.0:0.001").unwrap();
        assert_eq!(g.len(), 501);
        assert_eq!(*g.last().unwrap(), 1.0);
        // 3 * 0.1 overshoots 0.3 by one ulp and is snapped back.
        assert_eq!(*parse_range("0:0.3:0.1").unwrap().last().unwrap(), 0.3);
        // stop not on the grid: last point is the one within half a step.
        assert_eq!(parse_range("0:1:0.3").unwrap().len(), 4);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("0:x:0.1").is_err());
    }

    #[test]
    fn out_of_range_grid_rejected() {
        let err = passive_sweep(PointerModel::Optimal, PointerModel::Optimal, &[0.5, 1.2]).unwrap_err();
        assert_eq!(err, Error::InvalidPrecision(1.2));
    }

    #[test]
    fn window_bisection_on_parabola() {
        let w = violation_window(|x| 0.04 - (x - 0.5).powi(2), 0.0, 1.0, 101).unwrap();
        assert_abs_diff_eq!(w.0, 0.3, epsilon = 1e-10);
        assert_abs_diff_eq!(w.1, 0.7, epsilon = 1e-10);
        assert_eq!(violation_window(|x| -x, 0.0, 1.0, 11), None);
        let open = violation_window(|x| x - 0.5, 0.0, 1.0, 11).unwrap();
        assert_abs_diff_eq!(open.0, 0.5, epsilon = 1e-10);
        assert_eq!(open.1, 1.0);
    }

    #[test]
    fn csv_layout() {
        let pts = passive_sweep(PointerModel::Optimal, PointerModel::Square, &[0.7, 0.8]).unwrap();
        let csv = sweep_csv(&pts);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "G,F1,F2,B11,B12,B21,B22,all_violated");
        assert_eq!(lines.len(), 3);
        let fields: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.8);
        assert_eq!(fields[7], "false");
    }

    #[test]
    fn sweep_points_match_closed_forms() {
        let grid = [0.1, 0.5, 0.75, 0.9];
        let pts = passive_sweep(PointerModel::Square, PointerModel::Optimal, &grid).unwrap();
        for p in pts {
            let closed = closed_form_equal(PointerModel::Square, PointerModel::Optimal, p.g, 1.0, 1.0).unwrap();
            assert!(p.values.max_abs_diff(&closed) < 1e-12);
        }
    }
}
