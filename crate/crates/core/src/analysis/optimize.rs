//! Derivative-free search over measurement angles (and, for mixed
//! pointers, over the two precision factors).
//!
//! The search evaluates a coarse grid on the wing-symmetric slice
//! (`θ` shared by Alice₁/Charlie₁ and by Alice₂/Charlie₂, equal for both
//! settings), lifts the best grid point into the requested ansatz, and
//! polishes it with Nelder–Mead. Candidates are scored with the
//! Heisenberg-picture evaluator; the reported values come from the full
//! joint-table pipeline at the returned angles.

use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::analysis::closed_form::{BrgpQuad, Pair};
use crate::analysis::evaluator::{pipeline_brgp, SourceCorrelations};
use crate::error::{Error, Result};
use crate::measurement::{PointerModel, PointerSpec};
use crate::network::{Angles, ScenarioConfig};

/// Grid improvements smaller than this count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

/// What the first observers try to achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Maximize their own value `B11`.
    MaxB11,
    /// Maximize the smallest of the listed values.
    MaxMin(Vec<Pair>),
    /// Maximize `B22` subject to `B11 ≥ 1`.
    ActiveB22,
}

impl Objective {
    pub fn mode(&self) -> Mode {
        match self {
            Objective::ActiveB22 => Mode::Active,
            _ => Mode::Passive,
        }
    }

    /// Score of `b`. Infeasible points of the constrained objective score
    /// `B11 − 1 < 0`, below every feasible point and increasing towards
    /// the feasible region.
    pub fn value(&self, b: &BrgpQuad) -> f64 {
        match self {
            Objective::MaxB11 => b.b11,
            Objective::MaxMin(pairs) => pairs.iter().map(|&p| b.get(p)).fold(f64::INFINITY, f64::min),
            Objective::ActiveB22 => {
                if b.b11 >= 1.0 {
                    b.b22
                } else {
                    b.b11 - 1.0
                }
            }
        }
    }

    fn slack(&self, b: &BrgpQuad) -> Option<f64> {
        match self {
            Objective::ActiveB22 => Some(b.b11 - 1.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Passive,
    Active,
}

/// Which angles are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ansatz {
    /// Two angles: first observers, second observers (same on both wings).
    WingSymmetric,
    /// Four angles, one per observer, shared by both settings.
    PerObserver,
    /// All eight angles.
    Full,
}

impl Ansatz {
    pub fn dimension(self) -> usize {
        match self {
            Ansatz::WingSymmetric => 2,
            Ansatz::PerObserver => 4,
            Ansatz::Full => 8,
        }
    }

    fn angles(self, x: &[f64]) -> Angles {
        let t: Vec<f64> = x.iter().map(|v| v.clamp(0.0, PI)).collect();
        match self {
            Ansatz::WingSymmetric => Angles::rounds(t[0], t[1]),
            Ansatz::PerObserver => Angles::per_observer(t[0], t[1], t[2], t[3]),
            Ansatz::Full => Angles::from_array(t.try_into().expect("eight angles")),
        }
    }

    /// Embeds a wing-symmetric point `(first, second)`.
    fn lift(self, first: f64, second: f64) -> Vec<f64> {
        match self {
            Ansatz::WingSymmetric => vec![first, second],
            Ansatz::PerObserver => vec![first, second, first, second],
            Ansatz::Full => Angles::rounds(first, second).to_array().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Grid points per angle on `[0, π]`.
    pub grid_points: usize,
    /// Simplex convergence tolerance on the objective.
    pub tolerance: f64,
    pub max_iters: u64,
    pub ansatz: Ansatz,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid_points: 64,
            tolerance: 1e-10,
            max_iters: 200,
            ansatz: Ansatz::PerObserver,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub mode: Mode,
    pub objective: f64,
    /// Radians, ordered Alice₁(0,1), Alice₂(0,1), Charlie₁(0,1), Charlie₂(0,1).
    pub angles: [f64; 8],
    /// Values at `angles` from the full pipeline.
    pub values: BrgpQuad,
    /// `B11 − 1` for the active objective.
    pub constraint_slack: Option<f64>,
    /// Best objective on the coarse grid.
    pub grid_objective: f64,
    pub iterations: u64,
}

impl OptimizationResult {
    pub fn angles(&self) -> Angles {
        Angles::from_array(self.angles)
    }
}

struct AngleProblem<'a> {
    template: &'a ScenarioConfig,
    sources: &'a SourceCorrelations,
    objective: &'a Objective,
    ansatz: Ansatz,
}

impl AngleProblem<'_> {
    fn score(&self, x: &[f64]) -> f64 {
        let mut cfg = *self.template;
        cfg.angles = self.ansatz.angles(x);
        self.objective.value(&self.sources.brgp(&cfg))
    }
}

impl CostFunction for AngleProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-self.score(x))
    }
}

/// Searches the angles of `template` (its pointers and visibilities stay
/// fixed) for the best value of `objective`.
pub fn optimize_angles(
    template: &ScenarioConfig,
    objective: &Objective,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    template.validate()?;
    if settings.grid_points < 2 {
        return Err(Error::Optimizer("grid needs at least two points per angle".into()));
    }
    if let Objective::MaxMin(pairs) = objective {
        if pairs.is_empty() {
            return Err(Error::Optimizer("max-min objective needs at least one pair".into()));
        }
    }
    let sources = SourceCorrelations::new(template.v1, template.v2)?;
    let problem = AngleProblem {
        template,
        sources: &sources,
        objective,
        ansatz: settings.ansatz,
    };

    // Ascending scan that only moves on a clear improvement keeps the
    // lexicographically smallest point among ties and rounding-level
    // near-ties.
    let step = PI / (settings.grid_points - 1) as f64;
    let mut grid_best = (f64::NEG_INFINITY, vec![]);
    for k1 in 0..settings.grid_points {
        for k2 in 0..settings.grid_points {
            let x = settings.ansatz.lift(k1 as f64 * step, k2 as f64 * step);
            let v = problem.score(&x);
            if v > grid_best.0 + TIE_TOLERANCE {
                grid_best = (v, x);
            }
        }
    }
    let (grid_objective, x0) = grid_best;

    let simplex: Vec<Vec<f64>> = std::iter::once(x0.clone())
        .chain((0..x0.len()).map(|d| {
            let mut x = x0.clone();
            x[d] += if x[d] + step <= PI { step } else { -step };
            x
        }))
        .collect();
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(settings.tolerance)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let run = Executor::new(problem, solver)
        .configure(|state| state.max_iters(settings.max_iters))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let state = run.state();
    let iterations = state.get_iter();
    let refined = state.get_best_param().cloned().unwrap_or_else(|| x0.clone());
    let refined_value = -state.get_best_cost();

    let best = if refined_value >= grid_objective { refined } else { x0 };
    let mut cfg = *template;
    cfg.angles = settings.ansatz.angles(&best);
    let values = pipeline_brgp(&cfg)?;
    let objective_value = objective.value(&values);
    let constraint_slack = objective.slack(&values);
    if matches!(constraint_slack, Some(s) if s < 0.0) {
        return Err(Error::Infeasible(format!(
            "B11 ≥ 1 unreachable: best B11 = {:.6} with G1 = {}, G2 = {}",
            values.b11, template.alice1.g, template.charlie1.g
        )));
    }
    Ok(OptimizationResult {
        mode: objective.mode(),
        objective: objective_value,
        angles: cfg.angles.to_array(),
        values,
        constraint_slack,
        grid_objective,
        iterations,
    })
}

/// Passive sharing: the first observers maximize `B11`; the second
/// observers then pick the shared angle that maximizes `B22` given those
/// settings.
pub fn optimize_passive(template: &ScenarioConfig, settings: &OptimizerSettings) -> Result<OptimizationResult> {
    let first = optimize_angles(template, &Objective::MaxB11, settings)?;
    let sources = SourceCorrelations::new(template.v1, template.v2)?;
    let with_second = |theta: f64| {
        let mut a = first.angles;
        for k in [2, 3, 6, 7] {
            a[k] = theta;
        }
        Angles::from_array(a)
    };
    let b22 = |theta: f64| {
        let mut cfg = *template;
        cfg.angles = with_second(theta);
        sources.brgp(&cfg).b22
    };
    let (theta, _) = maximize_1d(b22, 0.0, PI, settings.grid_points.max(3), 1e-12)?;
    let mut cfg = *template;
    cfg.angles = with_second(theta);
    let values = pipeline_brgp(&cfg)?;
    Ok(OptimizationResult {
        objective: Objective::MaxB11.value(&values),
        angles: cfg.angles.to_array(),
        values,
        ..first
    })
}

/// Best precision pair for a fixed pair of pointer models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionOptimum {
    pub value: f64,
    pub g1: f64,
    pub g2: f64,
    pub f1: f64,
    pub f2: f64,
    /// Values at `(g1, g2)` from the full pipeline.
    pub values: BrgpQuad,
}

struct PrecisionProblem<'a> {
    models: (PointerModel, PointerModel),
    angles: Angles,
    sources: &'a SourceCorrelations,
    pairs: &'a [Pair],
}

impl PrecisionProblem<'_> {
    fn config(&self, g1: f64, g2: f64) -> Result<ScenarioConfig> {
        Ok(ScenarioConfig::noiseless(
            PointerSpec::from_model(self.models.0, g1.clamp(0.0, 1.0), None)?,
            PointerSpec::from_model(self.models.1, g2.clamp(0.0, 1.0), None)?,
            self.angles,
        ))
    }

    fn score(&self, g1: f64, g2: f64) -> Result<f64> {
        let b = self.sources.brgp(&self.config(g1, g2)?);
        Ok(Objective::MaxMin(self.pairs.to_vec()).value(&b))
    }
}

impl CostFunction for PrecisionProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-self.score(x[0], x[1])?)
    }
}

/// Maximizes `min(pairs)` over `(G1, G2) ∈ [0, 1]²` at fixed angles for
/// noiseless sources. Models must derive `F` from `G` (optimal or square).
pub fn optimize_precisions(
    models: (PointerModel, PointerModel),
    angles: Angles,
    pairs: &[Pair],
    grid_points: usize,
) -> Result<PrecisionOptimum> {
    if models.0 == PointerModel::Explicit || models.1 == PointerModel::Explicit {
        return Err(Error::Optimizer(
            "precision search needs pointer models that fix F from G".into(),
        ));
    }
    if grid_points < 2 || pairs.is_empty() {
        return Err(Error::Optimizer(
            "need a grid of at least two points and one pair".into(),
        ));
    }
    let sources = SourceCorrelations::new(1.0, 1.0)?;
    let problem = PrecisionProblem {
        models,
        angles,
        sources: &sources,
        pairs,
    };
    let step = 1.0 / (grid_points - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for k1 in 0..grid_points {
        for k2 in 0..grid_points {
            let (g1, g2) = (k1 as f64 * step, k2 as f64 * step);
            let v = problem.score(g1, g2)?;
            if v > best.0 + TIE_TOLERANCE {
                best = (v, g1, g2);
            }
        }
    }
    let (grid_value, g1, g2) = best;
    let nudge = |g: f64| if g + step <= 1.0 { g + step } else { g - step };
    let simplex = vec![vec![g1, g2], vec![nudge(g1), g2], vec![g1, nudge(g2)]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let run = Executor::new(problem, solver)
        .configure(|state| state.max_iters(500))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let state = run.state();
    let refined = state.get_best_param().cloned().unwrap_or_else(|| vec![g1, g2]);
    let (g1, g2) = if -state.get_best_cost() >= grid_value {
        (refined[0].clamp(0.0, 1.0), refined[1].clamp(0.0, 1.0))
    } else {
        (g1, g2)
    };

    let problem = PrecisionProblem {
        models,
        angles,
        sources: &sources,
        pairs,
    };
    let cfg = problem.config(g1, g2)?;
    let values = pipeline_brgp(&cfg)?;
    Ok(PrecisionOptimum {
        value: Objective::MaxMin(pairs.to_vec()).value(&values),
        g1,
        g2,
        f1: cfg.alice1.f,
        f2: cfg.charlie1.f,
        values,
    })
}

struct Negated<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Negated<F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-(self.0)(*x))
    }
}

/// Maximizes a function that is unimodal on the neighbourhood of its best
/// grid point: scan `grid_points` values on `[lo, hi]`, then golden-section
/// search between the grid neighbours of the best one.
pub fn maximize_1d<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tolerance: f64,
) -> Result<(f64, f64)> {
    assert!(grid_points >= 3 && hi > lo);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let (k_best, _) =
        (0..grid_points)
            .map(|k| (k, f(lo + k as f64 * step)))
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 + TIE_TOLERANCE {
                    (k, v)
                } else {
                    best
                }
            });
    let left = lo + k_best.saturating_sub(1) as f64 * step;
    let right = (lo + (k_best + 1) as f64 * step).min(hi);
    let start = lo + k_best as f64 * step;
    let solver = GoldenSectionSearch::new(left, right)
        .and_then(|s| s.with_tolerance(tolerance))
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let run = Executor::new(Negated(&f), solver)
        .configure(|state| state.param(start).max_iters(500))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let x = run.state().get_best_param().copied().unwrap_or(start);
    let (x, v) = if f(x) >= f(start) { (x, f(x)) } else { (start, f(start)) };
    Ok((x, v))
}
