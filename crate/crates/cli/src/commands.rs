use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use netshare::analysis::closed_form::{closed_form_active, closed_form_passive, ActiveSolution, BrgpQuad, Pair};
use netshare::analysis::noise::{boundary_csv, double_violation_window, noise_sweep};
use netshare::analysis::optimize::{
    maximize_1d, optimize_angles, optimize_passive, optimize_precisions, Objective, OptimizationResult,
    OptimizerSettings, PrecisionOptimum,
};
use netshare::analysis::pipeline_brgp;
use netshare::analysis::sweep::{
    active_sweep, closed_form_equal, parse_range, passive_sweep, summarize_active, summarize_passive, sweep_csv,
    Extremum, SweepPoint, SweepSummary,
};
use netshare::measurement::{PointerModel, PointerSpec};
use netshare::network::{Angles, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{
    Failure, Format, GlobalArgs, NoiseArgs, OptimizeArgs, OptimizeModeArg, SweepArgs, SweepModeArg, VerifyArgs,
};

fn params<A: Serialize>(global: &GlobalArgs, args: &A) -> serde_json::Value {
    serde_json::json!({
        "output_dir": global.output_dir,
        "jobs": global.jobs,
        "seed": global.seed,
        "format": global.format,
        "args": args,
    })
}

fn data_path(global: &GlobalArgs, stem: &str) -> PathBuf {
    let ext = match global.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    global.output_dir.join(format!("{stem}.{ext}"))
}

fn summary_path(global: &GlobalArgs, stem: &str) -> PathBuf {
    global.output_dir.join(format!("{stem}_summary.json"))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Invalid(e.to_string()))
}

fn fmt_window(w: Option<(f64, f64)>) -> String {
    match w {
        Some((lo, hi)) => format!("({lo:.6}, {hi:.6})"),
        None => "none".to_string(),
    }
}

#[derive(Serialize)]
struct SweepReport {
    mode: SweepModeArg,
    points: usize,
    summary: Option<SweepSummary>,
}

pub fn sweep(global: &GlobalArgs, args: &SweepArgs) -> Result<(), Failure> {
    let grid = parse_range(&args.g).map_err(Failure::Invalid)?;
    let points: Vec<SweepPoint> = match args.mode {
        SweepModeArg::Passive => passive_sweep(args.pointer1, args.pointer2, &grid)?,
        SweepModeArg::Active => {
            if args.pointer1 != PointerModel::Optimal || args.pointer2 != PointerModel::Optimal {
                return Err(Failure::Invalid(
                    "active sweeps use the optimal pointer on both wings".into(),
                ));
            }
            active_sweep(&grid)?
        }
    };
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let summary = if hi > lo {
        Some(match args.mode {
            SweepModeArg::Passive => summarize_passive(args.pointer1, args.pointer2, lo, hi)?,
            SweepModeArg::Active => summarize_active(lo, hi)?,
        })
    } else {
        None
    };

    let mode = match args.mode {
        SweepModeArg::Passive => "passive",
        SweepModeArg::Active => "active",
    };
    let stem = format!("sweep_{mode}_{}_{}", args.pointer1, args.pointer2);
    let mut manifest = RunManifest::new("sweep", params(global, args));
    let data = data_path(global, &stem);
    let contents = match global.format {
        Format::Csv => sweep_csv(&points),
        Format::Json => to_json(&points)?,
    };
    manifest.write(&data, &contents)?;
    let summary_file = summary_path(global, &stem);
    manifest.write_summary(
        &summary_file,
        &SweepReport {
            mode: args.mode,
            points: points.len(),
            summary,
        },
    )?;

    println!(
        "{mode} sweep, pointers {} / {}, {} points",
        args.pointer1,
        args.pointer2,
        points.len()
    );
    if let Some(s) = summary {
        println!("all four violated: {}", fmt_window(s.quadruple_window));
        println!("B11 and B22 violated: {}", fmt_window(s.double_window));
        println!("max of min(all): {:.6} at G = {:.6}", s.peak_all.value, s.peak_all.g);
        println!(
            "max of min(B11, B22): {:.6} at G = {:.6}",
            s.peak_double.value, s.peak_double.g
        );
    }
    println!("wrote {}", data.display());
    println!("wrote {}", summary_file.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
struct TrialConfig {
    model1: PointerModel,
    g1: f64,
    model2: PointerModel,
    g2: f64,
    pipeline: BrgpQuad,
    closed_form: BrgpQuad,
    deviation: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    trials: usize,
    tolerance: f64,
    seed: u64,
    max_deviation: f64,
    worst: TrialConfig,
    passed: bool,
}

pub fn verify(global: &GlobalArgs, args: &VerifyArgs) -> Result<(), Failure> {
    if args.trials == 0 {
        return Err(Failure::Invalid("--trials must be at least 1".into()));
    }
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(Failure::Invalid(format!(
            "--tol must be a non-negative number, got {}",
            args.tol
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
    let models = [PointerModel::Optimal, PointerModel::Square];
    let mut worst: Option<TrialConfig> = None;
    for _ in 0..args.trials {
        let (model1, model2) = (models[rng.random_range(0..2)], models[rng.random_range(0..2)]);
        let (g1, g2): (f64, f64) = (rng.random(), rng.random());
        let alice1 = PointerSpec::from_model(model1, g1, None)?;
        let charlie1 = PointerSpec::from_model(model2, g2, None)?;
        let cfg = ScenarioConfig::noiseless(alice1, charlie1, Angles::all(FRAC_PI_4));
        let pipeline = pipeline_brgp(&cfg)?;
        let closed_form = closed_form_passive(g1, alice1.f, g2, charlie1.f);
        let deviation = pipeline.max_abs_diff(&closed_form);
        if worst.is_none_or(|w| deviation > w.deviation) {
            worst = Some(TrialConfig {
                model1,
                g1,
                model2,
                g2,
                pipeline,
                closed_form,
                deviation,
            });
        }
    }
    let worst = worst.expect("at least one trial");
    let passed = worst.deviation < args.tol;
    let report = VerifyReport {
        trials: args.trials,
        tolerance: args.tol,
        seed: global.seed,
        max_deviation: worst.deviation,
        worst,
        passed,
    };
    let summary_file = summary_path(global, "verify");
    RunManifest::new("verify", params(global, args)).write_summary(&summary_file, &report)?;

    if passed {
        println!(
            "PASS: max deviation {:e} over {} trials (tolerance {:e})",
            worst.deviation, args.trials, args.tol
        );
        println!("wrote {}", summary_file.display());
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "max deviation {:e} over {} trials is not below tolerance {:e}; offending config {}",
            worst.deviation,
            args.trials,
            args.tol,
            serde_json::to_string(&worst).unwrap_or_default()
        )))
    }
}

#[derive(Serialize)]
struct ActiveReport {
    g: f64,
    closed_form: ActiveSolution,
    numerical: OptimizationResult,
}

#[derive(Serialize)]
struct MixedReport {
    pointer1: PointerModel,
    pointer2: PointerModel,
    joint: PrecisionOptimum,
    equal_g: Extremum,
}

fn template(p1: PointerModel, p2: PointerModel, g: f64) -> Result<ScenarioConfig, Failure> {
    Ok(ScenarioConfig::noiseless(
        PointerSpec::from_model(p1, g, None)?,
        PointerSpec::from_model(p2, g, None)?,
        Angles::default(),
    ))
}

fn print_result(r: &OptimizationResult) {
    println!(
        "B11 = {:.6}, B12 = {:.6}, B21 = {:.6}, B22 = {:.6}",
        r.values.b11, r.values.b12, r.values.b21, r.values.b22
    );
    let a = r.angles;
    println!(
        "angles: A1 ({:.6}, {:.6}) A2 ({:.6}, {:.6}) C1 ({:.6}, {:.6}) C2 ({:.6}, {:.6})",
        a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]
    );
}

pub fn optimize(global: &GlobalArgs, args: &OptimizeArgs) -> Result<(), Failure> {
    let manifest = RunManifest::new("optimize", params(global, args));
    let settings = OptimizerSettings::default();
    match args.mode {
        OptimizeModeArg::Passive => {
            let p1 = args.pointer1.unwrap_or(PointerModel::Optimal);
            let p2 = args.pointer2.unwrap_or(PointerModel::Optimal);
            let result = optimize_passive(&template(p1, p2, args.g)?, &settings)?;
            let file = summary_path(global, "optimize_passive");
            manifest.write_summary(&file, &result)?;
            println!("passive optimum at G = {}: B11 = {:.6}", args.g, result.objective);
            print_result(&result);
            println!("wrote {}", file.display());
        }
        OptimizeModeArg::Active => {
            let optimal = |p: Option<PointerModel>| p.is_none_or(|m| m == PointerModel::Optimal);
            if !optimal(args.pointer1) || !optimal(args.pointer2) {
                return Err(Failure::Invalid(
                    "active sharing uses the optimal pointer on both wings".into(),
                ));
            }
            let closed_form = closed_form_active(args.g)?;
            if closed_form.b11 < 1.0 {
                return Err(Failure::Invalid(format!(
                    "infeasible: B11 = {:.6} < 1 at G = {}, the first observers cannot violate",
                    closed_form.b11, args.g
                )));
            }
            let numerical = optimize_angles(
                &template(PointerModel::Optimal, PointerModel::Optimal, args.g)?,
                &Objective::ActiveB22,
                &settings,
            )?;
            let file = summary_path(global, "optimize_active");
            println!(
                "closed form at G = {}: B11 = {:.6}, B22 = {:.6}, theta1 = {:.6}, theta2 = {:.6}",
                args.g, closed_form.b11, closed_form.b22, closed_form.theta1, closed_form.theta2
            );
            println!(
                "numerical optimum: B22 = {:.6} with B11 = {:.6}",
                numerical.objective, numerical.values.b11
            );
            print_result(&numerical);
            manifest.write_summary(
                &file,
                &ActiveReport {
                    g: args.g,
                    closed_form,
                    numerical,
                },
            )?;
            println!("wrote {}", file.display());
        }
        OptimizeModeArg::Mixed2d => {
            let p1 = args.pointer1.unwrap_or(PointerModel::Square);
            let p2 = args.pointer2.unwrap_or(PointerModel::Optimal);
            if args.grid < 2 {
                return Err(Failure::Invalid("--grid must be at least 2".into()));
            }
            let joint = optimize_precisions((p1, p2), Angles::all(FRAC_PI_4), &[Pair::B11, Pair::B22], args.grid)?;
            let equal = |g: f64| {
                closed_form_equal(p1, p2, g, 1.0, 1.0)
                    .expect("g inside [0, 1]")
                    .min_double()
            };
            let (g, value) = maximize_1d(equal, 0.0, 1.0, 1001, 1e-12)?;
            let file = summary_path(global, "optimize_mixed_2d");
            println!(
                "max min(B11, B22) = {:.6} at (G1, G2) = ({:.6}, {:.6}), pointers {p1} / {p2}",
                joint.value, joint.g1, joint.g2
            );
            println!("equal precisions: {value:.6} at G = {g:.6}");
            manifest.write_summary(
                &file,
                &MixedReport {
                    pointer1: p1,
                    pointer2: p2,
                    joint,
                    equal_g: Extremum { g, value },
                },
            )?;
            println!("wrote {}", file.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct NoiseReport {
    pointer1: PointerModel,
    pointer2: PointerModel,
    resolution: f64,
    peak_double: f64,
    g_at_peak: f64,
    critical_visibility: Option<f64>,
    boundary_points: usize,
    v1: f64,
    v2: f64,
    window: Option<(f64, f64)>,
}

pub fn noise(global: &GlobalArgs, args: &NoiseArgs) -> Result<(), Failure> {
    let (m1, m2) = (args.pointer, args.pointer2.unwrap_or(args.pointer));
    let analysis = noise_sweep(m1, m2, args.resolution)?;
    let window = double_violation_window(m1, m2, args.v1, args.v2)?;

    let stem = format!("noise_{m1}_{m2}");
    let mut manifest = RunManifest::new("noise", params(global, args));
    let data = data_path(global, &stem);
    let contents = match global.format {
        Format::Csv => boundary_csv(&analysis.boundary),
        Format::Json => to_json(&analysis.boundary)?,
    };
    manifest.write(&data, &contents)?;
    let summary_file = summary_path(global, &stem);
    manifest.write_summary(
        &summary_file,
        &NoiseReport {
            pointer1: m1,
            pointer2: m2,
            resolution: args.resolution,
            peak_double: analysis.peak_double,
            g_at_peak: analysis.g_at_peak,
            critical_visibility: analysis.critical_visibility,
            boundary_points: analysis.boundary.len(),
            v1: args.v1,
            v2: args.v2,
            window,
        },
    )?;

    match analysis.critical_visibility {
        Some(v) => println!(
            "critical visibility V* = {v:.6} (max min(B11, B22) = {:.6} at G = {:.6})",
            analysis.peak_double, analysis.g_at_peak
        ),
        None => println!(
            "no double violation at any visibility (max min(B11, B22) = {:.6} at G = {:.6})",
            analysis.peak_double, analysis.g_at_peak
        ),
    }
    println!(
        "double violation window at v1 = {}, v2 = {}: {}",
        args.v1,
        args.v2,
        fmt_window(window)
    );
    println!("wrote {}", data.display());
    println!("wrote {}", summary_file.display());
    Ok(())
}
