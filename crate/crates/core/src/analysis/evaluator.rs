//! Bilocality values computed in the Heisenberg picture.
//!
//! Instead of propagating the state through every outcome branch, each wing
//! observer's marginal statistics are folded into a 2×2 effective observable
//! `O = E⁰ − E¹`, and every correlator becomes
//! `Tr[T_k (O_A ⊗ O_C)]` with `T_k = Σ_b (−1)^{b_k} ρ_b`. This is orders of
//! magnitude cheaper than [`joint_table`](crate::network::joint_table) and
//! is what the optimizer evaluates; results are re-checked against the full
//! pipeline before they are reported.
//!
//! All operators in the scenario are real, so the arithmetic is done in
//! `f64`.

use nalgebra::{Matrix2, Matrix4};

use crate::analysis::closed_form::BrgpQuad;
use crate::brgp::brgp_all;
use crate::error::Result;
use crate::measurement::{parity_sign, Wing};
use crate::network::{build_initial, joint_table, Round, ScenarioConfig};
use crate::qcore::ComplexMatrix;

/// Parity-weighted Bell-conditioned states for one pair of source
/// visibilities.
#[derive(Debug, Clone)]
pub struct SourceCorrelations {
    /// `T_k = Σ_b (−1)^{b_k} ρ_b` for Bob's bit `k ∈ {0, 1}`.
    parity: [Matrix4<f64>; 2],
}

impl SourceCorrelations {
    pub fn new(v1: f64, v2: f64) -> Result<Self> {
        let mut cfg = ScenarioConfig::noiseless(
            crate::measurement::PointerSpec::projective(),
            crate::measurement::PointerSpec::projective(),
            Default::default(),
        );
        cfg.v1 = v1;
        cfg.v2 = v2;
        cfg.validate()?;
        let initial = build_initial(&cfg)?;
        let mut parity = [Matrix4::zeros(); 2];
        for b in 0..4usize {
            let reduced = crate::measurement::bsm_reduce(&initial, b & 2 != 0, b & 1 != 0)?;
            let real = to_real4(reduced.matrix());
            parity[0] += real * parity_sign(b & 2 != 0);
            parity[1] += real * parity_sign(b & 1 != 0);
        }
        Ok(Self { parity })
    }

    /// All four bilocality values for `config`, whose visibilities must be
    /// the ones these correlations were built from.
    pub fn brgp(&self, config: &ScenarioConfig) -> BrgpQuad {
        let obs =
            |wing, round| -> [Matrix2<f64>; 2] { [false, true].map(|s| effective_observable(config, wing, round, s)) };
        let alice = [obs(Wing::Alice, Round::First), obs(Wing::Alice, Round::Second)];
        let charlie = [obs(Wing::Charlie, Round::First), obs(Wing::Charlie, Round::Second)];
        let value = |n: usize, m: usize| {
            let mut i_sum = 0.0;
            let mut j_sum = 0.0;
            for (i, oa) in alice[n].iter().enumerate() {
                for (j, oc) in charlie[m].iter().enumerate() {
                    let joint = kron2(oa, oc);
                    i_sum += trace_product(&self.parity[0], &joint);
                    let sign = parity_sign(i == 1) * parity_sign(j == 1);
                    j_sum += sign * trace_product(&self.parity[1], &joint);
                }
            }
            (i_sum / 4.0).abs().sqrt() + (j_sum / 4.0).abs().sqrt()
        };
        BrgpQuad {
            b11: value(0, 0),
            b12: value(0, 1),
            b21: value(1, 0),
            b22: value(1, 1),
        }
    }
}

/// One-shot Heisenberg-picture evaluation of `config`.
pub fn fast_brgp(config: &ScenarioConfig) -> Result<BrgpQuad> {
    config.validate()?;
    Ok(SourceCorrelations::new(config.v1, config.v2)?.brgp(config))
}

/// All four bilocality values through the full joint-table pipeline.
pub fn pipeline_brgp(config: &ScenarioConfig) -> Result<BrgpQuad> {
    let table = joint_table(config)?;
    Ok(BrgpQuad::from_array(brgp_all(&table)?.map(|r| r.b)))
}

fn observable(wing: Wing, setting: bool, angle: f64) -> Matrix2<f64> {
    let sx_sign = match wing {
        Wing::Alice => -1.0,
        Wing::Charlie => 1.0,
    };
    let (s, c) = angle.sin_cos();
    let x = sx_sign * parity_sign(setting) * s;
    Matrix2::new(c, x, x, -c)
}

/// `E⁰ − E¹` for the marginal statistics of one wing observer, averaged
/// uniformly over the other observer's settings on that wing.
fn effective_observable(config: &ScenarioConfig, wing: Wing, round: Round, setting: bool) -> Matrix2<f64> {
    let spec = config.pointer(wing);
    match round {
        // Summing the later projective outcome leaves the weak POVM, whose
        // effects differ by G times the observable.
        Round::First => observable(wing, setting, config.angles.get(wing, Round::First, setting)) * spec.g,
        // The first observer's instrument summed over its outcomes is the
        // channel X ↦ F X + (1 − F)(Π⁰ X Π⁰ + Π¹ X Π¹), applied in the
        // Heisenberg picture to the second observer's observable.
        Round::Second => {
            let second = observable(wing, setting, config.angles.get(wing, Round::Second, setting));
            let mut acc = Matrix2::zeros();
            for first_setting in [false, true] {
                let first = observable(
                    wing,
                    first_setting,
                    config.angles.get(wing, Round::First, first_setting),
                );
                let id = Matrix2::identity();
                let p0 = (id + first) * 0.5;
                let p1 = (id - first) * 0.5;
                acc += second * spec.f + (p0 * second * p0 + p1 * second * p1) * (1.0 - spec.f);
            }
            acc * 0.5
        }
    }
}

fn kron2(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn trace_product(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

fn to_real4(m: &ComplexMatrix) -> Matrix4<f64> {
    debug_assert!(m.iter().all(|z| z.im.abs() < 1e-14));
    Matrix4::from_fn(|r, c| m[(r, c)].re)
}
