//! Dichotomic qubit observables, pointer models, and the weak and strong
//! measurement instruments used by the sequential observers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    bell_state, embed, identity, kron, partial_trace, pauli_x, pauli_z, sandwich, ComplexMatrix, DensityOperator,
};

/// Slack allowed on the pointer trade-off `F² + G² ≤ 1`.
pub const POINTER_SLACK: f64 = 1e-12;

/// `(−1)^bit`
#[inline]
pub fn parity_sign(bit: bool) -> f64 {
    if bit {
        -1.0
    } else {
        1.0
    }
}

/// Which outer particle an observer holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wing {
    Alice,
    Charlie,
}

impl Wing {
    /// Register position of this wing's qubit: first for Alice, last for Charlie.
    pub fn qubit(self, n_qubits: usize) -> usize {
        match self {
            Wing::Alice => 0,
            Wing::Charlie => n_qubits - 1,
        }
    }

    /// Sign in front of the σx term for setting 0.
    fn sx_sign(self) -> f64 {
        match self {
            Wing::Alice => -1.0,
            Wing::Charlie => 1.0,
        }
    }
}

/// A dichotomic observable `cos θ σz ± (−1)^setting sin θ σx`, with the minus
/// sign on Alice's wing and the plus sign on Charlie's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub wing: Wing,
    pub setting: bool,
    pub angle: f64,
}

impl Observable {
    pub fn new(wing: Wing, setting: bool, angle: f64) -> Result<Self> {
        check_angle(angle)?;
        Ok(Self { wing, setting, angle })
    }
}

pub(crate) fn check_angle(angle: f64) -> Result<()> {
    if angle.is_finite() && (0.0..=PI).contains(&angle) {
        Ok(())
    } else {
        Err(Error::InvalidAngle(angle))
    }
}

pub fn observable_matrix(obs: &Observable) -> ComplexMatrix {
    let sx_coeff = obs.wing.sx_sign() * parity_sign(obs.setting) * obs.angle.sin();
    pauli_z().scale(obs.angle.cos()) + pauli_x().scale(sx_coeff)
}

/// `(I + (−1)^outcome O) / 2`
pub fn projector(obs: &Observable, outcome: bool) -> ComplexMatrix {
    (identity(2) + observable_matrix(obs).scale(parity_sign(outcome))).scale(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointerModel {
    /// Saturates `F² + G² = 1`.
    Optimal,
    /// `F + G = 1`.
    Square,
    /// Caller-supplied `(F, G)` inside the quantum trade-off region.
    Explicit,
}

impl std::str::FromStr for PointerModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "optimal" => Ok(Self::Optimal),
            "square" => Ok(Self::Square),
            "explicit" => Ok(Self::Explicit),
            other => Err(format!("unknown pointer model `{other}`")),
        }
    }
}

impl std::fmt::Display for PointerModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::Square => "square",
            Self::Explicit => "explicit",
        })
    }
}

/// Pointer model with its precision factor `G` (information gain) and
/// quality factor `F` (how little the state is disturbed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerSpec {
    pub model: PointerModel,
    pub g: f64,
    pub f: f64,
}

impl PointerSpec {
    pub fn optimal(g: f64) -> Result<Self> {
        check_precision(g)?;
        Ok(Self {
            model: PointerModel::Optimal,
            g,
            f: (1.0 - g * g).max(0.0).sqrt(),
        })
    }

    pub fn square(g: f64) -> Result<Self> {
        check_precision(g)?;
        Ok(Self {
            model: PointerModel::Square,
            g,
            f: 1.0 - g,
        })
    }

    pub fn explicit(f: f64, g: f64) -> Result<Self> {
        let invalid = |reason| Error::InvalidPointer { f, g, reason };
        if !(0.0..=1.0).contains(&g) || !(0.0..=1.0).contains(&f) {
            return Err(invalid("F and G must lie in [0, 1]"));
        }
        if f * f + g * g > 1.0 + POINTER_SLACK {
            return Err(invalid("F² + G² exceeds 1"));
        }
        Ok(Self {
            model: PointerModel::Explicit,
            g,
            f,
        })
    }

    /// Builds a spec of `model` at precision `g`; `f` is required for
    /// [`PointerModel::Explicit`] and ignored otherwise.
    pub fn from_model(model: PointerModel, g: f64, f: Option<f64>) -> Result<Self> {
        match model {
            PointerModel::Optimal => Self::optimal(g),
            PointerModel::Square => Self::square(g),
            PointerModel::Explicit => {
                let f = f.ok_or(Error::InvalidPointer {
                    f: f64::NAN,
                    g,
                    reason: "explicit pointer needs F",
                })?;
                Self::explicit(f, g)
            }
        }
    }

    /// Checks that `(F, G)` is consistent with the model.
    pub fn validate(&self) -> Result<()> {
        let expected = Self::from_model(self.model, self.g, Some(self.f))?;
        if (expected.f - self.f).abs() > POINTER_SLACK {
            return Err(Error::InvalidPointer {
                f: self.f,
                g: self.g,
                reason: "F does not match the pointer model",
            });
        }
        Ok(())
    }

    /// Strong projective measurement (`G = 1`, `F = 0`).
    pub fn projective() -> Self {
        Self {
            model: PointerModel::Optimal,
            g: 1.0,
            f: 0.0,
        }
    }

    /// Same pointer model re-evaluated at another precision.
    pub fn with_precision(&self, g: f64) -> Result<Self> {
        Self::from_model(self.model, g, Some(self.f))
    }
}

fn check_precision(g: f64) -> Result<()> {
    if g.is_finite() && (0.0..=1.0).contains(&g) {
        Ok(())
    } else {
        Err(Error::InvalidPrecision(g))
    }
}

/// `(F, G)` of a pointer.
pub fn pointer_factors(spec: &PointerSpec) -> (f64, f64) {
    (spec.f, spec.g)
}

fn check_wing_state(rho: &DensityOperator) -> Result<usize> {
    let dim = rho.dim();
    if dim < 4 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "wing instruments need a register of at least two qubits, got dim {dim}"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// The two projective branches `U⁰ρU⁰†` and `U¹ρU¹†` of a measurement of `obs`
/// on the wing qubit.
pub(crate) fn projective_branches(
    rho: &ComplexMatrix,
    wing: Wing,
    obs: &Observable,
    n_qubits: usize,
) -> [ComplexMatrix; 2] {
    let qubit = wing.qubit(n_qubits);
    [false, true].map(|outcome| sandwich(&embed(&projector(obs, outcome), qubit, n_qubits), rho))
}

/// Weak-measurement output for `outcome` given the input and its two
/// projective branches:
/// `F/2 ρ + (1 + (−1)^a G − F)/2 · U⁰ρU⁰† + (1 − (−1)^a G − F)/2 · U¹ρU¹†`,
/// so outcome `a` leans towards the projector `Πᵃ` and reduces to it at
/// `G = 1, F = 0`.
///
/// The coefficients may be negative for the optimal pointer; the sum is
/// still positive semidefinite whenever `F² + G² ≤ 1`.
pub(crate) fn combine_weak(
    rho: &ComplexMatrix,
    branches: &[ComplexMatrix; 2],
    outcome: bool,
    spec: &PointerSpec,
) -> ComplexMatrix {
    let (f, g) = (spec.f, spec.g);
    let s = parity_sign(outcome);
    rho.scale(f / 2.0) + branches[0].scale((1.0 + s * g - f) / 2.0) + branches[1].scale((1.0 - s * g - f) / 2.0)
}

/// Unnormalized post-measurement state of a weak measurement of `obs` on the
/// `wing` qubit (first or last qubit of `rho`).
pub fn weak_instrument(
    rho: &DensityOperator,
    wing: Wing,
    obs: &Observable,
    outcome: bool,
    spec: &PointerSpec,
) -> Result<DensityOperator> {
    let n = check_wing_state(rho)?;
    let branches = projective_branches(rho.matrix(), wing, obs, n);
    DensityOperator::from_matrix_unchecked(combine_weak(rho.matrix(), &branches, outcome, spec))
}

/// Unnormalized post-measurement state of a projective measurement.
pub fn strong_instrument(
    rho: &DensityOperator,
    wing: Wing,
    obs: &Observable,
    outcome: bool,
) -> Result<DensityOperator> {
    let n = check_wing_state(rho)?;
    let u = embed(&projector(obs, outcome), wing.qubit(n), n);
    DensityOperator::from_matrix_unchecked(sandwich(&u, rho.matrix()))
}

/// Projects Bob's two middle qubits of a four-qubit state onto the Bell
/// state `b0 b1` and traces them out, leaving the unnormalized
/// Alice–Charlie state.
pub fn bsm_reduce(rho_abc: &DensityOperator, b0: bool, b1: bool) -> Result<DensityOperator> {
    if rho_abc.dim() != 16 {
        return Err(Error::DimensionMismatch(format!(
            "Bell-state measurement needs a four-qubit state, got dim {}",
            rho_abc.dim()
        )));
    }
    let u = bob_projector(b0, b1);
    let projected = DensityOperator::from_matrix_unchecked(sandwich(&u, rho_abc.matrix()))?;
    partial_trace(&projected, &[2, 2, 2, 2], &[0, 3])
}

/// `I ⊗ ρ_{b0b1} ⊗ I` on the four-qubit register.
pub(crate) fn bob_projector(b0: bool, b1: bool) -> ComplexMatrix {
    let bell = bell_state(b0, b1).into_matrix();
    kron(&kron(&identity(2), &bell), &identity(2))
}

/// Trace as a real probability, or an error if the imaginary residue
/// exceeds `tol`.
pub(crate) fn real_trace(m: &ComplexMatrix, tol: f64) -> Result<f64> {
    let t: Complex64 = m.trace();
    if t.im.abs() > tol {
        return Err(Error::ImaginaryResidue(t.im));
    }
    Ok(t.re)
}
