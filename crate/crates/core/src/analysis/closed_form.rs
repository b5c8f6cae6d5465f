//! Closed-form bilocality values for maximally entangled (or Werner)
//! sources.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of the first branch of the active-sharing solution.
pub const ACTIVE_BRANCH_POINT: f64 = 0.8;

/// The four values `B11, B12, B21, B22`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrgpQuad {
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
}

impl BrgpQuad {
    pub fn from_array([b11, b12, b21, b22]: [f64; 4]) -> Self {
        Self { b11, b12, b21, b22 }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.b11, self.b12, self.b21, self.b22]
    }

    pub fn get(&self, pair: Pair) -> f64 {
        match pair {
            Pair::B11 => self.b11,
            Pair::B12 => self.b12,
            Pair::B21 => self.b21,
            Pair::B22 => self.b22,
        }
    }

    pub fn min_all(&self) -> f64 {
        self.to_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `min(B11, B22)`
    pub fn min_double(&self) -> f64 {
        self.b11.min(self.b22)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_array(self.to_array().map(|b| b * factor))
    }

    pub fn max_abs_diff(&self, other: &BrgpQuad) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// An Alice_n–Bob–Charlie_m pair label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    B11,
    B12,
    B21,
    B22,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::B11, Pair::B12, Pair::B21, Pair::B22];

    pub fn labels(self) -> (usize, usize) {
        match self {
            Pair::B11 => (1, 1),
            Pair::B12 => (1, 2),
            Pair::B21 => (2, 1),
            Pair::B22 => (2, 2),
        }
    }
}

impl std::str::FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "B11" | "11" => Ok(Pair::B11),
            "B12" | "12" => Ok(Pair::B12),
            "B21" | "21" => Ok(Pair::B21),
            "B22" | "22" => Ok(Pair::B22),
            other => Err(format!("unknown pair `{other}`")),
        }
    }
}

/// Passive-sharing values at θ = π/4 for every observer:
/// `B11 = √(2 G1 G2)`, `B12 = √((1+F2) G1)`, `B21 = √((1+F1) G2)`,
/// `B22 = √((1+F1)(1+F2)/2)`.
pub fn closed_form_passive(g1: f64, f1: f64, g2: f64, f2: f64) -> BrgpQuad {
    BrgpQuad {
        b11: (2.0 * g1 * g2).sqrt(),
        b12: ((1.0 + f2) * g1).sqrt(),
        b21: ((1.0 + f1) * g2).sqrt(),
        b22: ((1.0 + f1) * (1.0 + f2) / 2.0).sqrt(),
    }
}

/// Passive values for Werner sources; every value scales with `√(v1 v2)`.
pub fn closed_form_passive_noisy(g1: f64, f1: f64, g2: f64, f2: f64, v1: f64, v2: f64) -> BrgpQuad {
    closed_form_passive(g1, f1, g2, f2).scaled((v1 * v2).sqrt())
}

/// Active-sharing solution for `G1 = G2 = G` under the optimal pointer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveSolution {
    pub g: f64,
    pub f: f64,
    pub b11: f64,
    pub b22: f64,
    /// Angle of Alice₁ and Charlie₁ (both settings).
    pub theta1: f64,
    /// Angle of Alice₂ and Charlie₂ (both settings).
    pub theta2: f64,
}

/// Piecewise active-sharing solution. Up to `G = 0.8` the passive settings
/// are kept; above it the first observers tilt towards σz so that the
/// second pair retains more correlation while `B11` stays above 1.
pub fn closed_form_active(g: f64) -> Result<ActiveSolution> {
    if !g.is_finite() || !(0.0..=1.0).contains(&g) {
        return Err(Error::InvalidPrecision(g));
    }
    let f = (1.0 - g * g).max(0.0).sqrt();
    if g <= ACTIVE_BRANCH_POINT {
        return Ok(ActiveSolution {
            g,
            f,
            b11: SQRT_2 * g,
            b22: (1.0 + f) / SQRT_2,
            theta1: FRAC_PI_4,
            theta2: FRAC_PI_4,
        });
    }
    let (theta1, theta2) = active_angles(f);
    Ok(ActiveSolution {
        g,
        f,
        b11: (f + (2.0 - f * (2.0 + f)).sqrt()) * g / (2.0 - 2.0 * f).sqrt(),
        b22: (1.0 + f.powi(3) + 0.5 * f.powi(4)).sqrt(),
        theta1,
        theta2,
    })
}

/// Angles of the second active branch as functions of the quality factor.
pub fn active_angles(f: f64) -> (f64, f64) {
    let theta1 = 0.5 * (1.0 - f * f / (1.0 - f)).clamp(-1.0, 1.0).acos();
    let theta2 = ((2.0 - f * f) / (4.0 + 2.0 * f.powi(3) * (2.0 + f)).sqrt())
        .clamp(-1.0, 1.0)
        .acos();
    (theta1, theta2)
}
