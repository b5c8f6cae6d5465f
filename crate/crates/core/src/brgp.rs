//! Tripartite correlators and the bilocality quantities `I`, `J` and
//! `B = √|I| + √|J|` for an Alice_n–Bob–Charlie_m triple. Any bilocal model
//! satisfies `B ≤ 1`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measurement::parity_sign;
use crate::network::{marginal_tripartite, JointTable, TripartiteDistribution};

/// Classical (bilocal) bound on `B`.
pub const BILOCAL_BOUND: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrgpResult {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub violated: bool,
}

/// `⟨X_i Y_k Z_j⟩ = Σ (−1)^(a + b_k + c) P(a, b, c | i, j)`, where `b_k` is
/// bit `k` of Bob's outcome `b0 b1`.
pub fn correlator(dist: &TripartiteDistribution, i: bool, j: bool, k: usize) -> f64 {
    assert!(k < 2, "Bob has two output bits");
    let mut sum = 0.0;
    for a in [false, true] {
        for b in 0..4usize {
            let b_k = if k == 0 { b & 2 != 0 } else { b & 1 != 0 };
            for c in [false, true] {
                let sign = parity_sign(a) * parity_sign(b_k) * parity_sign(c);
                sum += sign * dist.prob(i, j, a, b, c);
            }
        }
    }
    sum
}

pub fn brgp_quantities(dist: &TripartiteDistribution) -> BrgpResult {
    let mut i_sum = 0.0;
    let mut j_sum = 0.0;
    for i in [false, true] {
        for j in [false, true] {
            i_sum += correlator(dist, i, j, 0);
            j_sum += parity_sign(i) * parity_sign(j) * correlator(dist, i, j, 1);
        }
    }
    let (i, j) = (i_sum / 4.0, j_sum / 4.0);
    let b = i.abs().sqrt() + j.abs().sqrt();
    BrgpResult {
        n: dist.n,
        m: dist.m,
        i,
        j,
        b,
        violated: b > BILOCAL_BOUND,
    }
}

/// `B11, B12, B21, B22` of a joint table, in that order.
pub fn brgp_all(table: &JointTable) -> Result<[BrgpResult; 4]> {
    let pair = |n, m| -> Result<BrgpResult> { Ok(brgp_quantities(&marginal_tripartite(table, n, m)?)) };
    Ok([pair(1, 1)?, pair(1, 2)?, pair(2, 1)?, pair(2, 2)?])
}
