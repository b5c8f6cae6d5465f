//! Exact simulation of network nonlocality sharing in the extended bilocal
//! scenario.
//!
//! Two Werner sources feed Alice–Bob and Bob–Charlie. Bob performs a
//! Bell-state measurement; on each outer wing a first observer measures
//! weakly and hands the particle to a second observer who measures
//! projectively. The crate builds the exact joint distribution of all
//! outcomes ([`network::joint_table`]), evaluates the bilocality quantities
//! for every Alice_n–Bob–Charlie_m triple ([`brgp`]), and analyses passive
//! sharing, active sharing and noise robustness ([`analysis`]).

pub mod analysis;
pub mod brgp;
pub mod error;
pub mod measurement;
pub mod network;
pub mod qcore;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits so it round-trips exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}
