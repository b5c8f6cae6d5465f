//! The extended bilocal pipeline: two Werner sources, Bob's Bell-state
//! measurement, and two sequential observers on each outer wing.
//!
//! [`joint_table`] enumerates every combination of the four observers'
//! binary setting choices and records the exact probability of every
//! outcome string. The unnormalized post-measurement chain is never
//! renormalized; each probability is the trace of the final operator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format_f64;
use crate::measurement::{
    bob_projector, check_angle, combine_weak, projective_branches, projector, real_trace, Observable, PointerSpec, Wing,
};
use crate::qcore::{embed, kron, sandwich, werner_state, ComplexMatrix, DensityOperator};

/// Largest imaginary part tolerated on a probability.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Number of setting contexts `(i1, i2, j1, j2)`.
pub const CONTEXTS: usize = 16;
/// Number of outcome strings `(a1, a2, b0, b1, c1, c2)`.
pub const OUTCOMES: usize = 64;

/// Measurement angles, indexed `[observer − 1][setting]` on each wing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub alice: [[f64; 2]; 2],
    pub charlie: [[f64; 2]; 2],
}

impl Angles {
    /// Same angle for every observer and setting.
    pub fn all(theta: f64) -> Self {
        Self::rounds(theta, theta)
    }

    /// `first` for Alice₁ and Charlie₁, `second` for Alice₂ and Charlie₂,
    /// identical for both settings.
    pub fn rounds(first: f64, second: f64) -> Self {
        let wing = [[first; 2], [second; 2]];
        Self {
            alice: wing,
            charlie: wing,
        }
    }

    /// One angle per observer (Alice₁, Alice₂, Charlie₁, Charlie₂), shared by
    /// both of that observer's settings.
    pub fn per_observer(alice1: f64, alice2: f64, charlie1: f64, charlie2: f64) -> Self {
        Self {
            alice: [[alice1; 2], [alice2; 2]],
            charlie: [[charlie1; 2], [charlie2; 2]],
        }
    }

    /// Flattened as Alice₁(0,1), Alice₂(0,1), Charlie₁(0,1), Charlie₂(0,1).
    pub fn to_array(&self) -> [f64; 8] {
        let [[a10, a11], [a20, a21]] = self.alice;
        let [[c10, c11], [c20, c21]] = self.charlie;
        [a10, a11, a20, a21, c10, c11, c20, c21]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            alice: [[a[0], a[1]], [a[2], a[3]]],
            charlie: [[a[4], a[5]], [a[6], a[7]]],
        }
    }

    pub fn get(&self, wing: Wing, round: Round, setting: bool) -> f64 {
        let table = match wing {
            Wing::Alice => &self.alice,
            Wing::Charlie => &self.charlie,
        };
        table[round.index()][setting as usize]
    }

    fn validate(&self) -> Result<()> {
        self.to_array().into_iter().try_for_each(check_angle)
    }
}

impl Default for Angles {
    fn default() -> Self {
        Self::all(PI / 4.0)
    }
}

/// First (weak) or second (projective) observer on a wing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Round {
    First,
    Second,
}

impl Round {
    pub fn index(self) -> usize {
        match self {
            Round::First => 0,
            Round::Second => 1,
        }
    }

    /// From a 1-based observer label.
    pub fn from_label(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Round::First),
            2 => Ok(Round::Second),
            other => Err(Error::InvalidObserver(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Werner visibility of the Alice–Bob source.
    pub v1: f64,
    /// Werner visibility of the Bob–Charlie source.
    pub v2: f64,
    pub alice1: PointerSpec,
    pub charlie1: PointerSpec,
    pub angles: Angles,
}

impl ScenarioConfig {
    /// Noiseless sources with the given first-observer pointers and angles.
    pub fn noiseless(alice1: PointerSpec, charlie1: PointerSpec, angles: Angles) -> Self {
        Self {
            v1: 1.0,
            v2: 1.0,
            alice1,
            charlie1,
            angles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.v1, self.v2] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidVisibility(v));
            }
        }
        self.alice1.validate()?;
        self.charlie1.validate()?;
        self.angles.validate()
    }

    pub fn pointer(&self, wing: Wing) -> &PointerSpec {
        match wing {
            Wing::Alice => &self.alice1,
            Wing::Charlie => &self.charlie1,
        }
    }

    pub fn observable(&self, wing: Wing, round: Round, setting: bool) -> Observable {
        Observable {
            wing,
            setting,
            angle: self.angles.get(wing, round, setting),
        }
    }
}

/// Setting choices of the four wing observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Settings {
    pub i1: bool,
    pub i2: bool,
    pub j1: bool,
    pub j2: bool,
}

impl Settings {
    pub fn index(&self) -> usize {
        (self.i1 as usize) << 3 | (self.i2 as usize) << 2 | (self.j1 as usize) << 1 | self.j2 as usize
    }

    pub fn from_index(k: usize) -> Self {
        Self {
            i1: k & 8 != 0,
            i2: k & 4 != 0,
            j1: k & 2 != 0,
            j2: k & 1 != 0,
        }
    }

    pub fn all() -> impl Iterator<Item = Settings> {
        (0..CONTEXTS).map(Self::from_index)
    }

    fn set(&mut self, wing: Wing, round: Round, value: bool) {
        match (wing, round) {
            (Wing::Alice, Round::First) => self.i1 = value,
            (Wing::Alice, Round::Second) => self.i2 = value,
            (Wing::Charlie, Round::First) => self.j1 = value,
            (Wing::Charlie, Round::Second) => self.j2 = value,
        }
    }
}

/// Outcomes of all five parties; Bob's two bits are `b0 b1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Outcomes {
    pub a1: bool,
    pub a2: bool,
    pub b0: bool,
    pub b1: bool,
    pub c1: bool,
    pub c2: bool,
}

impl Outcomes {
    pub fn index(&self) -> usize {
        [self.a1, self.a2, self.b0, self.b1, self.c1, self.c2]
            .iter()
            .fold(0, |acc, &bit| acc << 1 | bit as usize)
    }

    pub fn from_index(k: usize) -> Self {
        let bit = |shift: usize| k >> shift & 1 == 1;
        Self {
            a1: bit(5),
            a2: bit(4),
            b0: bit(3),
            b1: bit(2),
            c1: bit(1),
            c2: bit(0),
        }
    }

    pub fn all() -> impl Iterator<Item = Outcomes> {
        (0..OUTCOMES).map(Self::from_index)
    }

    /// Bob's outcome as `2·b0 + b1`.
    pub fn bob(&self) -> usize {
        (self.b0 as usize) << 1 | self.b1 as usize
    }

    /// `a1a2b0b1c1c2` as a bit string.
    pub fn key(&self) -> String {
        format!("{:06b}", self.index())
    }

    fn set(&mut self, wing: Wing, round: Round, value: bool) {
        match (wing, round) {
            (Wing::Alice, Round::First) => self.a1 = value,
            (Wing::Alice, Round::Second) => self.a2 = value,
            (Wing::Charlie, Round::First) => self.c1 = value,
            (Wing::Charlie, Round::Second) => self.c2 = value,
        }
    }

    fn set_bob(&mut self, b: usize) {
        self.b0 = b & 2 != 0;
        self.b1 = b & 1 != 0;
    }
}

/// `P(a1, a2, b0, b1, c1, c2 | i1, i2, j1, j2)` for all 16 × 64 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    probs: Vec<f64>,
}

impl JointTable {
    fn zeros() -> Self {
        Self {
            probs: vec![0.0; CONTEXTS * OUTCOMES],
        }
    }

    pub fn prob(&self, settings: Settings, outcomes: Outcomes) -> f64 {
        self.probs[settings.index() * OUTCOMES + outcomes.index()]
    }

    /// The 64 outcome probabilities of one setting context.
    pub fn context(&self, settings: Settings) -> &[f64] {
        let start = settings.index() * OUTCOMES;
        &self.probs[start..start + OUTCOMES]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Largest entrywise difference between two tables.
    pub fn max_abs_diff(&self, other: &JointTable) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `[{"settings": {"i1":…, "i2":…, "j1":…, "j2":…}, "probs": {"a1a2b0b1c1c2": p, …}}, …]`
    pub fn to_json(&self) -> serde_json::Value {
        let contexts: Vec<serde_json::Value> = Settings::all()
            .map(|s| {
                let probs: serde_json::Map<String, serde_json::Value> = Outcomes::all()
                    .map(|o| (o.key(), serde_json::json!(self.prob(s, o))))
                    .collect();
                serde_json::json!({
                    "settings": {
                        "i1": s.i1 as u8,
                        "i2": s.i2 as u8,
                        "j1": s.j1 as u8,
                        "j2": s.j2 as u8,
                    },
                    "probs": probs,
                })
            })
            .collect();
        serde_json::Value::Array(contexts)
    }

    /// CSV with header `i1,i2,j1,j2,a1,a2,b0,b1,c1,c2,p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i1,i2,j1,j2,a1,a2,b0,b1,c1,c2,p\n");
        for s in Settings::all() {
            for o in Outcomes::all() {
                let bits = [s.i1, s.i2, s.j1, s.j2, o.a1, o.a2, o.b0, o.b1, o.c1, o.c2];
                for bit in bits {
                    out.push(if bit { '1' } else { '0' });
                    out.push(',');
                }
                out.push_str(&format_f64(self.prob(s, o)));
                out.push('\n');
            }
        }
        out
    }
}

/// `werner(v1) ⊗ werner(v2)` in qubit order Alice, Bob₁, Bob₂, Charlie.
pub fn build_initial(config: &ScenarioConfig) -> Result<DensityOperator> {
    let ab = werner_state(config.v1)?;
    let bc = werner_state(config.v2)?;
    DensityOperator::from_matrix_unchecked(kron(ab.matrix(), bc.matrix()))
}

/// Order in which the parties act. All orders produce the same table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineOrder {
    /// Bob, Alice₁, Alice₂, Charlie₁, Charlie₂ on the reduced Alice–Charlie state.
    AliceFirst,
    /// Bob, Charlie₁, Charlie₂, Alice₁, Alice₂ on the reduced Alice–Charlie state.
    CharlieFirst,
    /// Alice₁, Alice₂, Charlie₁, Charlie₂ on the full four-qubit state, then Bob.
    BsmLast,
}

impl PipelineOrder {
    fn steps(self) -> [(Wing, Round); 4] {
        let alice = [(Wing::Alice, Round::First), (Wing::Alice, Round::Second)];
        let charlie = [(Wing::Charlie, Round::First), (Wing::Charlie, Round::Second)];
        match self {
            PipelineOrder::AliceFirst | PipelineOrder::BsmLast => [alice[0], alice[1], charlie[0], charlie[1]],
            PipelineOrder::CharlieFirst => [charlie[0], charlie[1], alice[0], alice[1]],
        }
    }
}

/// Exact joint distribution for `config`.
pub fn joint_table(config: &ScenarioConfig) -> Result<JointTable> {
    joint_table_ordered(config, PipelineOrder::AliceFirst)
}

pub fn joint_table_ordered(config: &ScenarioConfig, order: PipelineOrder) -> Result<JointTable> {
    config.validate()?;
    let initial = build_initial(config)?;
    let mut table = JointTable::zeros();
    let chain = Chain {
        config,
        steps: order.steps(),
        bsm_last: order == PipelineOrder::BsmLast,
    };
    if chain.bsm_last {
        let bob: Vec<ComplexMatrix> = (0..4).map(|b| bob_projector(b & 2 != 0, b & 1 != 0)).collect();
        chain.run(
            initial.matrix(),
            4,
            0,
            Settings::default(),
            Outcomes::default(),
            &mut |rho, settings, mut outcomes| {
                for (b, proj) in bob.iter().enumerate() {
                    outcomes.set_bob(b);
                    // Tr[P ρ P] for the projector P.
                    let p = real_trace(&sandwich(proj, rho), IMAGINARY_TOLERANCE)?;
                    table.probs[settings.index() * OUTCOMES + outcomes.index()] = p;
                }
                Ok(())
            },
        )?;
    } else {
        for b in 0..4 {
            let reduced = crate::measurement::bsm_reduce(&initial, b & 2 != 0, b & 1 != 0)?;
            let mut outcomes = Outcomes::default();
            outcomes.set_bob(b);
            chain.run(
                reduced.matrix(),
                2,
                0,
                Settings::default(),
                outcomes,
                &mut |rho, settings, outcomes| {
                    let p = real_trace(rho, IMAGINARY_TOLERANCE)?;
                    table.probs[settings.index() * OUTCOMES + outcomes.index()] = p;
                    Ok(())
                },
            )?;
        }
    }
    Ok(table)
}

struct Chain<'a> {
    config: &'a ScenarioConfig,
    steps: [(Wing, Round); 4],
    bsm_last: bool,
}

impl Chain<'_> {
    fn run(
        &self,
        rho: &ComplexMatrix,
        n_qubits: usize,
        depth: usize,
        settings: Settings,
        outcomes: Outcomes,
        leaf: &mut dyn FnMut(&ComplexMatrix, Settings, Outcomes) -> Result<()>,
    ) -> Result<()> {
        let Some(&(wing, round)) = self.steps.get(depth) else {
            return leaf(rho, settings, outcomes);
        };
        debug_assert!(self.bsm_last == (n_qubits == 4));
        for setting in [false, true] {
            let obs = self.config.observable(wing, round, setting);
            let mut next_settings = settings;
            next_settings.set(wing, round, setting);
            match round {
                Round::First => {
                    let spec = self.config.pointer(wing);
                    let branches = projective_branches(rho, wing, &obs, n_qubits);
                    for outcome in [false, true] {
                        let post = combine_weak(rho, &branches, outcome, spec);
                        let mut next_outcomes = outcomes;
                        next_outcomes.set(wing, round, outcome);
                        self.run(&post, n_qubits, depth + 1, next_settings, next_outcomes, leaf)?;
                    }
                }
                Round::Second => {
                    for outcome in [false, true] {
                        let u = embed(&projector(&obs, outcome), wing.qubit(n_qubits), n_qubits);
                        let post = sandwich(&u, rho);
                        let mut next_outcomes = outcomes;
                        next_outcomes.set(wing, round, outcome);
                        self.run(&post, n_qubits, depth + 1, next_settings, next_outcomes, leaf)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// `P(a_n, b, c_m | i_n, j_m)` for one Alice–Bob–Charlie triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TripartiteDistribution {
    pub n: usize,
    pub m: usize,
    /// Indexed `[2·i + j][8·a + 2·b + c]` with `b = 2·b0 + b1`.
    probs: [[f64; 16]; 4],
}

impl TripartiteDistribution {
    /// Builds a distribution from explicit probabilities, indexed as
    /// `probs[2·i + j][8·a + 2·b + c]`.
    pub fn from_probs(n: usize, m: usize, probs: [[f64; 16]; 4]) -> Self {
        Self { n, m, probs }
    }

    pub fn prob(&self, i: bool, j: bool, a: bool, b: usize, c: bool) -> f64 {
        self.probs[(i as usize) << 1 | j as usize][(a as usize) << 3 | b << 1 | c as usize]
    }

    /// Probabilities of the 16 outcomes `(a, b, c)` in context `(i, j)`.
    pub fn context(&self, i: bool, j: bool) -> &[f64; 16] {
        &self.probs[(i as usize) << 1 | j as usize]
    }
}

/// Marginal distribution of Alice_n, Bob and Charlie_m, averaging uniformly
/// over the setting choices of the two other wing observers.
pub fn marginal_tripartite(table: &JointTable, n: usize, m: usize) -> Result<TripartiteDistribution> {
    let alice = Round::from_label(n)?;
    let charlie = Round::from_label(m)?;
    let mut probs = [[0.0; 16]; 4];
    for s in Settings::all() {
        let (i, j) = match (alice, charlie) {
            (Round::First, Round::First) => (s.i1, s.j1),
            (Round::First, Round::Second) => (s.i1, s.j2),
            (Round::Second, Round::First) => (s.i2, s.j1),
            (Round::Second, Round::Second) => (s.i2, s.j2),
        };
        let row = &mut probs[(i as usize) << 1 | j as usize];
        for o in Outcomes::all() {
            let a = if alice == Round::First { o.a1 } else { o.a2 };
            let c = if charlie == Round::First { o.c1 } else { o.c2 };
            row[(a as usize) << 3 | o.bob() << 1 | c as usize] += 0.25 * table.prob(s, o);
        }
    }
    Ok(TripartiteDistribution { n, m, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{bell_state, identity, max_abs_diff};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn config(g1: f64, g2: f64, angles: Angles) -> ScenarioConfig {
        ScenarioConfig::noiseless(
            PointerSpec::optimal(g1).unwrap(),
            PointerSpec::optimal(g2).unwrap(),
            angles,
        )
    }

    #[test]
    fn index_round_trips() {
        for k in 0..CONTEXTS {
            assert_eq!(Settings::from_index(k).index(), k);
        }
        for k in 0..OUTCOMES {
            assert_eq!(Outcomes::from_index(k).index(), k);
        }
        let o = Outcomes {
            a1: true,
            c2: true,
            ..Default::default()
        };
        assert_eq!(o.key(), "100001");
    }

    #[test]
    fn initial_state() {
        let phi = bell_state(false, false).into_matrix();
        let pure = build_initial(&config(0.5, 0.5, Angles::default())).unwrap();
        assert!(max_abs_diff(pure.matrix(), &kron(&phi, &phi)) < 1e-15);
        let mut noisy = config(0.5, 0.5, Angles::default());
        noisy.v1 = 0.0;
        noisy.v2 = 0.0;
        let mixed = build_initial(&noisy).unwrap();
        assert!(max_abs_diff(mixed.matrix(), &identity(16).scale(1.0 / 16.0)) < 1e-15);
        noisy.v1 = 0.3;
        noisy.v2 = 0.8;
        assert_abs_diff_eq!(build_initial(&noisy).unwrap().trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = config(0.5, 0.5, Angles::default());
        cfg.v2 = 1.2;
        assert_eq!(joint_table(&cfg), Err(Error::InvalidVisibility(1.2)));
        let mut cfg = config(0.5, 0.5, Angles::default());
        cfg.angles.charlie[1][0] = -1.0;
        assert_eq!(joint_table(&cfg), Err(Error::InvalidAngle(-1.0)));
        let mut cfg = config(0.5, 0.5, Angles::default());
        cfg.alice1.f = 0.99;
        assert!(joint_table(&cfg).is_err());
    }

    #[test]
    fn repeated_projective_measurement_agrees() {
        let table = joint_table(&config(1.0, 1.0, Angles::all(0.0))).unwrap();
        for s in Settings::all() {
            for o in Outcomes::all().filter(|o| o.a1 != o.a2 || o.c1 != o.c2) {
                assert_abs_diff_eq!(table.prob(s, o), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn bell_outcomes_are_uniform() {
        // Oracle: with maximally entangled sources, Bob's reduced state is
        // I/4 regardless of what happens on the outer wings.
        let table = joint_table(&config(0.37, 0.81, Angles::default())).unwrap();
        for s in Settings::all() {
            let mut bob = [0.0; 4];
            for o in Outcomes::all() {
                bob[o.bob()] += table.prob(s, o);
            }
            for p in bob {
                assert_abs_diff_eq!(p, 0.25, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn zero_precision_factorizes() {
        let cfg = config(0.0, 0.0, Angles::rounds(0.3, FRAC_PI_4));
        let table = joint_table(&cfg).unwrap();
        for s in Settings::all() {
            for o in Outcomes::all() {
                let mut flipped = o;
                flipped.a1 = !o.a1;
                flipped.c1 = !o.c1;
                assert_abs_diff_eq!(table.prob(s, o), table.prob(s, flipped), epsilon = 1e-15);
                let mut a_only = o;
                a_only.a1 = !o.a1;
                assert_abs_diff_eq!(table.prob(s, o), table.prob(s, a_only), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn orders_agree() {
        let cfg = ScenarioConfig {
            v1: 0.9,
            v2: 0.7,
            alice1: PointerSpec::square(0.6).unwrap(),
            charlie1: PointerSpec::optimal(0.75).unwrap(),
            angles: Angles::from_array([0.1, 0.5, 0.9, 1.3, 1.7, 2.1, 2.5, 2.9]),
        };
        let base = joint_table(&cfg).unwrap();
        for order in [PipelineOrder::CharlieFirst, PipelineOrder::BsmLast] {
            let other = joint_table_ordered(&cfg, order).unwrap();
            assert!(base.max_abs_diff(&other) < 1e-12, "{order:?}");
        }
    }

    #[test]
    fn marginals_are_normalized() {
        let table = joint_table(&config(0.6, 0.9, Angles::rounds(0.4, 1.1))).unwrap();
        for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let dist = marginal_tripartite(&table, n, m).unwrap();
            for ctx in 0..4 {
                let total: f64 = dist.context(ctx & 2 != 0, ctx & 1 != 0).iter().sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
        assert_eq!(marginal_tripartite(&table, 3, 1), Err(Error::InvalidObserver(3)));
    }

    #[test]
    fn serialization_shapes() {
        let table = joint_table(&config(0.8, 0.8, Angles::default())).unwrap();
        let json = table.to_json();
        let contexts = json.as_array().unwrap();
        assert_eq!(contexts.len(), 16);
        assert_eq!(contexts[5]["settings"]["i2"], 1);
        assert_eq!(contexts[5]["settings"]["j2"], 1);
        assert_eq!(contexts[5]["probs"].as_object().unwrap().len(), 64);
        let p = contexts[5]["probs"]["101101"].as_f64().unwrap();
        let s = Settings::from_index(5);
        assert_eq!(p, table.prob(s, Outcomes::from_index(0b101101)));

        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("i1,i2,j1,j2,a1,a2,b0,b1,c1,c2,p"));
        assert_eq!(lines.clone().count(), 1024);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 11);
        let parsed: f64 = first[10].parse().unwrap();
        assert_eq!(parsed, table.as_slice()[0]);
    }
}
