//! Causal jamming strategies and the converse attack machinery.

mod collision;
mod plan;
mod push;
mod subcode;

pub use collision::{all_distinct_probability, collision_diagnostic, CollisionReport};
pub use plan::{plan_attack, AttackPlan};
pub use push::{exchangeability_tv, posterior, BabbleAndPush, Posterior};
pub use subcode::{extract_subcode, Subcode};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::CapacityError;
use crate::geometry::GeometryError;
use crate::model::{AvcSpec, ChunkScheme, CondDist, Dist};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("no division point meets the rate guarantee; attack not guaranteed")]
    NoAttack,
    #[error("prefix observation has zero likelihood under the subcode")]
    ZeroEvidence,
    #[error("subcode is empty")]
    EmptySubcode,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

/// Operational slacks of the attack. The asymptotic schedule is far too
/// loose at desk blocklengths, so these are set directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    /// Rate margin: a division point qualifies when `R ≥ I + δ/2`.
    pub delta: f64,
    /// Budget held back from the plan for cost fluctuations.
    pub delta_state: f64,
    /// Allowed ℓ∞ distance of the realised time-share type from its target.
    pub delta_cp: f64,
    /// Cell width of the chunk-type net used for subcode extraction.
    pub delta_input: f64,
    /// CP dictionary resolution; `None` picks a default from `|X|`.
    pub cp_resolution: Option<f64>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            delta: 0.1,
            delta_state: 0.01,
            delta_cp: 0.1,
            delta_input: 0.05,
            cp_resolution: None,
        }
    }
}

/// Why an attack gave up; any flag set means the attack failed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureFlags {
    pub zero_evidence: bool,
    pub budget_exhausted: bool,
    pub type_deviation: bool,
}

impl FailureFlags {
    pub fn any(&self) -> bool {
        self.zero_evidence || self.budget_exhausted || self.type_deviation
    }
}

/// A jammer that picks `s(i)` after seeing `x(1..=i)` and nothing later.
pub trait CausalJammer {
    fn next_state(&mut self, x: usize) -> usize;

    fn failure(&self) -> FailureFlags {
        FailureFlags::default()
    }

    /// The spoofing message, for strategies that pick one.
    fn spoof(&self) -> Option<usize> {
        None
    }
}

/// Always the zero-cost, non-corrupting state.
#[derive(Clone, Debug)]
pub struct StandDown {
    s0: usize,
}

impl StandDown {
    pub fn new(avc: &AvcSpec) -> Self {
        StandDown { s0: avc.s0() }
    }
}

impl CausalJammer for StandDown {
    fn next_state(&mut self, _x: usize) -> usize {
        self.s0
    }
}

/// Per-row samplers for a conditional table.
pub(crate) fn samplers(v: &CondDist) -> Vec<WeightedIndex<f64>> {
    v.rows().iter().map(sampler).collect()
}

pub(crate) fn sampler(d: &Dist) -> WeightedIndex<f64> {
    WeightedIndex::new(d.probs()).expect("distribution has positive mass")
}

/// Memoryless jamming: `s(i) ~ V_u(·|x(i))` for the chunk `u` of position `i`.
pub struct BabbleOnly<R> {
    tables: Vec<Vec<WeightedIndex<f64>>>,
    scheme: ChunkScheme,
    i: usize,
    rng: R,
}

impl<R: Rng> BabbleOnly<R> {
    pub fn new(v: &[CondDist], scheme: &ChunkScheme, rng: R) -> Self {
        assert_eq!(v.len(), scheme.k(), "one table per chunk");
        BabbleOnly {
            tables: v.iter().map(samplers).collect(),
            scheme: *scheme,
            i: 0,
            rng,
        }
    }
}

impl<R: Rng> CausalJammer for BabbleOnly<R> {
    fn next_state(&mut self, x: usize) -> usize {
        let u = self.scheme.chunk_of(self.i);
        self.i += 1;
        self.tables[u][x].sample(&mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stand_down_babble_never_jams() {
        let avc = AvcSpec::xor(0.2);
        let scheme = ChunkScheme::new(100, 4).unwrap();
        let v = vec![CondDist::constant(2, &Dist::point(2, 0)); 4];
        let mut j = BabbleOnly::new(&v, &scheme, ChaCha8Rng::seed_from_u64(1));
        assert!((0..100).all(|i| j.next_state(i % 2) == 0));
        let mut s = StandDown::new(&avc);
        assert_eq!(s.next_state(1), 0);
    }

    #[test]
    fn babble_flip_rate_concentrates() {
        let n = 10_000;
        let scheme = ChunkScheme::new(n, 4).unwrap();
        let v = vec![CondDist::from_rows(vec![vec![0.75, 0.25], vec![0.75, 0.25]]).unwrap(); 4];
        let mut j = BabbleOnly::new(&v, &scheme, ChaCha8Rng::seed_from_u64(2));
        let flips: usize = (0..n).map(|i| j.next_state(i % 2)).sum();
        assert!((flips as f64 / n as f64 - 0.25).abs() < 0.02);
    }

    #[test]
    fn babble_cost_stays_within_budget_with_high_probability() {
        // flip rate 0.2 against budget 0.25 at n = 400: a Hoeffding bound
        // gives failure probability at most exp(-2 n 0.05^2) ≈ 0.135
        let n = 400;
        let scheme = ChunkScheme::new(n, 4).unwrap();
        let v = vec![CondDist::from_rows(vec![vec![0.8, 0.2], vec![0.8, 0.2]]).unwrap(); 4];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 500;
        let mut ok = 0;
        for _ in 0..trials {
            let mut j = BabbleOnly::new(&v, &scheme, ChaCha8Rng::seed_from_u64(rng.gen()));
            let cost: usize = (0..n).map(|i| j.next_state(i % 2)).sum();
            ok += usize::from(cost as f64 / n as f64 <= 0.25);
        }
        assert!(ok as f64 / trials as f64 >= 1.0 - (-2.0 * n as f64 * 0.0025f64).exp());
    }

    #[test]
    fn jammer_is_causal() {
        let scheme = ChunkScheme::new(40, 4).unwrap();
        let v = vec![CondDist::from_rows(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap(); 4];
        let x1: Vec<usize> = (0..40).map(|i| (i / 3) % 2).collect();
        let mut x2 = x1.clone();
        for s in x2[25..].iter_mut() {
            *s = 1 - *s;
        }
        let mut a = BabbleOnly::new(&v, &scheme, ChaCha8Rng::seed_from_u64(5));
        let mut b = BabbleOnly::new(&v, &scheme, ChaCha8Rng::seed_from_u64(5));
        let s1: Vec<usize> = x1.iter().map(|&x| a.next_state(x)).collect();
        let s2: Vec<usize> = x2.iter().map(|&x| b.next_state(x)).collect();
        assert_eq!(s1[..25], s2[..25]);
    }
}
