use serde::{Deserialize, Serialize};

use super::{empirical_joint_type, AvcSpec, ChunkScheme, Dist};

/// One trial's channel use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub x: Vec<usize>,
    pub s: Vec<usize>,
    pub y: Vec<usize>,
    /// Joint type of `(x, s, y)` per chunk, flattened as `(x * |S| + s) * |Y| + y`.
    pub per_chunk_joint_types: Vec<Dist>,
    /// `Σ B(s(i)) / n`.
    pub total_cost: f64,
    pub attack_failed: bool,
}

impl Transcript {
    /// Pushes `x` and `s` through the channel and records the chunk statistics.
    pub fn new(
        avc: &AvcSpec,
        scheme: &ChunkScheme,
        x: Vec<usize>,
        s: Vec<usize>,
        attack_failed: bool,
    ) -> Self {
        assert_eq!(x.len(), scheme.n(), "input length");
        assert_eq!(s.len(), scheme.n(), "state length");
        let y: Vec<usize> = x.iter().zip(&s).map(|(&a, &b)| avc.w(a, b)).collect();
        let per_chunk_joint_types = (0..scheme.k())
            .map(|u| {
                let r = scheme.chunk_range(u);
                empirical_joint_type(
                    &[&x[r.clone()], &s[r.clone()], &y[r]],
                    &[avc.nx(), avc.ns(), avc.ny()],
                )
                .expect("chunk sequences are in range")
            })
            .collect();
        let total_cost = s.iter().map(|&v| avc.cost(v)).sum::<f64>() / scheme.n() as f64;
        let t = Transcript {
            x,
            s,
            y,
            per_chunk_joint_types,
            total_cost,
            attack_failed,
        };
        debug_assert!(t.is_consistent(avc));
        t
    }

    /// `y(i) = W(x(i), s(i))` for every position.
    pub fn is_consistent(&self, avc: &AvcSpec) -> bool {
        self.x.len() == self.y.len()
            && self.s.len() == self.y.len()
            && self
                .x
                .iter()
                .zip(&self.s)
                .zip(&self.y)
                .all(|((&x, &s), &y)| avc.w(x, s) == y)
    }

    pub fn within_budget(&self, budget: f64) -> bool {
        self.total_cost <= budget + 1e-12
    }
}
