//! Evaluation of `C_K`, its brackets, and the rate-goodness predicate.

mod goodness;
pub mod rd;
mod search;

pub use goodness::{prefix_v_grid, rate_is_delta_good, GoodnessVerdict, GoodnessWitness};
pub use search::{compute_c_k, evaluate_point, CapacityResult, LocalOptimum, Mode, PointValue};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{min_cost_symmetrizer, GeometryError, JammingPlan};
use crate::model::{AvcSpec, ChunkScheme, CondDist, ModelError};
use rd::{certify, min_babble, RdChunk};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("no jamming table fits the budget {0}")]
    EmptyFeasibleSet(f64),
    #[error("no division point admits an affordable symmetrizing suffix")]
    NotSymmetrizable,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs of the outer maximisation and of the brackets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Step of the chunk-uniform coarse grid over input laws.
    pub grid_resolution: f64,
    /// Number of seeded random ascent starts.
    pub starts: usize,
    /// Number of best grid points used as additional ascent starts.
    pub refine_top: usize,
    pub step_init: f64,
    pub step_min: f64,
    pub seed: u64,
    /// Symmetrization slack δ of the lower bracket.
    pub bracket_delta: f64,
    /// The upper bracket shrinks the budget by `coeff · δ^exponent`.
    pub delta_state_coeff: f64,
    pub delta_state_exponent: f64,
    /// Frank–Wolfe duality gap target for the reported babble witness.
    pub fw_tol: f64,
    pub fw_max_iters: usize,
    /// Entry resolution of prefix jamming candidates in the goodness test.
    pub vgrid_resolution: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_resolution: 0.1,
            starts: 6,
            refine_top: 3,
            step_init: 0.1,
            step_min: 1e-3,
            seed: 0,
            bracket_delta: 0.05,
            delta_state_coeff: 1.0,
            delta_state_exponent: 2.0,
            fw_tol: 1e-6,
            fw_max_iters: 2000,
            vgrid_resolution: 0.05,
        }
    }
}

impl SearchConfig {
    pub fn delta_state(&self) -> f64 {
        self.delta_state_coeff * self.bracket_delta.powf(self.delta_state_exponent)
    }
}

/// Minimiser of the full-block babble term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BabbleWitness {
    pub value: f64,
    pub cost: f64,
    pub v: Vec<CondDist>,
    /// Frank–Wolfe duality gap when certified.
    pub gap: Option<f64>,
}

/// Minimiser of the babble-and-push term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushWitness {
    pub value: f64,
    pub plan: JammingPlan,
    pub suffix_cost: f64,
}

fn chunks_of(p_xu: &CondDist, range: std::ops::Range<usize>, k: usize) -> Vec<RdChunk<'_>> {
    range
        .map(|u| RdChunk {
            p: p_xu.row(u),
            weight: 1.0 / k as f64,
        })
        .collect()
}

/// `min_{V ∈ F} (1/K) Σ_u I(P_u, V_u)` with the budget shrunk by `shrink`.
pub fn min_mi_feasible(
    p_xu: &CondDist,
    avc: &AvcSpec,
    scheme: &ChunkScheme,
    shrink: f64,
) -> Result<BabbleWitness, CapacityError> {
    min_mi_feasible_with(p_xu, avc, scheme, shrink, None)
}

/// As [`min_mi_feasible`], optionally certifying the result to a duality gap
/// of `(tol, max_iters)`.
pub fn min_mi_feasible_with(
    p_xu: &CondDist,
    avc: &AvcSpec,
    scheme: &ChunkScheme,
    shrink: f64,
    certify_to: Option<(f64, usize)>,
) -> Result<BabbleWitness, CapacityError> {
    let k = scheme.k();
    if p_xu.num_rows() != k || p_xu.row_len() != avc.nx() {
        return Err(ModelError::ShapeMismatch("input law does not match chunks".into()).into());
    }
    let budget = avc.budget() - shrink;
    let chunks = chunks_of(p_xu, 0..k, k);
    let sol = min_babble(&chunks, avc, budget).ok_or(CapacityError::EmptyFeasibleSet(budget))?;
    let (sol, gap) = match certify_to {
        Some((tol, iters)) => {
            let (s, g) = certify(&chunks, sol, avc, budget, tol, iters);
            (s, Some(g))
        }
        None => (sol, None),
    };
    Ok(BabbleWitness {
        value: sol.value,
        cost: sol.cost,
        v: sol.v,
        gap,
    })
}

/// Cheapest symmetrizer cost for each chunk's product input law.
pub fn suffix_symmetrizer_costs(
    p_xu: &CondDist,
    avc: &AvcSpec,
    sym_delta: f64,
) -> Result<Vec<(CondDist, f64)>, GeometryError> {
    p_xu.rows()
        .iter()
        .map(|p| min_cost_symmetrizer(&p.product(p), avc, sym_delta))
        .collect()
}

/// `min_α min (1/K) Σ_{u ≤ αK} I(P_u, V_u)` over plans whose suffix chunks are
/// symmetrizing (residual ≤ `sym_delta`) and whose total cost is within
/// `Λ − shrink`. Ties in value go to the smaller α.
pub fn min_prefix_mi_symmetrizable(
    p_xu: &CondDist,
    avc: &AvcSpec,
    scheme: &ChunkScheme,
    shrink: f64,
    sym_delta: f64,
) -> Result<PushWitness, CapacityError> {
    let k = scheme.k();
    if p_xu.num_rows() != k || p_xu.row_len() != avc.nx() {
        return Err(ModelError::ShapeMismatch("input law does not match chunks".into()).into());
    }
    let sym = match suffix_symmetrizer_costs(p_xu, avc, sym_delta) {
        Ok(s) => s,
        Err(GeometryError::Infeasible(_)) => return Err(CapacityError::NotSymmetrizable),
        Err(e) => return Err(e.into()),
    };
    let eps = scheme.eps();
    let mut best: Option<PushWitness> = None;
    for a in scheme.alpha_grid() {
        let suffix_cost: f64 = sym[a..].iter().map(|(_, c)| c * eps).sum();
        let remaining = avc.budget() - shrink - suffix_cost;
        if remaining < -1e-12 {
            continue;
        }
        let chunks = chunks_of(p_xu, 0..a, k);
        let Some(prefix) = min_babble(&chunks, avc, remaining) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| prefix.value < b.value) {
            best = Some(PushWitness {
                value: prefix.value,
                plan: JammingPlan {
                    a,
                    prefix: prefix.v,
                    suffix: sym[a..].iter().map(|(v, _)| v.clone()).collect(),
                },
                suffix_cost,
            });
            if best.as_ref().is_some_and(|b| b.value <= 0.0) {
                break;
            }
        }
    }
    best.ok_or(CapacityError::NotSymmetrizable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::h2;
    use crate::model::Dist;

    fn uniform(k: usize) -> CondDist {
        CondDist::constant(k, &Dist::uniform(2))
    }

    #[test]
    fn babble_examples() {
        let scheme = ChunkScheme::new(4, 2).unwrap();
        let p = uniform(2);
        let w = min_mi_feasible(&p, &AvcSpec::xor(0.0), &scheme, 0.0).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9);
        let w = min_mi_feasible(&p, &AvcSpec::xor(0.5), &scheme, 0.0).unwrap();
        assert!(w.value < 1e-9);
        let w =
            min_mi_feasible_with(&p, &AvcSpec::xor(0.25), &scheme, 0.0, Some((1e-6, 500))).unwrap();
        assert!((w.value - (1.0 - h2(0.25))).abs() < 1e-6);
        assert!(w.gap.unwrap() <= 1e-6);
        assert!(matches!(
            min_mi_feasible(&p, &AvcSpec::xor(0.1), &scheme, 0.2),
            Err(CapacityError::EmptyFeasibleSet(_))
        ));
    }

    #[test]
    fn push_examples() {
        let scheme = ChunkScheme::new(4, 2).unwrap();
        let p = uniform(2);
        // a full-block symmetrizer costs 1/4 under uniform inputs
        let w = min_prefix_mi_symmetrizable(&p, &AvcSpec::xor(0.3), &scheme, 0.0, 0.0).unwrap();
        assert_eq!(w.plan.a, 0);
        assert_eq!(w.value, 0.0);
        assert!(matches!(
            min_prefix_mi_symmetrizable(&p, &AvcSpec::xor(0.0), &scheme, 0.0, 0.0),
            Err(CapacityError::NotSymmetrizable)
        ));
    }

    #[test]
    fn only_last_chunk_affordable() {
        // K = 4, each suffix chunk costs 1/16 under uniform input; budget 1/16
        // covers exactly the last chunk and leaves nothing for babble.
        let scheme = ChunkScheme::new(8, 4).unwrap();
        let p = uniform(4);
        let w = min_prefix_mi_symmetrizable(&p, &AvcSpec::xor(0.0625), &scheme, 0.0, 0.0).unwrap();
        assert!(w.plan.a <= 3);
        // a = 3: three noiseless chunks, value 0.75; smaller a is infeasible
        assert_eq!(w.plan.a, 3);
        assert!((w.value - 0.75).abs() < 1e-6);
    }
}
