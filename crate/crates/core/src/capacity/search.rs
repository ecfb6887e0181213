//! Outer maximisation over chunk-wise input laws.
//!
//! A chunk-uniform simplex grid is scored first; the best grid points and a
//! few seeded random laws then seed a compass search that moves probability
//! mass between symbol pairs inside one chunk, halving the step whenever no
//! move improves. The objective is not concave, so the result is a best-found
//! value; every local optimum is kept for inspection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    min_mi_feasible_with, min_prefix_mi_symmetrizable, BabbleWitness, CapacityError, PushWitness,
    SearchConfig,
};
use crate::geometry::simplex_grid;
use crate::model::{AvcSpec, ChunkScheme, CondDist, Dist};

/// Which of the three capacity expressions to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// `C_K` itself: exact symmetrizers, full budget.
    Estimate,
    /// `C̲_{K,δ}`: symmetrizers relaxed to residual δ, full budget.
    Lower,
    /// `C̄_{K,δ}`: exact symmetrizers, budget shrunk by δ_state.
    Upper,
}

/// The two inner minima at one input law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub value: f64,
    /// `∞` when the shrunk budget admits no jamming table.
    pub babble: f64,
    /// `∞` when no division point is symmetrizable.
    pub push: f64,
    pub babble_witness: Option<BabbleWitness>,
    pub push_witness: Option<PushWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalOptimum {
    pub value: f64,
    pub input: CondDist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub k: usize,
    pub budget: f64,
    pub value: f64,
    pub argmax_input: CondDist,
    pub babble_witness: Option<BabbleWitness>,
    pub push_witness: Option<PushWitness>,
    pub lower: f64,
    pub upper: f64,
    pub chunk_uniform: bool,
    pub local_optima: Vec<LocalOptimum>,
    /// Spread of the local optimum values across ascent starts.
    pub spread: f64,
}

pub(crate) fn value_cap(avc: &AvcSpec) -> f64 {
    (avc.nx().min(avc.ny()) as f64).log2()
}

/// Evaluates `min{babble, push}` at one input law under `mode`.
pub fn evaluate_point(
    p_xu: &CondDist,
    avc: &AvcSpec,
    scheme: &ChunkScheme,
    cfg: &SearchConfig,
    mode: Mode,
    certify: bool,
) -> PointValue {
    let (shrink, sym_delta) = match mode {
        Mode::Estimate => (0.0, 0.0),
        Mode::Lower => (0.0, cfg.bracket_delta),
        Mode::Upper => (cfg.delta_state(), 0.0),
    };
    let cap = value_cap(avc);
    let push = match min_prefix_mi_symmetrizable(p_xu, avc, scheme, shrink, sym_delta) {
        Ok(w) => Some(w),
        Err(CapacityError::NotSymmetrizable) => None,
        Err(e) => panic!("push term failed: {e}"),
    };
    let push_value = push.as_ref().map_or(f64::INFINITY, |w| w.value);
    // the minimum is already pinned at zero; skip the babble solve
    if push_value <= 0.0 && !certify {
        return PointValue {
            value: 0.0,
            babble: f64::NAN,
            push: 0.0,
            babble_witness: None,
            push_witness: push,
        };
    }
    let certify_to = certify.then_some((cfg.fw_tol, cfg.fw_max_iters));
    let babble = match min_mi_feasible_with(p_xu, avc, scheme, shrink, certify_to) {
        Ok(w) => Some(w),
        Err(CapacityError::EmptyFeasibleSet(_)) => None,
        Err(e) => panic!("babble term failed: {e}"),
    };
    let babble_value = babble.as_ref().map_or(f64::INFINITY, |w| w.value);
    PointValue {
        value: babble_value.min(push_value).min(cap),
        babble: babble_value,
        push: push_value,
        babble_witness: babble,
        push_witness: push,
    }
}

fn average_input(p_xu: &CondDist) -> Vec<f64> {
    let k = p_xu.num_rows() as f64;
    let mut avg = vec![0.0; p_xu.row_len()];
    for row in p_xu.rows() {
        for (a, p) in avg.iter_mut().zip(row.probs()) {
            *a += p / k;
        }
    }
    avg
}

fn feasible(p_xu: &CondDist, avc: &AvcSpec) -> bool {
    avc.input_feasible(&average_input(p_xu))
}

fn grid_candidates(avc: &AvcSpec, k: usize, resolution: f64) -> Vec<CondDist> {
    let m = ((1.0 / resolution).round() as usize).max(1);
    let mut out: Vec<CondDist> = simplex_grid(avc.nx(), m)
        .into_iter()
        .map(|q| CondDist::constant(k, &Dist::normalized(q).expect("grid point")))
        .filter(|p| feasible(p, avc))
        .collect();
    if out.is_empty() {
        let p = Dist::normalized(avc.some_feasible_input()).expect("feasible input");
        out.push(CondDist::constant(k, &p));
    }
    out
}

fn random_start(avc: &AvcSpec, k: usize, rng: &mut ChaCha8Rng) -> Option<CondDist> {
    for _ in 0..200 {
        let rows = (0..k)
            .map(|_| {
                let e: Vec<f64> = (0..avc.nx())
                    .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                    .collect();
                Dist::normalized(e).expect("positive weights")
            })
            .collect();
        let p = CondDist::new(rows).expect("rows share an alphabet");
        if feasible(&p, avc) {
            return Some(p);
        }
    }
    None
}

/// Moves `step` of mass from symbol `from` to symbol `to` in chunk `u`.
fn transfer(p: &CondDist, u: usize, from: usize, to: usize, step: f64) -> Option<CondDist> {
    let row = p.row(u).probs();
    if row[from] <= 0.0 {
        return None;
    }
    let amount = step.min(row[from]);
    let mut next = row.to_vec();
    next[from] -= amount;
    next[to] += amount;
    next[from] = next[from].max(0.0);
    let mut rows = p.rows().to_vec();
    rows[u] = Dist::normalized(next).ok()?;
    CondDist::new(rows).ok()
}

fn ascend(
    start: CondDist,
    avc: &AvcSpec,
    scheme: &ChunkScheme,
    cfg: &SearchConfig,
) -> LocalOptimum {
    let score = |p: &CondDist| evaluate_point(p, avc, scheme, cfg, Mode::Estimate, false).value;
    let mut best = start;
    let mut best_val = score(&best);
    let mut step = cfg.step_init;
    let nx = avc.nx();
    while step >= cfg.step_min {
        let mut improved = false;
        'moves: for u in 0..scheme.k() {
            for from in 0..nx {
                for to in 0..nx {
                    if from == to {
                        continue;
                    }
                    let Some(cand) = transfer(&best, u, from, to, step) else {
                        continue;
                    };
                    if !feasible(&cand, avc) {
                        continue;
                    }
                    let v = score(&cand);
                    if v > best_val + 1e-12 {
                        best = cand;
                        best_val = v;
                        improved = true;
                        break 'moves;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    LocalOptimum {
        value: best_val,
        input: best,
    }
}

fn is_chunk_uniform(p: &CondDist) -> bool {
    p.rows().iter().all(|r| r.linf(p.row(0)) <= 1e-9)
}

/// `Ĉ_K` with its brackets, argmax input law and inner witnesses.
pub fn compute_c_k(avc: &AvcSpec, k: usize, cfg: &SearchConfig) -> CapacityResult {
    let scheme = ChunkScheme::new(k, k).expect("K >= 1");
    let grid = grid_candidates(avc, k, cfg.grid_resolution);
    let grid_vals: Vec<f64> = grid
        .par_iter()
        .map(|p| evaluate_point(p, avc, &scheme, cfg, Mode::Estimate, false).value)
        .collect();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid_vals[b].total_cmp(&grid_vals[a]).then(a.cmp(&b)));
    let mut starts: Vec<CondDist> = order
        .iter()
        .take(cfg.refine_top)
        .map(|&i| grid[i].clone())
        .collect();
    for i in 0..cfg.starts {
        let mut rng =
            ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(i as u64));
        if let Some(p) = random_start(avc, k, &mut rng) {
            starts.push(p);
        }
    }
    let local_optima: Vec<LocalOptimum> = starts
        .into_par_iter()
        .map(|s| ascend(s, avc, &scheme, cfg))
        .collect();

    let mut candidates: Vec<(CondDist, f64)> = grid.into_iter().zip(grid_vals).collect();
    candidates.extend(local_optima.iter().map(|o| (o.input.clone(), o.value)));

    // Certify the leading candidate's babble term; polishing can only lower it,
    // so keep certifying until the leader is certified.
    let mut certified: Vec<Option<PointValue>> = vec![None; candidates.len()];
    let mut values: Vec<f64> = candidates.iter().map(|c| c.1).collect();
    let best_idx = loop {
        let lead = (0..values.len())
            .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
            .expect("at least one candidate");
        if certified[lead].is_some() {
            break lead;
        }
        let pv = evaluate_point(&candidates[lead].0, avc, &scheme, cfg, Mode::Estimate, true);
        values[lead] = pv.value;
        certified[lead] = Some(pv);
    };
    let best = certified[best_idx].clone().expect("leader certified");

    // Brackets on the same candidate set. Set inclusions (𝒱 ⊆ 𝒱_δ, shrunk
    // budgets) are enforced on the solver outputs term by term.
    let estimates: Vec<PointValue> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, (p, _))| {
            certified[i]
                .clone()
                .unwrap_or_else(|| full_estimate(p, avc, &scheme, cfg))
        })
        .collect();
    let cap = value_cap(avc);
    let (lower, upper) = candidates
        .par_iter()
        .zip(&estimates)
        .map(|((p, _), est)| {
            let lo = evaluate_point(p, avc, &scheme, cfg, Mode::Lower, false);
            let hi = evaluate_point(p, avc, &scheme, cfg, Mode::Upper, false);
            let lo_val = est.babble.min(lo.push.min(est.push)).min(cap);
            let hi_val = hi
                .babble
                .max(est.babble)
                .min(hi.push.max(est.push))
                .min(cap);
            (lo_val, hi_val)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(l, h), (a, b)| {
            (l.max(a), h.max(b))
        });
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vals: Vec<f64> = local_optima.iter().map(|o| o.value).collect();
    let spread = if vals.is_empty() {
        0.0
    } else {
        vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let argmax_input = candidates[best_idx].0.clone();
    CapacityResult {
        k,
        budget: avc.budget(),
        value,
        chunk_uniform: is_chunk_uniform(&argmax_input),
        argmax_input,
        babble_witness: best.babble_witness,
        push_witness: best.push_witness,
        lower,
        upper,
        local_optima,
        spread,
    }
}

/// Estimate with both inner terms evaluated (no zero shortcut).
fn full_estimate(
    p: &CondDist,
    avc: &AvcSpec,
    scheme: &ChunkScheme,
    cfg: &SearchConfig,
) -> PointValue {
    let mut pv = evaluate_point(p, avc, scheme, cfg, Mode::Estimate, false);
    if pv.babble.is_nan() {
        pv.babble = match min_mi_feasible_with(p, avc, scheme, 0.0, None) {
            Ok(w) => w.value,
            Err(_) => f64::INFINITY,
        };
    }
    pv
}
