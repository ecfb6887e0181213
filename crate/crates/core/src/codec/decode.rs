use serde::{Deserialize, Serialize};

use super::Codebook;
use crate::capacity::prefix_v_grid;
use crate::geometry::chunk_cost;
use crate::info::chunk_mi;
use crate::lp::{Constraint, LinearProgram, LpStatus};
use crate::model::{AvcSpec, ChunkScheme, CondDist, Dist, SlackSchedule};

const FEAS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeStatus {
    Decoded(usize),
    /// More than one message passed both steps at the same division point.
    Abort(Vec<usize>),
    /// No message passed at any division point.
    Erasure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// Prefix chunk count at which the decoder stopped.
    pub alpha_used: Option<usize>,
    /// Largest list over prefix candidates, one entry per division point tried.
    pub list_sizes: Vec<usize>,
}

impl DecodeOutcome {
    pub fn decoded(&self) -> Option<usize> {
        match self.status {
            DecodeStatus::Decoded(m) => Some(m),
            _ => None,
        }
    }
}

/// One admissible chunk-constant prefix table at a given division point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VgridEntry {
    pub a: usize,
    pub v: CondDist,
    pub cumulative_mi: f64,
    pub prefix_cost: f64,
}

/// Prefix jamming candidates whose cumulative information puts the code
/// rate inside `[I - δ_LB, I - δ_UB]` and whose prefix cost fits the budget.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vgrid {
    pub entries: Vec<VgridEntry>,
}

impl Vgrid {
    pub fn build(cb: &Codebook, avc: &AvcSpec, slack: &SlackSchedule, resolution: f64) -> Self {
        let scheme = cb.scheme();
        let p = &cb.params.p_xu;
        let r = cb.params.rate;
        let grid = prefix_v_grid(avc, resolution);
        let mut entries = Vec::new();
        for a in scheme.alpha_grid() {
            for v in &grid {
                let cum = (0..a).map(|u| chunk_mi(p.row(u), v, avc)).sum::<f64>() * scheme.eps();
                if r < cum - slack.delta_lb - 1e-9 || r > cum - slack.delta_ub + 1e-9 {
                    continue;
                }
                let cost = (0..a).map(|u| chunk_cost(p.row(u), v, avc)).sum::<f64>() * scheme.eps();
                if cost > avc.budget() + 1e-12 {
                    continue;
                }
                entries.push(VgridEntry {
                    a,
                    v: v.clone(),
                    cumulative_mi: cum,
                    prefix_cost: cost,
                });
            }
        }
        Vgrid { entries }
    }
}

fn pair_counts(x: &[usize], y: &[usize], ny: usize, out: &mut [u32]) {
    out.fill(0);
    for (&a, &b) in x.iter().zip(y) {
        out[a * ny + b] += 1;
    }
}

/// Whether some conditional state type makes the chunk joint type of
/// `(x, s, y)` lie within `tol` of `P(x) V(s|x) 1{y = W(x,s)}`.
///
/// The constraints separate over `(x, y)` cells, so feasibility reduces to
/// an interval test on each cell's mass.
pub fn prefix_chunk_matches(
    x: &[usize],
    y: &[usize],
    p: &Dist,
    v: &CondDist,
    avc: &AvcSpec,
    tol: f64,
) -> bool {
    let mut counts = vec![0u32; avc.nx() * avc.ny()];
    pair_counts(x, y, avc.ny(), &mut counts);
    matches_counts(&counts, x.len(), p, v, avc, tol)
}

fn matches_counts(
    counts: &[u32],
    len: usize,
    p: &Dist,
    v: &CondDist,
    avc: &AvcSpec,
    tol: f64,
) -> bool {
    let (nx, ns, ny) = (avc.nx(), avc.ns(), avc.ny());
    let len = len as f64;
    for x in 0..nx {
        for y in 0..ny {
            let mass = counts[x * ny + y] as f64 / len;
            let (mut lo, mut hi, mut reachable) = (0.0, 0.0, false);
            for s in 0..ns {
                if avc.w(x, s) == y {
                    let t = p.get(x) * v.get(x, s);
                    lo += (t - tol).max(0.0);
                    hi += t + tol;
                    reachable = true;
                }
            }
            if !reachable {
                if mass > 0.0 {
                    return false;
                }
                continue;
            }
            if mass < lo - FEAS_TOL || mass > hi + FEAS_TOL {
                return false;
            }
        }
    }
    true
}

/// Messages with some seed prefix whose every prefix chunk matches `P V W`.
///
/// `v_prefix[u]` is the jamming table hypothesised for chunk `u < a`.
pub fn list_decode_prefix(
    y: &[usize],
    a: usize,
    v_prefix: &[CondDist],
    cb: &Codebook,
    avc: &AvcSpec,
    tol: f64,
) -> Vec<usize> {
    let len = cb.chunk_len();
    let p = &cb.params.p_xu;
    let mut counts = vec![0u32; avc.nx() * avc.ny()];
    (0..cb.messages())
        .filter(|&m| {
            (0..a).all(|u| {
                let yc = &y[u * len..(u + 1) * len];
                (0..cb.seeds()).any(|r| {
                    pair_counts(cb.word(u, m, r), yc, avc.ny(), &mut counts);
                    matches_counts(&counts, len, p.row(u), &v_prefix[u], avc, tol)
                })
            })
        })
        .collect()
}

/// Cheapest `Σ_x P(x) Σ_s V(s|x) B(s)` over jamming tables whose induced
/// joint type is within `tol` of some state assignment explaining `y` from `x`.
///
/// `P` is the type of `x`. Returns `None` when no such table exists.
pub fn chunk_min_cost(x: &[usize], y: &[usize], avc: &AvcSpec, tol: f64) -> Option<f64> {
    let (nx, ns, ny) = (avc.nx(), avc.ns(), avc.ny());
    let len = x.len() as f64;
    let mut counts = vec![0u32; nx * ny];
    pair_counts(x, y, ny, &mut counts);
    let mut p = vec![0.0; nx];
    for xi in 0..nx {
        p[xi] = (0..ny).map(|yi| counts[xi * ny + yi] as f64).sum::<f64>() / len;
    }
    for xi in 0..nx {
        for yi in 0..ny {
            if counts[xi * ny + yi] > 0 && !(0..ns).any(|s| avc.w(xi, s) == yi) {
                return None;
            }
        }
    }
    // variables: e(x,s) then V(s|x)
    let nv = 2 * nx * ns;
    let e = |x: usize, s: usize| x * ns + s;
    let vv = |x: usize, s: usize| nx * ns + x * ns + s;
    let mut lp = LinearProgram::new(nv);
    let mut c = vec![0.0; nv];
    for xi in 0..nx {
        for s in 0..ns {
            c[vv(xi, s)] = p[xi] * avc.cost(s);
        }
    }
    lp.minimize(c);
    for xi in 0..nx {
        for yi in 0..ny {
            let mut row = vec![0.0; nv];
            for s in 0..ns {
                if avc.w(xi, s) == yi {
                    row[e(xi, s)] = 1.0;
                }
            }
            if row.iter().any(|v| *v != 0.0) {
                lp.add(Constraint::eq(row, counts[xi * ny + yi] as f64 / len));
            }
        }
        let mut row = vec![0.0; nv];
        for s in 0..ns {
            row[vv(xi, s)] = 1.0;
        }
        lp.add(Constraint::eq(row, 1.0));
        for s in 0..ns {
            let mut row = vec![0.0; nv];
            row[e(xi, s)] = 1.0;
            row[vv(xi, s)] = -p[xi];
            let neg: Vec<f64> = row.iter().map(|v| -v).collect();
            lp.add(Constraint::le(row, tol));
            lp.add(Constraint::le(neg, tol));
        }
    }
    match lp.solve() {
        LpStatus::Optimal(sol) => Some(sol.objective.max(0.0)),
        _ => None,
    }
}

/// Whether `x_cand` explains the suffix of `y` with a suffix jamming table
/// that, together with a prefix costing `prefix_cost`, stays within budget.
///
/// Chunks after the prefix are independent apart from the shared budget,
/// so the joint feasibility problem reduces to summing per-chunk minima.
pub fn suffix_consistency(
    y: &[usize],
    x_cand: &[usize],
    a: usize,
    prefix_cost: f64,
    avc: &AvcSpec,
    scheme: &ChunkScheme,
    tol: f64,
) -> bool {
    let mut total = prefix_cost;
    for u in a..scheme.k() {
        let r = scheme.chunk_range(u);
        match chunk_min_cost(&x_cand[r.clone()], &y[r], avc, tol) {
            Some(c) => total += c * scheme.eps(),
            None => return false,
        }
    }
    total <= avc.budget() + 1e-9
}

/// Bob's decoder: for each division point in increasing order, list-decode
/// the prefix under every admissible candidate and keep the listed messages
/// whose suffix is budget-consistent. One survivor decodes, several abort,
/// none moves on to the next division point.
pub fn iterative_decode(
    y: &[usize],
    cb: &Codebook,
    avc: &AvcSpec,
    tol: f64,
    vgrid: &Vgrid,
) -> DecodeOutcome {
    let scheme = cb.scheme();
    let (k, mm, nn, len) = (cb.k(), cb.messages(), cb.seeds(), cb.chunk_len());
    let cells = avc.nx() * avc.ny();
    let mut counts = vec![0u32; k * mm * nn * cells];
    for u in 0..k {
        let yc = &y[u * len..(u + 1) * len];
        for m in 0..mm {
            for r in 0..nn {
                let at = ((u * mm + m) * nn + r) * cells;
                pair_counts(cb.word(u, m, r), yc, avc.ny(), &mut counts[at..at + cells]);
            }
        }
    }
    let cell = |u: usize, m: usize, r: usize| {
        let at = ((u * mm + m) * nn + r) * cells;
        &counts[at..at + cells]
    };
    // cheapest suffix chunk cost per (u, m), minimised over seeds; filled lazily
    let mut suffix_cost: Vec<Option<Option<f64>>> = vec![None; k * mm];
    let mut list_sizes = Vec::new();
    let p = &cb.params.p_xu;

    let mut start = 0;
    while start < vgrid.entries.len() {
        let a = vgrid.entries[start].a;
        let end = start
            + vgrid.entries[start..]
                .iter()
                .take_while(|e| e.a == a)
                .count();
        let mut survivors: Vec<usize> = Vec::new();
        let mut max_list = 0;
        for entry in &vgrid.entries[start..end] {
            let list: Vec<usize> = (0..mm)
                .filter(|&m| {
                    (0..a).all(|u| {
                        (0..nn).any(|r| {
                            matches_counts(cell(u, m, r), len, p.row(u), &entry.v, avc, tol)
                        })
                    })
                })
                .collect();
            max_list = max_list.max(list.len());
            for m in list {
                if survivors.contains(&m) {
                    continue;
                }
                let mut total = entry.prefix_cost;
                let mut ok = true;
                for u in a..k {
                    let slot = &mut suffix_cost[u * mm + m];
                    let c = *slot.get_or_insert_with(|| {
                        let r = scheme.chunk_range(u);
                        (0..nn)
                            .filter_map(|s| {
                                chunk_min_cost(cb.word(u, m, s), &y[r.clone()], avc, tol)
                            })
                            .min_by(f64::total_cmp)
                    });
                    match c {
                        Some(c) => total += c * scheme.eps(),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && total <= avc.budget() + 1e-9 {
                    survivors.push(m);
                }
            }
        }
        list_sizes.push(max_list);
        match survivors.len() {
            0 => {}
            1 => {
                return DecodeOutcome {
                    status: DecodeStatus::Decoded(survivors[0]),
                    alpha_used: Some(a),
                    list_sizes,
                }
            }
            _ => {
                survivors.sort_unstable();
                return DecodeOutcome {
                    status: DecodeStatus::Abort(survivors),
                    alpha_used: Some(a),
                    list_sizes,
                };
            }
        }
        start = end;
    }
    DecodeOutcome {
        status: DecodeStatus::Erasure,
        alpha_used: None,
        list_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_codebook, encode, CodecConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xor_code(n: usize, k: usize, rate: f64, seed: u64) -> (AvcSpec, Codebook) {
        let avc = AvcSpec::xor(0.0);
        let scheme = ChunkScheme::new(n, k).unwrap();
        let cb = build_codebook(
            &avc,
            &CondDist::constant(k, &Dist::uniform(2)),
            rate,
            &scheme,
            0.0,
            &CodecConfig::default(),
            seed,
        )
        .unwrap();
        (avc, cb)
    }

    fn stand_down(avc: &AvcSpec) -> CondDist {
        CondDist::constant(avc.nx(), &Dist::point(avc.ns(), avc.s0()))
    }

    /// Feasibility LP over e(x,s) for one chunk; independent of the closed form.
    fn matches_by_lp(
        x: &[usize],
        y: &[usize],
        p: &Dist,
        v: &CondDist,
        avc: &AvcSpec,
        tol: f64,
    ) -> bool {
        let (nx, ns, ny) = (avc.nx(), avc.ns(), avc.ny());
        let len = x.len() as f64;
        let mut lp = LinearProgram::new(nx * ns);
        lp.minimize(vec![0.0; nx * ns]);
        for xi in 0..nx {
            for yi in 0..ny {
                let mut row = vec![0.0; nx * ns];
                for s in 0..ns {
                    if avc.w(xi, s) == yi {
                        row[xi * ns + s] = 1.0;
                    }
                }
                let mass = x
                    .iter()
                    .zip(y)
                    .filter(|(a, b)| **a == xi && **b == yi)
                    .count() as f64
                    / len;
                lp.add(Constraint::eq(row, mass));
            }
            for s in 0..ns {
                let mut row = vec![0.0; nx * ns];
                row[xi * ns + s] = 1.0;
                let t = p.get(xi) * v.get(xi, s);
                lp.add(Constraint::le(row.clone(), t + tol));
                lp.add(Constraint::ge(row, t - tol));
            }
        }
        matches!(lp.solve(), LpStatus::Optimal(_))
    }

    #[test]
    fn closed_form_matches_lp() {
        let avc = AvcSpec::xor(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let len = rng.gen_range(4..20);
            let x: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
            let y: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
            let p = Dist::normalized(vec![rng.gen::<f64>(), rng.gen::<f64>()]).unwrap();
            let q0: f64 = rng.gen();
            let q1: f64 = rng.gen();
            let v = CondDist::from_rows(vec![vec![1.0 - q0, q0], vec![1.0 - q1, q1]]).unwrap();
            let tol = rng.gen_range(0.0..0.3);
            assert_eq!(
                prefix_chunk_matches(&x, &y, &p, &v, &avc, tol),
                matches_by_lp(&x, &y, &p, &v, &avc, tol)
            );
        }
    }

    #[test]
    fn noiseless_word_is_listed() {
        let (avc, cb) = xor_code(24, 2, 0.25, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (x, _) = encode(&cb, 5, &mut rng).unwrap();
        let v = vec![stand_down(&avc); 1];
        let list = list_decode_prefix(&x, 1, &v, &cb, &avc, 0.0);
        assert!(list.contains(&5));
    }

    #[test]
    fn huge_tolerance_lists_everything() {
        let (avc, cb) = xor_code(24, 2, 0.25, 1);
        let y = vec![0; 24];
        let v = vec![stand_down(&avc); 1];
        assert_eq!(
            list_decode_prefix(&y, 1, &v, &cb, &avc, 2.0).len(),
            cb.messages()
        );
    }

    #[test]
    fn random_output_lists_nothing() {
        let (avc, cb) = xor_code(120, 4, 0.05, 2);
        let v = vec![stand_down(&avc); 3];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 200;
        let mut empty = 0;
        for _ in 0..trials {
            let y: Vec<usize> = (0..120).map(|_| rng.gen_range(0..2)).collect();
            empty += usize::from(list_decode_prefix(&y, 3, &v, &cb, &avc, 0.02).is_empty());
        }
        assert!(empty as f64 / trials as f64 > 0.99);
    }

    #[test]
    fn suffix_consistency_examples() {
        let scheme = ChunkScheme::new(8, 2).unwrap();
        let x = vec![0, 1, 0, 1, 1, 1, 0, 0];
        // true codeword, no jamming
        assert!(suffix_consistency(
            &x,
            &x,
            0,
            0.0,
            &AvcSpec::xor(0.0),
            &scheme,
            0.0
        ));
        // zero budget and a flipped suffix symbol
        let mut y = x.clone();
        y[6] = 1;
        assert!(!suffix_consistency(
            &y,
            &x,
            1,
            0.0,
            &AvcSpec::xor(0.0),
            &scheme,
            0.0
        ));
        // two flips over eight symbols cost exactly 1/4
        y[1] = 0;
        assert!(suffix_consistency(
            &y,
            &x,
            0,
            0.0,
            &AvcSpec::xor(0.25),
            &scheme,
            0.0
        ));
        assert!(!suffix_consistency(
            &y,
            &x,
            0,
            0.0,
            &AvcSpec::xor(0.24),
            &scheme,
            0.0
        ));
    }

    #[test]
    fn chunk_cost_is_flip_fraction_at_zero_tolerance() {
        let avc = AvcSpec::xor(1.0);
        let x = [0, 0, 1, 1, 0, 1];
        let y = [0, 1, 1, 0, 0, 1];
        assert!((chunk_min_cost(&x, &y, &avc, 0.0).unwrap() - 2.0 / 6.0).abs() < 1e-9);
        // tolerance lets the table undercut the realized flips
        assert!(chunk_min_cost(&x, &y, &avc, 0.1).unwrap() < 2.0 / 6.0 - 0.05);
    }

    #[test]
    fn stand_down_decodes_at_first_admissible_alpha() {
        let (avc, cb) = xor_code(240, 4, 0.5, 4);
        let scheme = cb.scheme();
        let slack = SlackSchedule::new(&scheme, 2, 2, 0.5, 0.1);
        let grid = Vgrid::build(&cb, &avc, &slack, 0.05);
        let first = grid.entries[0].a;
        let tol = CodecConfig::default().tolerance(cb.chunk_len());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for m in [0, 17, 1023] {
            let (x, _) = encode(&cb, m, &mut rng).unwrap();
            let out = iterative_decode(&x, &cb, &avc, tol, &grid);
            assert_eq!(out.status, DecodeStatus::Decoded(m));
            assert_eq!(out.alpha_used, Some(first));
        }
    }

    #[test]
    fn empty_grid_erases() {
        let (avc, cb) = xor_code(24, 2, 0.25, 1);
        let out = iterative_decode(&[0; 24], &cb, &avc, 0.1, &Vgrid::default());
        assert_eq!(out.status, DecodeStatus::Erasure);
        assert!(out.list_sizes.is_empty());
    }
}
