//! Inner babble minimisation `min Σ_u w_u I(P_u, V_u)` subject to a total
//! cost budget.
//!
//! For a deterministic state law the cheapest jamming table realising a
//! given induced channel `Q(y|x)` pays `d(x, y) = min{B(s) : W(x,s) = y}`,
//! so the problem is a sum of rate-distortion problems sharing one budget.
//! Each chunk is solved by Blahut–Arimoto at a common slope β; β is
//! bisected until the budget is met and the bracketing solutions are mixed
//! to hit it exactly. A Frank–Wolfe duality gap over the jamming tables
//! certifies (and if needed polishes) the result.

use crate::info::{induced_table, mi_table};
use crate::lp::{Constraint, LinearProgram, LpStatus};
use crate::model::{AvcSpec, CondDist, Dist};

const BA_MAX_ITERS: usize = 4000;
const BA_TOL: f64 = 1e-13;
const BISECT_ITERS: usize = 80;
const BUDGET_EPS: f64 = 1e-12;

/// One chunk of a babble problem: its input law and objective weight.
#[derive(Clone, Debug)]
pub struct RdChunk<'a> {
    pub p: &'a Dist,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdSolution {
    /// `Σ_u w_u I(P_u, V_u)`.
    pub value: f64,
    /// `Σ_u w_u cost_u`.
    pub cost: f64,
    pub v: Vec<CondDist>,
}

/// Distortion table `d(x, y)` with the cheapest state for each reachable pair.
struct Distortion {
    nx: usize,
    ny: usize,
    d: Vec<Option<(usize, f64)>>,
}

impl Distortion {
    fn new(avc: &AvcSpec) -> Self {
        let (nx, ny) = (avc.nx(), avc.ny());
        let mut d = Vec::with_capacity(nx * ny);
        for x in 0..nx {
            for y in 0..ny {
                d.push(avc.distortion(x, y));
            }
        }
        Distortion { nx, ny, d }
    }

    fn cost(&self, x: usize, y: usize) -> Option<f64> {
        self.d[x * self.ny + y].map(|(_, c)| c)
    }
}

#[derive(Clone)]
struct ChunkState {
    q: Vec<f64>,
    i: f64,
    d: f64,
}

/// Blahut–Arimoto for one chunk at slope `beta`; `hard` restricts the
/// channel to zero-distortion pairs.
fn blahut_arimoto(
    p: &[f64],
    dist: &Distortion,
    beta: f64,
    hard: bool,
    warm: Option<&[f64]>,
) -> ChunkState {
    let (nx, ny) = (dist.nx, dist.ny);
    let allowed = |x: usize, y: usize| match dist.cost(x, y) {
        None => false,
        Some(c) => !hard || c == 0.0,
    };
    let mut out = vec![0.0; ny];
    match warm {
        Some(w) => out.copy_from_slice(w),
        None => {
            for y in 0..ny {
                if (0..nx).any(|x| p[x] > 0.0 && allowed(x, y)) {
                    out[y] = 1.0;
                }
            }
        }
    }
    // keep every usable output alive so the iteration can move mass there
    let usable: Vec<bool> = (0..ny)
        .map(|y| (0..nx).any(|x| p[x] > 0.0 && allowed(x, y)))
        .collect();
    let n_usable = usable.iter().filter(|&&b| b).count().max(1) as f64;
    let t: f64 = out.iter().sum();
    for y in 0..ny {
        out[y] = if usable[y] {
            0.999 * out[y] / t + 0.001 / n_usable
        } else {
            0.0
        };
    }
    let mut q = vec![0.0; nx * ny];
    for _ in 0..BA_MAX_ITERS {
        for x in 0..nx {
            let row = &mut q[x * ny..(x + 1) * ny];
            let dmin = (0..ny)
                .filter(|&y| allowed(x, y))
                .filter_map(|y| dist.cost(x, y))
                .fold(f64::INFINITY, f64::min);
            let mut z = 0.0;
            for y in 0..ny {
                row[y] = if allowed(x, y) {
                    let c = dist.cost(x, y).unwrap();
                    out[y] * (-beta * (c - dmin)).exp2()
                } else {
                    0.0
                };
                z += row[y];
            }
            if z > 0.0 {
                row.iter_mut().for_each(|v| *v /= z);
            } else {
                // every usable output currently has zero mass: fall back to the cheapest one
                let y = (0..ny)
                    .filter(|&y| allowed(x, y))
                    .min_by(|&a, &b| {
                        dist.cost(x, a)
                            .unwrap()
                            .total_cmp(&dist.cost(x, b).unwrap())
                    })
                    .expect("stand-down output is always usable");
                row[y] = 1.0;
            }
        }
        let mut next = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                next[y] += p[x] * q[x * ny + y];
            }
        }
        let delta = next
            .iter()
            .zip(&out)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out = next;
        if delta < BA_TOL {
            break;
        }
    }
    let i = mi_table(p, &q, ny);
    let d = distortion_of(p, &q, dist);
    ChunkState { q, i, d }
}

fn distortion_of(p: &[f64], q: &[f64], dist: &Distortion) -> f64 {
    let mut d = 0.0;
    for x in 0..dist.nx {
        for y in 0..dist.ny {
            let m = q[x * dist.ny + y];
            if m > 0.0 {
                d += p[x] * m * dist.cost(x, y).expect("mass only on reachable outputs");
            }
        }
    }
    d
}

/// Cheapest jamming table realising `Q(y|x)`; ties go to the lowest state.
fn table_from_channel(q: &[f64], dist: &Distortion, ns: usize) -> CondDist {
    let rows = (0..dist.nx)
        .map(|x| {
            let mut row = vec![0.0; ns];
            for y in 0..dist.ny {
                let m = q[x * dist.ny + y];
                if m > 0.0 {
                    let (s, _) = dist.d[x * dist.ny + y].expect("reachable");
                    row[s] += m;
                }
            }
            Dist::normalized(row).expect("channel rows carry unit mass")
        })
        .collect();
    CondDist::new(rows).expect("rows share the state alphabet")
}

fn solve_all(
    chunks: &[RdChunk<'_>],
    dist: &Distortion,
    beta: f64,
    hard: bool,
    warm: Option<&[ChunkState]>,
) -> Vec<ChunkState> {
    chunks
        .iter()
        .enumerate()
        .map(|(u, c)| {
            let w = warm.map(|w| {
                let mut out = vec![0.0; dist.ny];
                for x in 0..dist.nx {
                    for y in 0..dist.ny {
                        out[y] += c.p.get(x) * w[u].q[x * dist.ny + y];
                    }
                }
                out
            });
            blahut_arimoto(c.p.probs(), dist, beta, hard, w.as_deref())
        })
        .collect()
}

fn totals(chunks: &[RdChunk<'_>], states: &[ChunkState]) -> (f64, f64) {
    chunks
        .iter()
        .zip(states)
        .fold((0.0, 0.0), |(i, d), (c, s)| {
            (i + c.weight * s.i, d + c.weight * s.d)
        })
}

/// Minimises `Σ_u w_u I(P_u, V_u)` subject to `Σ_u w_u cost(P_u, V_u) ≤ budget`.
///
/// Returns `None` when the budget is negative (no jamming table is feasible).
pub fn min_babble(chunks: &[RdChunk<'_>], avc: &AvcSpec, budget: f64) -> Option<RdSolution> {
    if budget < -BUDGET_EPS {
        return None;
    }
    let dist = Distortion::new(avc);
    let ns = avc.ns();
    if chunks.is_empty() {
        return Some(RdSolution {
            value: 0.0,
            cost: 0.0,
            v: Vec::new(),
        });
    }
    let finish = |states: &[ChunkState]| {
        let v: Vec<CondDist> = states
            .iter()
            .map(|s| table_from_channel(&s.q, &dist, ns))
            .collect();
        let (value, cost) = evaluate(chunks, &v, avc);
        RdSolution { value, cost, v }
    };
    let free = solve_all(chunks, &dist, 0.0, false, None);
    if totals(chunks, &free).1 <= budget + BUDGET_EPS {
        return Some(finish(&free));
    }
    if budget <= BUDGET_EPS {
        return Some(finish(&solve_all(chunks, &dist, 0.0, true, None)));
    }
    // find β_hi with cost under budget
    let mut hi_beta = 1.0;
    let mut hi = solve_all(chunks, &dist, hi_beta, false, None);
    while totals(chunks, &hi).1 > budget && hi_beta < 1e6 {
        hi_beta *= 2.0;
        hi = solve_all(chunks, &dist, hi_beta, false, Some(&hi));
    }
    if totals(chunks, &hi).1 > budget {
        hi = solve_all(chunks, &dist, 0.0, true, None);
    }
    let mut lo_beta = 0.0;
    let mut lo = free;
    for _ in 0..BISECT_ITERS {
        if hi_beta - lo_beta <= 1e-10 * hi_beta.max(1.0) {
            break;
        }
        let mid_beta = 0.5 * (lo_beta + hi_beta);
        let mid = solve_all(chunks, &dist, mid_beta, false, Some(&hi));
        if totals(chunks, &mid).1 > budget {
            lo_beta = mid_beta;
            lo = mid;
        } else {
            hi_beta = mid_beta;
            hi = mid;
        }
    }
    // mix the bracketing channels so the budget is met with equality
    let (_, d_lo) = totals(chunks, &lo);
    let (_, d_hi) = totals(chunks, &hi);
    let lambda = if d_lo - d_hi > 0.0 {
        ((budget - d_hi) / (d_lo - d_hi)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mixed: Vec<ChunkState> = lo
        .iter()
        .zip(&hi)
        .zip(chunks)
        .map(|((a, b), c)| {
            let q: Vec<f64> =
                a.q.iter()
                    .zip(&b.q)
                    .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                    .collect();
            let i = mi_table(c.p.probs(), &q, dist.ny);
            let d = distortion_of(c.p.probs(), &q, &dist);
            ChunkState { q, i, d }
        })
        .collect();
    let candidate = finish(&mixed);
    let fallback = finish(&hi);
    if candidate.cost <= budget + 1e-9 && candidate.value <= fallback.value {
        Some(candidate)
    } else {
        Some(fallback)
    }
}

/// `(Σ_u w_u I(P_u, V_u), Σ_u w_u cost_u)`.
pub fn evaluate(chunks: &[RdChunk<'_>], v: &[CondDist], avc: &AvcSpec) -> (f64, f64) {
    chunks.iter().zip(v).fold((0.0, 0.0), |(i, c), (ch, vu)| {
        (
            i + ch.weight * mi_table(ch.p.probs(), &induced_table(vu, avc), avc.ny()),
            c + ch.weight * crate::geometry::chunk_cost(ch.p, vu, avc),
        )
    })
}

/// Gradient of the objective with respect to every `V_u(s|x)`, flattened
/// as `(u * |X| + x) * |S| + s`.
fn gradient(chunks: &[RdChunk<'_>], v: &[CondDist], avc: &AvcSpec) -> Vec<f64> {
    let (nx, ns, ny) = (avc.nx(), avc.ns(), avc.ny());
    let mut g = vec![0.0; chunks.len() * nx * ns];
    for (u, (ch, vu)) in chunks.iter().zip(v).enumerate() {
        let w = induced_table(vu, avc);
        let mut q = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                q[y] += ch.p.get(x) * w[x * ny + y];
            }
        }
        for x in 0..nx {
            let px = ch.p.get(x);
            if px == 0.0 {
                continue;
            }
            for s in 0..ns {
                let y = avc.w(x, s);
                let ratio = w[x * ny + y].max(1e-12) / q[y].max(1e-12);
                g[(u * nx + x) * ns + s] = ch.weight * px * ratio.log2();
            }
        }
    }
    g
}

/// Linear minimisation oracle over the budget-feasible jamming tables.
fn lmo(chunks: &[RdChunk<'_>], g: &[f64], avc: &AvcSpec, budget: f64) -> Option<Vec<CondDist>> {
    let (nx, ns) = (avc.nx(), avc.ns());
    let nv = chunks.len() * nx * ns;
    let mut lp = LinearProgram::new(nv);
    lp.minimize(g.to_vec());
    for r in 0..chunks.len() * nx {
        let mut a = vec![0.0; nv];
        a[r * ns..(r + 1) * ns].fill(1.0);
        lp.add(Constraint::eq(a, 1.0));
    }
    let mut a = vec![0.0; nv];
    for (u, ch) in chunks.iter().enumerate() {
        for x in 0..nx {
            for s in 0..ns {
                a[(u * nx + x) * ns + s] = ch.weight * ch.p.get(x) * avc.cost(s);
            }
        }
    }
    lp.add(Constraint::le(a, budget.max(0.0)));
    let sol = match lp.solve() {
        LpStatus::Optimal(sol) => sol,
        _ => return None,
    };
    Some(
        sol.x
            .chunks(nx * ns)
            .map(|c| {
                CondDist::new(
                    c.chunks(ns)
                        .map(|r| Dist::normalized(r.to_vec()).expect("LMO rows"))
                        .collect(),
                )
                .expect("LMO table")
            })
            .collect(),
    )
}

fn dot(a: &[f64], v: &[CondDist]) -> f64 {
    a.iter()
        .zip(v.iter().flat_map(|t| t.flat()))
        .map(|(x, y)| x * y)
        .sum()
}

/// Frank–Wolfe duality gap `⟨∇f(V), V − V_lmo⟩`, an upper bound on `f(V) − min f`.
pub fn duality_gap(
    chunks: &[RdChunk<'_>],
    v: &[CondDist],
    avc: &AvcSpec,
    budget: f64,
) -> Option<f64> {
    let g = gradient(chunks, v, avc);
    let s = lmo(chunks, &g, avc, budget)?;
    Some((dot(&g, v) - dot(&g, &s)).max(0.0))
}

/// Runs Frank–Wolfe steps with exact line search until the gap falls under `tol`.
///
/// Returns the polished solution and its final gap.
pub fn certify(
    chunks: &[RdChunk<'_>],
    mut sol: RdSolution,
    avc: &AvcSpec,
    budget: f64,
    tol: f64,
    max_iters: usize,
) -> (RdSolution, f64) {
    let mut gap = f64::INFINITY;
    for _ in 0..=max_iters {
        let g = gradient(chunks, &sol.v, avc);
        let Some(s) = lmo(chunks, &g, avc, budget) else {
            break;
        };
        gap = (dot(&g, &sol.v) - dot(&g, &s)).max(0.0);
        if gap <= tol {
            break;
        }
        // golden-section search along the segment
        let f = |t: f64| {
            let mix: Vec<CondDist> = sol.v.iter().zip(&s).map(|(a, b)| b.mix(a, t)).collect();
            evaluate(chunks, &mix, avc).0
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut a = hi - phi * (hi - lo);
        let mut b = lo + phi * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        for _ in 0..60 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - phi * (hi - lo);
                fa = f(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + phi * (hi - lo);
                fb = f(b);
            }
        }
        let t = 0.5 * (lo + hi);
        let v: Vec<CondDist> = sol.v.iter().zip(&s).map(|(a, b)| b.mix(a, t)).collect();
        let (value, cost) = evaluate(chunks, &v, avc);
        if value >= sol.value {
            break;
        }
        sol = RdSolution { value, cost, v };
    }
    (sol, gap)
}
