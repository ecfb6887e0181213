//! Feasible jamming sets, symmetrizing sets and completely positive fits.
//!
//! Pair-conditioned tables `V(s|x,x')` are stored with row index `x * |X| + x'`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{Constraint, LinearProgram, LpStatus};
use crate::model::{AvcSpec, ChunkScheme, CondDist, Dist, ModelError};

/// Slack used for every membership predicate in this module.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no symmetrizing distribution within residual {0}")]
    Infeasible(f64),
    #[error("CP dictionary is empty at resolution {0}")]
    EmptyDictionary(f64),
    #[error("linear program did not terminate")]
    Solver,
}

/// A division point with its prefix (single-input) and suffix (pair-input) jamming tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JammingPlan {
    /// Number of prefix chunks; α = a / K.
    pub a: usize,
    pub prefix: Vec<CondDist>,
    pub suffix: Vec<CondDist>,
}

impl JammingPlan {
    pub fn stand_down(avc: &AvcSpec, scheme: &ChunkScheme, a: usize) -> Self {
        let s0 = Dist::point(avc.ns(), avc.s0());
        JammingPlan {
            a,
            prefix: vec![CondDist::constant(avc.nx(), &s0); a],
            suffix: vec![CondDist::constant(avc.nx() * avc.nx(), &s0); scheme.k() - a],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpDecomposition {
    pub weights: Dist,
    pub components: Vec<Dist>,
    pub gap: f64,
}

impl CpDecomposition {
    /// `Σ_i w_i Q_i ⊗ Q_i`, flattened row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let nx = self.components.first().map_or(0, Dist::len);
        let mut out = vec![0.0; nx * nx];
        for (w, q) in self.weights.probs().iter().zip(&self.components) {
            for x in 0..nx {
                for x2 in 0..nx {
                    out[x * nx + x2] += w * q.get(x) * q.get(x2);
                }
            }
        }
        out
    }

    pub fn marginal(&self) -> Vec<f64> {
        let nx = self.components.first().map_or(0, Dist::len);
        let mut out = vec![0.0; nx];
        for (w, q) in self.weights.probs().iter().zip(&self.components) {
            for (x, o) in out.iter_mut().enumerate() {
                *o += w * q.get(x);
            }
        }
        out
    }
}

fn check_single(v: &CondDist, avc: &AvcSpec, what: &str) -> Result<(), GeometryError> {
    if v.num_rows() != avc.nx() || v.row_len() != avc.ns() {
        return Err(GeometryError::ShapeMismatch(format!(
            "{what}: expected {}x{} table, got {}x{}",
            avc.nx(),
            avc.ns(),
            v.num_rows(),
            v.row_len()
        )));
    }
    Ok(())
}

fn check_pair(v: &CondDist, avc: &AvcSpec, what: &str) -> Result<(), GeometryError> {
    let nx = avc.nx();
    if v.num_rows() != nx * nx || v.row_len() != avc.ns() {
        return Err(GeometryError::ShapeMismatch(format!(
            "{what}: expected {}x{} table, got {}x{}",
            nx * nx,
            avc.ns(),
            v.num_rows(),
            v.row_len()
        )));
    }
    Ok(())
}

/// `Σ_x P(x) Σ_s V(s|x) B(s)` for one chunk.
pub fn chunk_cost(p: &Dist, v: &CondDist, avc: &AvcSpec) -> f64 {
    let mut c = 0.0;
    for x in 0..avc.nx() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        for s in 0..avc.ns() {
            c += px * v.get(x, s) * avc.cost(s);
        }
    }
    c
}

/// `Σ_{x,x'} P_pair(x,x') Σ_s V(s|x,x') B(s)`.
pub fn pair_cost(p_pair: &[f64], v: &CondDist, avc: &AvcSpec) -> f64 {
    let mut c = 0.0;
    for (row, &w) in p_pair.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for s in 0..avc.ns() {
            c += w * v.get(row, s) * avc.cost(s);
        }
    }
    c
}

/// Expected state cost of the time-averaged state marginal; membership in F
/// is `cost ≤ Λ` and in the shrunk set `cost ≤ Λ − δ_state`.
#[allow(non_snake_case)]
pub fn feasible_cost_F(
    v: &[CondDist],
    p_xu: &CondDist,
    scheme: &ChunkScheme,
    avc: &AvcSpec,
) -> Result<f64, GeometryError> {
    if v.len() != scheme.k() || p_xu.num_rows() != scheme.k() {
        return Err(GeometryError::ShapeMismatch(format!(
            "need {} chunks, got {} jamming tables and {} input rows",
            scheme.k(),
            v.len(),
            p_xu.num_rows()
        )));
    }
    let mut total = 0.0;
    for (u, vu) in v.iter().enumerate() {
        check_single(vu, avc, "jamming table")?;
        total += chunk_cost(p_xu.row(u), vu, avc);
    }
    Ok(total * scheme.eps())
}

/// Combined prefix and suffix cost of a plan under chunk weights `p_u`.
///
/// Prefix chunks pay `[P_u V_u]`, suffix chunks pay `[P_u^{⊗2} V_u]`.
/// `a = K` is accepted and reduces to [`feasible_cost_F`].
#[allow(non_snake_case)]
pub fn feasible_cost_F_alpha(
    plan: &JammingPlan,
    p_xu: &CondDist,
    p_u: &Dist,
    scheme: &ChunkScheme,
    avc: &AvcSpec,
) -> Result<f64, GeometryError> {
    let k = scheme.k();
    if plan.a > k {
        return Err(ModelError::AlphaNotOnGrid(plan.a, k).into());
    }
    if plan.prefix.len() != plan.a || plan.suffix.len() != k - plan.a {
        return Err(GeometryError::ShapeMismatch(format!(
            "plan with a = {} needs {} prefix and {} suffix tables",
            plan.a,
            plan.a,
            k - plan.a
        )));
    }
    if p_u.len() != k || p_xu.num_rows() != k {
        return Err(GeometryError::ShapeMismatch("chunk weights".into()));
    }
    let mut total = 0.0;
    for (u, v) in plan.prefix.iter().enumerate() {
        check_single(v, avc, "prefix table")?;
        total += p_u.get(u) * chunk_cost(p_xu.row(u), v, avc);
    }
    for (j, v) in plan.suffix.iter().enumerate() {
        check_pair(v, avc, "suffix table")?;
        let u = plan.a + j;
        let pp = p_xu.row(u).product(p_xu.row(u));
        total += p_u.get(u) * pair_cost(pp.probs(), v, avc);
    }
    Ok(total)
}

pub fn within_budget(cost: f64, avc: &AvcSpec, shrink: f64) -> bool {
    cost <= avc.budget() - shrink + MEMBERSHIP_TOL
}

/// Output law `Σ_s V(s|row) 1{W(x, s) = y}` for a pair-indexed row.
fn pair_output(v: &CondDist, row: usize, x: usize, avc: &AvcSpec) -> Vec<f64> {
    let mut out = vec![0.0; avc.ny()];
    for s in 0..avc.ns() {
        out[avc.w(x, s)] += v.get(row, s);
    }
    out
}

/// `max_{x,x',y} |Σ_s V(s|x,x')W(y|x,s) − Σ_s V(s|x',x)W(y|x',s)|`.
pub fn symmetrization_residual(v: &CondDist, avc: &AvcSpec) -> f64 {
    pair_symmetrization_residual(v, v, avc)
}

/// Residual between the forward law of `V` and the swapped law of `V'`.
pub fn pair_symmetrization_residual(v: &CondDist, v2: &CondDist, avc: &AvcSpec) -> f64 {
    let nx = avc.nx();
    let mut worst: f64 = 0.0;
    for x in 0..nx {
        for x2 in 0..nx {
            let lhs = pair_output(v, x * nx + x2, x, avc);
            let rhs = pair_output(v2, x2 * nx + x, x2, avc);
            for (a, b) in lhs.iter().zip(&rhs) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

/// Cheapest `V(s|x,x')` with symmetrization residual at most `delta`.
pub fn min_cost_symmetrizer(
    p_pair: &Dist,
    avc: &AvcSpec,
    delta: f64,
) -> Result<(CondDist, f64), GeometryError> {
    let (nx, ns, ny) = (avc.nx(), avc.ns(), avc.ny());
    if p_pair.len() != nx * nx {
        return Err(GeometryError::ShapeMismatch(format!(
            "pair distribution has {} entries, expected {}",
            p_pair.len(),
            nx * nx
        )));
    }
    let nv = nx * nx * ns;
    let var = |x: usize, x2: usize, s: usize| (x * nx + x2) * ns + s;
    let mut lp = LinearProgram::new(nv);
    let mut c = vec![0.0; nv];
    for x in 0..nx {
        for x2 in 0..nx {
            for s in 0..ns {
                c[var(x, x2, s)] = p_pair.get(x * nx + x2) * avc.cost(s);
            }
        }
    }
    lp.minimize(c);
    for row in 0..nx * nx {
        let mut a = vec![0.0; nv];
        a[row * ns..(row + 1) * ns].fill(1.0);
        lp.add(Constraint::eq(a, 1.0));
    }
    for x in 0..nx {
        for x2 in x + 1..nx {
            for y in 0..ny {
                let mut a = vec![0.0; nv];
                for s in 0..ns {
                    if avc.w(x, s) == y {
                        a[var(x, x2, s)] += 1.0;
                    }
                    if avc.w(x2, s) == y {
                        a[var(x2, x, s)] -= 1.0;
                    }
                }
                if a.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let neg: Vec<f64> = a.iter().map(|v| -v).collect();
                lp.add(Constraint::le(a, delta));
                lp.add(Constraint::le(neg, delta));
            }
        }
    }
    match lp.solve() {
        LpStatus::Optimal(sol) => {
            let rows = sol
                .x
                .chunks(ns)
                .map(|r| Dist::normalized(r.to_vec()))
                .collect::<Result<Vec<_>, _>>()?;
            let v = CondDist::new(rows)?;
            let cost = pair_cost(p_pair.probs(), &v, avc);
            Ok((v, cost))
        }
        LpStatus::Infeasible => Err(GeometryError::Infeasible(delta)),
        LpStatus::Unbounded | LpStatus::IterationLimit => Err(GeometryError::Solver),
    }
}

/// Default CP dictionary resolution for an input alphabet size.
pub fn default_cp_resolution(nx: usize) -> f64 {
    match nx {
        0..=2 => 0.02,
        3 => 0.05,
        _ => 0.1,
    }
}

/// All points of the simplex over `nx` symbols with denominator `m`.
pub fn simplex_grid(nx: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, m: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(left as f64 / m as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c as f64 / m as f64);
            rec(k - 1, left - c, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if nx > 0 {
        rec(nx, m, m, &mut Vec::new(), &mut out);
    }
    out
}

/// Closest CP mixture `Σ w_i Q_i ⊗ Q_i` in ℓ∞ over a grid dictionary.
///
/// The dictionary holds the simplex grid at `resolution` plus `p_x` itself,
/// and the mixture's marginal must stay within `resolution` of `p_x`.
pub fn nearest_cp(
    p_pair: &Dist,
    p_x: &Dist,
    resolution: f64,
) -> Result<CpDecomposition, GeometryError> {
    let nx = p_x.len();
    if p_pair.len() != nx * nx {
        return Err(GeometryError::ShapeMismatch(format!(
            "pair distribution has {} entries for {nx} symbols",
            p_pair.len()
        )));
    }
    if !(resolution > 0.0) || resolution > 1.0 {
        return Err(GeometryError::EmptyDictionary(resolution));
    }
    let m = (1.0 / resolution + 1e-9).floor() as usize;
    let mut dict = simplex_grid(nx, m);
    if !dict
        .iter()
        .any(|q| crate::model::linf(q, p_x.probs()) < 1e-15)
    {
        dict.push(p_x.probs().to_vec());
    }
    let nd = dict.len();
    let t = nd;
    let mut lp = LinearProgram::new(nd + 1);
    let mut c = vec![0.0; nd + 1];
    c[t] = 1.0;
    lp.minimize(c);
    let mut ones = vec![1.0; nd + 1];
    ones[t] = 0.0;
    lp.add(Constraint::eq(ones, 1.0));
    for x in 0..nx {
        for x2 in 0..nx {
            let mut a: Vec<f64> = dict.iter().map(|q| q[x] * q[x2]).collect();
            a.push(-1.0);
            lp.add(Constraint::le(a, p_pair.get(x * nx + x2)));
            let mut b: Vec<f64> = dict.iter().map(|q| q[x] * q[x2]).collect();
            b.push(1.0);
            lp.add(Constraint::ge(b, p_pair.get(x * nx + x2)));
        }
    }
    for x in 0..nx {
        let mut a: Vec<f64> = dict.iter().map(|q| q[x]).collect();
        a.push(0.0);
        lp.add(Constraint::le(a.clone(), p_x.get(x) + resolution));
        lp.add(Constraint::ge(a, (p_x.get(x) - resolution).max(0.0)));
    }
    let sol = match lp.solve() {
        LpStatus::Optimal(sol) => sol,
        LpStatus::Infeasible => return Err(GeometryError::EmptyDictionary(resolution)),
        _ => return Err(GeometryError::Solver),
    };
    let mut weights = Vec::new();
    let mut components = Vec::new();
    for (w, q) in sol.x[..nd].iter().zip(&dict) {
        if *w > 1e-12 {
            weights.push(*w);
            components.push(Dist::normalized(q.clone())?);
        }
    }
    let mut cp = CpDecomposition {
        weights: Dist::normalized(weights)?,
        components,
        gap: 0.0,
    };
    cp.gap = crate::model::linf(&cp.reconstruct(), p_pair.probs());
    Ok(cp)
}
