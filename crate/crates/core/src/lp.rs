//! Dense two-phase tableau simplex for the small linear programs used throughout
//! the crate (polytope membership, min-cost symmetrizers, CP fitting, LMO steps).
//!
//! All variables are nonnegative. Pricing is Dantzig's rule, switching to
//! Bland's rule after a run of degenerate pivots so the method cannot cycle.

const PIVOT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_RUN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint {
            coeffs,
            cmp: Cmp::Le,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint {
            coeffs,
            cmp: Cmp::Ge,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint {
            coeffs,
            cmp: Cmp::Eq,
            rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl LpStatus {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpStatus::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// `minimize c·x  subject to  rows, x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            n: num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn minimize(&mut self, c: Vec<f64>) -> &mut Self {
        assert_eq!(c.len(), self.n, "objective length");
        self.objective = c;
        self
    }

    pub fn add(&mut self, row: Constraint) -> &mut Self {
        assert_eq!(row.coeffs.len(), self.n, "constraint length");
        self.rows.push(row);
        self
    }

    pub fn solve(&self) -> LpStatus {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    n: usize,
    cols: usize,
    /// `m` rows of `cols + 1` entries, the last being the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    artificial: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let rows: Vec<(Vec<f64>, Cmp, f64)> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let cmp = match r.cmp {
                        Cmp::Le => Cmp::Ge,
                        Cmp::Ge => Cmp::Le,
                        Cmp::Eq => Cmp::Eq,
                    };
                    (r.coeffs.iter().map(|a| -a).collect(), cmp, -r.rhs)
                } else {
                    (r.coeffs.clone(), r.cmp, r.rhs)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let cols = lp.n + n_slack + n_art;
        let mut t = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let mut artificial = vec![false; cols];
        let (mut next_slack, mut next_art) = (lp.n, lp.n + n_slack);
        for (i, (coeffs, cmp, rhs)) in rows.into_iter().enumerate() {
            t[i][..lp.n].copy_from_slice(&coeffs);
            t[i][cols] = rhs;
            match cmp {
                Cmp::Le => {
                    t[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Cmp::Ge => {
                    t[i][next_slack] = -1.0;
                    next_slack += 1;
                    t[i][next_art] = 1.0;
                    artificial[next_art] = true;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Cmp::Eq => {
                    t[i][next_art] = 1.0;
                    artificial[next_art] = true;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Tableau {
            n: lp.n,
            cols,
            t,
            basis,
            artificial,
        }
    }

    fn pivot(&mut self, r: usize, e: usize, d: &mut [f64]) {
        let p = self.t[r][e];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let row = self.t[r].clone();
        for (i, other) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = other[e];
            if f != 0.0 {
                other.iter_mut().zip(&row).for_each(|(v, w)| *v -= f * w);
                other[e] = 0.0;
            }
        }
        let f = d[e];
        if f != 0.0 {
            d.iter_mut().zip(&row).for_each(|(v, w)| *v -= f * w);
            d[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Reduced costs (and negated objective in the last slot) for `cost`.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        d.push(0.0);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                d.iter_mut().zip(&self.t[r]).for_each(|(v, w)| *v -= cb * w);
            }
        }
        d
    }

    /// Runs primal simplex iterations. Returns `Some(true)` at optimum,
    /// `Some(false)` when unbounded and `None` at the iteration limit.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Option<bool> {
        let mut d = self.reduced_costs(cost);
        let mut degenerate = 0usize;
        let mut bland = false;
        for _ in 0..MAX_PIVOTS {
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for j in 0..self.cols {
                if !allowed[j] || d[j] >= -PIVOT_TOL {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if d[j] < best {
                    best = d[j];
                    enter = Some(j);
                }
            }
            let Some(e) = enter else {
                return Some(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.t.iter().enumerate() {
                let a = row[e];
                if a > PIVOT_TOL {
                    let ratio = row[self.cols].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Some(false);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, e, &mut d);
        }
        None
    }

    fn solve(mut self, objective: &[f64]) -> LpStatus {
        let m = self.t.len();
        let cols = self.cols;
        if self.artificial.iter().any(|&a| a) {
            let cost: Vec<f64> = self
                .artificial
                .iter()
                .map(|&a| if a { 1.0 } else { 0.0 })
                .collect();
            let allowed = vec![true; cols];
            match self.optimize(&cost, &allowed) {
                None => return LpStatus::IterationLimit,
                Some(_) => {}
            }
            let infeasibility: f64 = (0..m)
                .filter(|&r| self.artificial[self.basis[r]])
                .map(|r| self.t[r][cols])
                .sum();
            let scale = 1.0 + self.t.iter().map(|r| r[cols].abs()).fold(0.0, f64::max);
            if infeasibility > PHASE1_TOL * scale {
                return LpStatus::Infeasible;
            }
            // Drive remaining artificials out of the basis where possible.
            let mut scratch = vec![0.0; cols + 1];
            for r in 0..m {
                if !self.artificial[self.basis[r]] {
                    continue;
                }
                if let Some(j) =
                    (0..cols).find(|&j| !self.artificial[j] && self.t[r][j].abs() > PIVOT_TOL)
                {
                    self.pivot(r, j, &mut scratch);
                }
            }
        }
        let mut cost = vec![0.0; cols];
        cost[..self.n].copy_from_slice(objective);
        let allowed: Vec<bool> = self.artificial.iter().map(|a| !a).collect();
        match self.optimize(&cost, &allowed) {
            None => LpStatus::IterationLimit,
            Some(false) => LpStatus::Unbounded,
            Some(true) => {
                let mut x = vec![0.0; self.n];
                for (r, &b) in self.basis.iter().enumerate() {
                    if b < self.n {
                        x[b] = self.t[r][cols].max(0.0);
                    }
                }
                let objective = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                LpStatus::Optimal(LpSolution { x, objective })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![-3.0, -5.0])
            .add(Constraint::le(vec![1.0, 0.0], 4.0))
            .add(Constraint::le(vec![0.0, 2.0], 12.0))
            .add(Constraint::le(vec![3.0, 2.0], 18.0));
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.objective + 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y s.t. x + y = 1, y ≥ 0.25
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![1.0, 2.0])
            .add(Constraint::eq(vec![1.0, 1.0], 1.0))
            .add(Constraint::ge(vec![0.0, 1.0], 0.25));
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.objective - 1.25).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add(Constraint::ge(vec![1.0], 2.0))
            .add(Constraint::le(vec![1.0], 1.0));
        assert_eq!(lp.solve(), LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![-1.0, 0.0])
            .add(Constraint::ge(vec![1.0, -1.0], 0.0));
        assert_eq!(lp.solve(), LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // -x ≤ -3 means x ≥ 3
        let mut lp = LinearProgram::new(1);
        lp.minimize(vec![1.0]).add(Constraint::le(vec![-1.0], -3.0));
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![1.0, 1.0])
            .add(Constraint::eq(vec![1.0, 1.0], 1.0))
            .add(Constraint::eq(vec![2.0, 2.0], 2.0));
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example.
        let mut lp = LinearProgram::new(4);
        lp.minimize(vec![-0.75, 150.0, -0.02, 6.0])
            .add(Constraint::le(vec![0.25, -60.0, -0.04, 9.0], 0.0))
            .add(Constraint::le(vec![0.5, -90.0, -0.02, 3.0], 0.0))
            .add(Constraint::le(vec![0.0, 0.0, 1.0, 0.0], 1.0));
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.objective + 0.05).abs() < 1e-9);
    }
}
