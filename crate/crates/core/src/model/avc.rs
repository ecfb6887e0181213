use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{Constraint, LinearProgram, LpStatus};

/// One cell of the channel table as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellSpec {
    One(String),
    Many(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintOp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

/// A linear row `a · P op b` over the input simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRow {
    pub a: Vec<f64>,
    pub op: ConstraintOp,
    pub b: f64,
}

/// Additional state constraint rows; any present one breaks the single-constraint form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConstraintRow {
    pub cost: Vec<f64>,
    pub budget: f64,
}

/// Channel description exactly as it appears in a TOML config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannel {
    #[serde(default)]
    pub name: String,
    pub inputs: Vec<String>,
    pub states: Vec<String>,
    pub outputs: Vec<String>,
    /// `channel[x][s]` is the output symbol.
    pub channel: Vec<Vec<CellSpec>>,
    pub cost: Vec<f64>,
    pub budget: f64,
    pub stand_down: String,
    /// `phi[y]` is the input symbol recovered from output `y`.
    pub phi: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_constraint: Vec<ConstraintRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_state_constraints: Vec<StateConstraintRow>,
}

impl RawChannel {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("channel description serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("alphabets must be finite, nonempty and duplicate-free: {0}")]
    BadAlphabet(String),
    #[error("input constraint is not a convex halfspace system: {0}")]
    NonConvexInputConstraint(String),
    #[error("state constraint must be a single cost budget, found {0} extra rows")]
    MultipleStateConstraints(usize),
    #[error("channel law is not a deterministic total function: {0}")]
    NonDeterministicChannel(String),
    #[error("no valid stand-down state: {0}")]
    NoStandDownState(String),
    #[error("bad cost vector: {0}")]
    BadCostVector(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "channel failed validation:")?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl ValidationError {
    pub fn has(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

/// Halfspace `a · P ≤ b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// A validated state-deterministic AVC.
#[derive(Clone, Debug, PartialEq)]
pub struct AvcSpec {
    raw: RawChannel,
    nx: usize,
    ns: usize,
    ny: usize,
    w: Vec<usize>,
    cost: Vec<f64>,
    budget: f64,
    halfspaces: Vec<Halfspace>,
    s0: usize,
    phi: Vec<usize>,
}

const INPUT_TOL: f64 = 1e-9;

fn index_map(symbols: &[String]) -> HashMap<&str, usize> {
    symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect()
}

fn check_alphabet(label: &str, symbols: &[String], out: &mut Vec<Violation>) {
    if symbols.is_empty() {
        out.push(Violation::BadAlphabet(format!("{label} alphabet is empty")));
        return;
    }
    let mut seen = HashMap::new();
    for s in symbols {
        if seen.insert(s.as_str(), ()).is_some() {
            out.push(Violation::BadAlphabet(format!(
                "{label} symbol {s:?} is repeated"
            )));
        }
    }
}

/// Checks the five structural assumptions and builds an [`AvcSpec`].
///
/// Every violated assumption is reported, not just the first one found.
pub fn validate_avc(raw: &RawChannel) -> Result<AvcSpec, ValidationError> {
    let mut v = Vec::new();
    check_alphabet("input", &raw.inputs, &mut v);
    check_alphabet("state", &raw.states, &mut v);
    check_alphabet("output", &raw.outputs, &mut v);
    if !v.is_empty() {
        return Err(ValidationError { violations: v });
    }
    let (nx, ns, ny) = (raw.inputs.len(), raw.states.len(), raw.outputs.len());
    let xs = index_map(&raw.inputs);
    let ss = index_map(&raw.states);
    let ys = index_map(&raw.outputs);

    // Assumption 4: deterministic total channel table.
    let mut w = vec![usize::MAX; nx * ns];
    if raw.channel.len() != nx || raw.channel.iter().any(|row| row.len() != ns) {
        v.push(Violation::NonDeterministicChannel(format!(
            "channel table must be {nx} x {ns}"
        )));
    } else {
        for (x, row) in raw.channel.iter().enumerate() {
            for (s, cell) in row.iter().enumerate() {
                let outs: Vec<&str> = match cell {
                    CellSpec::One(y) => vec![y.as_str()],
                    CellSpec::Many(list) => list.iter().map(String::as_str).collect(),
                };
                let mut distinct: Vec<&str> = outs.clone();
                distinct.sort_unstable();
                distinct.dedup();
                match distinct.as_slice() {
                    [] => v.push(Violation::NonDeterministicChannel(format!(
                        "W({}, {}) has no output",
                        raw.inputs[x], raw.states[s]
                    ))),
                    [y] => match ys.get(y) {
                        Some(&yi) => w[x * ns + s] = yi,
                        None => v.push(Violation::NonDeterministicChannel(format!(
                            "W({}, {}) = {y:?} is not an output symbol",
                            raw.inputs[x], raw.states[s]
                        ))),
                    },
                    many => v.push(Violation::NonDeterministicChannel(format!(
                        "W({}, {}) maps to {} outputs {:?}",
                        raw.inputs[x],
                        raw.states[s],
                        many.len(),
                        many
                    ))),
                }
            }
        }
    }

    // Cost vector.
    let mut cost_ok = true;
    if raw.cost.len() != ns {
        v.push(Violation::BadCostVector(format!(
            "expected {ns} entries, got {}",
            raw.cost.len()
        )));
        cost_ok = false;
    } else if let Some(c) = raw.cost.iter().find(|c| !c.is_finite() || **c < 0.0) {
        v.push(Violation::BadCostVector(format!(
            "entries must be finite and nonnegative, found {c}"
        )));
        cost_ok = false;
    }
    if !raw.budget.is_finite() {
        v.push(Violation::BadCostVector(format!(
            "budget {} is not finite",
            raw.budget
        )));
    }

    // Assumption 3: exactly one state constraint.
    if !raw.extra_state_constraints.is_empty() {
        v.push(Violation::MultipleStateConstraints(
            raw.extra_state_constraints.len(),
        ));
    }

    // Assumption 2: convex input constraint given by halfspaces.
    let mut halfspaces = Vec::new();
    let mut rows_ok = true;
    for (i, row) in raw.input_constraint.iter().enumerate() {
        if row.a.len() != nx || row.a.iter().any(|a| !a.is_finite()) || !row.b.is_finite() {
            v.push(Violation::NonConvexInputConstraint(format!(
                "row {i} must have {nx} finite coefficients and a finite bound"
            )));
            rows_ok = false;
            continue;
        }
        match row.op {
            ConstraintOp::Le => halfspaces.push(Halfspace {
                a: row.a.clone(),
                b: row.b,
            }),
            ConstraintOp::Ge => halfspaces.push(Halfspace {
                a: row.a.iter().map(|a| -a).collect(),
                b: -row.b,
            }),
            ConstraintOp::Eq => {
                halfspaces.push(Halfspace {
                    a: row.a.clone(),
                    b: row.b,
                });
                halfspaces.push(Halfspace {
                    a: row.a.iter().map(|a| -a).collect(),
                    b: -row.b,
                });
            }
            ConstraintOp::Ne => {
                v.push(Violation::NonConvexInputConstraint(format!(
                    "row {i} uses '!=', whose solution set is not convex"
                )));
                rows_ok = false;
            }
        }
    }
    if rows_ok && !halfspaces.is_empty() && feasible_input(nx, &halfspaces).is_none() {
        v.push(Violation::NonConvexInputConstraint(
            "constraint rows leave no feasible input distribution".into(),
        ));
    }

    // Assumption 5: stand-down state.
    let mut s0 = usize::MAX;
    let mut phi = vec![usize::MAX; ny];
    match ss.get(raw.stand_down.as_str()) {
        None => v.push(Violation::NoStandDownState(format!(
            "{:?} is not a state symbol",
            raw.stand_down
        ))),
        Some(&s) => {
            s0 = s;
            if cost_ok && raw.cost[s] != 0.0 {
                v.push(Violation::NoStandDownState(format!(
                    "B({}) = {} is not zero",
                    raw.stand_down, raw.cost[s]
                )));
            }
        }
    }
    if raw.phi.len() != ny {
        v.push(Violation::NoStandDownState(format!(
            "phi must list one input symbol per output, expected {ny}"
        )));
    } else {
        for (y, sym) in raw.phi.iter().enumerate() {
            match xs.get(sym.as_str()) {
                Some(&x) => phi[y] = x,
                None => v.push(Violation::NoStandDownState(format!(
                    "phi({}) = {sym:?} is not an input symbol",
                    raw.outputs[y]
                ))),
            }
        }
    }
    let table_ok = w.iter().all(|&y| y != usize::MAX);
    if s0 != usize::MAX && table_ok && phi.iter().all(|&x| x != usize::MAX) {
        for x in 0..nx {
            let y = w[x * ns + s0];
            if phi[y] != x {
                v.push(Violation::NoStandDownState(format!(
                    "phi(W({}, {})) = {} but should be {}",
                    raw.inputs[x], raw.stand_down, raw.inputs[phi[y]], raw.inputs[x]
                )));
            }
        }
    }

    if !v.is_empty() {
        return Err(ValidationError { violations: v });
    }
    Ok(AvcSpec {
        raw: raw.clone(),
        nx,
        ns,
        ny,
        w,
        cost: raw.cost.clone(),
        budget: raw.budget,
        halfspaces,
        s0,
        phi,
    })
}

/// Some point of `Δ(X) ∩ {a·P ≤ b}`, if any.
fn feasible_input(nx: usize, halfspaces: &[Halfspace]) -> Option<Vec<f64>> {
    let mut lp = LinearProgram::new(nx);
    lp.add(Constraint::eq(vec![1.0; nx], 1.0));
    for h in halfspaces {
        lp.add(Constraint::le(h.a.clone(), h.b));
    }
    match lp.solve() {
        LpStatus::Optimal(sol) => Some(sol.x),
        _ => None,
    }
}

impl AvcSpec {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        let raw = RawChannel::from_toml_str(text)?;
        Ok(validate_avc(&raw)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Self::from_toml_str(&text)
    }

    /// Binary XOR channel `y = x ⊕ s` with `B = (0, 1)`.
    pub fn xor(budget: f64) -> Self {
        let bits = || vec!["0".to_string(), "1".to_string()];
        let cell = |y: &str| CellSpec::One(y.to_string());
        validate_avc(&RawChannel {
            name: "xor".into(),
            inputs: bits(),
            states: bits(),
            outputs: bits(),
            channel: vec![vec![cell("0"), cell("1")], vec![cell("1"), cell("0")]],
            cost: vec![0.0, 1.0],
            budget,
            stand_down: "0".into(),
            phi: bits(),
            input_constraint: vec![],
            extra_state_constraints: vec![],
        })
        .expect("xor channel is valid")
    }

    pub fn raw(&self) -> &RawChannel {
        &self.raw
    }

    pub fn name(&self) -> &str {
        &self.raw.name
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Output symbol `W(x, s)`.
    pub fn w(&self, x: usize, s: usize) -> usize {
        self.w[x * self.ns + s]
    }

    pub fn cost(&self, s: usize) -> f64 {
        self.cost[s]
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Same channel with a different budget.
    pub fn with_budget(&self, budget: f64) -> Self {
        let mut out = self.clone();
        out.budget = budget;
        out.raw.budget = budget;
        out
    }

    pub fn s0(&self) -> usize {
        self.s0
    }

    pub fn phi(&self, y: usize) -> usize {
        self.phi[y]
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Whether an input distribution satisfies the input constraint (tolerance 1e-9).
    pub fn input_feasible(&self, p: &[f64]) -> bool {
        self.halfspaces
            .iter()
            .all(|h| h.a.iter().zip(p).map(|(a, q)| a * q).sum::<f64>() <= h.b + INPUT_TOL)
    }

    /// Some feasible input distribution (uniform when unconstrained or feasible).
    pub fn some_feasible_input(&self) -> Vec<f64> {
        let uniform = vec![1.0 / self.nx as f64; self.nx];
        if self.input_feasible(&uniform) {
            return uniform;
        }
        feasible_input(self.nx, &self.halfspaces).expect("validated constraint is nonempty")
    }

    /// Cheapest state cost reaching output `y` from input `x`, or `None` when unreachable.
    pub fn distortion(&self, x: usize, y: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for s in 0..self.ns {
            if self.w(x, s) == y && best.is_none_or(|(_, c)| self.cost[s] < c) {
                best = Some((s, self.cost[s]));
            }
        }
        best
    }
}
