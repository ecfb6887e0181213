use serde::{Deserialize, Serialize};

use super::ModelError;

/// Tolerance used for every simplex membership check.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over a finite alphabet `{0, .., len-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Dist(Vec<f64>);

impl Dist {
    /// Checks nonnegativity and unit mass (within [`SIMPLEX_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::EmptyAlphabet);
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ModelError::NotADistribution(format!("{probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL * probs.len().max(1) as f64 {
            return Err(ModelError::NotADistribution(format!(
                "mass {total} != 1 for {probs:?}"
            )));
        }
        Ok(Dist(probs))
    }

    /// Clamps tiny negatives produced by floating point and rescales to unit mass.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self, ModelError> {
        for p in probs.iter_mut() {
            if *p < 0.0 && *p > -1e-9 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(ModelError::NotADistribution(format!("{probs:?}")));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Dist::new(probs)
    }

    pub fn uniform(len: usize) -> Self {
        Dist(vec![1.0 / len as f64; len])
    }

    pub fn point(len: usize, at: usize) -> Self {
        let mut p = vec![0.0; len];
        p[at] = 1.0;
        Dist(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| i)
    }

    pub fn linf(&self, other: &Dist) -> f64 {
        linf(&self.0, &other.0)
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Dist, lambda: f64) -> Dist {
        let v = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Dist::normalized(v).expect("convex combination of distributions")
    }

    /// Product distribution `self ⊗ other`, flattened row-major.
    pub fn product(&self, other: &Dist) -> Dist {
        let mut v = Vec::with_capacity(self.len() * other.len());
        for a in &self.0 {
            for b in &other.0 {
                v.push(a * b);
            }
        }
        Dist(v)
    }
}

impl TryFrom<Vec<f64>> for Dist {
    type Error = ModelError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Dist::new(v)
    }
}

impl From<Dist> for Vec<f64> {
    fn from(d: Dist) -> Self {
        d.0
    }
}

pub(crate) fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A table of distributions, one row per conditioning index.
///
/// Conditioning tuples are flattened by the caller: rows for `(x, u)` live at
/// `u * |X| + x`, rows for `(x, x')` at `x * |X| + x'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondDist {
    rows: Vec<Dist>,
}

impl CondDist {
    pub fn new(rows: Vec<Dist>) -> Result<Self, ModelError> {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(ModelError::ShapeMismatch(
                    "conditional rows differ in length".into(),
                ));
            }
        }
        Ok(CondDist { rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let rows = rows
            .into_iter()
            .map(Dist::new)
            .collect::<Result<Vec<_>, _>>()?;
        CondDist::new(rows)
    }

    /// Every row equal to `row`.
    pub fn constant(count: usize, row: &Dist) -> Self {
        CondDist {
            rows: vec![row.clone(); count],
        }
    }

    pub fn rows(&self) -> &[Dist] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Dist {
        &self.rows[i]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row].get(col)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_len(&self) -> usize {
        self.rows.first().map_or(0, Dist::len)
    }

    /// Row-wise `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &CondDist, lambda: f64) -> CondDist {
        CondDist {
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.mix(b, lambda))
                .collect(),
        }
    }

    /// Sub-table of rows `[start, start + count)`.
    pub fn slice(&self, start: usize, count: usize) -> CondDist {
        CondDist {
            rows: self.rows[start..start + count].to_vec(),
        }
    }

    pub fn concat(&self, other: &CondDist) -> CondDist {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        CondDist { rows }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.probs().to_vec()).collect()
    }

    pub fn linf(&self, other: &CondDist) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.linf(b))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_vectors() {
        assert!(Dist::new(vec![0.5, 0.6]).is_err());
        assert!(Dist::new(vec![-0.1, 1.1]).is_err());
        assert!(Dist::new(vec![]).is_err());
        assert!(Dist::new(vec![f64::NAN, 1.0]).is_err());
        assert!(Dist::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn serde_round_trip_validates() {
        let d = Dist::new(vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "[0.25,0.75]");
        let back: Dist = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<Dist>("[0.5,0.6]").is_err());
    }

    #[test]
    fn product_is_outer() {
        let p = Dist::new(vec![0.25, 0.75]).unwrap();
        let pp = p.product(&p);
        assert_eq!(pp.probs(), &[0.0625, 0.1875, 0.1875, 0.5625]);
    }

    #[test]
    fn cond_rows_must_agree() {
        assert!(CondDist::from_rows(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
    }
}
