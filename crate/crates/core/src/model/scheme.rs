use serde::{Deserialize, Serialize};

use super::ModelError;

/// Blocklength partition into `K` equal chunks.
///
/// The division point α is carried as a prefix chunk count `a ∈ {0, .., K-1}`
/// (α = a/K) so grid membership is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkScheme {
    n: usize,
    k: usize,
}

impl ChunkScheme {
    pub fn new(n: usize, k: usize) -> Result<Self, ModelError> {
        if k == 0 || n == 0 {
            return Err(ModelError::BadScheme(format!(
                "n = {n} and K = {k} must be positive"
            )));
        }
        if n % k != 0 {
            return Err(ModelError::BadScheme(format!(
                "n = {n} is not divisible by K = {k}"
            )));
        }
        Ok(ChunkScheme { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn chunk_len(&self) -> usize {
        self.n / self.k
    }

    /// Prefix chunk counts of 𝒜 = {0, 1/K, .., 1 − 1/K}.
    pub fn alpha_grid(&self) -> std::ops::Range<usize> {
        0..self.k
    }

    pub fn alpha(&self, a: usize) -> f64 {
        a as f64 / self.k as f64
    }

    /// Checks that α = a/K lies on 𝒜.
    pub fn check_alpha(&self, a: usize) -> Result<(), ModelError> {
        if a < self.k {
            Ok(())
        } else {
            Err(ModelError::AlphaNotOnGrid(a, self.k))
        }
    }

    /// Converts a real α to its prefix chunk count when it lies on 𝒜.
    pub fn alpha_index(&self, alpha: f64) -> Result<usize, ModelError> {
        let a = (alpha * self.k as f64).round();
        if (alpha * self.k as f64 - a).abs() > 1e-9 || a < 0.0 || a as usize >= self.k {
            return Err(ModelError::AlphaNotOnGrid(
                (alpha * self.k as f64).round().max(0.0) as usize,
                self.k,
            ));
        }
        Ok(a as usize)
    }

    pub fn chunk_of(&self, i: usize) -> usize {
        i / self.chunk_len()
    }

    pub fn chunk_range(&self, u: usize) -> std::ops::Range<usize> {
        let l = self.chunk_len();
        u * l..(u + 1) * l
    }

    /// The time-sharing sequence: `nε` copies of each chunk index in order.
    pub fn u_vector(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.chunk_of(i)).collect()
    }
}

/// The mutually related slack parameters of the coding theorem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackSchedule {
    pub delta0: f64,
    pub delta: f64,
    pub delta_ub: f64,
    pub delta_lb: f64,
    pub delta_xu: f64,
    pub delta_min: f64,
    pub gamma: f64,
    pub delta_cp: f64,
    pub delta_input: f64,
    pub delta_state: f64,
    pub k1: usize,
    pub k2: usize,
}

impl SlackSchedule {
    /// Derives every slack from `ε = 1/K` and the configured `δ_MIN`.
    pub fn new(scheme: &ChunkScheme, nx: usize, ns: usize, delta_min: f64, delta0: f64) -> Self {
        let eps = scheme.eps();
        let log_x = (nx as f64).log2();
        let delta_ub = eps;
        let delta_lb = delta_ub + eps * log_x;
        let delta_xu = 3.0 * eps;
        let delta = 2.0 * delta_xu / (delta_min * delta_min);
        let k1 = if log_x > 0.0 {
            (2.0 * log_x / delta).ceil() as usize
        } else {
            0
        };
        let k2 = nx * (nx + 1) / 2;
        let delta_state =
            (k1 as f64 * (nx * ns) as f64 + k2 as f64 * (nx * nx * ns) as f64) * delta;
        SlackSchedule {
            delta0,
            delta,
            delta_ub,
            delta_lb,
            delta_xu,
            delta_min,
            gamma: eps.powi(4),
            delta_cp: delta / 2.0,
            delta_input: delta / 2.0,
            delta_state,
            k1,
            k2,
        }
    }

    /// Worst-case list size `⌈2 log|Y| / δ_UB⌉`.
    pub fn list_bound(&self, ny: usize) -> usize {
        (2.0 * (ny as f64).log2() / self.delta_ub).ceil() as usize
    }
}
