use rand::distributions::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampler;
use crate::info::entropy;
use crate::model::Dist;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub k: usize,
    pub entropy: f64,
    /// `((H(P) - 1 - log k) / log|V|)^{k-1}`, or 0 when the base is not positive.
    pub bound: f64,
    /// Exact all-distinct probability `k! e_k(P)`.
    pub exact: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub trials: usize,
    pub passes: bool,
}

/// `k! e_k(p)`, the probability that `k` i.i.d. draws from `p` are all distinct.
pub fn all_distinct_probability(p: &Dist, k: usize) -> f64 {
    // e[j] = elementary symmetric polynomial of degree j
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &q in p.probs() {
        for j in (1..=k).rev() {
            e[j] += e[j - 1] * q;
        }
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    fact * e[k]
}

/// Compares the all-distinct rate of `k` posterior samples with the
/// Fano-type lower bound, both exactly and over `trials` draws.
///
/// Passes when the empirical rate and the exact value are at least the
/// bound minus three binomial standard deviations.
pub fn collision_diagnostic<R: Rng>(
    p: &Dist,
    k: usize,
    trials: usize,
    rng: &mut R,
) -> CollisionReport {
    let h = entropy(p);
    let log_v = (p.len() as f64).log2();
    let base = if log_v > 0.0 {
        (h - 1.0 - (k as f64).log2()) / log_v
    } else {
        f64::NEG_INFINITY
    };
    let bound = if base > 0.0 {
        base.powi(k as i32 - 1)
    } else {
        0.0
    };
    let exact = all_distinct_probability(p, k);
    let draw = sampler(p);
    let mut seen = Vec::with_capacity(k);
    let mut distinct = 0usize;
    for _ in 0..trials {
        seen.clear();
        let mut ok = true;
        for _ in 0..k {
            let s = draw.sample(rng);
            if seen.contains(&s) {
                ok = false;
            }
            seen.push(s);
        }
        distinct += usize::from(ok);
    }
    let empirical = if trials == 0 {
        exact
    } else {
        distinct as f64 / trials as f64
    };
    let sigma = (exact * (1.0 - exact) / trials.max(1) as f64).sqrt();
    CollisionReport {
        k,
        entropy: h,
        bound,
        exact,
        empirical,
        sigma,
        trials,
        passes: empirical >= bound - 3.0 * sigma && exact >= bound - 1e-12,
    }
}
