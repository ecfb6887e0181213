use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::adversary::{posterior, BabbleOnly, CausalJammer, Subcode};
use crate::codec::{encode, Codebook};
use crate::info::{chunk_mi, entropy_of};
use crate::model::{AvcSpec, CondDist};

/// Average residual uncertainty about the message after `a` babbled chunks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyDiagnostic {
    pub a: usize,
    pub trials: usize,
    /// Mean of `H(m | y^{≤a})` over trials, in bits.
    pub mean_entropy: f64,
    pub std_err: f64,
    /// `log M − n ε Σ_{u<a} I(P_u, V_u)`.
    pub bound: f64,
    pub passes: bool,
}

/// Estimates `H(m | y^{≤a})` under babbling with `v` from exact posteriors.
///
/// Each trial draws a uniform message, babbles over the whole block and
/// computes the posterior of the message given the first `a` output chunks.
/// The mean must reach the bound within three standard errors.
pub fn residual_entropy(
    cb: &Codebook,
    avc: &AvcSpec,
    v: &[CondDist],
    a: usize,
    trials: usize,
    seed: u64,
) -> Result<EntropyDiagnostic, HarnessError> {
    let scheme = cb.scheme();
    if a > scheme.k() {
        return Err(HarnessError::Config(format!(
            "a = {a} exceeds K = {}",
            scheme.k()
        )));
    }
    let whole = Subcode {
        messages: (0..cb.messages()).collect(),
        seeds: vec![vec![(0..cb.seeds()).collect(); cb.k()]; cb.messages()],
        p_hat: cb.params.p_xu.clone(),
        mass: cb.messages() as f64,
        cell: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let m = rng.gen_range(0..cb.messages());
        let (x, _) = encode(cb, m, &mut rng)?;
        let mut jam = BabbleOnly::new(v, &scheme, ChaCha8Rng::seed_from_u64(rng.gen()));
        let y: Vec<usize> = x.iter().map(|&xi| avc.w(xi, jam.next_state(xi))).collect();
        let post = posterior(&y[..a * cb.chunk_len()], a, cb, v, &whole, avc)?;
        let marg: Vec<f64> = (0..cb.messages()).map(|m| post.message_mass(m)).collect();
        samples.push(entropy_of(&marg));
    }
    let t = trials as f64;
    let mean = samples.iter().sum::<f64>() / t;
    let var = samples.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (t - 1.0).max(1.0);
    let std_err = (var / t).sqrt();
    let info: f64 = (0..a)
        .map(|u| chunk_mi(cb.params.p_xu.row(u), &v[u], avc))
        .sum::<f64>()
        * cb.chunk_len() as f64;
    let bound = (cb.messages() as f64).log2() - info;
    Ok(EntropyDiagnostic {
        a,
        trials,
        mean_entropy: mean,
        std_err,
        bound,
        passes: mean + 3.0 * std_err >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_codebook, CodecConfig};
    use crate::model::{ChunkScheme, Dist};

    fn codebook() -> (AvcSpec, Codebook) {
        let avc = AvcSpec::xor(0.2);
        let scheme = ChunkScheme::new(40, 4).unwrap();
        let cb = build_codebook(
            &avc,
            &CondDist::constant(4, &Dist::uniform(2)),
            0.25,
            &scheme,
            0.0,
            &CodecConfig::default(),
            5,
        )
        .unwrap();
        (avc, cb)
    }

    #[test]
    fn babbled_prefix_leaves_the_predicted_uncertainty() {
        let (avc, cb) = codebook();
        assert_eq!(cb.messages(), 1024);
        let flip = CondDist::constant(2, &Dist::new(vec![0.8, 0.2]).unwrap());
        let v = vec![flip; 4];
        let d = residual_entropy(&cb, &avc, &v, 1, 40, 0).unwrap();
        // one chunk of 10 bits through BSC(0.2): 10 (1 − h(0.2)) ≈ 2.78 bits revealed
        assert!((d.bound - (10.0 - 10.0 * (1.0 - crate::info::h2(0.2)))).abs() < 1e-9);
        assert!(d.passes, "{d:?}");
        assert!(d.mean_entropy <= 10.0 + 1e-9);
    }

    #[test]
    fn noiseless_prefix_only_hides_the_collisions() {
        let (avc, cb) = codebook();
        let v = vec![CondDist::constant(2, &Dist::point(2, 0)); 4];
        let d = residual_entropy(&cb, &avc, &v, 4, 20, 1).unwrap();
        // whole noiseless block identifies the message up to duplicate codewords
        assert!(d.mean_entropy < 0.5);
        assert!(d.bound <= 0.0);
        assert!(d.passes);
    }
}
