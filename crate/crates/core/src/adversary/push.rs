use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{samplers, AdversaryError, AttackPlan, CausalJammer, FailureFlags, Subcode};
use crate::codec::Codebook;
use crate::model::{AvcSpec, CondDist, Dist};

/// Posterior over `(m, r_1..r_a)` restricted to the subcode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub support: Vec<(usize, Vec<usize>)>,
    pub probs: Dist,
}

impl Posterior {
    /// Total posterior mass of message `m`.
    pub fn message_mass(&self, m: usize) -> f64 {
        self.support
            .iter()
            .zip(self.probs.probs())
            .filter(|((mm, _), _)| *mm == m)
            .map(|(_, p)| p)
            .sum()
    }
}

/// `log P(y_chunk | x_chunk)` under `V(s|x)` pushed through the channel.
fn chunk_loglik(x: &[usize], y: &[usize], v: &CondDist, avc: &AvcSpec) -> f64 {
    let mut ll = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let p: f64 = (0..avc.ns())
            .filter(|&s| avc.w(xi, s) == yi)
            .map(|s| v.get(xi, s))
            .sum();
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += p.ln();
    }
    ll
}

/// Exact Bayes posterior of the transmitted `(m, r-prefix)` given the first
/// `a` chunks of output, under a uniform prior on the subcode.
pub fn posterior(
    y_prefix: &[usize],
    a: usize,
    cb: &Codebook,
    v_prefix: &[CondDist],
    subcode: &Subcode,
    avc: &AvcSpec,
) -> Result<Posterior, AdversaryError> {
    if subcode.messages.is_empty() {
        return Err(AdversaryError::EmptySubcode);
    }
    let len = cb.chunk_len();
    let mut support = Vec::new();
    let mut logw = Vec::new();
    for (i, &m) in subcode.messages.iter().enumerate() {
        let seeds = &subcode.seeds[i];
        // per-chunk log-likelihoods of each admissible seed
        let ll: Vec<Vec<f64>> = (0..a)
            .map(|u| {
                seeds[u]
                    .iter()
                    .map(|&r| {
                        chunk_loglik(
                            cb.word(u, m, r),
                            &y_prefix[u * len..(u + 1) * len],
                            &v_prefix[u],
                            avc,
                        )
                    })
                    .collect()
            })
            .collect();
        let total: usize = (0..a).map(|u| seeds[u].len()).product();
        for idx in 0..total {
            let mut rest = idx;
            let mut r = vec![0usize; a];
            let mut l = 0.0;
            for u in (0..a).rev() {
                let j = rest % seeds[u].len();
                rest /= seeds[u].len();
                r[u] = seeds[u][j];
                l += ll[u][j];
            }
            support.push((m, r));
            logw.push(l);
        }
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(AdversaryError::ZeroEvidence);
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(Posterior {
        support,
        probs: Dist::normalized(w.into_iter().map(|x| x / z).collect())
            .expect("normalised weights"),
    })
}

/// Three-phase causal attack: babble on the prefix, sample a spoof from the
/// posterior at the division point, then symmetrize the suffix against it.
///
/// Suffix positions are assigned to CP components greedily: among the cells
/// `(v, x(i), x'(i))`, take the one least filled relative to its target count
/// `⌈(n - an/K) w_v Q_v(x) Q_v(x')⌉`, lowest `v` on ties.
pub struct BabbleAndPush<'a, R> {
    plan: &'a AttackPlan,
    cb: &'a Codebook,
    avc: &'a AvcSpec,
    rng: R,
    prefix: Vec<Vec<WeightedIndex<f64>>>,
    suffix: Vec<Vec<WeightedIndex<f64>>>,
    i: usize,
    y: Vec<usize>,
    spoof: Option<(usize, Vec<usize>)>,
    target: Vec<f64>,
    fill: Vec<f64>,
    spent: f64,
    flags: FailureFlags,
}

impl<'a, R: Rng> BabbleAndPush<'a, R> {
    pub fn new(plan: &'a AttackPlan, cb: &'a Codebook, avc: &'a AvcSpec, rng: R) -> Self {
        let nx = avc.nx();
        let n = cb.params.n;
        let suffix_len = (n - plan.a * cb.chunk_len()) as f64;
        let mut target = Vec::new();
        if let Some(cp) = &plan.cp {
            for (w, q) in cp.weights.probs().iter().zip(&cp.components) {
                for x in 0..nx {
                    for x2 in 0..nx {
                        target.push((suffix_len * w * q.get(x) * q.get(x2)).ceil());
                    }
                }
            }
        }
        BabbleAndPush {
            plan,
            cb,
            avc,
            rng,
            prefix: plan.prefix.iter().map(samplers).collect(),
            suffix: plan.suffix.iter().map(samplers).collect(),
            i: 0,
            y: Vec::with_capacity(plan.a * cb.chunk_len()),
            fill: vec![0.0; target.len()],
            target,
            spent: 0.0,
            spoof: None,
            flags: FailureFlags::default(),
        }
    }

    fn pick_spoof(&mut self) {
        let plan = self.plan;
        let post = match posterior(
            &self.y,
            plan.a,
            self.cb,
            &plan.prefix,
            &plan.subcode,
            self.avc,
        ) {
            Ok(p) => p,
            Err(_) => {
                self.flags.zero_evidence = true;
                return;
            }
        };
        let pick = WeightedIndex::new(post.probs.probs())
            .expect("posterior has mass")
            .sample(&mut self.rng);
        let (m, prefix_seeds) = post.support[pick].clone();
        let idx = plan
            .subcode
            .contains(m)
            .expect("posterior support is in the subcode");
        let mut seeds = prefix_seeds;
        for u in plan.a..self.cb.k() {
            let r = *plan.subcode.seeds[idx][u]
                .choose(&mut self.rng)
                .expect("every retained message keeps a seed per chunk");
            seeds.push(r);
        }
        self.spoof = Some((m, self.cb.codeword(m, &seeds)));
    }

    fn nx(&self) -> usize {
        self.avc.nx()
    }

    /// Realised time-share type against its target at the end of the block.
    fn check_types(&mut self) {
        let Some(cp) = &self.plan.cp else { return };
        let nx = self.nx();
        let suffix_len = (self.cb.params.n - self.plan.a * self.cb.chunk_len()) as f64;
        let mut worst: f64 = 0.0;
        for (v, (w, q)) in cp.weights.probs().iter().zip(&cp.components).enumerate() {
            for x in 0..nx {
                for x2 in 0..nx {
                    let c = (v * nx + x) * nx + x2;
                    worst = worst.max((self.fill[c] / suffix_len - w * q.get(x) * q.get(x2)).abs());
                }
            }
        }
        if worst > self.plan.delta_cp {
            self.flags.type_deviation = true;
        }
    }

    /// Component for the current suffix position.
    fn assign(&self, x: usize, x2: usize) -> usize {
        let nx = self.nx();
        let comps = self.plan.suffix.len();
        let mut best = (f64::INFINITY, 0usize);
        for v in 0..comps {
            let c = (v * nx + x) * nx + x2;
            if self.target[c] <= 0.0 {
                continue;
            }
            let ratio = self.fill[c] / self.target[c];
            if ratio < best.0 {
                best = (ratio, v);
            }
        }
        best.1
    }
}

impl<R: Rng> CausalJammer for BabbleAndPush<'_, R> {
    fn next_state(&mut self, x: usize) -> usize {
        let i = self.i;
        self.i += 1;
        let len = self.cb.chunk_len();
        let n = self.cb.params.n;
        let s0 = self.avc.s0();
        let split = self.plan.a * len;
        if i == split && split < n {
            self.pick_spoof();
        }
        let s = if self.flags.any() {
            s0
        } else if i < split {
            let s = self.prefix[i / len][x].sample(&mut self.rng);
            self.y.push(self.avc.w(x, s));
            s
        } else {
            let x2 = self.spoof.as_ref().expect("spoof is chosen at the split").1[i];
            let v = self.assign(x, x2);
            let nx = self.nx();
            self.fill[(v * nx + x) * nx + x2] += 1.0;
            self.suffix[v][x * nx + x2].sample(&mut self.rng)
        };
        let s = if self.spent + self.avc.cost(s) > self.avc.budget() * n as f64 + 1e-9 {
            self.flags.budget_exhausted = true;
            s0
        } else {
            s
        };
        self.spent += self.avc.cost(s);
        if i + 1 == n && !self.flags.any() {
            self.check_types();
        }
        s
    }

    fn failure(&self) -> FailureFlags {
        self.flags
    }

    fn spoof(&self) -> Option<usize> {
        self.spoof.as_ref().map(|(m, _)| *m)
    }
}

/// Total variation between the empirical laws of `(x, x', y)` when the
/// channel input is `x` jammed by `V(·|x, x')` and when it is `x'` jammed by
/// `V(·|x', x)`.
pub fn exchangeability_tv<R: Rng>(
    avc: &AvcSpec,
    v_pair: &CondDist,
    x: &[usize],
    x2: &[usize],
    rng: &mut R,
) -> f64 {
    let (nx, ny) = (avc.nx(), avc.ny());
    let tables = samplers(v_pair);
    let mut a = vec![0.0f64; nx * nx * ny];
    let mut b = vec![0.0; nx * nx * ny];
    for (&p, &q) in x.iter().zip(x2) {
        let s = tables[p * nx + q].sample(rng);
        a[(p * nx + q) * ny + avc.w(p, s)] += 1.0;
        let s = tables[q * nx + p].sample(rng);
        b[(p * nx + q) * ny + avc.w(q, s)] += 1.0;
    }
    let len = x.len() as f64;
    0.5 * a.iter().zip(&b).map(|(u, v)| (u - v).abs()).sum::<f64>() / len
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{extract_subcode, plan_attack, AttackConfig};
    use crate::codec::{build_codebook, encode, CodecConfig};
    use crate::model::ChunkScheme;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn code(n: usize, k: usize, rate: f64, seed: u64) -> Codebook {
        build_codebook(
            &AvcSpec::xor(0.0),
            &CondDist::constant(k, &Dist::uniform(2)),
            rate,
            &ChunkScheme::new(n, k).unwrap(),
            0.0,
            &CodecConfig::default(),
            seed,
        )
        .unwrap()
    }

    fn stand_down() -> CondDist {
        CondDist::constant(2, &Dist::point(2, 0))
    }

    #[test]
    fn noiseless_prefix_pins_the_message() {
        let cb = code(80, 4, 0.1, 1);
        let avc = AvcSpec::xor(0.0);
        let sc = extract_subcode(&cb, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (x, _) = encode(&cb, 42, &mut rng).unwrap();
        let post = posterior(&x[..40], 2, &cb, &vec![stand_down(); 2], &sc, &avc).unwrap();
        assert!((post.message_mass(42) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scrambling_prefix_gives_uniform_posterior() {
        let cb = code(40, 4, 0.1, 2);
        let avc = AvcSpec::xor(0.0);
        let sc = extract_subcode(&cb, 0.05);
        let v = vec![CondDist::constant(2, &Dist::uniform(2)); 2];
        let post = posterior(&[1; 20], 2, &cb, &v, &sc, &avc).unwrap();
        let u = 1.0 / cb.messages() as f64;
        assert!(post.probs.probs().iter().all(|p| (p - u).abs() < 1e-12));
    }

    #[test]
    fn identical_prefixes_share_mass_and_impossible_output_is_zero_evidence() {
        let params = crate::codec::CodebookParams {
            rate: 0.25,
            n: 8,
            k: 2,
            gamma: 0.0,
            messages: 2,
            seeds: 1,
            p_xu: CondDist::constant(2, &Dist::uniform(2)),
            nx: 2,
            seed: 0,
        };
        // chunk 0 identical for both messages, chunk 1 differs
        let words = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 1, 1, 1, 1, 0, 0];
        let cb = Codebook::from_parts(params, words);
        let avc = AvcSpec::xor(0.0);
        let sc = extract_subcode(&cb, 0.05);
        let post = posterior(&[0, 1, 0, 1], 1, &cb, &[stand_down()], &sc, &avc).unwrap();
        assert!((post.message_mass(0) - 0.5).abs() < 1e-12);
        assert_eq!(
            posterior(&[1, 1, 1, 1], 1, &cb, &[stand_down()], &sc, &avc),
            Err(AdversaryError::ZeroEvidence)
        );
    }

    fn attack_setup(budget: f64) -> (AvcSpec, Codebook, AttackPlan) {
        let avc = AvcSpec::xor(budget);
        let cb = code(240, 4, 0.1, 3);
        let sc = extract_subcode(&cb, 0.05);
        let plan = plan_attack(&avc, &sc, &cb.scheme(), 0.1, &AttackConfig::default()).unwrap();
        (avc, cb, plan)
    }

    #[test]
    fn push_suffix_matches_the_symmetrized_output() {
        let (avc, cb, plan) = attack_setup(0.4);
        assert_eq!(plan.a, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, _) = encode(&cb, 7, &mut rng).unwrap();
        let mut j = BabbleAndPush::new(&plan, &cb, &avc, ChaCha8Rng::seed_from_u64(9));
        let s: Vec<usize> = x.iter().map(|&xi| j.next_state(xi)).collect();
        let m2 = j.spoof().unwrap();
        let x2 = cb.codeword(m2, &[0; 4]);
        assert!(!j.failure().budget_exhausted);
        // a cheapest XOR symmetrizer outputs x AND x' or x OR x'
        let y: Vec<usize> = (0..240).map(|i| avc.w(x[i], s[i])).collect();
        let and: Vec<usize> = (0..240).map(|i| x[i] & x2[i]).collect();
        let or: Vec<usize> = (0..240).map(|i| x[i] | x2[i]).collect();
        assert!(y == and || y == or);
    }

    #[test]
    fn starved_budget_fails_the_attack() {
        let (_, cb, plan) = attack_setup(0.4);
        let poor = AvcSpec::xor(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut failed = 0;
        for t in 0..50 {
            let (x, _) = encode(&cb, t, &mut rng).unwrap();
            let mut j = BabbleAndPush::new(&plan, &cb, &poor, ChaCha8Rng::seed_from_u64(t as u64));
            let s: Vec<usize> = x.iter().map(|&xi| j.next_state(xi)).collect();
            let cost: f64 = s.iter().map(|&v| poor.cost(v)).sum::<f64>() / 240.0;
            assert!(cost <= 0.05 + 1e-12);
            failed += usize::from(j.failure().budget_exhausted);
        }
        assert!(failed >= 49);
    }

    #[test]
    fn push_is_causal() {
        let (avc, cb, plan) = attack_setup(0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (x1, _) = encode(&cb, 1, &mut rng).unwrap();
        let (x2, _) = encode(&cb, 2, &mut rng).unwrap();
        let mixed: Vec<usize> = x1[..100].iter().chain(&x2[100..]).copied().collect();
        let mut a = BabbleAndPush::new(&plan, &cb, &avc, ChaCha8Rng::seed_from_u64(1));
        let mut b = BabbleAndPush::new(&plan, &cb, &avc, ChaCha8Rng::seed_from_u64(1));
        let s1: Vec<usize> = x1.iter().map(|&x| a.next_state(x)).collect();
        let s2: Vec<usize> = mixed.iter().map(|&x| b.next_state(x)).collect();
        assert_eq!(s1[..100], s2[..100]);
    }

    #[test]
    fn swap_symmetric_table_is_exchangeable() {
        let avc = AvcSpec::xor(1.0);
        // V(s = x' | x, x') = 1
        let v = CondDist::new((0..4).map(|r| Dist::point(2, r % 2)).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<usize> = (0..10_000).map(|_| rng.gen_range(0..2)).collect();
        let x2: Vec<usize> = (0..10_000).map(|_| rng.gen_range(0..2)).collect();
        assert!(exchangeability_tv(&avc, &v, &x, &x2, &mut rng) < 0.05);
        // the identity-state table is not symmetric
        let id = CondDist::constant(4, &Dist::point(2, 0));
        assert!(exchangeability_tv(&avc, &id, &x, &x2, &mut rng) > 0.2);
    }
}
