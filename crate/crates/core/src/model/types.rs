use rand::seq::SliceRandom;
use rand::Rng;

use super::{Dist, ModelError};

const INTEGRALITY_TOL: f64 = 1e-9;

/// Exact integer composition of a type class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeCounts {
    pub counts: Vec<usize>,
}

impl TypeCounts {
    /// Interprets `p * length` as integer counts.
    pub fn from_dist(p: &Dist, length: usize) -> Result<Self, ModelError> {
        let mut counts = Vec::with_capacity(p.len());
        for &q in p.probs() {
            let c = q * length as f64;
            let r = c.round();
            if (c - r).abs() > INTEGRALITY_TOL * length.max(1) as f64 {
                return Err(ModelError::NonIntegerComposition {
                    probs: p.probs().to_vec(),
                    length,
                });
            }
            counts.push(r as usize);
        }
        if counts.iter().sum::<usize>() != length {
            return Err(ModelError::NonIntegerComposition {
                probs: p.probs().to_vec(),
                length,
            });
        }
        Ok(TypeCounts { counts })
    }

    pub fn of_sequence(seq: &[usize], alphabet: usize) -> Result<Self, ModelError> {
        let mut counts = vec![0usize; alphabet];
        for &s in seq {
            if s >= alphabet {
                return Err(ModelError::SymbolOutOfRange {
                    symbol: s,
                    size: alphabet,
                });
            }
            counts[s] += 1;
        }
        Ok(TypeCounts { counts })
    }

    pub fn length(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_dist(&self) -> Dist {
        let len = self.length() as f64;
        Dist::new(self.counts.iter().map(|&c| c as f64 / len).collect())
            .expect("counts form a distribution")
    }
}

/// Empirical distribution of a sequence over `{0, .., alphabet-1}`.
pub fn empirical_type(seq: &[usize], alphabet: usize) -> Result<Dist, ModelError> {
    if seq.is_empty() {
        return Err(ModelError::LengthMismatch(0, 1));
    }
    Ok(TypeCounts::of_sequence(seq, alphabet)?.to_dist())
}

/// Joint type of equal-length sequences, flattened row-major (first sequence slowest).
pub fn empirical_joint_type(seqs: &[&[usize]], sizes: &[usize]) -> Result<Dist, ModelError> {
    if seqs.len() != sizes.len() || seqs.is_empty() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} sequences, {} alphabet sizes",
            seqs.len(),
            sizes.len()
        )));
    }
    let n = seqs[0].len();
    if let Some(bad) = seqs.iter().find(|s| s.len() != n) {
        return Err(ModelError::LengthMismatch(n, bad.len()));
    }
    let mut flat = Vec::with_capacity(n);
    for i in 0..n {
        let mut idx = 0;
        for (seq, &size) in seqs.iter().zip(sizes) {
            if seq[i] >= size {
                return Err(ModelError::SymbolOutOfRange {
                    symbol: seq[i],
                    size,
                });
            }
            idx = idx * size + seq[i];
        }
        flat.push(idx);
    }
    empirical_type(&flat, sizes.iter().product())
}

/// Nearest type with denominator `length` in ℓ∞.
///
/// Floors every entry, then hands the leftover units to the largest
/// fractional parts; equal fractional parts favour the lower symbol index.
pub fn quantize_to_type(p: &Dist, length: usize) -> Dist {
    assert!(length >= 1, "type length must be positive");
    let scaled: Vec<f64> = p.probs().iter().map(|q| q * length as f64).collect();
    let mut counts: Vec<usize> = scaled
        .iter()
        .map(|c| {
            let r = c.round();
            if (c - r).abs() < INTEGRALITY_TOL {
                r as usize
            } else {
                c.floor() as usize
            }
        })
        .collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    let frac = |i: usize| scaled[i] - counts[i] as f64;
    let fracs: Vec<f64> = (0..counts.len()).map(frac).collect();
    order.sort_by(|&a, &b| fracs[b].total_cmp(&fracs[a]).then(a.cmp(&b)));
    if assigned <= length {
        for &i in order.iter().cycle().take(length - assigned) {
            counts[i] += 1;
        }
    } else {
        // Rounding snapped a few entries up; take units back from the smallest fractions.
        let mut excess = assigned - length;
        for &i in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                excess -= 1;
            }
        }
    }
    TypeCounts { counts }.to_dist()
}

/// Uniform draw from the type class of `p` at the given length.
pub fn sample_type_class<R: Rng + ?Sized>(
    p: &Dist,
    length: usize,
    rng: &mut R,
) -> Result<Vec<usize>, ModelError> {
    let counts = TypeCounts::from_dist(p, length)?;
    let mut seq = Vec::with_capacity(length);
    for (sym, &c) in counts.counts.iter().enumerate() {
        seq.extend(std::iter::repeat_n(sym, c));
    }
    seq.shuffle(rng);
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(v: &[f64]) -> Dist {
        Dist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(empirical_type(&[0, 1, 0, 1], 2).unwrap(), d(&[0.5, 0.5]));
        assert_eq!(empirical_type(&[0, 0, 0, 1], 2).unwrap(), d(&[0.75, 0.25]));
        let joint = empirical_joint_type(&[&[0, 0, 1, 1], &[0, 1, 0, 1]], &[2, 2]).unwrap();
        assert_eq!(joint, Dist::uniform(4));
        assert_eq!(
            empirical_joint_type(&[&[0, 1], &[0]], &[2, 2]),
            Err(ModelError::LengthMismatch(2, 1))
        );
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_to_type(&d(&[0.5, 0.5]), 2), d(&[0.5, 0.5]));
        assert_eq!(
            quantize_to_type(&d(&[1.0 / 3.0, 2.0 / 3.0]), 2),
            d(&[0.5, 0.5])
        );
        assert_eq!(quantize_to_type(&d(&[0.49, 0.51]), 100), d(&[0.49, 0.51]));
        assert_eq!(quantize_to_type(&d(&[0.5, 0.5]), 3).probs()[0], 2.0 / 3.0);
    }

    /// Independent oracle: enumerate every composition of `length` and keep the
    /// ℓ∞-closest, preferring mass on lower indices.
    fn brute_quantize(p: &[f64], length: usize) -> Vec<usize> {
        fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
                return;
            }
            for c in (0..=left).rev() {
                cur.push(c);
                rec(k - 1, left - c, cur, out);
                cur.pop();
            }
        }
        let mut all = Vec::new();
        rec(p.len(), length, &mut Vec::new(), &mut all);
        let dist = |c: &Vec<usize>| {
            c.iter()
                .zip(p)
                .map(|(&c, q)| (c as f64 / length as f64 - q).abs())
                .fold(0.0, f64::max)
        };
        let best = all.iter().map(dist).fold(f64::INFINITY, f64::min);
        all.into_iter().find(|c| dist(c) <= best + 1e-12).unwrap()
    }

    #[test]
    fn quantize_matches_exhaustive_oracle_on_length_two() {
        let cands = [vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]];
        let p = [1.0 / 3.0, 2.0 / 3.0];
        let dist = |c: &Vec<f64>| {
            c.iter()
                .zip(&p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let best = cands
            .iter()
            .min_by(|a, b| dist(a).total_cmp(&dist(b)))
            .unwrap();
        assert_eq!(quantize_to_type(&d(&p), 2).probs(), best.as_slice());
    }

    #[test]
    fn sample_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            sample_type_class(&d(&[1.0, 0.0]), 4, &mut rng).unwrap(),
            vec![0; 4]
        );
        assert!(matches!(
            sample_type_class(&d(&[0.3, 0.7]), 4, &mut rng),
            Err(ModelError::NonIntegerComposition { .. })
        ));
    }

    fn chi_square(counts: &[usize], draws: usize) -> f64 {
        let e = draws as f64 / counts.len() as f64;
        counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
    }

    #[test]
    fn length_two_class_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 2];
        for _ in 0..10_000 {
            let s = sample_type_class(&Dist::uniform(2), 2, &mut rng).unwrap();
            counts[s[0]] += 1;
        }
        // chi-square with 1 dof, 99.9% quantile 10.83
        assert!(chi_square(&counts, 10_000) < 10.83);
    }

    #[test]
    fn quarter_class_is_uniform_over_four_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let s = sample_type_class(&d(&[0.25, 0.75]), 4, &mut rng).unwrap();
            let pos = s.iter().position(|&v| v == 0).unwrap();
            counts[pos] += 1;
        }
        // 3 dof, 99.9% quantile 16.27
        assert!(chi_square(&counts, 10_000) < 16.27);
    }

    proptest! {
        #[test]
        fn quantize_is_nearest(raw in prop::collection::vec(0.0f64..1.0, 2..4), length in 1usize..9) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let p = Dist::normalized(raw).unwrap();
            let q = quantize_to_type(&p, length);
            let oracle = brute_quantize(p.probs(), length);
            let oracle_gap = oracle.iter().zip(p.probs())
                .map(|(&c, x)| (c as f64 / length as f64 - x).abs()).fold(0.0, f64::max);
            prop_assert!(q.linf(&p) <= oracle_gap + 1e-12);
            prop_assert!(TypeCounts::from_dist(&q, length).is_ok());
        }

        #[test]
        fn sampling_reproduces_type(raw in prop::collection::vec(0.0f64..1.0, 1..5), length in 1usize..40, seed in any::<u64>()) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let p = quantize_to_type(&Dist::normalized(raw).unwrap(), length);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_type_class(&p, length, &mut rng).unwrap();
            let back = TypeCounts::of_sequence(&s, p.len()).unwrap();
            prop_assert_eq!(back, TypeCounts::from_dist(&p, length).unwrap());
        }

        #[test]
        fn joint_marginals_match(a in prop::collection::vec(0usize..3, 1..30), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<usize> = a.iter().map(|_| rand::Rng::gen_range(&mut rng, 0..2)).collect();
            let joint = TypeCounts::of_sequence(
                &a.iter().zip(&b).map(|(x, y)| x * 2 + y).collect::<Vec<_>>(), 6).unwrap();
            let ta = TypeCounts::of_sequence(&a, 3).unwrap();
            let tb = TypeCounts::of_sequence(&b, 2).unwrap();
            for x in 0..3 {
                prop_assert_eq!(joint.counts[2 * x] + joint.counts[2 * x + 1], ta.counts[x]);
            }
            for y in 0..2 {
                prop_assert_eq!((0..3).map(|x| joint.counts[2 * x + y]).sum::<usize>(), tb.counts[y]);
            }
        }
    }
}
