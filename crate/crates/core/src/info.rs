//! Entropy, mutual information and induced channels, all in bits.

use thiserror::Error;

use crate::model::{AvcSpec, ChunkScheme, CondDist, Dist, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| -q * q.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn entropy(p: &Dist) -> f64 {
    entropy_of(p.probs())
}

/// Binary entropy `h(q)`.
pub fn h2(q: f64) -> f64 {
    entropy_of(&[q, 1.0 - q])
}

/// The channel `x → y` seen by Bob for one chunk.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedChannel {
    pub table: CondDist,
}

/// Row-major `|X| × |Y|` table of `Σ_s V(s|x) 1{W(x,s) = y}`.
pub fn induced_table(v: &CondDist, avc: &AvcSpec) -> Vec<f64> {
    let (nx, ns, ny) = (avc.nx(), avc.ns(), avc.ny());
    let mut t = vec![0.0; nx * ny];
    for x in 0..nx {
        for s in 0..ns {
            t[x * ny + avc.w(x, s)] += v.get(x, s);
        }
    }
    t
}

/// Channel induced by jamming with `V(s|x)` through the deterministic law.
///
/// `p` is only checked for shape; the conditional does not depend on it.
pub fn induced_channel(p: &Dist, v: &CondDist, avc: &AvcSpec) -> Result<InducedChannel, InfoError> {
    if p.len() != avc.nx() || v.num_rows() != avc.nx() || v.row_len() != avc.ns() {
        return Err(InfoError::ShapeMismatch(format!(
            "P has {} entries and V is {}x{}, channel is {}x{}",
            p.len(),
            v.num_rows(),
            v.row_len(),
            avc.nx(),
            avc.ns()
        )));
    }
    let ny = avc.ny();
    let t = induced_table(v, avc);
    let rows = t
        .chunks(ny)
        .map(|r| Dist::normalized(r.to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InducedChannel {
        table: CondDist::new(rows)?,
    })
}

/// `I(x; y)` for input `p` and a row-major channel table `w[x * ny + y]`.
pub fn mi_table(p: &[f64], w: &[f64], ny: usize) -> f64 {
    let mut q = vec![0.0; ny];
    for (x, &px) in p.iter().enumerate() {
        for y in 0..ny {
            q[y] += px * w[x * ny + y];
        }
    }
    let mut mi = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px <= 0.0 {
            continue;
        }
        for y in 0..ny {
            let wy = w[x * ny + y];
            if wy > 0.0 && q[y] > 0.0 {
                mi += px * wy * (wy / q[y]).log2();
            }
        }
    }
    mi.max(0.0)
}

pub fn mutual_information(p: &Dist, ch: &InducedChannel) -> f64 {
    let ny = ch.table.row_len();
    mi_table(p.probs(), &ch.table.flat(), ny)
}

/// `I(P, V)` for one chunk: the information Bob gets when James jams with `V(s|x)`.
pub fn chunk_mi(p: &Dist, v: &CondDist, avc: &AvcSpec) -> f64 {
    mi_table(p.probs(), &induced_table(v, avc), avc.ny())
}

/// `(1/K) Σ_{u < a} I(P_u, V_u)` over the first `a` chunks.
pub fn cumulative_mi(
    p_xu: &CondDist,
    v_prefix: &[CondDist],
    a: usize,
    scheme: &ChunkScheme,
    avc: &AvcSpec,
) -> Result<f64, InfoError> {
    let w = vec![scheme.eps(); a];
    cumulative_mi_weighted(p_xu, v_prefix, &w, scheme, avc)
}

/// `Σ_{u < a} w_u I(P_u, V_u)` with arbitrary chunk weights, where `a = weights.len()`.
///
/// With `w_u = α P_{u^{≤α}}(u)` this is the non-uniform time-sharing form.
/// `a = K` is allowed here so the full-block babble objective can be evaluated.
pub fn cumulative_mi_weighted(
    p_xu: &CondDist,
    v_prefix: &[CondDist],
    weights: &[f64],
    scheme: &ChunkScheme,
    avc: &AvcSpec,
) -> Result<f64, InfoError> {
    let a = weights.len();
    if a > scheme.k() {
        return Err(ModelError::AlphaNotOnGrid(a, scheme.k()).into());
    }
    if p_xu.num_rows() != scheme.k() || v_prefix.len() < a {
        return Err(InfoError::ShapeMismatch(format!(
            "need {} input rows and {a} prefix jamming tables, got {} and {}",
            scheme.k(),
            p_xu.num_rows(),
            v_prefix.len()
        )));
    }
    let mut total = 0.0;
    for u in 0..a {
        let v = &v_prefix[u];
        if v.num_rows() != avc.nx() || v.row_len() != avc.ns() {
            return Err(InfoError::ShapeMismatch(format!("chunk {u} jamming table")));
        }
        total += weights[u] * chunk_mi(p_xu.row(u), v, avc);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Dist {
        Dist::new(v.to_vec()).unwrap()
    }

    fn bsc_jam(q: f64) -> CondDist {
        CondDist::from_rows(vec![vec![1.0 - q, q], vec![1.0 - q, q]]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&d(&[1.0, 0.0])), 0.0);
        assert!((entropy(&d(&[0.5, 0.5])) - 1.0).abs() < 1e-15);
        // -0.25 log 0.25 - 0.75 log 0.75
        let oracle = 0.5 + 0.75 * (4.0f64 / 3.0).log2();
        assert!((entropy(&d(&[0.25, 0.75])) - oracle).abs() < 1e-12);
        assert!((oracle - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn induced_channel_examples() {
        let avc = AvcSpec::xor(0.5);
        let u = Dist::uniform(2);
        let id = induced_channel(&u, &bsc_jam(0.0), &avc).unwrap();
        assert_eq!(id.table.flat(), vec![1.0, 0.0, 0.0, 1.0]);
        let bsc = induced_channel(&u, &bsc_jam(0.3), &avc).unwrap();
        let f = bsc.table.flat();
        assert!((f[1] - 0.3).abs() < 1e-12 && (f[2] - 0.3).abs() < 1e-12);
        assert!(induced_channel(&Dist::uniform(3), &bsc_jam(0.3), &avc).is_err());
    }

    #[test]
    fn mi_examples() {
        let avc = AvcSpec::xor(0.5);
        let u = Dist::uniform(2);
        assert!((chunk_mi(&u, &bsc_jam(0.0), &avc) - 1.0).abs() < 1e-12);
        assert!(chunk_mi(&u, &bsc_jam(0.5), &avc).abs() < 1e-12);
        let oracle = 1.0 - h2(0.25);
        assert!((chunk_mi(&u, &bsc_jam(0.25), &avc) - oracle).abs() < 1e-12);
        assert!((oracle - 0.188722).abs() < 1e-6);
    }

    #[test]
    fn cumulative_examples() {
        let avc = AvcSpec::xor(0.5);
        let s4 = ChunkScheme::new(8, 4).unwrap();
        let p4 = CondDist::constant(4, &Dist::uniform(2));
        let v = vec![bsc_jam(0.25); 4];
        assert_eq!(cumulative_mi(&p4, &v, 0, &s4, &avc).unwrap(), 0.0);
        let got = cumulative_mi(&p4, &v, 2, &s4, &avc).unwrap();
        assert!((got - 2.0 * (1.0 - h2(0.25)) / 4.0).abs() < 1e-12);
        assert!((got - 0.094361).abs() < 1e-6);
        let s2 = ChunkScheme::new(4, 2).unwrap();
        let p2 = CondDist::constant(2, &Dist::uniform(2));
        let got = cumulative_mi(&p2, &[bsc_jam(0.0)], 1, &s2, &avc).unwrap();
        assert!((got - 0.5).abs() < 1e-12);
        assert!(cumulative_mi(&p2, &[bsc_jam(0.0)], 3, &s2, &avc).is_err());
    }

    fn arb_row(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let t: f64 = v.iter().sum();
            v.into_iter().map(|x| x / t).collect()
        })
    }

    proptest! {
        #[test]
        fn mi_is_convex_in_the_channel(
            p in arb_row(3),
            w1 in prop::collection::vec(arb_row(3), 3),
            w2 in prop::collection::vec(arb_row(3), 3),
            lambda in 0.0f64..1.0,
        ) {
            let f1: Vec<f64> = w1.concat();
            let f2: Vec<f64> = w2.concat();
            let mix: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
            let lhs = mi_table(&p, &mix, 3);
            let rhs = lambda * mi_table(&p, &f1, 3) + (1.0 - lambda) * mi_table(&p, &f2, 3);
            prop_assert!(lhs <= rhs + 1e-9);
        }

        #[test]
        fn mi_is_bounded(p in arb_row(3), w in prop::collection::vec(arb_row(2), 3)) {
            let mi = mi_table(&p, &w.concat(), 2);
            prop_assert!(mi >= 0.0 && mi <= 1.0 + 1e-12);
        }
    }
}
