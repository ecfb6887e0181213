use serde::{Deserialize, Serialize};

use super::{AdversaryError, AttackConfig, Subcode};
use crate::capacity::rd::{min_babble, RdChunk};
use crate::geometry::{
    default_cp_resolution, min_cost_symmetrizer, nearest_cp, CpDecomposition, GeometryError,
};
use crate::model::{AvcSpec, ChunkScheme, CondDist, Dist};

/// Division point, babble tables and time-shared push tables of one attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub subcode: Subcode,
    /// Prefix chunk count; `a = K` is the babble-only attack.
    pub a: usize,
    /// One `V(s|x)` per prefix chunk.
    pub prefix: Vec<CondDist>,
    /// Time-sharing law over suffix components; `None` when `a = K`.
    pub cp: Option<CpDecomposition>,
    /// One pair table `V(s|x,x')` per CP component.
    pub suffix: Vec<CondDist>,
    /// `(1/K) Σ_{u < a} I(P̂_u, V_u)`.
    pub prefix_mi: f64,
    /// Expected cost of prefix plus suffix.
    pub expected_cost: f64,
    pub rate: f64,
    /// Time-share tolerance the jammer enforces at the end of the block.
    pub delta_cp: f64,
}

struct Candidate {
    a: usize,
    prefix: Vec<CondDist>,
    cp: Option<CpDecomposition>,
    suffix: Vec<CondDist>,
    value: f64,
    cost: f64,
}

/// Suffix time-share and cheapest symmetrizers for the chunks from `a` on.
fn suffix_part(
    p_hat: &CondDist,
    a: usize,
    avc: &AvcSpec,
    cfg: &AttackConfig,
) -> Result<Option<(CpDecomposition, Vec<CondDist>, f64)>, AdversaryError> {
    let (k, nx) = (p_hat.num_rows(), avc.nx());
    let m = (k - a) as f64;
    let mut pair = vec![0.0; nx * nx];
    let mut px = vec![0.0; nx];
    for u in a..k {
        let p = p_hat.row(u);
        for x in 0..nx {
            px[x] += p.get(x) / m;
            for x2 in 0..nx {
                pair[x * nx + x2] += p.get(x) * p.get(x2) / m;
            }
        }
    }
    let pair = Dist::normalized(pair).expect("average of product laws");
    let px = Dist::normalized(px).expect("average of chunk laws");
    let res = cfg
        .cp_resolution
        .unwrap_or_else(|| default_cp_resolution(nx));
    let cp = nearest_cp(&pair, &px, res)?;
    if cp.gap > cfg.delta_cp {
        return Ok(None);
    }
    let mut tables = Vec::with_capacity(cp.components.len());
    let mut cost = 0.0;
    for (w, q) in cp.weights.probs().iter().zip(&cp.components) {
        match min_cost_symmetrizer(&q.product(q), avc, 0.0) {
            Ok((v, c)) => {
                tables.push(v);
                cost += w * c;
            }
            Err(GeometryError::Infeasible(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some((cp, tables, cost * m / k as f64)))
}

/// Chooses the division point minimising the prefix information among those
/// with an affordable symmetrizing suffix and `R ≥ I + δ/2`.
///
/// The suffix pair law is the average of `P̂_u ⊗ P̂_u` over suffix chunks,
/// which is what two independent codewords of the subcode produce. A division
/// point whose CP fit misses by more than `δ_CP` is skipped. Ties go to the
/// smaller division point.
pub fn plan_attack(
    avc: &AvcSpec,
    subcode: &Subcode,
    scheme: &ChunkScheme,
    rate: f64,
    cfg: &AttackConfig,
) -> Result<AttackPlan, AdversaryError> {
    if subcode.messages.is_empty() {
        return Err(AdversaryError::EmptySubcode);
    }
    let k = scheme.k();
    let p_hat = &subcode.p_hat;
    let mut best: Option<Candidate> = None;
    for a in 0..=k {
        let (cp, suffix, suffix_cost) = if a < k {
            match suffix_part(p_hat, a, avc, cfg)? {
                Some((cp, t, c)) => (Some(cp), t, c),
                None => continue,
            }
        } else {
            (None, Vec::new(), 0.0)
        };
        let remaining = avc.budget() - cfg.delta_state - suffix_cost;
        let chunks: Vec<RdChunk<'_>> = (0..a)
            .map(|u| RdChunk {
                p: p_hat.row(u),
                weight: scheme.eps(),
            })
            .collect();
        let Some(babble) = min_babble(&chunks, avc, remaining) else {
            continue;
        };
        if rate < babble.value + cfg.delta / 2.0 {
            continue;
        }
        if best.as_ref().is_none_or(|b| babble.value < b.value) {
            best = Some(Candidate {
                a,
                prefix: babble.v,
                cp,
                suffix,
                value: babble.value,
                cost: babble.cost + suffix_cost,
            });
        }
    }
    let c = best.ok_or(AdversaryError::NoAttack)?;
    Ok(AttackPlan {
        subcode: subcode.clone(),
        a: c.a,
        prefix: c.prefix,
        cp: c.cp,
        suffix: c.suffix,
        prefix_mi: c.value,
        expected_cost: c.cost,
        rate,
        delta_cp: cfg.delta_cp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::extract_subcode;
    use crate::capacity::{compute_c_k, SearchConfig};
    use crate::codec::{build_codebook, CodecConfig};
    use crate::geometry::symmetrization_residual;

    fn subcode(k: usize) -> (ChunkScheme, Subcode) {
        let scheme = ChunkScheme::new(10 * k, k).unwrap();
        let cb = build_codebook(
            &AvcSpec::xor(0.0),
            &CondDist::constant(k, &Dist::uniform(2)),
            0.3,
            &scheme,
            0.0,
            &CodecConfig::default(),
            2,
        )
        .unwrap();
        (scheme, extract_subcode(&cb, 0.05))
    }

    #[test]
    fn zero_budget_admits_no_attack() {
        let (scheme, sc) = subcode(4);
        for r in [0.0, 0.5, 1.0] {
            assert_eq!(
                plan_attack(
                    &AvcSpec::xor(0.0),
                    &sc,
                    &scheme,
                    r,
                    &AttackConfig::default()
                ),
                Err(AdversaryError::NoAttack)
            );
        }
    }

    #[test]
    fn rate_above_upper_bracket_finds_a_push() {
        let (scheme, sc) = subcode(4);
        let avc = AvcSpec::xor(0.4);
        let cfg = AttackConfig::default();
        let upper = compute_c_k(&avc, 4, &SearchConfig::default()).upper;
        let plan = plan_attack(&avc, &sc, &scheme, upper + cfg.delta, &cfg).unwrap();
        assert!(plan.a < 4);
        assert!(plan.rate >= plan.prefix_mi + cfg.delta / 2.0);
        assert!(plan.expected_cost <= 0.4 - cfg.delta_state + 1e-9);
        for t in &plan.suffix {
            assert!(symmetrization_residual(t, &avc) < 1e-9);
        }
    }

    #[test]
    fn full_prefix_plan_is_babble_only() {
        // symmetrizing costs 1/4 per suffix chunk fraction; at Λ = 0.1 with
        // K = 2 no suffix fits, so only the babble-only point a = K remains
        let (scheme, sc) = subcode(2);
        let avc = AvcSpec::xor(0.1);
        let plan = plan_attack(&avc, &sc, &scheme, 1.0, &AttackConfig::default()).unwrap();
        assert_eq!(plan.a, 2);
        assert!(plan.suffix.is_empty() && plan.cp.is_none());
        let babble = crate::capacity::min_mi_feasible(
            &sc.p_hat,
            &avc.with_budget(0.1 - AttackConfig::default().delta_state),
            &scheme,
            0.0,
        )
        .unwrap();
        assert!((plan.prefix_mi - babble.value).abs() < 1e-6);
    }
}
