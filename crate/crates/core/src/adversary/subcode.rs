use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::codec::Codebook;
use crate::model::{CondDist, Dist, TypeCounts};

/// Messages and seeds whose chunk types all fall in one cell of a type net.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subcode {
    pub messages: Vec<usize>,
    /// `seeds[i][u]`: admissible seeds of `messages[i]` in chunk `u`.
    pub seeds: Vec<Vec<Vec<usize>>>,
    /// Average chunk type over retained words.
    pub p_hat: CondDist,
    /// `Σ_{m ∈ M'} P(cell | m)`, in units of messages.
    pub mass: f64,
    /// Selected net cell, one index vector per chunk.
    pub cell: Vec<Vec<usize>>,
}

impl Subcode {
    pub fn contains(&self, m: usize) -> Option<usize> {
        self.messages.binary_search(&m).ok()
    }
}

fn cell_of(counts: &TypeCounts, len: usize, width: f64) -> Vec<usize> {
    counts
        .counts
        .iter()
        .map(|&c| ((c as f64 / len as f64) / width + 1e-9).floor() as usize)
        .collect()
}

/// Picks the cell of the chunk-type net that retains the most encoder mass.
///
/// Every message's law over seed vectors is uniform and factorises over
/// chunks, so `P(cell | m)` is a product of per-chunk seed fractions.
/// Ties go to the lexicographically first cell. A message is retained when
/// its mass in the cell is at least half the average over candidate cells.
pub fn extract_subcode(cb: &Codebook, delta_input: f64) -> Subcode {
    let (k, mm, nn, len) = (cb.k(), cb.messages(), cb.seeds(), cb.chunk_len());
    let nx = cb.params.nx;
    // cells[u][m][r]
    let cells: Vec<Vec<Vec<Vec<usize>>>> = (0..k)
        .map(|u| {
            (0..mm)
                .map(|m| {
                    (0..nn)
                        .map(|r| {
                            let t = TypeCounts::of_sequence(cb.word(u, m, r), nx)
                                .expect("codebook symbols are in range");
                            cell_of(&t, len, delta_input)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let per_chunk: Vec<Vec<Vec<usize>>> = cells
        .iter()
        .map(|cu| {
            cu.iter()
                .flatten()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();
    let frac = |u: usize, m: usize, c: &[usize]| {
        cells[u][m].iter().filter(|x| x.as_slice() == c).count() as f64 / nn as f64
    };
    let cell_mass = |m: usize, profile: &[usize]| {
        (0..k)
            .map(|u| frac(u, m, &per_chunk[u][profile[u]]))
            .product::<f64>()
    };

    // mixed-radix enumeration with the last chunk fastest is lexicographic
    let candidates: usize = per_chunk.iter().map(Vec::len).product();
    let profile_at = |mut idx: usize| {
        let mut p = vec![0usize; k];
        for u in (0..k).rev() {
            let l = per_chunk[u].len();
            p[u] = idx % l;
            idx /= l;
        }
        p
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    for idx in 0..candidates {
        let profile = profile_at(idx);
        let score: f64 = (0..mm).map(|m| cell_mass(m, &profile)).sum();
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, profile));
        }
    }
    let (_, profile) = best.expect("at least one candidate cell");
    let threshold = 0.5 / candidates as f64;
    let mut messages = Vec::new();
    let mut seeds = Vec::new();
    let mut mass = 0.0;
    let mut sums = vec![vec![0.0; nx]; k];
    let mut words = vec![0usize; k];
    for m in 0..mm {
        let pm = cell_mass(m, &profile);
        if pm < threshold || pm == 0.0 {
            continue;
        }
        messages.push(m);
        mass += pm;
        let per: Vec<Vec<usize>> = (0..k)
            .map(|u| {
                (0..nn)
                    .filter(|&r| cells[u][m][r] == per_chunk[u][profile[u]])
                    .collect()
            })
            .collect();
        for (u, rs) in per.iter().enumerate() {
            for &r in rs {
                for &x in cb.word(u, m, r) {
                    sums[u][x] += 1.0;
                }
                words[u] += 1;
            }
        }
        seeds.push(per);
    }
    let p_hat = CondDist::new(
        sums.into_iter()
            .zip(&words)
            .map(|(s, &w)| {
                if w == 0 {
                    Dist::uniform(nx)
                } else {
                    Dist::normalized(s.into_iter().map(|c| c / (w * len) as f64).collect())
                        .expect("type averages")
                }
            })
            .collect(),
    )
    .expect("chunk laws share an alphabet");
    Subcode {
        messages,
        seeds,
        p_hat,
        mass,
        cell: (0..k).map(|u| per_chunk[u][profile[u]].clone()).collect(),
    }
}
