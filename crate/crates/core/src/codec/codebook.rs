use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CodecConfig, CodecError};
use crate::model::{quantize_to_type, sample_type_class, AvcSpec, ChunkScheme, CondDist};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookParams {
    /// Nominal rate `R`; the decoder's rate window is keyed on it.
    pub rate: f64,
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub messages: usize,
    pub seeds: usize,
    /// Chunk input laws after quantization to the chunk length.
    pub p_xu: CondDist,
    pub nx: usize,
    pub seed: u64,
}

/// Words indexed by `(u, m, r)`, each of length `nε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub params: CodebookParams,
    words: Vec<usize>,
}

/// `min(⌊2^{bits_wanted}⌋, 2^cap)`, at least 1.
fn capped_count(bits_wanted: f64, cap: u32) -> usize {
    if bits_wanted >= cap as f64 {
        1usize << cap
    } else {
        (bits_wanted.exp2().floor() as usize).max(1)
    }
}

/// Draws every chunk word independently and uniformly from its type class.
///
/// Words are generated in `(u, m, r)` order from a ChaCha stream seeded by
/// `seed`, so rebuilding with the same arguments is bit-identical.
pub fn build_codebook(
    avc: &AvcSpec,
    p_xu: &CondDist,
    rate: f64,
    scheme: &ChunkScheme,
    gamma: f64,
    cfg: &CodecConfig,
    seed: u64,
) -> Result<Codebook, CodecError> {
    let log_x = (avc.nx() as f64).log2();
    if !(0.0..=log_x + 1e-12).contains(&rate) {
        return Err(CodecError::BadRate(rate));
    }
    if p_xu.num_rows() != scheme.k() || p_xu.row_len() != avc.nx() {
        return Err(CodecError::Format(format!(
            "input law is {}x{}, expected {}x{}",
            p_xu.num_rows(),
            p_xu.row_len(),
            scheme.k(),
            avc.nx()
        )));
    }
    let len = scheme.chunk_len();
    let rows = p_xu
        .rows()
        .iter()
        .enumerate()
        .map(|(u, p)| {
            if !avc.input_feasible(p.probs()) {
                return Err(CodecError::InfeasibleInput(u));
            }
            Ok(quantize_to_type(p, len))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let p_xu = CondDist::new(rows)?;
    let n = scheme.n() as f64;
    let messages = capped_count(n * rate, cfg.max_message_bits);
    let seeds = capped_count(n * gamma, cfg.max_seed_bits);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::with_capacity(scheme.k() * messages * seeds * len);
    for u in 0..scheme.k() {
        for _ in 0..messages * seeds {
            words.extend(sample_type_class(p_xu.row(u), len, &mut rng)?);
        }
    }
    Ok(Codebook {
        params: CodebookParams {
            rate,
            n: scheme.n(),
            k: scheme.k(),
            gamma,
            messages,
            seeds,
            p_xu,
            nx: avc.nx(),
            seed,
        },
        words,
    })
}

impl Codebook {
    /// Assembles a codebook without composition checks.
    #[cfg(test)]
    pub(crate) fn from_parts(params: CodebookParams, words: Vec<usize>) -> Self {
        Codebook { params, words }
    }

    pub fn messages(&self) -> usize {
        self.params.messages
    }

    pub fn seeds(&self) -> usize {
        self.params.seeds
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn chunk_len(&self) -> usize {
        self.params.n / self.params.k
    }

    pub fn scheme(&self) -> ChunkScheme {
        ChunkScheme::new(self.params.n, self.params.k).expect("stored scheme is valid")
    }

    pub fn word(&self, u: usize, m: usize, r: usize) -> &[usize] {
        let len = self.chunk_len();
        let start = ((u * self.params.messages + m) * self.params.seeds + r) * len;
        &self.words[start..start + len]
    }

    /// The full codeword for message `m` under seed vector `r`.
    pub fn codeword(&self, m: usize, r: &[usize]) -> Vec<usize> {
        r.iter()
            .enumerate()
            .flat_map(|(u, &ru)| self.word(u, m, ru).iter().copied())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("codebook serializes")
    }

    /// Parses and checks shape and composition of every word.
    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        let cb: Codebook =
            serde_json::from_str(text).map_err(|e| CodecError::Format(e.to_string()))?;
        let p = &cb.params;
        if p.k == 0
            || !p.n.is_multiple_of(p.k)
            || p.p_xu.num_rows() != p.k
            || p.p_xu.row_len() != p.nx
        {
            return Err(CodecError::Format("inconsistent parameters".into()));
        }
        if cb.words.len() != p.k * p.messages * p.seeds * (p.n / p.k) {
            return Err(CodecError::Format(format!(
                "{} symbols stored for {} words",
                cb.words.len(),
                p.k * p.messages * p.seeds
            )));
        }
        for u in 0..p.k {
            let want = crate::model::TypeCounts::from_dist(p.p_xu.row(u), cb.chunk_len())?;
            for m in 0..p.messages {
                for r in 0..p.seeds {
                    let got = crate::model::TypeCounts::of_sequence(cb.word(u, m, r), p.nx)?;
                    if got != want {
                        return Err(CodecError::Format(format!(
                            "word ({u}, {m}, {r}) has composition {:?}",
                            got.counts
                        )));
                    }
                }
            }
        }
        Ok(cb)
    }
}

/// Concatenates the words of `m` under fresh uniform seeds; returns the seeds too.
pub fn encode<R: Rng + ?Sized>(
    cb: &Codebook,
    m: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>), CodecError> {
    if m >= cb.messages() {
        return Err(CodecError::BadMessage(m, cb.messages()));
    }
    let r: Vec<usize> = (0..cb.k()).map(|_| rng.gen_range(0..cb.seeds())).collect();
    Ok((cb.codeword(m, &r), r))
}
