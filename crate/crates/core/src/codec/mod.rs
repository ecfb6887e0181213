//! Chunk-wise constant-composition stochastic code and its two-step decoder.

mod codebook;
mod decode;

pub use codebook::{build_codebook, encode, Codebook, CodebookParams};
pub use decode::{
    chunk_min_cost, iterative_decode, list_decode_prefix, prefix_chunk_matches, suffix_consistency,
    DecodeOutcome, DecodeStatus, Vgrid, VgridEntry,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("rate {0} is outside [0, log|X|]")]
    BadRate(f64),
    #[error("input law of chunk {0} violates the input constraint")]
    InfeasibleInput(usize),
    #[error("composition error: {0}")]
    Composition(#[from] ModelError),
    #[error("message {0} out of range for {1} messages")]
    BadMessage(usize, usize),
    #[error("malformed codebook: {0}")]
    Format(String),
}

/// Desk-scale caps and decoder tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecConfig {
    /// `M` is capped at `2^max_message_bits`.
    pub max_message_bits: u32,
    /// `N` is capped at `2^max_seed_bits`.
    pub max_seed_bits: u32,
    /// ℓ∞ tolerance on chunk joint types; `None` means `2 / (nε)`.
    pub tol: Option<f64>,
    /// Entry resolution of the decoder's prefix jamming candidates.
    pub vgrid_resolution: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            max_message_bits: 10,
            max_seed_bits: 4,
            tol: None,
            vgrid_resolution: 0.05,
        }
    }
}

impl CodecConfig {
    pub fn tolerance(&self, chunk_len: usize) -> f64 {
        self.tol.unwrap_or(2.0 / chunk_len as f64)
    }
}
