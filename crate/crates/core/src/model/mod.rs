//! Probability primitives, method-of-types utilities and the channel data model.

mod avc;
mod dist;
mod scheme;
mod transcript;
mod types;

pub use avc::{
    validate_avc, AvcSpec, CellSpec, ConstraintOp, ConstraintRow, Halfspace, RawChannel,
    StateConstraintRow, ValidationError, Violation,
};
pub(crate) use dist::linf;
pub use dist::{CondDist, Dist, SIMPLEX_TOL};
pub use scheme::{ChunkScheme, SlackSchedule};
pub use transcript::Transcript;
pub use types::{
    empirical_joint_type, empirical_type, quantize_to_type, sample_type_class, TypeCounts,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("not a probability vector: {0}")]
    NotADistribution(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("composition {probs:?} times length {length} is not integral")]
    NonIntegerComposition { probs: Vec<f64>, length: usize },
    #[error("alpha = {0}/{1} is not on the chunk grid")]
    AlphaNotOnGrid(usize, usize),
    #[error("invalid chunk scheme: {0}")]
    BadScheme(String),
    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
}
