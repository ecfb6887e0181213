//! Capacity evaluation and coding/jamming simulation for causal arbitrarily
//! varying channels with deterministic state-dependent laws.
//!
//! All information quantities are in bits. Chunk division points α are
//! represented as prefix chunk counts `a` with `α = a / K`.

pub mod acceptance;
pub mod adversary;
pub mod capacity;
pub mod codec;
pub mod config;
pub mod geometry;
pub mod harness;
pub mod info;
pub mod lp;
pub mod model;

pub use model::{AvcSpec, ChunkScheme, CondDist, Dist, SlackSchedule, Transcript};
