//! Memory-augmented autoencoder with an information-theoretic compression
//! loss.
//!
//! An input `E` is encoded into a discrete memory `M`, every memory is
//! recorded to an append-only [`memory::MemoryStore`], and the loss
//!
//! ```text
//! 𝓛(E; α, β) = −(1+α)·ln 𝓟(M) − (1+β)·ln 𝓟(E|M)
//! ```
//!
//! charges for the information kept in the memory plus the information lost
//! by keeping only the memory. Its expectation is bounded below by the
//! entropy of the input.
//!
//! - [`info`]: entropy, redundancy, cross-entropy, conservation identity
//! - [`memory`]: memory log, frequency counts, neighborhood estimator
//! - [`codec`]: tabular and multilayer codecs, Bernoulli decoder likelihood
//! - [`loss`]: per-sample and expected weighted loss
//! - [`oracle`]: exhaustive minimization over tabular codecs
//! - [`trainer`]: streaming gradient training of the multilayer codec
//! - [`datasets`]: event tables and seeded samplers
//! - [`cli`]: the `memcode` command-line experiments

pub mod bits;
pub mod cli;
pub mod codec;
pub mod datasets;
mod error;
pub mod info;
pub mod loss;
pub mod memory;
pub mod oracle;
pub mod trainer;

pub use bits::BitVector;
pub use error::{Error, Result};
pub use info::ProbDist;
pub use loss::{LossBreakdown, LossWeights};
pub use memory::{MemoryStore, NeighborhoodSpec};
