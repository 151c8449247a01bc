//! Encoder/decoder pairs mapping inputs to discrete memories and memories to
//! per-node Bernoulli predictions of the input.

mod mlp;
mod quantize;
mod tabular;

pub use mlp::{Activation, Dense, EncoderTrace, MlpCodec, MlpGrads, CODEC_MAGIC};
pub use quantize::{quantize_with_gradient, sigmoid, Quantized, PASS_WINDOW};
pub(crate) use tabular::index_memories;
pub use tabular::{optimal_tabular_decoder, TabularCodec};

use crate::bits::BitVector;
use crate::error::{domain, Result};

/// Common interface of the tabular and multilayer codecs.
pub trait Codec {
    fn d_in(&self) -> usize;
    fn d_mem(&self) -> usize;
    /// Deterministic map from an input to its memory.
    fn encode(&self, e: &BitVector) -> Result<BitVector>;
    /// Probability that each input node is 1, given the memory.
    fn decode_probs(&self, m: &BitVector) -> Result<Vec<f64>>;
}

/// `Π_j (p_j if e_j = 1 else 1 − p_j)`.
pub fn conditional_likelihood(probs: &[f64], e: &BitVector) -> Result<f64> {
    if probs.len() != e.dim() {
        return domain(format!(
            "decoder has {} nodes, input has {}",
            probs.len(),
            e.dim()
        ));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return domain("decoder probabilities must lie in [0, 1]");
    }
    Ok(probs
        .iter()
        .zip(e.iter())
        .map(|(&p, bit)| if bit { p } else { 1.0 - p })
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn likelihood_examples() {
        let e: BitVector = "010".parse().unwrap();
        let l = conditional_likelihood(&[0.1, 0.9, 0.2], &e).unwrap();
        assert!((l - 0.648).abs() < 1e-12);
        assert_eq!(conditional_likelihood(&e.to_f64(), &e).unwrap(), 1.0);
        let l = conditional_likelihood(&[0.3, 0.3], &"11".parse().unwrap()).unwrap();
        assert!((l - 0.09).abs() < 1e-12);
        assert!(conditional_likelihood(&[0.3], &e).is_err());
        assert!(conditional_likelihood(&[0.3, 1.2, 0.0], &e).is_err());
    }

    #[test]
    fn likelihood_normalizes_over_inputs() {
        let probs = [0.1, 0.75, 0.5, 0.0, 1.0, 0.33, 0.9];
        let total: f64 = (0..1u64 << probs.len())
            .map(|i| {
                conditional_likelihood(&probs, &BitVector::from_index(i, probs.len())).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
