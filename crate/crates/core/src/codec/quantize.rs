use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Half-width of the window around 0.5 where the straight-through estimator
/// passes gradients; outside it the gradient is zero.
pub const PASS_WINDOW: f64 = 0.49;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

/// Result of squashing and thresholding a middle-layer pre-activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub squashed: Vec<f64>,
    pub bits: BitVector,
}

/// Forward pass of the discrete middle layer: `s = sigmoid(z)`, bit = `s ≥ 0.5`.
pub fn quantize_with_gradient(pre_activations: &[f64]) -> Result<Quantized> {
    if let Some(z) = pre_activations.iter().find(|z| !z.is_finite()) {
        return Err(Error::Numeric(format!("non-finite pre-activation {z}")));
    }
    let squashed: Vec<f64> = pre_activations.iter().map(|&z| sigmoid(z)).collect();
    let bits = BitVector::from_bools(&squashed.iter().map(|&s| s >= 0.5).collect::<Vec<_>>());
    Ok(Quantized { squashed, bits })
}

impl Quantized {
    /// Clipped straight-through: maps a gradient with respect to the bits to a
    /// gradient with respect to the squashed values.
    pub fn backward_to_squashed(&self, grad_bits: &[f64]) -> Vec<f64> {
        assert_eq!(grad_bits.len(), self.squashed.len());
        self.squashed
            .iter()
            .zip(grad_bits)
            .map(|(&s, &g)| {
                if (s - 0.5).abs() < PASS_WINDOW {
                    g
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Chains a gradient with respect to the squashed values through the
    /// sigmoid to the pre-activations.
    pub fn squashed_to_pre(&self, grad_squashed: &[f64]) -> Vec<f64> {
        self.squashed
            .iter()
            .zip(grad_squashed)
            .map(|(&s, &g)| g * s * (1.0 - s))
            .collect()
    }
}
