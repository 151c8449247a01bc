//! Information measures over finite distributions, in nats.
//!
//! All sums run in ascending event-id order with Neumaier compensation, so
//! results are reproducible to the last bit for a given input ordering.

use crate::error::{domain, Result};

/// Tolerance on `|Σp − 1|` accepted by [`ProbDist::new`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Compensated (Neumaier) summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A finite probability distribution indexed by event id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return domain("distribution must have at least one event");
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return domain(format!(
                "probability {i} is {p}, expected a finite value >= 0"
            ));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return domain(format!("probabilities sum to {total}, expected 1"));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return domain("weights must be finite and non-negative");
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return domain("weights sum to zero");
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("uniform distribution over zero events");
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return domain(format!("{what} must lie in (0, 1], got {p}"));
    }
    Ok(())
}

/// `−ln p`.
pub fn self_information(p: f64) -> Result<f64> {
    check_probability(p, "probability")?;
    Ok(-p.ln())
}

/// `p · ln q` with the `0 · ln 0 = 0` convention.
pub(crate) fn xlogy(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * q.ln()
    }
}

pub fn entropy(d: &ProbDist) -> f64 {
    -compensated_sum(d.probs.iter().map(|&p| xlogy(p, p)))
}

/// `ln n`, the entropy of the uniform distribution over `n` events.
pub fn max_entropy(num_events: usize) -> Result<f64> {
    if num_events == 0 {
        return domain("max_entropy requires at least one event");
    }
    Ok((num_events as f64).ln())
}

/// `H_max − H`.
pub fn redundancy(d: &ProbDist) -> f64 {
    // ln n - H is non-negative mathematically; rounding can leave -1 ulp.
    (max_entropy(d.len()).expect("non-empty") - entropy(d)).max(0.0)
}

/// `−Σ p_i ln q_i`; `+∞` if `q` puts zero mass where `p` does not.
pub fn cross_entropy(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    if p.len() != q.len() {
        return domain(format!("support size mismatch: {} vs {}", p.len(), q.len()));
    }
    if p.probs
        .iter()
        .zip(&q.probs)
        .any(|(&a, &b)| a > 0.0 && b == 0.0)
    {
        return Ok(f64::INFINITY);
    }
    Ok(-compensated_sum(
        p.probs.iter().zip(&q.probs).map(|(&a, &b)| xlogy(a, b)),
    ))
}

/// `KL(p‖q) = cross_entropy(p, q) − entropy(p)`.
pub fn kl_divergence(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    Ok(cross_entropy(p, q)? - entropy(p))
}

/// Tolerance on `|P(E) − P(M)·P(E|M)|` accepted by [`conservation_check`].
pub const FACTORIZATION_TOL: f64 = 1e-12;

/// Residual `|I(E) − (I(M) + L)|` for a factorized triple
/// `P(E) = P(M)·P(E|M)`, where `L = −ln P(E|M)` is the information lost by
/// keeping only the memory.
pub fn conservation_check(p_event: f64, p_memory: f64, p_event_given_memory: f64) -> Result<f64> {
    check_probability(p_event, "P(E)")?;
    check_probability(p_memory, "P(M)")?;
    check_probability(p_event_given_memory, "P(E|M)")?;
    let product = p_memory * p_event_given_memory;
    if (p_event - product).abs() > FACTORIZATION_TOL {
        return domain(format!(
            "P(E) = {p_event} does not factor as P(M)·P(E|M) = {product}"
        ));
    }
    let i_e = self_information(p_event)?;
    let i_m = self_information(p_memory)?;
    let lost = self_information(p_event_given_memory)?;
    Ok((i_e - (i_m + lost)).abs())
}
