//! The compression loss `−(1+α)·ln 𝓟(M) − (1+β)·ln 𝓟(E|M)` and its
//! expectation under an explicit input distribution.

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::codec::{conditional_likelihood, Codec, TabularCodec};
use crate::error::{domain, Result};
use crate::info::{compensated_sum, entropy, ProbDist};
use crate::memory::{MemoryStore, NeighborhoodSpec};

/// Tolerance on the agreement between supplied memory probabilities and the
/// pushforward of the input distribution.
pub const PUSHFORWARD_TOL: f64 = 1e-9;

/// Non-negative weights on the memory (`alpha`) and reconstruction (`beta`)
/// terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = Self { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite()
            && self.beta.is_finite()
            && self.alpha >= 0.0
            && self.beta >= 0.0)
        {
            return domain(format!(
                "loss weights must be finite and non-negative, got ({}, {})",
                self.alpha, self.beta
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// `−(1+α)·ln 𝓟(M)`
    pub memory_term: f64,
    /// `−(1+β)·ln 𝓟(E|M)`
    pub reconstruction_term: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub const ZERO: Self = Self {
        memory_term: 0.0,
        reconstruction_term: 0.0,
        total: 0.0,
    };

    pub(crate) fn from_terms(memory_term: f64, reconstruction_term: f64) -> Self {
        Self {
            memory_term,
            reconstruction_term,
            total: memory_term + reconstruction_term,
        }
    }
}

/// `weight · (−ln p)`, with `p = 0` giving `+∞`. `+ 0.0` folds `−0` into `0`.
fn weighted_surprise(p: f64, weight: f64) -> f64 {
    if p == 0.0 {
        f64::INFINITY
    } else {
        weight * -p.ln() + 0.0
    }
}

fn check_estimate(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("{what} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

/// Per-sample weighted loss. A zero probability yields an infinite term
/// rather than an error.
pub fn sample_loss(
    p_memory: f64,
    p_event_given_memory: f64,
    w: LossWeights,
) -> Result<LossBreakdown> {
    check_estimate(p_memory, "𝓟(M)")?;
    check_estimate(p_event_given_memory, "𝓟(E|M)")?;
    w.validate()?;
    Ok(LossBreakdown::from_terms(
        weighted_surprise(p_memory, 1.0 + w.alpha),
        weighted_surprise(p_event_given_memory, 1.0 + w.beta),
    ))
}

/// Memory-index distribution induced by pushing `dist` through the codec.
pub fn pushforward_memory_probs(
    codec: &TabularCodec,
    dist: &ProbDist,
    events: &[BitVector],
) -> Result<ProbDist> {
    if events.len() != dist.len() {
        return domain("events and distribution differ in length");
    }
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); codec.num_memories()];
    for (e, &p) in events.iter().zip(dist.probs()) {
        buckets[codec.memory_index(e)?].push(p);
    }
    ProbDist::new(
        buckets
            .into_iter()
            .map(|b| compensated_sum(b).min(1.0))
            .collect(),
    )
}

/// Expected weighted loss `Σ_E P(E)·𝓛(E; α, β)` for a tabular codec whose
/// memory probabilities are exact (no neighborhood smoothing).
pub fn expected_loss(
    codec: &TabularCodec,
    dist: &ProbDist,
    events: &[BitVector],
    memory_probs: &ProbDist,
    w: LossWeights,
) -> Result<f64> {
    let push = pushforward_memory_probs(codec, dist, events)?;
    if push.len() != memory_probs.len()
        || push
            .probs()
            .iter()
            .zip(memory_probs.probs())
            .any(|(a, b)| (a - b).abs() > PUSHFORWARD_TOL)
    {
        return domain(
            "memory probabilities are inconsistent with the pushed-forward distribution",
        );
    }
    let mut terms = Vec::with_capacity(events.len());
    for (e, &p) in events.iter().zip(dist.probs()) {
        if p == 0.0 {
            continue;
        }
        let m = codec.memory_index(e)?;
        let rows = codec.decoder_rows();
        let lik = conditional_likelihood(&rows[m], e)?;
        terms.push(p * sample_loss(memory_probs.probs()[m], lik, w)?.total);
    }
    Ok(compensated_sum(terms))
}

/// Per-sample loss against a memory store: `𝓟(M)` from the neighborhood
/// estimator, `𝓟(E|M)` from the codec's decoder.
pub fn empirical_loss<C: Codec>(
    codec: &C,
    store: &MemoryStore,
    spec: NeighborhoodSpec,
    e: &BitVector,
    w: LossWeights,
) -> Result<LossBreakdown> {
    let m = codec.encode(e)?;
    let p_m = store.smoothed_probability(&m, spec)?;
    let lik = conditional_likelihood(&codec.decode_probs(&m)?, e)?;
    sample_loss(p_m, lik, w)
}

/// `𝓛|exp − H(E)` for the unweighted loss; non-negative up to rounding.
pub fn info_gap(
    dist: &ProbDist,
    events: &[BitVector],
    codec: &TabularCodec,
    memory_probs: &ProbDist,
) -> Result<f64> {
    Ok(expected_loss(codec, dist, events, memory_probs, LossWeights::default())? - entropy(dist))
}
