use std::collections::HashMap;

use super::Codec;
use crate::bits::BitVector;
use crate::error::{domain, Result};
use crate::info::{compensated_sum, ProbDist};

/// Explicit event → memory table with per-memory Bernoulli decoder rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularCodec {
    events: Vec<BitVector>,
    memories: Vec<BitVector>,
    encode_map: Vec<usize>,
    decode_probs: Vec<Vec<f64>>,
    lookup: HashMap<BitVector, usize>,
}

impl TabularCodec {
    pub fn new(
        events: Vec<BitVector>,
        memories: Vec<BitVector>,
        encode_map: Vec<usize>,
        decode_probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if events.is_empty() || memories.is_empty() {
            return domain("tabular codec needs at least one event and one memory");
        }
        let d_in = events[0].dim();
        let d_mem = memories[0].dim();
        if events.iter().any(|e| e.dim() != d_in) {
            return domain("events must share one dimension");
        }
        if memories.iter().any(|m| m.dim() != d_mem) {
            return domain("memories must share one dimension");
        }
        if encode_map.len() != events.len() {
            return domain(format!(
                "encode map has {} entries for {} events",
                encode_map.len(),
                events.len()
            ));
        }
        if let Some(&bad) = encode_map.iter().find(|&&m| m >= memories.len()) {
            return domain(format!("memory index {bad} out of range"));
        }
        if decode_probs.len() != memories.len() {
            return domain("one decoder row per memory is required");
        }
        for row in &decode_probs {
            if row.len() != d_in {
                return domain("decoder row width must equal the input dimension");
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return domain("decoder probabilities must lie in [0, 1]");
            }
        }
        let mut lookup = HashMap::with_capacity(events.len());
        for (i, e) in events.iter().enumerate() {
            if lookup.insert(e.clone(), i).is_some() {
                return domain(format!("duplicate event {e}"));
            }
        }
        Ok(Self {
            events,
            memories,
            encode_map,
            decode_probs,
            lookup,
        })
    }

    /// Each event is its own memory and is reconstructed exactly.
    pub fn identity(events: Vec<BitVector>) -> Result<Self> {
        let n = events.len();
        let decode = events.iter().map(BitVector::to_f64).collect();
        Self::new(events.clone(), events, (0..n).collect(), decode)
    }

    /// Builds the codec for `encode_map` with the decoder that is optimal
    /// under `dist`. Memories are labelled by the binary form of their index.
    pub fn with_optimal_decoder(
        events: Vec<BitVector>,
        dist: &ProbDist,
        encode_map: Vec<usize>,
        num_memories: usize,
    ) -> Result<Self> {
        let decode = optimal_tabular_decoder(&encode_map, dist, &events, num_memories)?;
        Self::new(events, index_memories(num_memories), encode_map, decode)
    }

    pub fn events(&self) -> &[BitVector] {
        &self.events
    }

    pub fn memories(&self) -> &[BitVector] {
        &self.memories
    }

    pub fn encode_map(&self) -> &[usize] {
        &self.encode_map
    }

    pub fn decoder_rows(&self) -> &[Vec<f64>] {
        &self.decode_probs
    }

    pub fn num_memories(&self) -> usize {
        self.memories.len()
    }

    pub fn event_index(&self, e: &BitVector) -> Result<usize> {
        self.lookup
            .get(e)
            .copied()
            .ok_or_else(|| crate::Error::Domain(format!("unknown event {e}")))
    }

    /// Memory index assigned to `e`.
    pub fn memory_index(&self, e: &BitVector) -> Result<usize> {
        Ok(self.encode_map[self.event_index(e)?])
    }

    pub fn memory_position(&self, m: &BitVector) -> Result<usize> {
        m.ensure_dim(self.d_mem(), "memory")?;
        self.memories
            .iter()
            .position(|x| x == m)
            .ok_or_else(|| crate::Error::Domain(format!("unknown memory {m}")))
    }
}

impl Codec for TabularCodec {
    fn d_in(&self) -> usize {
        self.events[0].dim()
    }

    fn d_mem(&self) -> usize {
        self.memories[0].dim()
    }

    fn encode(&self, e: &BitVector) -> Result<BitVector> {
        e.ensure_dim(self.d_in(), "encode")?;
        Ok(self.memories[self.memory_index(e)?].clone())
    }

    fn decode_probs(&self, m: &BitVector) -> Result<Vec<f64>> {
        Ok(self.decode_probs[self.memory_position(m)?].clone())
    }
}

/// `k` distinct memory labels: the big-endian binary forms of `0..k`.
pub(crate) fn index_memories(k: usize) -> Vec<BitVector> {
    let dim = (usize::BITS - k.saturating_sub(1).leading_zeros()).max(1) as usize;
    (0..k as u64)
        .map(|i| BitVector::from_index(i, dim))
        .collect()
}

/// Decoder rows minimizing the expected reconstruction loss for a fixed
/// encode map: `p_j(M) = P(e_j = 1 | encode(e) = M)` under `dist`. Memories
/// that receive no mass decode to 0.5 on every node.
pub fn optimal_tabular_decoder(
    encode_map: &[usize],
    dist: &ProbDist,
    events: &[BitVector],
    num_memories: usize,
) -> Result<Vec<Vec<f64>>> {
    if encode_map.len() != events.len() || dist.len() != events.len() {
        return domain("encode map, distribution and events must have equal length");
    }
    let d_in = events.first().map_or(0, BitVector::dim);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_memories];
    for (i, &m) in encode_map.iter().enumerate() {
        if m >= num_memories {
            return domain(format!("memory index {m} out of range"));
        }
        members[m].push(i);
    }
    let p = dist.probs();
    Ok(members
        .iter()
        .map(|idx| {
            let mass = compensated_sum(idx.iter().map(|&i| p[i]));
            if mass == 0.0 {
                return vec![0.5; d_in];
            }
            (0..d_in)
                .map(|j| {
                    let ones =
                        compensated_sum(idx.iter().filter(|&&i| events[i].get(j)).map(|&i| p[i]));
                    (ones / mass).min(1.0)
                })
                .collect()
        })
        .collect())
}
