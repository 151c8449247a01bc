//! Synthetic event tables, seeded samplers and memory stacking.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::error::{domain, parse_err, Error, Result};
use crate::info::ProbDist;
use crate::memory::MemoryStore;

/// Largest dimension for which explicit lattice tables are built.
pub const MAX_TABLE_DIM: usize = 16;

pub const CARD_SUITS: [&str; 4] = ["spades", "hearts", "diamonds", "clubs"];
pub const CARD_RANKS: usize = 13;
pub const CARD_BITS: usize = 6;

/// Distinct events with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTable {
    pub events: Vec<BitVector>,
    pub dist: ProbDist,
    pub labels: Vec<String>,
}

impl EventTable {
    /// Table with default labels `E1, E2, ...`.
    pub fn new(events: Vec<BitVector>, dist: ProbDist) -> Result<Self> {
        let labels = (1..=events.len()).map(|i| format!("E{i}")).collect();
        Self::with_labels(events, dist, labels)
    }

    pub fn with_labels(
        events: Vec<BitVector>,
        dist: ProbDist,
        labels: Vec<String>,
    ) -> Result<Self> {
        if events.len() != dist.len() || labels.len() != events.len() {
            return domain("events, probabilities and labels must have equal length");
        }
        let dim = events[0].dim();
        if events.iter().any(|e| e.dim() != dim) {
            return domain("events must share one dimension");
        }
        let mut seen = HashSet::with_capacity(events.len());
        if let Some(dup) = events.iter().find(|e| !seen.insert(*e)) {
            return domain(format!("duplicate event {dup}"));
        }
        Ok(Self {
            events,
            dist,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.events[0].dim()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `P(e_j = 1)` for each bit position.
    pub fn marginals(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                crate::info::compensated_sum(
                    self.events
                        .iter()
                        .zip(self.dist.probs())
                        .filter(|(e, _)| e.get(j))
                        .map(|(_, &p)| p),
                )
            })
            .collect()
    }

    /// Empirical distribution of `samples` over the full lattice `{0,1}^dim`.
    pub fn from_samples_over_lattice(dim: usize, samples: &[BitVector]) -> Result<Self> {
        if dim > MAX_TABLE_DIM {
            return Err(Error::Refused(format!(
                "dimension {dim} exceeds {MAX_TABLE_DIM}"
            )));
        }
        if samples.is_empty() {
            return domain("no samples");
        }
        let mut counts = vec![0.0; 1 << dim];
        for s in samples {
            s.ensure_dim(dim, "sample")?;
            counts[s.to_index() as usize] += 1.0;
        }
        let events = (0..1u64 << dim)
            .map(|i| BitVector::from_index(i, dim))
            .collect();
        Self::new(events, ProbDist::from_weights(&counts)?)
    }

    /// Writes `bits,probability` rows after a header line.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["bits", "probability"]).map_err(csv_err)?;
        for (e, p) in self.events.iter().zip(self.dist.probs()) {
            w.write_record([e.to_string(), p.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `bits,probability` table. Errors carry the 1-based line number.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(source);
        let mut events = Vec::new();
        let mut probs = Vec::new();
        let mut last_line = 0;
        for (i, rec) in r.records().enumerate() {
            let line = i + 1;
            last_line = line;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            if rec.len() != 2 {
                return Err(parse_err(
                    line,
                    format!("expected 2 fields, got {}", rec.len()),
                ));
            }
            if line == 1 && &rec[0] == "bits" {
                continue;
            }
            let bits: BitVector = rec[0]
                .parse()
                .map_err(|e: Error| parse_err(line, e.to_string()))?;
            let p: f64 = rec[1]
                .parse()
                .map_err(|_| parse_err(line, format!("bad probability {:?}", &rec[1])))?;
            events.push(bits);
            probs.push(p);
        }
        if events.is_empty() {
            return Err(parse_err(last_line.max(1), "table has no rows"));
        }
        let dist = ProbDist::new(probs).map_err(|e| parse_err(last_line, e.to_string()))?;
        Self::new(events, dist).map_err(|e| parse_err(last_line, e.to_string()))
    }
}

/// `(0,0), (0,1), (1,0), (1,1)` with probabilities `0.6, 0.1, 0.1, 0.2`.
pub fn four_state_table() -> EventTable {
    let events = (0..4).map(|i| BitVector::from_index(i, 2)).collect();
    EventTable::new(
        events,
        ProbDist::new(vec![0.6, 0.1, 0.1, 0.2]).expect("valid"),
    )
    .expect("valid")
}

/// 52 equiprobable cards as 6-bit big-endian indices; suits occupy blocks of
/// 13 consecutive indices in the order of [`CARD_SUITS`].
pub fn playing_cards_table() -> EventTable {
    const RANKS: [&str; 13] = [
        "A", "2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K",
    ];
    let events = (0..52)
        .map(|i| BitVector::from_index(i, CARD_BITS))
        .collect();
    let labels = (0..52)
        .map(|i| {
            format!(
                "{} of {}",
                RANKS[i % CARD_RANKS],
                CARD_SUITS[i / CARD_RANKS]
            )
        })
        .collect();
    EventTable::with_labels(events, ProbDist::uniform(52).expect("valid"), labels).expect("valid")
}

/// Suit of a card index.
pub fn card_suit(card: usize) -> usize {
    card / CARD_RANKS
}

/// The "remember only the suit" memory map: card index → suit index.
pub fn suit_coarsening() -> Vec<usize> {
    (0..52).map(card_suit).collect()
}

/// All `2^dim` bit vectors, where with probability `coupling` every bit copies
/// one fair hidden bit and otherwise the bits are independent and fair.
pub fn correlated_bits_table(dim: usize, coupling: f64) -> Result<EventTable> {
    if dim == 0 {
        return domain("dimension must be positive");
    }
    if dim > MAX_TABLE_DIM {
        return Err(Error::Refused(format!(
            "dimension {dim} exceeds {MAX_TABLE_DIM}"
        )));
    }
    if !(0.0..=1.0).contains(&coupling) {
        return domain(format!("coupling must lie in [0, 1], got {coupling}"));
    }
    let n = 1u64 << dim;
    let base = (1.0 - coupling) / n as f64;
    let probs = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                base + coupling / 2.0
            } else {
                base
            }
        })
        .collect();
    let events = (0..n).map(|i| BitVector::from_index(i, dim)).collect();
    EventTable::new(events, ProbDist::new(probs)?)
}

/// Seeded i.i.d. sampler over an event table.
#[derive(Debug, Clone)]
pub struct SampleStream {
    table: EventTable,
    index: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(table: EventTable, seed: u64) -> Result<Self> {
        let index = WeightedIndex::new(table.dist.probs())
            .map_err(|e| Error::Domain(format!("cannot sample table: {e}")))?;
        Ok(Self {
            table,
            index,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Sampler on stream `stream` of the ChaCha generator for `seed`; distinct
    /// streams are independent and individually reproducible.
    pub fn with_stream(table: EventTable, seed: u64, stream: u64) -> Result<Self> {
        let mut s = Self::new(table, seed)?;
        s.rng.set_stream(stream);
        Ok(s)
    }

    pub fn table(&self) -> &EventTable {
        &self.table
    }

    pub fn next_index(&mut self) -> usize {
        self.index.sample(&mut self.rng)
    }

    pub fn sample(&mut self, count: usize) -> Vec<BitVector> {
        (0..count)
            .map(|_| {
                let i = self.next_index();
                self.table.events[i].clone()
            })
            .collect()
    }
}

/// Concatenates the `aligned_index`-th record of each store into one input
/// vector for a second-stage codec.
pub fn stack_memories_as_input(stores: &[&MemoryStore], aligned_index: usize) -> Result<BitVector> {
    let Some(first) = stores.first() else {
        return domain("no stores to stack");
    };
    if stores.iter().any(|s| s.len() != first.len()) {
        return domain("stores must hold the same number of records");
    }
    if aligned_index >= first.len() {
        return domain(format!(
            "index {aligned_index} out of range for {} records",
            first.len()
        ));
    }
    let mut out = BitVector::zeros(0);
    for s in stores {
        let rec = s.records().nth(aligned_index).expect("index checked");
        out = out.concat(&rec.vector);
    }
    Ok(out)
}

/// Empirical frequencies of `samples` keyed by value.
pub fn tally(samples: &[BitVector]) -> BTreeMap<BitVector, usize> {
    let mut out = BTreeMap::new();
    for s in samples {
        *out.entry(s.clone()).or_insert(0) += 1;
    }
    out
}
