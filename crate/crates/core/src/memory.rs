//! Append-only log of recorded memories.
//!
//! The store keeps every recorded memory in recording order together with an
//! exact count per distinct value. `N` is the number of records and `n(M)` the
//! count of value `M`; the neighborhood estimator averages counts over the
//! closed lattice ball whose radius is the distance to the `n`-th nearest
//! record.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bits::BitVector;
use crate::error::{domain, parse_err, Result};

pub const FILE_MAGIC: &str = "memstore v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRecord {
    pub seq: u64,
    pub vector: BitVector,
}

/// Number of recorded memories that define the neighborhood radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborhoodSpec {
    n: usize,
}

impl NeighborhoodSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("neighborhood size must be at least 1");
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        Self { n: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct MemoryStore {
    dim: usize,
    records: VecDeque<MemoryRecord>,
    counts: BTreeMap<BitVector, usize>,
    capacity: Option<usize>,
    next_seq: u64,
}

impl PartialEq for MemoryStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.records == other.records
    }
}

/// `Σ_{k=0}^{⌊r²⌋} C(d, k)`: lattice points of `{0,1}^d` within Euclidean
/// distance `radius` of any point of the hypercube. Saturates at `u128::MAX`.
pub fn lattice_ball_size(d_mem: usize, radius: f64) -> u128 {
    assert!(radius >= 0.0, "radius must be non-negative");
    // Squared distances between lattice points are integers; the slack absorbs
    // rounding in r = sqrt(k).
    let max_sq = (radius * radius + 1e-9).floor();
    let max_sq = if max_sq >= d_mem as f64 {
        d_mem
    } else {
        max_sq as usize
    };
    ball_size_sq(d_mem, max_sq)
}

/// Lattice points within squared distance `max_sq` (an integer).
pub(crate) fn ball_size_sq(d_mem: usize, max_sq: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for k in 0..=max_sq.min(d_mem) {
        total = total.saturating_add(binom);
        // C(d, k+1) = C(d, k) * (d - k) / (k + 1); exact while it fits.
        binom = match binom.checked_mul((d_mem - k) as u128) {
            Some(v) => v / (k as u128 + 1),
            None => u128::MAX,
        };
    }
    total
}

impl MemoryStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            records: VecDeque::new(),
            counts: BTreeMap::new(),
            capacity: None,
            next_seq: 1,
        }
    }

    /// A store that evicts its oldest record whenever a new one would exceed
    /// `capacity`.
    pub fn with_capacity(dim: usize, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return domain("capacity must be at least 1");
        }
        let mut s = Self::new(dim);
        s.capacity = Some(capacity);
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    /// Total number of records, `N`.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of distinct recorded values.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// `n(M)`.
    pub fn count(&self, m: &BitVector) -> usize {
        self.counts.get(m).copied().unwrap_or(0)
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &MemoryRecord> {
        self.records.iter()
    }

    /// Distinct values with their counts, in lexicographic order of value.
    pub fn counts(&self) -> impl Iterator<Item = (&BitVector, usize)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// The `k` most frequent values; ties resolved by value order.
    pub fn top_k(&self, k: usize) -> Vec<(BitVector, usize)> {
        let mut all: Vec<_> = self.counts.iter().map(|(m, &c)| (m.clone(), c)).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    /// Appends `m`, returning its sequence number.
    pub fn record(&mut self, m: BitVector) -> Result<u64> {
        m.ensure_dim(self.dim, "record")?;
        let seq = self.next_seq;
        self.next_seq += 1;
        *self.counts.entry(m.clone()).or_insert(0) += 1;
        self.records.push_back(MemoryRecord { seq, vector: m });
        if let Some(cap) = self.capacity {
            while self.records.len() > cap {
                self.evict_oldest();
            }
        }
        Ok(seq)
    }

    fn evict_oldest(&mut self) {
        if let Some(old) = self.records.pop_front() {
            let c = self
                .counts
                .get_mut(&old.vector)
                .expect("count index out of sync with records");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&old.vector);
            }
        }
    }

    /// Keeps only the `keep` most recent records.
    pub fn prune(&mut self, keep: usize) -> Result<()> {
        if keep == 0 {
            return domain("prune must keep at least one record");
        }
        while self.records.len() > keep {
            self.evict_oldest();
        }
        Ok(())
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.records.is_empty() {
            return domain("memory store is empty");
        }
        Ok(())
    }

    /// `n(M) / N`.
    pub fn exact_probability(&self, m: &BitVector) -> Result<f64> {
        self.ensure_nonempty()?;
        m.ensure_dim(self.dim, "query")?;
        Ok(self.count(m) as f64 / self.len() as f64)
    }

    /// Euclidean distances from `m` to every record, ascending.
    pub fn neighbor_distances(&self, m: &BitVector) -> Result<Vec<f64>> {
        self.ensure_nonempty()?;
        m.ensure_dim(self.dim, "query")?;
        let mut out = Vec::with_capacity(self.len());
        for (h, c) in self.hamming_histogram(m)? {
            out.extend(std::iter::repeat_n((h as f64).sqrt(), c));
        }
        Ok(out)
    }

    /// `(squared distance, record count)` pairs, ascending in distance.
    fn hamming_histogram(&self, m: &BitVector) -> Result<Vec<(usize, usize)>> {
        let mut hist = vec![0usize; self.dim + 1];
        for (key, &c) in &self.counts {
            hist[key.hamming(m)?] += c;
        }
        Ok(hist
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect())
    }

    /// Squared radius `d_n²` of the neighborhood and the number of records
    /// inside the closed ball of that radius.
    fn neighborhood(&self, m: &BitVector, spec: NeighborhoodSpec) -> Result<(usize, usize)> {
        m.ensure_dim(self.dim, "query")?;
        if self.len() < spec.n() {
            return domain(format!(
                "store holds {} records, neighborhood needs {}",
                self.len(),
                spec.n()
            ));
        }
        let mut inside = 0;
        for (h, c) in self.hamming_histogram(m)? {
            inside += c;
            if inside >= spec.n() {
                return Ok((h, inside));
            }
        }
        unreachable!("histogram covers all {} records", self.len())
    }

    /// Neighborhood-averaged probability: records in the closed ball of
    /// radius `d_n` divided by (lattice points in the ball × `N`).
    pub fn smoothed_probability(&self, m: &BitVector, spec: NeighborhoodSpec) -> Result<f64> {
        let (r_sq, inside) = self.neighborhood(m, spec)?;
        let ball = ball_size_sq(self.dim, r_sq) as f64;
        Ok(inside as f64 / (ball * self.len() as f64))
    }

    /// Radius `d_n` of the neighborhood around `m`.
    pub fn neighborhood_radius(&self, m: &BitVector, spec: NeighborhoodSpec) -> Result<f64> {
        Ok((self.neighborhood(m, spec)?.0 as f64).sqrt())
    }

    /// Writes the store in the line-oriented text format:
    /// a `memstore v1 dim=<d>` header, then one `seq<TAB>bits` line per record.
    pub fn save<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = BufWriter::new(sink);
        writeln!(w, "{FILE_MAGIC} dim={}", self.dim)?;
        for r in &self.records {
            writeln!(w, "{}\t{}", r.seq, r.vector)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a store file. Any defect aborts with the offending line number.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let mut reader = BufReader::new(source);
        let mut line = String::new();
        let mut lineno = 0usize;

        let mut next_line = |buf: &mut String, lineno: &mut usize| -> Result<bool> {
            buf.clear();
            let n = reader.read_line(buf)?;
            if n == 0 {
                return Ok(false);
            }
            *lineno += 1;
            if !buf.ends_with('\n') {
                return Err(parse_err(*lineno, "truncated line (missing LF terminator)"));
            }
            buf.pop();
            Ok(true)
        };

        if !next_line(&mut line, &mut lineno)? {
            return Err(parse_err(1, "missing header"));
        }
        let dim = line
            .strip_prefix(FILE_MAGIC)
            .and_then(|rest| rest.strip_prefix(" dim="))
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| parse_err(1, format!("bad header {line:?}")))?;

        let mut store = Self::new(dim);
        while next_line(&mut line, &mut lineno)? {
            let (seq, bits) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(lineno, "expected `seq<TAB>bits`"))?;
            let seq: u64 = seq
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad sequence number {seq:?}")))?;
            let vector: BitVector = bits
                .parse()
                .map_err(|e| parse_err(lineno, format!("{e}")))?;
            if vector.dim() != dim {
                return Err(parse_err(
                    lineno,
                    format!("record has {} bits, header says {dim}", vector.dim()),
                ));
            }
            if store.records.back().is_some_and(|r| r.seq >= seq) {
                return Err(parse_err(lineno, "sequence numbers must strictly increase"));
            }
            *store.counts.entry(vector.clone()).or_insert(0) += 1;
            store.records.push_back(MemoryRecord { seq, vector });
            store.next_seq = seq + 1;
        }
        Ok(store)
    }

    /// Writes to `path` through a temporary file and rename.
    pub fn save_to_path(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        self.save(fs::File::create(&tmp)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load_from_path(path: &Path) -> Result<Self> {
        Self::load(fs::File::open(path)?)
    }
}
