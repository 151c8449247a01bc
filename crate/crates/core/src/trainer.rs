//! Streaming gradient training of [`MlpCodec`] against the weighted
//! compression loss.
//!
//! The reported loss uses the exact neighborhood estimator for `𝓟(M)`. That
//! estimator is piecewise constant, so gradients come from a Gaussian-kernel
//! density over the recorded memories evaluated at the squashed (pre-threshold)
//! middle layer. Reconstruction gradients reach the encoder through the
//! clipped straight-through estimator.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::codec::{conditional_likelihood, Activation, Codec, EncoderTrace, MlpCodec, MlpGrads};
use crate::datasets::{EventTable, SampleStream};
use crate::error::{domain, parse_err, Error, Result};
use crate::info::compensated_sum;
use crate::loss::{sample_loss, LossBreakdown, LossWeights};
use crate::memory::{MemoryStore, NeighborhoodSpec};
use crate::oracle::{self, OracleProblem};

/// Decoder outputs are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` inside
/// training losses.
pub const PROB_CLAMP: f64 = 1e-7;

/// Middle-layer activations closer than this to 0.5 make a gradient check
/// unreliable.
pub const THRESHOLD_MARGIN: f64 = 1e-3;

/// Search spaces up to this size get an oracle comparison in the report.
const ORACLE_REPORT_LIMIT: u128 = 1_000_000;

/// Whether a sample's memory is recorded before or after its loss is
/// evaluated against the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RecordOrder {
    #[default]
    EvaluateThenRecord,
    RecordThenEvaluate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub neighborhood_n: usize,
    pub surrogate_bandwidth: f64,
    #[serde(default)]
    pub memory_capacity: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub record_order: RecordOrder,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.01,
            learning_rate: 0.2,
            epochs: 20,
            samples_per_epoch: 1000,
            neighborhood_n: 1,
            surrogate_bandwidth: 4.0,
            memory_capacity: Some(2000),
            seed: 0,
            record_order: RecordOrder::EvaluateThenRecord,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights()?;
        if !(self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.learning_rate <= 1.0)
        {
            return domain("learning_rate must lie in (0, 1]");
        }
        if !(self.surrogate_bandwidth.is_finite() && self.surrogate_bandwidth > 0.0) {
            return domain("surrogate_bandwidth must be positive");
        }
        if self.neighborhood_n == 0 {
            return domain("neighborhood_n must be at least 1");
        }
        if self.memory_capacity == Some(0) {
            return domain("memory_capacity must be at least 1");
        }
        Ok(())
    }

    pub fn weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.alpha, self.beta)
    }

    pub fn neighborhood(&self) -> NeighborhoodSpec {
        NeighborhoodSpec::new(self.neighborhood_n.max(1)).expect("positive")
    }
}

/// Architecture of the trained codec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d_mem: usize,
    #[serde(default)]
    pub encoder_hidden: Vec<usize>,
    #[serde(default)]
    pub decoder_hidden: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_mem: 3,
            encoder_hidden: vec![8],
            decoder_hidden: vec![8],
            activation: Activation::Tanh,
        }
    }
}

impl ModelConfig {
    /// Codec initialized from stream 0 of the seed's ChaCha generator.
    pub fn build(&self, d_in: usize, seed: u64) -> Result<MlpCodec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        MlpCodec::new(
            d_in,
            self.d_mem,
            &self.encoder_hidden,
            &self.decoder_hidden,
            self.activation,
            &mut rng,
        )
    }
}

/// Kernel density of the recorded memories at a point `a` of the unit cube,
/// normalized so that it tends to `n(M)/N` at lattice points as the bandwidth
/// shrinks. Returns `ln` of the density and its gradient with respect to `a`.
pub fn log_density_surrogate(
    store: &MemoryStore,
    a: &[f64],
    bandwidth: f64,
) -> Result<(f64, Vec<f64>)> {
    if store.is_empty() {
        return domain("density surrogate needs a non-empty store");
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return domain("bandwidth must be positive");
    }
    if a.len() != store.dim() {
        return domain(format!(
            "point has dimension {}, store has {}",
            a.len(),
            store.dim()
        ));
    }
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    // log-weights ln n(M) − ‖a − M‖²/(2b²), reduced with log-sum-exp
    let entries: Vec<(Vec<f64>, f64)> = store
        .counts()
        .map(|(m, c)| {
            let m = m.to_f64();
            let sq: f64 = a.iter().zip(&m).map(|(x, y)| (x - y) * (x - y)).sum();
            ((m), (c as f64).ln() - sq * inv)
        })
        .collect();
    let top = entries
        .iter()
        .map(|e| e.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = entries.iter().map(|e| (e.1 - top).exp()).collect();
    let wsum = compensated_sum(weights.iter().copied());
    // Lattice normalizer Σ_X exp(−‖X − M‖²/2b²) = (1 + e^{−1/2b²})^d.
    let log_z = store.dim() as f64 * (-inv).exp().ln_1p();
    let log_density = top + wsum.ln() - (store.len() as f64).ln() - log_z;

    let mut grad = vec![0.0; a.len()];
    for ((m, _), w) in entries.iter().zip(&weights) {
        let w = w / wsum;
        for (g, (x, y)) in grad.iter_mut().zip(a.iter().zip(m)) {
            *g -= w * (x - y) * 2.0 * inv;
        }
    }
    Ok((log_density, grad))
}

/// The kernel density estimate itself.
pub fn density_surrogate(store: &MemoryStore, a: &[f64], bandwidth: f64) -> Result<f64> {
    Ok(log_density_surrogate(store, a, bandwidth)?.0.exp())
}

/// How gradients cross the binary middle layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Clipped straight-through estimator, used for training.
    StraightThrough,
    /// The true derivative: zero through the threshold. Used to validate the
    /// backward pass against finite differences.
    Exact,
}

/// Differentiable training loss of one sample and its parameter gradient.
#[derive(Debug, Clone)]
pub struct LossGradient {
    pub loss: f64,
    pub memory_term: f64,
    pub reconstruction_term: f64,
    pub grads: MlpGrads,
    pub encoder: EncoderTrace,
}

fn memory_term_active(store: &MemoryStore, config: &TrainConfig) -> bool {
    store.len() >= config.neighborhood_n
}

/// Surrogate loss `−(1+α)·ln density(a) − (1+β)·ln clamp(𝓟(E|M))` and its
/// gradient. The memory term is zero while the store holds fewer than
/// `neighborhood_n` records.
pub fn loss_and_gradient(
    codec: &MlpCodec,
    store: &MemoryStore,
    e: &BitVector,
    config: &TrainConfig,
    mode: GradientMode,
) -> Result<LossGradient> {
    let w = config.weights()?;
    let enc = codec.encode_trace(e)?;
    let mut grads = codec.zero_grads();
    let d_mem = codec.d_mem();

    let mut grad_squashed = vec![0.0; d_mem];
    let mut memory_term = 0.0;
    if memory_term_active(store, config) {
        let (log_d, g) =
            log_density_surrogate(store, &enc.quantized.squashed, config.surrogate_bandwidth)?;
        memory_term = -(1.0 + w.alpha) * log_d;
        for (gs, gi) in grad_squashed.iter_mut().zip(g) {
            *gs -= (1.0 + w.alpha) * gi;
        }
    }

    let dec = codec.decode_trace(&enc.quantized.bits)?;
    if dec.probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite decoder output on input {e}; step rejected"
        )));
    }
    let mut log_lik = 0.0;
    let mut grad_out = vec![0.0; codec.d_in()];
    for (j, (&o, bit)) in dec.probs.iter().zip(e.iter()).enumerate() {
        let clamped = o.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        log_lik += if bit {
            clamped.ln()
        } else {
            (1.0 - clamped).ln()
        };
        if clamped == o {
            // d/dz of −ln σ(z) or −ln(1 − σ(z))
            grad_out[j] = (1.0 + w.beta) * (o - if bit { 1.0 } else { 0.0 });
        }
    }
    let reconstruction_term = -(1.0 + w.beta) * log_lik;
    let grad_bits = codec.backward_decoder(&dec, &grad_out, &mut grads);
    if mode == GradientMode::StraightThrough {
        for (gs, g) in grad_squashed
            .iter_mut()
            .zip(enc.quantized.backward_to_squashed(&grad_bits))
        {
            *gs += g;
        }
    }
    let grad_pre = enc.quantized.squashed_to_pre(&grad_squashed);
    codec.backward_encoder(&enc, &grad_pre, &mut grads);

    Ok(LossGradient {
        loss: memory_term + reconstruction_term,
        memory_term,
        reconstruction_term,
        grads,
        encoder: enc,
    })
}

/// Loss reported for a sample: exact neighborhood estimate of `𝓟(M)` and the
/// clamped decoder likelihood.
pub fn reported_loss(
    codec: &MlpCodec,
    store: &MemoryStore,
    e: &BitVector,
    memory: &BitVector,
    config: &TrainConfig,
) -> Result<LossBreakdown> {
    let w = config.weights()?;
    let p_m = if memory_term_active(store, config) {
        store.smoothed_probability(memory, config.neighborhood())?
    } else {
        1.0
    };
    let probs: Vec<f64> = codec
        .decode_probs(memory)?
        .into_iter()
        .map(|p| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect();
    let lik = conditional_likelihood(&probs, e)?;
    sample_loss(p_m, lik, w)
}

/// One streaming update: evaluate, take a gradient step, record the memory.
/// A non-finite loss or gradient rejects the step and leaves codec and store
/// untouched.
pub fn train_step(
    codec: &mut MlpCodec,
    store: &mut MemoryStore,
    e: &BitVector,
    config: &TrainConfig,
) -> Result<LossBreakdown> {
    let lg = loss_and_gradient(codec, store, e, config, GradientMode::StraightThrough)?;
    let memory = lg.encoder.quantized.bits.clone();

    let reported = match config.record_order {
        RecordOrder::EvaluateThenRecord => reported_loss(codec, store, e, &memory, config)?,
        RecordOrder::RecordThenEvaluate => {
            let mut probe = store.clone();
            probe.record(memory.clone())?;
            reported_loss(codec, &probe, e, &memory, config)?
        }
    };
    if !lg.loss.is_finite() || !reported.total.is_finite() || !lg.grads.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss (surrogate {}, reported {}) on input {e}; step rejected",
            lg.loss, reported.total
        )));
    }
    codec.apply_gradient(&lg.grads, config.learning_rate);
    store.record(memory)?;
    Ok(reported)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckReport {
    pub max_relative_error: f64,
    /// Flat index of the parameter with the largest error.
    pub worst_parameter: usize,
    pub num_parameters: usize,
}

/// Denominator floor in the relative error `|a − f| / max(|a|, |f|, floor)`.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

fn relative_error(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares the backpropagated gradient of the surrogate training loss with
/// central finite differences of step `h`.
pub fn gradient_check(
    codec: &MlpCodec,
    e: &BitVector,
    store: &MemoryStore,
    config: &TrainConfig,
    h: f64,
) -> Result<GradientCheckReport> {
    let analytic = loss_and_gradient(codec, store, e, config, GradientMode::Exact)?
        .grads
        .flat();
    gradient_check_against(codec, e, store, config, h, &analytic)
}

/// Finite-difference check of an externally supplied gradient.
pub fn gradient_check_against(
    codec: &MlpCodec,
    e: &BitVector,
    store: &MemoryStore,
    config: &TrainConfig,
    h: f64,
    analytic: &[f64],
) -> Result<GradientCheckReport> {
    if analytic.len() != codec.num_params() {
        return domain("gradient length does not match the parameter count");
    }
    let base = codec.encode_trace(e)?;
    // A unit matters only if the decoder reads it.
    let first = &codec.decoder_layers()[0];
    for (i, &s) in base.quantized.squashed.iter().enumerate() {
        let live = (0..first.outputs).any(|o| first.weights[o * first.inputs + i] != 0.0);
        if live && (s - 0.5).abs() < THRESHOLD_MARGIN {
            return Err(Error::Refused(format!(
                "middle unit {i} at {s} is within {THRESHOLD_MARGIN} of the threshold"
            )));
        }
    }

    let params = codec.params_flat();
    let mut probe = codec.clone();
    let mut eval = |values: &[f64]| -> Result<(f64, BitVector)> {
        probe.set_params_flat(values)?;
        let lg = loss_and_gradient(&probe, store, e, config, GradientMode::Exact)?;
        Ok((lg.loss, lg.encoder.quantized.bits))
    };

    let mut report = GradientCheckReport {
        max_relative_error: 0.0,
        worst_parameter: 0,
        num_parameters: params.len(),
    };
    let mut shifted = params.clone();
    for k in 0..params.len() {
        shifted[k] = params[k] + h;
        let (plus, bits_plus) = eval(&shifted)?;
        shifted[k] = params[k] - h;
        let (minus, bits_minus) = eval(&shifted)?;
        shifted[k] = params[k];
        if bits_plus != bits_minus && codec_reads_flip(codec, &bits_plus, &bits_minus) {
            return Err(Error::Refused(format!(
                "perturbing parameter {k} by {h} flips a memory bit"
            )));
        }
        let fd = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[k], fd);
        if !err.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite gradient at parameter {k}"
            )));
        }
        if err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst_parameter = k;
        }
    }
    Ok(report)
}

fn codec_reads_flip(codec: &MlpCodec, a: &BitVector, b: &BitVector) -> bool {
    let first = &codec.decoder_layers()[0];
    (0..a.dim())
        .filter(|&i| a.get(i) != b.get(i))
        .any(|i| (0..first.outputs).any(|o| first.weights[o * first.inputs + i] != 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub mean_memory_term: f64,
    pub mean_reconstruction_term: f64,
    pub store_size: usize,
    pub distinct_memories: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Reported total loss of every processed sample, in order.
    pub sample_losses: Vec<f64>,
    /// Exact minimum of the expected loss when the dataset is small enough
    /// for the oracle.
    pub oracle_loss: Option<f64>,
}

pub const PROGRESS_MAGIC: &str = "trainprogress v1";

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        compensated_sum(v.iter().copied()) / v.len() as f64
    }
}

impl TrainReport {
    fn quarter(&self) -> usize {
        self.sample_losses.len() / 4
    }

    /// Mean loss over the first quarter of processed samples.
    pub fn first_quarter_mean(&self) -> f64 {
        mean(&self.sample_losses[..self.quarter()])
    }

    /// Mean loss over the last quarter of processed samples.
    pub fn last_quarter_mean(&self) -> f64 {
        let n = self.sample_losses.len();
        mean(&self.sample_losses[n - self.quarter()..])
    }

    /// Per-epoch table at 4 decimals.
    pub fn write_epochs_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        let mut out = String::from(
            "epoch,mean_loss,mean_memory_term,mean_reconstruction_term,store_size,distinct_memories\n",
        );
        for e in &self.epochs {
            writeln!(
                out,
                "{},{:.4},{:.4},{:.4},{},{}",
                e.epoch,
                e.mean_loss,
                e.mean_memory_term,
                e.mean_reconstruction_term,
                e.store_size,
                e.distinct_memories
            )
            .unwrap();
        }
        sink.write_all(out.as_bytes())?;
        Ok(())
    }

    /// `key = value` summary at 4 decimals.
    pub fn write_summary<W: Write>(&self, mut sink: W) -> Result<()> {
        let mut out = String::new();
        let fmt = |v: f64| {
            if v.is_nan() {
                "n/a".to_string()
            } else {
                format!("{v:.4}")
            }
        };
        writeln!(out, "epochs = {}", self.epochs.len()).unwrap();
        writeln!(out, "samples = {}", self.sample_losses.len()).unwrap();
        writeln!(
            out,
            "first_quarter_mean_loss = {}",
            fmt(self.first_quarter_mean())
        )
        .unwrap();
        writeln!(
            out,
            "last_quarter_mean_loss = {}",
            fmt(self.last_quarter_mean())
        )
        .unwrap();
        if let Some(last) = self.epochs.last() {
            writeln!(out, "final_store_size = {}", last.store_size).unwrap();
            writeln!(out, "final_distinct_memories = {}", last.distinct_memories).unwrap();
        }
        if let Some(o) = self.oracle_loss {
            writeln!(out, "oracle_min_loss = {o:.4}").unwrap();
            writeln!(out, "gap_to_oracle = {}", fmt(self.last_quarter_mean() - o)).unwrap();
        }
        sink.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Full-precision progress checkpoint used for resuming.
    pub fn save_progress<W: Write>(&self, mut sink: W) -> Result<()> {
        let mut out = format!("{PROGRESS_MAGIC}\n");
        for e in &self.epochs {
            writeln!(
                out,
                "epoch {} {} {} {} {} {}",
                e.epoch,
                e.mean_loss,
                e.mean_memory_term,
                e.mean_reconstruction_term,
                e.store_size,
                e.distinct_memories
            )
            .unwrap();
        }
        for l in &self.sample_losses {
            writeln!(out, "sample {l}").unwrap();
        }
        sink.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load_progress<R: Read>(source: R) -> Result<Self> {
        let mut report = Self::default();
        let mut lines = BufReader::new(source).lines();
        match lines.next() {
            Some(Ok(h)) if h == PROGRESS_MAGIC => {}
            _ => return Err(parse_err(1, "bad progress header")),
        }
        for (i, line) in lines.enumerate() {
            let ln = i + 2;
            let line = line?;
            let parts: Vec<&str> = line.split(' ').collect();
            let bad = || parse_err(ln, format!("bad progress line {line:?}"));
            match parts.as_slice() {
                ["epoch", ep, l, m, r, s, d] => report.epochs.push(EpochStats {
                    epoch: ep.parse().map_err(|_| bad())?,
                    mean_loss: l.parse().map_err(|_| bad())?,
                    mean_memory_term: m.parse().map_err(|_| bad())?,
                    mean_reconstruction_term: r.parse().map_err(|_| bad())?,
                    store_size: s.parse().map_err(|_| bad())?,
                    distinct_memories: d.parse().map_err(|_| bad())?,
                }),
                ["sample", l] => report.sample_losses.push(l.parse().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        Ok(report)
    }
}

/// Training driver holding the codec, the memory store and progress.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub codec: MlpCodec,
    pub store: MemoryStore,
    pub report: TrainReport,
    table: EventTable,
    config: TrainConfig,
}

impl Trainer {
    /// Fresh run: codec from `model` and `config.seed`, empty store.
    pub fn new(table: EventTable, config: TrainConfig, model: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let codec = model.build(table.dim(), config.seed)?;
        let store = MemoryStore::new(model.d_mem);
        Self::resume(table, config, codec, store, TrainReport::default())
    }

    /// Continues from a checkpointed codec, store and report.
    pub fn resume(
        table: EventTable,
        config: TrainConfig,
        codec: MlpCodec,
        store: MemoryStore,
        mut report: TrainReport,
    ) -> Result<Self> {
        config.validate()?;
        if codec.d_in() != table.dim() || codec.d_mem() != store.dim() {
            return domain("codec, store and dataset dimensions disagree");
        }
        if report.oracle_loss.is_none() {
            report.oracle_loss = oracle_reference(&table, &config, codec.d_mem())?;
        }
        Ok(Self {
            codec,
            store,
            report,
            table,
            config,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn epochs_done(&self) -> usize {
        self.report.epochs.len()
    }

    pub fn is_finished(&self) -> bool {
        self.epochs_done() >= self.config.epochs
    }

    /// Runs one epoch of `samples_per_epoch` streamed samples drawn from
    /// stream `epoch + 1` of the seed, then prunes to capacity.
    pub fn run_epoch(&mut self) -> Result<&EpochStats> {
        let epoch = self.epochs_done();
        let mut stream =
            SampleStream::with_stream(self.table.clone(), self.config.seed, epoch as u64 + 1)?;
        let mut totals = Vec::with_capacity(self.config.samples_per_epoch);
        let mut mems = Vec::with_capacity(self.config.samples_per_epoch);
        let mut recs = Vec::with_capacity(self.config.samples_per_epoch);
        for k in 0..self.config.samples_per_epoch {
            let e = &self.table.events[stream.next_index()];
            let l = train_step(&mut self.codec, &mut self.store, e, &self.config)
                .map_err(|err| Error::Numeric(format!("epoch {epoch}, sample {k}: {err}")))?;
            totals.push(l.total);
            mems.push(l.memory_term);
            recs.push(l.reconstruction_term);
        }
        if let Some(cap) = self.config.memory_capacity {
            self.store.prune(cap)?;
        }
        self.report.sample_losses.extend_from_slice(&totals);
        self.report.epochs.push(EpochStats {
            epoch,
            mean_loss: mean(&totals),
            mean_memory_term: mean(&mems),
            mean_reconstruction_term: mean(&recs),
            store_size: self.store.len(),
            distinct_memories: self.store.distinct(),
        });
        Ok(self.report.epochs.last().expect("just pushed"))
    }

    pub fn run(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.run_epoch()?;
        }
        Ok(())
    }
}

fn oracle_reference(table: &EventTable, config: &TrainConfig, d_mem: usize) -> Result<Option<f64>> {
    let lattice = if d_mem >= usize::BITS as usize {
        usize::MAX
    } else {
        1usize << d_mem
    };
    let num_memories = table.len().min(lattice);
    let problem = OracleProblem::new(
        table.events.clone(),
        table.dist.clone(),
        num_memories,
        config.weights()?,
    )?;
    if problem.search_space() > ORACLE_REPORT_LIMIT {
        return Ok(None);
    }
    Ok(Some(oracle::solve(&problem)?.best_expected_loss))
}

/// Trains a fresh codec on `table` for `config.epochs` epochs.
pub fn run_training(
    table: &EventTable,
    config: &TrainConfig,
    model: &ModelConfig,
) -> Result<Trainer> {
    let mut t = Trainer::new(table.clone(), config.clone(), model)?;
    t.run()?;
    Ok(t)
}
