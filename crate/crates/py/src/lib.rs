//! Python bindings. Bit vectors cross the boundary as `"0101"` strings and
//! distributions as lists of floats.

use std::fs::File;

use memcode::codec::{Codec, TabularCodec as CoreTabular};
use memcode::datasets::{self, EventTable};
use memcode::info::{self, ProbDist};
use memcode::loss::{self, LossWeights};
use memcode::memory::{MemoryStore as CoreStore, NeighborhoodSpec};
use memcode::oracle::{self, OracleProblem};
use memcode::trainer::{self, ModelConfig, TrainConfig};
use memcode::{BitVector, Error};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        Error::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Refused(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for memcode::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn bits(s: &str) -> PyResult<BitVector> {
    s.parse::<BitVector>().py()
}

fn dist(p: Vec<f64>) -> PyResult<ProbDist> {
    ProbDist::new(p).py()
}

fn parse_events(v: &[String]) -> PyResult<Vec<BitVector>> {
    v.iter().map(|s| bits(s)).collect()
}

#[pyfunction]
fn self_information(p: f64) -> PyResult<f64> {
    info::self_information(p).py()
}

#[pyfunction]
fn entropy(probs: Vec<f64>) -> PyResult<f64> {
    Ok(info::entropy(&dist(probs)?))
}

#[pyfunction]
fn max_entropy(num_events: usize) -> PyResult<f64> {
    info::max_entropy(num_events).py()
}

#[pyfunction]
fn redundancy(probs: Vec<f64>) -> PyResult<f64> {
    Ok(info::redundancy(&dist(probs)?))
}

#[pyfunction]
fn cross_entropy(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    info::cross_entropy(&dist(p)?, &dist(q)?).py()
}

#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    info::kl_divergence(&dist(p)?, &dist(q)?).py()
}

#[pyfunction]
fn conservation_check(p_event: f64, p_memory: f64, p_event_given_memory: f64) -> PyResult<f64> {
    info::conservation_check(p_event, p_memory, p_event_given_memory).py()
}

/// Returns `(memory_term, reconstruction_term, total)`.
#[pyfunction]
#[pyo3(signature = (p_memory, p_event_given_memory, alpha=0.0, beta=0.0))]
fn sample_loss(
    p_memory: f64,
    p_event_given_memory: f64,
    alpha: f64,
    beta: f64,
) -> PyResult<(f64, f64, f64)> {
    let w = LossWeights::new(alpha, beta).py()?;
    let l = loss::sample_loss(p_memory, p_event_given_memory, w).py()?;
    Ok((l.memory_term, l.reconstruction_term, l.total))
}

/// Append-only log of memories with frequency counts.
#[pyclass(name = "MemoryStore", skip_from_py_object)]
#[derive(Clone)]
struct MemoryStore {
    inner: CoreStore,
}

#[pymethods]
impl MemoryStore {
    #[new]
    #[pyo3(signature = (dim, capacity=None))]
    fn new(dim: usize, capacity: Option<usize>) -> PyResult<Self> {
        let inner = match capacity {
            Some(c) => CoreStore::with_capacity(dim, c).py()?,
            None => CoreStore::new(dim),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreStore::load_from_path(path.as_ref()).py()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save_to_path(path.as_ref()).py()
    }

    /// Appends a memory and returns its sequence number.
    fn record(&mut self, memory: &str) -> PyResult<u64> {
        self.inner.record(bits(memory)?).py()
    }

    fn prune(&mut self, keep: usize) -> PyResult<()> {
        self.inner.prune(keep).py()
    }

    fn count(&self, memory: &str) -> PyResult<usize> {
        Ok(self.inner.count(&bits(memory)?))
    }

    fn exact_probability(&self, memory: &str) -> PyResult<f64> {
        self.inner.exact_probability(&bits(memory)?).py()
    }

    #[pyo3(signature = (memory, n=1))]
    fn smoothed_probability(&self, memory: &str, n: usize) -> PyResult<f64> {
        let spec = NeighborhoodSpec::new(n).py()?;
        self.inner.smoothed_probability(&bits(memory)?, spec).py()
    }

    fn top_k(&self, k: usize) -> Vec<(String, usize)> {
        self.inner
            .top_k(k)
            .into_iter()
            .map(|(m, c)| (m.to_string(), c))
            .collect()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn distinct(&self) -> usize {
        self.inner.distinct()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "MemoryStore(dim={}, records={}, distinct={})",
            self.inner.dim(),
            self.inner.len(),
            self.inner.distinct()
        )
    }
}

/// Table-driven codec over an explicit event list.
#[pyclass(name = "TabularCodec", skip_from_py_object)]
#[derive(Clone)]
struct TabularCodec {
    inner: CoreTabular,
}

#[pymethods]
impl TabularCodec {
    #[staticmethod]
    fn identity(events: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreTabular::identity(parse_events(&events)?).py()?,
        })
    }

    /// Codec for `encode_map` with the decoder that is optimal under `probs`.
    #[staticmethod]
    fn with_optimal_decoder(
        events: Vec<String>,
        probs: Vec<f64>,
        encode_map: Vec<usize>,
        num_memories: usize,
    ) -> PyResult<Self> {
        let inner = CoreTabular::with_optimal_decoder(
            parse_events(&events)?,
            &dist(probs)?,
            encode_map,
            num_memories,
        )
        .py()?;
        Ok(Self { inner })
    }

    fn encode(&self, event: &str) -> PyResult<String> {
        Ok(self.inner.encode(&bits(event)?).py()?.to_string())
    }

    fn decode_probs(&self, memory: &str) -> PyResult<Vec<f64>> {
        self.inner.decode_probs(&bits(memory)?).py()
    }

    #[getter]
    fn encode_map(&self) -> Vec<usize> {
        self.inner.encode_map().to_vec()
    }

    #[getter]
    fn decoder_rows(&self) -> Vec<Vec<f64>> {
        self.inner.decoder_rows().to_vec()
    }

    /// Expected weighted loss under `probs` over the codec's events.
    #[pyo3(signature = (probs, alpha=0.0, beta=0.0))]
    fn expected_loss(&self, probs: Vec<f64>, alpha: f64, beta: f64) -> PyResult<f64> {
        let d = dist(probs)?;
        let ev = self.inner.events();
        let push = loss::pushforward_memory_probs(&self.inner, &d, ev).py()?;
        loss::expected_loss(
            &self.inner,
            &d,
            ev,
            &push,
            LossWeights::new(alpha, beta).py()?,
        )
        .py()
    }
}

fn table_tuple(t: EventTable) -> (Vec<String>, Vec<f64>, Vec<String>) {
    (
        t.events.iter().map(|e| e.to_string()).collect(),
        t.dist.probs().to_vec(),
        t.labels,
    )
}

/// `(events, probabilities, labels)` of the four-state table.
#[pyfunction]
fn four_state_table() -> (Vec<String>, Vec<f64>, Vec<String>) {
    table_tuple(datasets::four_state_table())
}

#[pyfunction]
fn playing_cards_table() -> (Vec<String>, Vec<f64>, Vec<String>) {
    table_tuple(datasets::playing_cards_table())
}

#[pyfunction]
fn correlated_bits_table(
    dim: usize,
    coupling: f64,
) -> PyResult<(Vec<String>, Vec<f64>, Vec<String>)> {
    Ok(table_tuple(
        datasets::correlated_bits_table(dim, coupling).py()?,
    ))
}

/// Exhaustive minimum of the expected loss over all encode maps.
#[pyfunction]
#[pyo3(signature = (events, probs, num_memories, alpha=0.0, beta=0.0, grid_step=None))]
fn oracle_solve<'py>(
    py: Python<'py>,
    events: Vec<String>,
    probs: Vec<f64>,
    num_memories: usize,
    alpha: f64,
    beta: f64,
    grid_step: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let problem = OracleProblem::new(
        parse_events(&events)?,
        dist(probs)?,
        num_memories,
        LossWeights::new(alpha, beta).py()?,
    )
    .py()?;
    let sol = py
        .detach(|| match grid_step {
            Some(step) => oracle::solve_with_grid_decoder(&problem, step),
            None => oracle::solve(&problem),
        })
        .py()?;
    let d = PyDict::new(py);
    d.set_item("min_loss", sol.best_expected_loss)?;
    d.set_item("encode_map", sol.encode_map().to_vec())?;
    d.set_item("partition", sol.partition())?;
    d.set_item("decoder_rows", sol.best_codec.decoder_rows().to_vec())?;
    d.set_item("argmin_count", sol.argmin_count)?;
    Ok(d)
}

/// Trains on a table described by an experiment TOML document (the same
/// format as the command line's `--config`) and returns the report.
#[pyfunction]
#[pyo3(signature = (config_toml, store_path=None))]
fn train<'py>(
    py: Python<'py>,
    config_toml: &str,
    store_path: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = memcode::cli::ExperimentConfig::from_toml(config_toml).py()?;
    let table =
        memcode::cli::resolve_table(config.table.as_deref().unwrap_or("builtin:four-state"))
            .py()?;
    let (train, model): (TrainConfig, ModelConfig) = (config.train, config.model);
    let t = py
        .detach(|| trainer::run_training(&table, &train, &model))
        .py()?;
    if let Some(p) = store_path {
        t.store.save_to_path(p.as_ref()).py()?;
    }
    let r = &t.report;
    let d = PyDict::new(py);
    d.set_item("first_quarter_mean", r.first_quarter_mean())?;
    d.set_item("last_quarter_mean", r.last_quarter_mean())?;
    d.set_item("oracle_loss", r.oracle_loss)?;
    d.set_item(
        "epoch_losses",
        r.epochs.iter().map(|e| e.mean_loss).collect::<Vec<_>>(),
    )?;
    d.set_item("distinct_memories", t.store.distinct())?;
    let mut codec = Vec::new();
    t.codec.save(&mut codec).py()?;
    d.set_item("codec", String::from_utf8(codec).expect("utf-8 checkpoint"))?;
    Ok(d)
}

/// Reads a `bits,probability` CSV into `(events, probabilities, labels)`.
#[pyfunction]
fn read_table(path: &str) -> PyResult<(Vec<String>, Vec<f64>, Vec<String>)> {
    let f = File::open(path).map_err(|e| PyOSError::new_err(e.to_string()))?;
    Ok(table_tuple(EventTable::read_csv(f).py()?))
}

#[pymodule]
#[pyo3(name = "memcode")]
fn memcode_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(self_information, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(max_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(redundancy, m)?)?;
    m.add_function(wrap_pyfunction!(cross_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(conservation_check, m)?)?;
    m.add_function(wrap_pyfunction!(sample_loss, m)?)?;
    m.add_function(wrap_pyfunction!(four_state_table, m)?)?;
    m.add_function(wrap_pyfunction!(playing_cards_table, m)?)?;
    m.add_function(wrap_pyfunction!(correlated_bits_table, m)?)?;
    m.add_function(wrap_pyfunction!(read_table, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_solve, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_class::<MemoryStore>()?;
    m.add_class::<TabularCodec>()?;
    Ok(())
}
