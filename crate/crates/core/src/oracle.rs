//! Exhaustive solver for tiny discrete systems.
//!
//! Every total map from events to memories is enumerated; each map gets its
//! best decoder and the pushforward memory distribution, and the expected
//! weighted loss is minimized over maps. The enumeration is evaluated in
//! parallel, and the reduction (exact minimum, then lowest index among maps
//! within [`TIE_TOL`] of it) gives the same answer for any partitioning.

use std::io::Write;

use rayon::prelude::*;

use crate::bits::BitVector;
use crate::codec::{conditional_likelihood, optimal_tabular_decoder, TabularCodec};
use crate::error::{domain, Error, Result};
use crate::info::{compensated_sum, entropy, ProbDist};
use crate::loss::{expected_loss, pushforward_memory_probs, sample_loss, LossWeights};

/// Largest search space `num_memories^num_events` the solver accepts.
pub const ENUMERATION_GUARD: u128 = 100_000_000;

/// Encodings whose loss is within this of the minimum count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Finest decoder grid accepted by [`solve_with_grid_decoder`].
pub const MIN_GRID_STEP: f64 = 1e-3;

/// Largest input dimension accepted by [`solve_with_grid_decoder`].
pub const MAX_GRID_INPUT_DIM: usize = 3;

#[derive(Debug, Clone)]
pub struct OracleProblem {
    pub events: Vec<BitVector>,
    pub dist: ProbDist,
    pub num_memories: usize,
    pub weights: LossWeights,
}

impl OracleProblem {
    pub fn new(
        events: Vec<BitVector>,
        dist: ProbDist,
        num_memories: usize,
        weights: LossWeights,
    ) -> Result<Self> {
        if events.len() != dist.len() {
            return domain(format!(
                "{} events but {} probabilities",
                events.len(),
                dist.len()
            ));
        }
        if num_memories == 0 {
            return domain("at least one memory is required");
        }
        weights.validate()?;
        Ok(Self {
            events,
            dist,
            num_memories,
            weights,
        })
    }

    /// Size of the search space, `num_memories^num_events`.
    pub fn search_space(&self) -> u128 {
        let mut total: u128 = 1;
        for _ in 0..self.events.len() {
            total = total.saturating_mul(self.num_memories as u128);
        }
        total
    }

    fn check_guard(&self) -> Result<u64> {
        let size = self.search_space();
        if size > ENUMERATION_GUARD {
            return Err(Error::Refused(format!(
                "search space {}^{} = {size} exceeds {ENUMERATION_GUARD}",
                self.num_memories,
                self.events.len()
            )));
        }
        Ok(size as u64)
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub best_codec: TabularCodec,
    pub best_expected_loss: f64,
    /// Number of distinct event partitions attaining the minimum.
    pub argmin_count: usize,
}

impl OracleSolution {
    pub fn encode_map(&self) -> &[usize] {
        self.best_codec.encode_map()
    }

    /// Event indices grouped by memory, blocks ordered by their first event.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        partition_of(self.encode_map())
    }
}

pub fn partition_of(encode_map: &[usize]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &m) in encode_map.iter().enumerate() {
        match blocks.iter_mut().find(|(mem, _)| *mem == m) {
            Some((_, b)) => b.push(i),
            None => blocks.push((m, vec![i])),
        }
    }
    blocks.into_iter().map(|(_, b)| b).collect()
}

/// The map with lexicographic rank `index`: digits of `index` in base
/// `num_memories`, most significant first.
fn encoding_at(mut index: u64, num_events: usize, num_memories: usize) -> Vec<usize> {
    let mut map = vec![0; num_events];
    for slot in map.iter_mut().rev() {
        *slot = (index % num_memories as u64) as usize;
        index /= num_memories as u64;
    }
    map
}

/// True when memories appear in first-use order (0, then 1, ...): exactly one
/// such map exists per partition.
fn is_canonical(map: &[usize]) -> bool {
    let mut next = 0;
    for &m in map {
        if m > next {
            return false;
        }
        if m == next {
            next += 1;
        }
    }
    true
}

/// Iterator over every encode map, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Encodings {
    next: u64,
    total: u64,
    num_events: usize,
    num_memories: usize,
}

impl Iterator for Encodings {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.next >= self.total {
            return None;
        }
        let map = encoding_at(self.next, self.num_events, self.num_memories);
        self.next += 1;
        Some(map)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Encodings {}

pub fn enumerate_encodings(problem: &OracleProblem) -> Result<Encodings> {
    let total = problem.check_guard()?;
    Ok(Encodings {
        next: 0,
        total,
        num_events: problem.events.len(),
        num_memories: problem.num_memories,
    })
}

/// `H(E)`, the expected self-information of the input: the lower bound on
/// the expected unweighted loss.
pub fn expected_self_information(dist: &ProbDist) -> f64 {
    entropy(dist)
}

#[derive(Debug, Clone, Copy)]
enum DecoderRule {
    Analytic,
    Grid { points: usize },
}

fn decoder_for(problem: &OracleProblem, map: &[usize], rule: DecoderRule) -> Result<Vec<Vec<f64>>> {
    match rule {
        DecoderRule::Analytic => {
            optimal_tabular_decoder(map, &problem.dist, &problem.events, problem.num_memories)
        }
        DecoderRule::Grid { points } => Ok(grid_decoder(problem, map, points)),
    }
}

/// Decoder rows found by exhaustive search over `{k / points}`. The expected
/// reconstruction loss is a sum of independent per-(memory, node) terms, so
/// searching each coordinate separately covers the full product grid.
fn grid_decoder(problem: &OracleProblem, map: &[usize], points: usize) -> Vec<Vec<f64>> {
    let d_in = problem.events.first().map_or(0, BitVector::dim);
    let p = problem.dist.probs();
    (0..problem.num_memories)
        .map(|m| {
            let members: Vec<usize> = (0..map.len()).filter(|&i| map[i] == m).collect();
            if compensated_sum(members.iter().map(|&i| p[i])) == 0.0 {
                return vec![0.5; d_in];
            }
            (0..d_in)
                .map(|j| {
                    let ones = compensated_sum(
                        members
                            .iter()
                            .filter(|&&i| problem.events[i].get(j))
                            .map(|&i| p[i]),
                    );
                    let zeros = compensated_sum(
                        members
                            .iter()
                            .filter(|&&i| !problem.events[i].get(j))
                            .map(|&i| p[i]),
                    );
                    let cost = |q: f64| {
                        let a = if ones == 0.0 { 0.0 } else { -ones * q.ln() };
                        let b = if zeros == 0.0 {
                            0.0
                        } else {
                            -zeros * (1.0 - q).ln()
                        };
                        a + b
                    };
                    let mut best = (f64::INFINITY, 0.5);
                    for k in 0..=points {
                        let q = k as f64 / points as f64;
                        let c = cost(q);
                        if c < best.0 {
                            best = (c, q);
                        }
                    }
                    best.1
                })
                .collect()
        })
        .collect()
}

/// Expected loss of one map with the given decoder rows.
fn map_loss(problem: &OracleProblem, map: &[usize], rows: &[Vec<f64>]) -> Result<f64> {
    let p = problem.dist.probs();
    let mut mass = vec![Vec::new(); problem.num_memories];
    for (i, &m) in map.iter().enumerate() {
        mass[m].push(p[i]);
    }
    let mass: Vec<f64> = mass.into_iter().map(compensated_sum).collect();
    let mut terms = Vec::with_capacity(map.len());
    for (i, &m) in map.iter().enumerate() {
        if p[i] == 0.0 {
            continue;
        }
        let lik = conditional_likelihood(&rows[m], &problem.events[i])?;
        terms.push(p[i] * sample_loss(mass[m].min(1.0), lik, problem.weights)?.total);
    }
    Ok(compensated_sum(terms))
}

fn evaluate(problem: &OracleProblem, index: u64, rule: DecoderRule) -> Result<(f64, Vec<usize>)> {
    let map = encoding_at(index, problem.events.len(), problem.num_memories);
    let rows = decoder_for(problem, &map, rule)?;
    Ok((map_loss(problem, &map, &rows)?, map))
}

fn solve_with(problem: &OracleProblem, rule: DecoderRule) -> Result<OracleSolution> {
    let total = problem.check_guard()?;

    let min_loss = (0..total)
        .into_par_iter()
        .map(|i| evaluate(problem, i, rule).map(|(l, _)| l))
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
    if !min_loss.is_finite() {
        return Err(Error::Numeric("every encoding has infinite loss".into()));
    }

    // (lowest tied index, number of tied canonical maps)
    let (best_index, argmin_count) = (0..total)
        .into_par_iter()
        .map(|i| {
            let (l, map) = evaluate(problem, i, rule)?;
            Ok::<_, Error>(if l <= min_loss + TIE_TOL {
                (i, usize::from(is_canonical(&map)))
            } else {
                (u64::MAX, 0)
            })
        })
        .try_reduce(|| (u64::MAX, 0), |a, b| Ok((a.0.min(b.0), a.1 + b.1)))?;

    let map = encoding_at(best_index, problem.events.len(), problem.num_memories);
    let rows = decoder_for(problem, &map, rule)?;
    let codec = TabularCodec::new(
        problem.events.clone(),
        crate::codec::index_memories(problem.num_memories),
        map,
        rows,
    )?;
    // Re-evaluate the winner through the public loss path.
    let memory_probs = pushforward_memory_probs(&codec, &problem.dist, &problem.events)?;
    let best_expected_loss = expected_loss(
        &codec,
        &problem.dist,
        &problem.events,
        &memory_probs,
        problem.weights,
    )?;
    Ok(OracleSolution {
        best_codec: codec,
        best_expected_loss,
        argmin_count,
    })
}

/// Minimizes the expected weighted loss over all encode maps, each paired
/// with its analytically optimal decoder. Ties go to the lexicographically
/// smallest map.
pub fn solve(problem: &OracleProblem) -> Result<OracleSolution> {
    solve_with(problem, DecoderRule::Analytic)
}

/// Like [`solve`], but each decoder probability is found by exhaustive
/// search over a grid of spacing `grid_step` instead of the closed form.
pub fn solve_with_grid_decoder(problem: &OracleProblem, grid_step: f64) -> Result<OracleSolution> {
    let d_in = problem.events.first().map_or(0, BitVector::dim);
    if d_in > MAX_GRID_INPUT_DIM {
        return Err(Error::Refused(format!(
            "grid decoder search supports d_in <= {MAX_GRID_INPUT_DIM}, got {d_in}"
        )));
    }
    if !(MIN_GRID_STEP..=1.0).contains(&grid_step) {
        return Err(Error::Refused(format!(
            "grid step must lie in [{MIN_GRID_STEP}, 1], got {grid_step}"
        )));
    }
    let points = (1.0 / grid_step).round() as usize;
    solve_with(problem, DecoderRule::Grid { points })
}

/// One row of the oracle result table.
#[derive(Debug, Clone)]
pub struct OracleRow {
    pub weights: LossWeights,
    pub solution: OracleSolution,
}

/// Writes `alpha,beta,min_loss,partition,decoder,argmin_count` rows with
/// numbers at 4 decimals. Events are named by `labels`; memories as
/// `M1, M2, ...` in first-use order.
pub fn write_oracle_csv<W: Write>(rows: &[OracleRow], labels: &[String], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        "alpha",
        "beta",
        "min_loss",
        "partition",
        "decoder",
        "argmin_count",
    ])
    .map_err(csv_err)?;
    for row in rows {
        let sol = &row.solution;
        let blocks = sol.partition();
        let partition = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&i| labels[i].as_str())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect::<Vec<_>>()
            .join("|");
        let decoder = blocks
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let m = sol.encode_map()[b[0]];
                let probs = sol.best_codec.decoder_rows()[m]
                    .iter()
                    .map(|p| format!("{p:.4}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                format!("M{}=({probs})", k + 1)
            })
            .collect::<Vec<_>>()
            .join("|");
        w.write_record([
            format!("{:.4}", row.weights.alpha),
            format!("{:.4}", row.weights.beta),
            format!("{:.4}", sol.best_expected_loss),
            partition,
            decoder,
            sol.argmin_count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events() -> Vec<BitVector> {
        ["00", "01", "10", "11"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    fn problem(alpha: f64, beta: f64) -> OracleProblem {
        OracleProblem::new(
            events(),
            ProbDist::new(vec![0.6, 0.1, 0.1, 0.2]).unwrap(),
            4,
            LossWeights::new(alpha, beta).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(
            enumerate_encodings(&problem(0.0, 0.0)).unwrap().count(),
            256
        );
        let two = OracleProblem::new(
            events()[..2].to_vec(),
            ProbDist::uniform(2).unwrap(),
            1,
            LossWeights::default(),
        )
        .unwrap();
        assert_eq!(
            enumerate_encodings(&two).unwrap().collect::<Vec<_>>(),
            vec![vec![0, 0]]
        );
        let three = OracleProblem::new(
            events()[..3].to_vec(),
            ProbDist::uniform(3).unwrap(),
            2,
            LossWeights::default(),
        )
        .unwrap();
        let maps: Vec<_> = enumerate_encodings(&three).unwrap().collect();
        assert_eq!(maps.len(), 8);
        assert_eq!(maps[1], vec![0, 0, 1]);
        assert!(maps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn guard_refuses_large_spaces() {
        let events: Vec<BitVector> = (0..20).map(|i| BitVector::from_index(i, 5)).collect();
        let p = OracleProblem::new(
            events,
            ProbDist::uniform(20).unwrap(),
            3,
            LossWeights::default(),
        )
        .unwrap();
        assert!(matches!(enumerate_encodings(&p), Err(Error::Refused(_))));
        assert!(matches!(solve(&p), Err(Error::Refused(_))));
    }

    #[test]
    fn canonical_form() {
        assert!(is_canonical(&[0, 0, 1, 0, 2]));
        assert!(!is_canonical(&[1, 0]));
        assert!(!is_canonical(&[0, 2, 1]));
        assert_eq!(
            partition_of(&[2, 0, 2, 1]),
            vec![vec![0, 2], vec![1], vec![3]]
        );
    }

    #[test]
    fn worked_minima() {
        let cases: [(f64, f64, f64, Vec<usize>); 4] = [
            (0.0, 0.01, 1.0889, vec![0, 1, 2, 3]),
            (0.01, 0.0, 1.0950, vec![0, 0, 1, 1]),
            (0.2, 0.0, 1.2033, vec![0, 0, 0, 1]),
            (0.5, 0.0, 1.2217, vec![0, 0, 0, 0]),
        ];
        for (a, b, loss, map) in cases {
            let s = solve(&problem(a, b)).unwrap();
            assert!(
                (s.best_expected_loss - loss).abs() < 5e-5,
                "({a},{b}): {}",
                s.best_expected_loss
            );
            assert_eq!(s.encode_map(), &map[..]);
        }
        // E2 and E3 are interchangeable, so the two-memory optimum ties.
        assert_eq!(solve(&problem(0.01, 0.0)).unwrap().argmin_count, 2);
        assert_eq!(solve(&problem(0.5, 0.0)).unwrap().argmin_count, 1);
    }

    #[test]
    fn fast_path_matches_public_loss() {
        let p = problem(0.3, 0.7);
        for map in enumerate_encodings(&p).unwrap() {
            let c = TabularCodec::with_optimal_decoder(events(), &p.dist, map.clone(), 4).unwrap();
            let mp = pushforward_memory_probs(&c, &p.dist, &events()).unwrap();
            let slow = expected_loss(&c, &p.dist, &events(), &mp, p.weights).unwrap();
            let rows = decoder_for(&p, &map, DecoderRule::Analytic).unwrap();
            let fast = map_loss(&p, &map, &rows).unwrap();
            assert!((slow - fast).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_decoder_point_mass() {
        let p = OracleProblem::new(
            events(),
            ProbDist::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap(),
            2,
            LossWeights::default(),
        )
        .unwrap();
        let s = solve_with_grid_decoder(&p, 1e-3).unwrap();
        let m = s.best_codec.memory_index(&"10".parse().unwrap()).unwrap();
        assert_eq!(s.best_codec.decoder_rows()[m], vec![1.0, 0.0]);
        assert_eq!(s.best_expected_loss, 0.0);
    }

    #[test]
    fn grid_guards() {
        assert!(matches!(
            solve_with_grid_decoder(&problem(0.0, 0.0), 1e-4),
            Err(Error::Refused(_))
        ));
        let wide: Vec<BitVector> = (0..4).map(|i| BitVector::from_index(i, 4)).collect();
        let p = OracleProblem::new(
            wide,
            ProbDist::uniform(4).unwrap(),
            2,
            LossWeights::default(),
        )
        .unwrap();
        assert!(matches!(
            solve_with_grid_decoder(&p, 0.01),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn csv_table() {
        let labels: Vec<String> = (1..=4).map(|i| format!("E{i}")).collect();
        let rows = vec![OracleRow {
            weights: LossWeights::new(0.01, 0.0).unwrap(),
            solution: solve(&problem(0.01, 0.0)).unwrap(),
        }];
        let mut buf = Vec::new();
        write_oracle_csv(&rows, &labels, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "alpha,beta,min_loss,partition,decoder,argmin_count\n\
             0.0100,0.0000,1.0950,E1+E2|E3+E4,M1=(0.0000 0.1429)|M2=(1.0000 0.6667),2\n"
        );
    }
}
