//! Reference optimizers: random swapping, exhaustive search, and the
//! salient (adjacent-dissimilarity) ordering.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::axis_order::{factorial, for_each_permutation, AxisOrder};
use crate::dataset::DataSet;
use crate::error::{Error, Result};
use crate::separation::ObjectiveEval;

/// Permutation count guard for exhaustive enumeration.
pub const EXHAUSTIVE_MAX_COORDINATES: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwapConfig {
    /// Consecutive rejected swaps before giving up.
    pub max_stall: usize,
    /// Accepted improvements before stopping.
    pub max_iterations: usize,
    pub seed: u64,
    /// Start from a seeded random permutation instead of the identity.
    pub random_start: bool,
}

impl Default for SwapConfig {
    fn default() -> Self {
        SwapConfig {
            max_stall: 10,
            max_iterations: 100,
            seed: 0,
            random_start: false,
        }
    }
}

impl SwapConfig {
    fn validate(&self) -> Result<()> {
        if self.max_stall == 0 {
            return Err(Error::invalid_argument("max_stall must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one search run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub ordering: AxisOrder,
    pub value: f64,
    /// Objective evaluations performed.
    pub evaluations: usize,
    /// Accepted objective values, starting at the initial ordering.
    pub trace: Vec<f64>,
    /// True when the search is a heuristic rather than an exact optimum.
    pub approximate: bool,
}

/// Hill climbing over random transpositions: propose a uniformly random
/// swap of two positions and keep it only if the objective strictly
/// improves. Stops after `max_stall` consecutive rejections or
/// `max_iterations` accepted improvements.
pub fn random_swap(eval: &ObjectiveEval, cfg: &SwapConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let n = eval.data.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = if cfg.random_start {
        let mut positions: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            positions.swap(i, j);
        }
        AxisOrder::new(positions)?
    } else {
        AxisOrder::identity(n)
    };
    let mut value = eval.value(&current)?;
    let mut evaluations = 1usize;
    let mut trace = vec![value];
    if cfg.max_iterations == 0 {
        return Ok(SearchResult {
            ordering: current,
            value,
            evaluations,
            trace,
            approximate: true,
        });
    }
    let mut stall = 0usize;
    let mut accepted = 0usize;
    loop {
        let a = rng.random_range(0..n);
        let b = {
            let raw = rng.random_range(0..n - 1);
            if raw >= a {
                raw + 1
            } else {
                raw
            }
        };
        let mut candidate = current.clone();
        candidate.swap_positions(a, b);
        let candidate_value = eval.value(&candidate)?;
        evaluations += 1;
        if candidate_value > value {
            current = candidate;
            value = candidate_value;
            trace.push(value);
            accepted += 1;
            stall = 0;
            if accepted >= cfg.max_iterations {
                break;
            }
        } else {
            stall += 1;
            if stall >= cfg.max_stall {
                break;
            }
        }
    }
    Ok(SearchResult {
        ordering: current,
        value,
        evaluations,
        trace,
        approximate: true,
    })
}

/// Evaluates every permutation and returns the maximum; ties resolve to the
/// lexicographically smallest ordering. Refuses more than
/// [`EXHAUSTIVE_MAX_COORDINATES`] coordinates unless forced.
pub fn exhaustive(eval: &ObjectiveEval, force: bool) -> Result<SearchResult> {
    let n = eval.data.cols();
    if n > EXHAUSTIVE_MAX_COORDINATES && !force {
        return Err(Error::BudgetExceeded(format!(
            "{n} coordinates means {n}! orderings; pass force to run anyway"
        )));
    }
    let mut best: Option<(AxisOrder, f64)> = None;
    let mut failure = None;
    for_each_permutation(n, |perm| {
        let order = AxisOrder::new(perm.to_vec()).expect("permutation by construction");
        match eval.value(&order) {
            Ok(v) => {
                let improves = best.as_ref().map_or(true, |(_, bv)| v > *bv);
                if improves {
                    best = Some((order, v));
                }
                true
            }
            Err(e) => {
                failure = Some(e);
                false
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (ordering, value) = best.expect("at least one permutation");
    Ok(SearchResult {
        ordering,
        value,
        evaluations: factorial(n),
        trace: vec![value],
        approximate: false,
    })
}

/// Orders axes to maximize the mean Euclidean dissimilarity between
/// circularly adjacent coordinate columns. Exact (exhaustive) up to
/// [`EXHAUSTIVE_MAX_COORDINATES`] coordinates; greedy farthest-neighbor
/// construction plus 2-opt improvement beyond that.
pub fn salient_order(d: &DataSet) -> Result<SearchResult> {
    let n = d.cols();
    let dissimilarity = column_dissimilarity(d);
    let score = |perm: &[usize]| -> f64 {
        let total: f64 = (0..n)
            .map(|i| dissimilarity[perm[i]][perm[(i + 1) % n]])
            .sum();
        total / n as f64
    };

    if n <= EXHAUSTIVE_MAX_COORDINATES {
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut evaluations = 0usize;
        for_each_permutation(n, |perm| {
            evaluations += 1;
            let v = score(perm);
            if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                best = Some((perm.to_vec(), v));
            }
            true
        });
        let (positions, value) = best.expect("at least one permutation");
        return Ok(SearchResult {
            ordering: AxisOrder::new(positions)?,
            value,
            evaluations,
            trace: vec![value],
            approximate: false,
        });
    }

    // Greedy farthest neighbor from coordinate 0.
    let mut remaining: Vec<usize> = (1..n).collect();
    let mut tour = vec![0usize];
    let mut evaluations = 0usize;
    while !remaining.is_empty() {
        let last = *tour.last().expect("non-empty tour");
        let (pick, _) = remaining
            .iter()
            .enumerate()
            .map(|(idx, &c)| (idx, dissimilarity[last][c]))
            .fold((0, f64::NEG_INFINITY), |acc, item| {
                if item.1 > acc.1 {
                    item
                } else {
                    acc
                }
            });
        tour.push(remaining.remove(pick));
        evaluations += 1;
    }
    // 2-opt on the circular tour, best-improvement passes.
    loop {
        let mut best_gain = 0.0;
        let mut best_move = None;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue; // same edge pair on a circle
                }
                let a = tour[i];
                let b = tour[(i + 1) % n];
                let c = tour[j];
                let e = tour[(j + 1) % n];
                let gain = dissimilarity[a][c] + dissimilarity[b][e]
                    - dissimilarity[a][b]
                    - dissimilarity[c][e];
                evaluations += 1;
                if gain > best_gain + 1e-12 {
                    best_gain = gain;
                    best_move = Some((i + 1, j));
                }
            }
        }
        match best_move {
            Some((from, to)) => tour[from..=to].reverse(),
            None => break,
        }
    }
    let value = score(&tour);
    Ok(SearchResult {
        ordering: AxisOrder::new(tour)?,
        value,
        evaluations,
        trace: vec![value],
        approximate: true,
    })
}

/// Euclidean distance between every pair of coordinate columns.
pub fn column_dissimilarity(d: &DataSet) -> Vec<Vec<f64>> {
    let n = d.cols();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let total: f64 = d
                .points()
                .iter()
                .map(|row| (row[i] - row[j]) * (row[i] - row[j]))
                .sum();
            let dist = total.sqrt();
            out[i][j] = dist;
            out[j][i] = dist;
        }
    }
    out
}
