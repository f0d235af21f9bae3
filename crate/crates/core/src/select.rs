//! Feature-subset search and relative-scale optimization driven by the
//! information imbalance.
//!
//! A candidate subset S of a feature pool (unit scales) is scored against a
//! fixed target space T, either by `Δ(S→T)` (forward: how well S predicts
//! the target's neighborhoods) or by the symmetric imbalance
//! `(Δ(S→T) + Δ(T→S)) / √2` (compression: how close S is to T overall).
//! Both raw imbalances are always recorded.
//!
//! Strategies: exhaustive enumeration of all d-subsets, greedy forward
//! selection, uniformly random subsets, and the pool's native order.

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::imbalance::{imbalance_between, ImbalanceOptions};
use crate::metric::{pairwise_distances_with_limit, DistanceMatrix, DistanceSpec, Space};

/// Default cap on subset evaluations for exhaustive search.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// Largest target distance matrix cached in memory (512 MiB).
const TARGET_CACHE_LIMIT: u128 = 512 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveMode {
    /// `Δ(subset → target)`
    Forward,
    /// `(Δ(subset → target) + Δ(target → subset)) / √2`
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionObjective {
    pub target: DistanceSpec,
    pub mode: ObjectiveMode,
    pub k: usize,
}

impl SelectionObjective {
    pub fn new(target: DistanceSpec, mode: ObjectiveMode) -> Self {
        Self { target, mode, k: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub objective: f64,
    /// `Δ(subset → target)`
    pub delta_forward: f64,
    /// `Δ(target → subset)`
    pub delta_backward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Exhaustive,
    Greedy,
    Random,
    NativeOrder,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Greedy => "greedy",
            Strategy::Random => "random",
            Strategy::NativeOrder => "native-order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub d: usize,
    pub subset: Vec<String>,
    #[serde(flatten)]
    pub eval: Evaluation,
    /// Subset evaluations spent on this step.
    pub evaluations: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace {
    pub strategy: Strategy,
    pub mode: ObjectiveMode,
    pub k: usize,
    pub steps: Vec<TraceStep>,
    /// Pool columns that are also part of the target space.
    pub overlap: Vec<String>,
}

impl SelectionTrace {
    pub fn total_evaluations(&self) -> u64 {
        self.steps.iter().map(|s| s.evaluations).sum()
    }

    pub fn step(&self, d: usize) -> Option<&TraceStep> {
        self.steps.iter().find(|s| s.d == d)
    }
}

/// Scores feature subsets against a fixed target. The target's distance
/// matrix is materialized once when it fits in memory.
struct Scorer<'a> {
    ds: &'a Dataset,
    target_spec: &'a DistanceSpec,
    target_cache: Option<DistanceMatrix>,
    mode: ObjectiveMode,
    opts: ImbalanceOptions,
}

impl<'a> Scorer<'a> {
    fn new(ds: &'a Dataset, obj: &'a SelectionObjective) -> Result<Self> {
        obj.target.validate_for(ds)?;
        let target_cache = match pairwise_distances_with_limit(ds, &obj.target, TARGET_CACHE_LIMIT) {
            Ok(m) => Some(m),
            Err(Error::MemoryLimit { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { ds, target_spec: &obj.target, target_cache, mode: obj.mode, opts: ImbalanceOptions::with_k(obj.k) })
    }

    fn target(&self) -> Space<'_> {
        match &self.target_cache {
            Some(m) => Space::Precomputed(m),
            None => Space::Features { ds: self.ds, spec: self.target_spec },
        }
    }

    fn score(&self, spec: &DistanceSpec) -> Result<Evaluation> {
        let subset = Space::features(self.ds, spec)?;
        let target = self.target();
        let fwd = imbalance_between(&subset, &target, &self.opts)?.delta;
        let bwd = imbalance_between(&target, &subset, &self.opts)?.delta;
        let objective = match self.mode {
            ObjectiveMode::Forward => fwd,
            ObjectiveMode::Symmetric => (fwd + bwd) / SQRT_2,
        };
        Ok(Evaluation { objective, delta_forward: fwd, delta_backward: bwd })
    }

    fn score_columns(&self, columns: &[usize]) -> Result<Evaluation> {
        self.score(&DistanceSpec::new(columns.to_vec())?)
    }
}

struct Pool<'a> {
    names: Vec<&'a str>,
    columns: Vec<usize>,
}

impl<'a> Pool<'a> {
    fn new<S: AsRef<str>>(ds: &Dataset, pool: &'a [S]) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::InvalidParameter("empty feature pool".into()));
        }
        let names: Vec<&str> = pool.iter().map(AsRef::as_ref).collect();
        if names.iter().duplicates().next().is_some() {
            return Err(Error::InvalidParameter("feature pool lists a column twice".into()));
        }
        Ok(Self { columns: ds.column_indices(&names)?, names })
    }

    fn len(&self) -> usize {
        self.names.len()
    }

    fn columns_of(&self, members: &[usize]) -> Vec<usize> {
        members.iter().map(|&m| self.columns[m]).collect()
    }

    fn names_of(&self, members: &[usize]) -> Vec<String> {
        members.iter().map(|&m| self.names[m].to_string()).collect()
    }

    fn overlap(&self, ds: &Dataset, target: &DistanceSpec) -> Vec<String> {
        let overlap: Vec<String> = self
            .columns
            .iter()
            .zip(&self.names)
            .filter(|(c, _)| target.features().contains(c))
            .map(|(_, n)| n.to_string())
            .collect();
        if !overlap.is_empty() {
            log::info!("pool and target share columns {overlap:?} of {}", ds.n_cols());
        }
        overlap
    }

    fn check_d(&self, d: usize) -> Result<()> {
        if d == 0 || d > self.len() {
            Err(Error::InvalidParameter(format!("subset size {d} outside 1..={}", self.len())))
        } else {
            Ok(())
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Evaluate every d-subset of the pool for `d = 1..=d_max` and keep the best
/// one per size. Ties go to the lexicographically smallest tuple of sorted
/// column names.
pub fn exhaustive_best_subsets<S: AsRef<str>>(
    ds: &Dataset,
    pool: &[S],
    obj: &SelectionObjective,
    d_max: usize,
    budget: u128,
) -> Result<SelectionTrace> {
    let pool = Pool::new(ds, pool)?;
    pool.check_d(d_max)?;
    let required: u128 = (1..=d_max).map(|d| binomial(pool.len(), d)).sum();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let scorer = Scorer::new(ds, obj)?;
    let overlap = pool.overlap(ds, &obj.target);

    let mut steps = Vec::with_capacity(d_max);
    for d in 1..=d_max {
        let start = Instant::now();
        let subsets: Vec<Vec<usize>> = (0..pool.len()).combinations(d).collect();
        let evals =
            subsets.par_iter().map(|s| scorer.score_columns(&pool.columns_of(s))).collect::<Result<Vec<_>>>()?;

        let sorted_names = |s: &[usize]| {
            let mut names = pool.names_of(s);
            names.sort();
            names
        };
        let best = (0..subsets.len())
            .min_by(|&a, &b| {
                evals[a]
                    .objective
                    .total_cmp(&evals[b].objective)
                    .then_with(|| sorted_names(&subsets[a]).cmp(&sorted_names(&subsets[b])))
            })
            .expect("at least one subset");
        steps.push(TraceStep {
            d,
            subset: pool.names_of(&subsets[best]),
            eval: evals[best],
            evaluations: subsets.len() as u64,
            wall_time: start.elapsed(),
        });
    }
    Ok(SelectionTrace { strategy: Strategy::Exhaustive, mode: obj.mode, k: obj.k, steps, overlap })
}

/// Forward selection: grow the subset one feature at a time, each time
/// adding the pool feature that gives the lowest objective for the enlarged
/// subset. Ties go to the smallest column name.
pub fn greedy_forward<S: AsRef<str>>(
    ds: &Dataset,
    pool: &[S],
    obj: &SelectionObjective,
    d_max: usize,
) -> Result<SelectionTrace> {
    let pool = Pool::new(ds, pool)?;
    pool.check_d(d_max)?;
    let scorer = Scorer::new(ds, obj)?;
    let overlap = pool.overlap(ds, &obj.target);

    let mut chosen: Vec<usize> = Vec::with_capacity(d_max);
    let mut steps = Vec::with_capacity(d_max);
    for d in 1..=d_max {
        let start = Instant::now();
        let candidates: Vec<usize> = (0..pool.len()).filter(|m| !chosen.contains(m)).collect();
        let evals = candidates
            .par_iter()
            .map(|&c| {
                let mut cols = pool.columns_of(&chosen);
                cols.push(pool.columns[c]);
                scorer.score_columns(&cols)
            })
            .collect::<Result<Vec<_>>>()?;
        let best = (0..candidates.len())
            .min_by(|&a, &b| {
                evals[a]
                    .objective
                    .total_cmp(&evals[b].objective)
                    .then_with(|| pool.names[candidates[a]].cmp(pool.names[candidates[b]]))
            })
            .expect("at least one candidate");
        chosen.push(candidates[best]);
        steps.push(TraceStep {
            d,
            subset: pool.names_of(&chosen),
            eval: evals[best],
            evaluations: candidates.len() as u64,
            wall_time: start.elapsed(),
        });
    }
    Ok(SelectionTrace { strategy: Strategy::Greedy, mode: obj.mode, k: obj.k, steps, overlap })
}

/// The first d pool columns, in the order given, for `d = 1..=d_max`.
pub fn native_order<S: AsRef<str>>(
    ds: &Dataset,
    pool: &[S],
    obj: &SelectionObjective,
    d_max: usize,
) -> Result<SelectionTrace> {
    let pool = Pool::new(ds, pool)?;
    pool.check_d(d_max)?;
    let scorer = Scorer::new(ds, obj)?;
    let overlap = pool.overlap(ds, &obj.target);
    let steps = (1..=d_max)
        .into_par_iter()
        .map(|d| {
            let start = Instant::now();
            let members: Vec<usize> = (0..d).collect();
            let eval = scorer.score_columns(&pool.columns_of(&members))?;
            Ok(TraceStep { d, subset: pool.names_of(&members), eval, evaluations: 1, wall_time: start.elapsed() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionTrace { strategy: Strategy::NativeOrder, mode: obj.mode, k: obj.k, steps, overlap })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomTrial {
    pub subset: Vec<String>,
    #[serde(flatten)]
    pub eval: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomBaseline {
    pub d: usize,
    pub seed: u64,
    pub trials: Vec<RandomTrial>,
    pub min: f64,
    pub median: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Score `trials` uniformly drawn d-subsets of the pool. Each trial draws
/// without replacement; members are kept in pool order.
pub fn random_baseline<S: AsRef<str>>(
    ds: &Dataset,
    pool: &[S],
    obj: &SelectionObjective,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<RandomBaseline> {
    let pool = Pool::new(ds, pool)?;
    pool.check_d(d)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one random trial is required".into()));
    }
    let scorer = Scorer::new(ds, obj)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<usize>> = (0..trials)
        .map(|_| {
            let mut s = index::sample(&mut rng, pool.len(), d).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let trials = draws
        .par_iter()
        .map(|s| Ok(RandomTrial { subset: pool.names_of(s), eval: scorer.score_columns(&pool.columns_of(s))? }))
        .collect::<Result<Vec<_>>>()?;

    let mut objectives: Vec<f64> = trials.iter().map(|t| t.eval.objective).collect();
    let min = objectives.iter().copied().fold(f64::INFINITY, f64::min);
    let median = median(&mut objectives);
    Ok(RandomBaseline { d, seed, trials, min, median })
}

/// `points` values evenly spaced in log10 between `lo` and `hi`, inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidParameter("empty scale grid".into()));
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)).collect())
}

/// Default scale grid: 61 log-spaced points over `[1e-3, 1e3]`.
pub fn default_scale_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 61).expect("valid default grid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepProfile {
    pub pass: usize,
    pub feature: String,
    pub grid: Vec<f64>,
    pub objectives: Vec<f64>,
    pub chosen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSearch {
    pub anchor: String,
    pub features: Vec<String>,
    /// Selected scale per entry of `features`; the anchor's scale is 1.
    pub scales: Vec<f64>,
    #[serde(flatten)]
    pub eval: Evaluation,
    pub sweeps: Vec<SweepProfile>,
    pub evaluations: u64,
}

/// Choose relative scales for `features` against a fixed-scale `anchor` by
/// coordinate descent over `grid`.
///
/// Each pass sweeps the features in order; for each one, every grid value is
/// tried with the other scales held fixed and the best is kept. Among grid
/// values with equal objective, the one closest (in log scale) to the
/// feature's current scale wins, then the smaller one. Starting scales are 1.
pub fn scale_optimize<S: AsRef<str>>(
    ds: &Dataset,
    features: &[S],
    anchor: &str,
    obj: &SelectionObjective,
    grid: &[f64],
    passes: usize,
) -> Result<ScaleSearch> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty scale grid".into()));
    }
    if let Some(g) = grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidParameter(format!("grid value {g} is not strictly positive")));
    }
    if passes == 0 {
        return Err(Error::InvalidParameter("at least one pass is required".into()));
    }
    let anchor_col = ds.column_index(anchor)?;
    let names: Vec<&str> = features.iter().map(AsRef::as_ref).collect();
    let cols = ds.column_indices(&names)?;
    if cols.is_empty() || cols.contains(&anchor_col) {
        return Err(Error::InvalidParameter("need at least one feature distinct from the anchor".into()));
    }
    for (&c, name) in std::iter::once(&anchor_col).chain(&cols).zip(std::iter::once(&anchor).chain(&names)) {
        let first = ds.value(0, c);
        if ds.column(c).all(|v| v == first) {
            return Err(Error::InvalidParameter(format!("degenerate feature: {name} is constant")));
        }
    }

    let scorer = Scorer::new(ds, obj)?;
    let mut all_cols = vec![anchor_col];
    all_cols.extend(&cols);
    let score_with = |scales: &[f64]| {
        let mut full = vec![1.0];
        full.extend_from_slice(scales);
        scorer.score(&DistanceSpec::with_scales(all_cols.clone(), full)?)
    };

    let mut scales = vec![1.0; cols.len()];
    let mut sweeps = Vec::new();
    let mut evaluations = 0u64;
    for pass in 0..passes {
        for f in 0..cols.len() {
            let evals = grid
                .par_iter()
                .map(|&g| {
                    let mut trial = scales.clone();
                    trial[f] = g;
                    score_with(&trial)
                })
                .collect::<Result<Vec<_>>>()?;
            evaluations += grid.len() as u64;
            let current = scales[f].ln();
            let best = (0..grid.len())
                .min_by(|&a, &b| {
                    evals[a]
                        .objective
                        .total_cmp(&evals[b].objective)
                        .then_with(|| (grid[a].ln() - current).abs().total_cmp(&(grid[b].ln() - current).abs()))
                        .then_with(|| grid[a].total_cmp(&grid[b]))
                })
                .expect("non-empty grid");
            scales[f] = grid[best];
            sweeps.push(SweepProfile {
                pass,
                feature: names[f].to_string(),
                grid: grid.to_vec(),
                objectives: evals.iter().map(|e| e.objective).collect(),
                chosen: grid[best],
            });
        }
    }
    let eval = score_with(&scales)?;
    Ok(ScaleSearch {
        anchor: anchor.to_string(),
        features: names.iter().map(|s| s.to_string()).collect(),
        scales,
        eval,
        sweeps,
        evaluations,
    })
}
