//! Time-lagged pairing of panel data and lag scans.
//!
//! A panel holds one row per `(group, t)`. For a lag δ, each row at time t
//! is joined with the row of the same group at time t+δ; the source columns
//! come from t and the target columns from t+δ. Time is an opaque integer
//! index: no calendar logic, no resampling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Dataset, MIN_ROWS};
use crate::error::{Error, Result};
use crate::imbalance::{information_imbalance, ImbalanceEstimate, ImbalanceOptions};
use crate::metric::DistanceSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagSpec {
    /// Group column; `None` treats the whole dataset as a single series.
    pub group_col: Option<String>,
    pub time_col: String,
    pub source_cols: Vec<String>,
    pub target_cols: Vec<String>,
    pub lags: Vec<i64>,
}

impl LagSpec {
    /// The same pairing with source and target exchanged.
    pub fn swapped(&self) -> Self {
        Self { source_cols: self.target_cols.clone(), target_cols: self.source_cols.clone(), ..self.clone() }
    }

    fn validate(&self, ds: &Dataset) -> Result<()> {
        if self.source_cols.is_empty() || self.target_cols.is_empty() {
            return Err(Error::InvalidLag("source and target columns must be non-empty".into()));
        }
        match ds.time() {
            Some(t) if t.name == self.time_col => {}
            _ => return Err(Error::InvalidLag(format!("time column {} not loaded", self.time_col))),
        }
        match (&self.group_col, ds.groups()) {
            (None, _) => {}
            (Some(g), Some(loaded)) if loaded.name == *g => {}
            (Some(g), _) => return Err(Error::InvalidLag(format!("group column {g} not loaded"))),
        }
        ds.column_indices(&self.source_cols)?;
        ds.column_indices(&self.target_cols)?;
        Ok(())
    }
}

pub fn source_name(col: &str) -> String {
    format!("{col}@t")
}

pub fn target_name(col: &str, lag: i64) -> String {
    format!("{col}@t{lag:+}")
}

/// Rows keyed by `(group, t)` in lexicographic order.
fn keyed_rows<'a>(ds: &'a Dataset, spec: &LagSpec) -> Result<BTreeMap<(&'a str, i64), usize>> {
    let times = &ds.time().expect("validated").index;
    let group_of = |i: usize| match (&spec.group_col, ds.groups()) {
        (Some(_), Some(g)) => g.labels[i].as_str(),
        _ => "",
    };
    let mut keys = BTreeMap::new();
    for (i, &t) in times.iter().enumerate() {
        if keys.insert((group_of(i), t), i).is_some() {
            return Err(Error::DuplicateKey { group: group_of(i).to_string(), time: t });
        }
    }
    Ok(keys)
}

/// Join each `(group, t)` row with `(group, t + lag)`. Columns are the
/// source columns at t (named `col@t`) followed by the target columns at
/// t+lag (named `col@t+lag`). The result carries the group labels and the
/// source time t.
pub fn build_lagged_pairs(ds: &Dataset, spec: &LagSpec, lag: i64) -> Result<Dataset> {
    spec.validate(ds)?;
    let src = ds.column_indices(&spec.source_cols)?;
    let tgt = ds.column_indices(&spec.target_cols)?;
    let keys = keyed_rows(ds, spec)?;

    let pairs: Vec<(&str, i64, usize, usize)> = keys
        .iter()
        .filter_map(|(&(g, t), &i)| {
            let j = *keys.get(&(g, t.checked_add(lag)?))?;
            Some((g, t, i, j))
        })
        .collect();
    if pairs.len() < MIN_ROWS {
        return Err(Error::InsufficientRows { found: pairs.len(), required: MIN_ROWS });
    }

    let mut columns: Vec<(String, Vec<f64>)> = Vec::with_capacity(src.len() + tgt.len());
    for (name, &c) in spec.source_cols.iter().zip(&src) {
        columns.push((source_name(name), pairs.iter().map(|p| ds.value(p.2, c)).collect()));
    }
    for (name, &c) in spec.target_cols.iter().zip(&tgt) {
        columns.push((target_name(name, lag), pairs.iter().map(|p| ds.value(p.3, c)).collect()));
    }
    let mut out = Dataset::from_columns(columns)?;
    if let Some(g) = &spec.group_col {
        out = out.with_groups(g.clone(), pairs.iter().map(|p| p.0.to_string()).collect())?;
    }
    out.with_time(spec.time_col.clone(), pairs.iter().map(|p| p.1).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LagStatus {
    Ok,
    InsufficientPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagRecord {
    pub lag: i64,
    pub pairs: usize,
    pub status: LagStatus,
    /// `Δ(source_t → target_{t+lag})`
    pub forward: Option<ImbalanceEstimate>,
    /// `Δ(target_{t+lag} → source_t)`
    pub backward: Option<ImbalanceEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagScanResult {
    /// One record per lag, in ascending lag order.
    pub records: Vec<LagRecord>,
    /// Lag with the smallest forward imbalance; the first one on ties.
    pub best_forward_lag: Option<i64>,
}

impl LagScanResult {
    pub fn record(&self, lag: i64) -> Option<&LagRecord> {
        self.records.iter().find(|r| r.lag == lag)
    }

    pub fn forward(&self, lag: i64) -> Option<f64> {
        self.record(lag)?.forward.as_ref().map(|e| e.delta)
    }
}

/// Imbalance in both directions between the source at t and the target at
/// t+δ, for every δ in `spec.lags`. Lags with fewer than 3 pairs are
/// flagged and skipped.
pub fn lag_scan(ds: &Dataset, spec: &LagSpec, opts: &ImbalanceOptions) -> Result<LagScanResult> {
    spec.validate(ds)?;
    if spec.lags.is_empty() {
        return Err(Error::InvalidLag("no lags requested".into()));
    }
    let mut lags = spec.lags.clone();
    lags.sort_unstable();
    if lags.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidLag("lags must be distinct".into()));
    }
    keyed_rows(ds, spec)?;

    let n_src = spec.source_cols.len();
    let src_spec = DistanceSpec::new((0..n_src).collect())?;
    let tgt_spec = DistanceSpec::new((n_src..n_src + spec.target_cols.len()).collect())?;

    let records = lags
        .par_iter()
        .map(|&lag| match build_lagged_pairs(ds, spec, lag) {
            Ok(paired) => {
                let fwd = information_imbalance(&paired, &src_spec, &tgt_spec, opts)?;
                let bwd = information_imbalance(&paired, &tgt_spec, &src_spec, opts)?;
                Ok(LagRecord {
                    lag,
                    pairs: paired.n_rows(),
                    status: LagStatus::Ok,
                    forward: Some(fwd),
                    backward: Some(bwd),
                })
            }
            Err(Error::InsufficientRows { found, .. }) => {
                log::warn!("lag {lag}: only {found} paired rows, skipped");
                Ok(LagRecord { lag, pairs: found, status: LagStatus::InsufficientPairs, forward: None, backward: None })
            }
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    let best_forward_lag = records
        .iter()
        .filter_map(|r| r.forward.as_ref().map(|f| (r.lag, f.delta)))
        .fold(None::<(i64, f64)>, |best, (lag, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((lag, d)),
        })
        .map(|(lag, _)| lag);
    Ok(LagScanResult { records, best_forward_lag })
}
