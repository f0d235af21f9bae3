//! Tabular datasets: an immutable N×D table of finite reals with named
//! columns, plus optional group labels and integer time index for panel data.
//!
//! Rows holding missing or non-finite entries are dropped at ingestion and
//! counted, never imputed. Transformations return new datasets.

mod csv_io;
mod synth;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use synth::{synthesize, SynthKind, SynthSpec};

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Minimum number of rows a dataset may hold.
pub const MIN_ROWS: usize = 3;

/// Opaque per-row group labels, e.g. the nation of a panel observation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupColumn {
    pub name: String,
    pub labels: Vec<String>,
}

/// Per-row integer time index, e.g. a week number.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeColumn {
    pub name: String,
    pub index: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_rows: usize,
    columns: Vec<String>,
    groups: Option<GroupColumn>,
    time: Option<TimeColumn>,
}

/// A dataset together with the number of rows dropped while producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub dataset: Dataset,
    pub dropped: usize,
}

impl Dataset {
    /// Build a dataset from row-major values.
    pub fn new(columns: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidDataset("at least one column is required".into()));
        }
        let mut seen = HashSet::new();
        for name in &columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if !values.len().is_multiple_of(columns.len()) {
            return Err(Error::InvalidDataset(format!(
                "{} values do not fill rows of {} columns",
                values.len(),
                columns.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / columns.len(),
                columns[pos % columns.len()]
            )));
        }
        let n_rows = values.len() / columns.len();
        if n_rows < MIN_ROWS {
            return Err(Error::InsufficientRows { found: n_rows, required: MIN_ROWS });
        }
        Ok(Self { values, n_rows, columns, groups: None, time: None })
    }

    /// Build a dataset from equally long columns.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let n = columns.first().map_or(0, |(_, c)| c.len());
        if let Some((name, c)) = columns.iter().find(|(_, c)| c.len() != n) {
            return Err(Error::InvalidDataset(format!("column {name} has {} rows, expected {n}", c.len())));
        }
        let d = columns.len();
        let mut values = vec![0.0; n * d];
        for (j, (_, col)) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[i * d + j] = *v;
            }
        }
        Self::new(columns.into_iter().map(|(name, _)| name).collect(), values)
    }

    pub fn with_groups(mut self, name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::SizeMismatch { expected: self.n_rows, found: labels.len() });
        }
        let name = name.into();
        self.check_auxiliary_name(&name)?;
        self.groups = Some(GroupColumn { name, labels });
        Ok(self)
    }

    pub fn with_time(mut self, name: impl Into<String>, index: Vec<i64>) -> Result<Self> {
        if index.len() != self.n_rows {
            return Err(Error::SizeMismatch { expected: self.n_rows, found: index.len() });
        }
        let name = name.into();
        self.check_auxiliary_name(&name)?;
        self.time = Some(TimeColumn { name, index });
        Ok(self)
    }

    fn check_auxiliary_name(&self, name: &str) -> Result<()> {
        let taken = self.columns.iter().any(|c| c == name)
            || self.groups.as_ref().is_some_and(|g| g.name == name)
            || self.time.as_ref().is_some_and(|t| t.name == name);
        if taken {
            Err(Error::NameCollision(name.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.columns
    }

    pub fn groups(&self) -> Option<&GroupColumn> {
        self.groups.as_ref()
    }

    pub fn time(&self) -> Option<&TimeColumn> {
        self.time.as_ref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.columns.len();
        &self.values[i * d..(i + 1) * d]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.columns.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(j).step_by(self.columns.len()).copied()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.column_index(n.as_ref())).collect()
    }

    /// New dataset holding the given rows, in the given order. Group and time
    /// columns follow their rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::IndexOutOfRange { index: bad, n: self.n_rows });
        }
        let values = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        let mut out = Self::new(self.columns.clone(), values)?;
        out.groups = self
            .groups
            .as_ref()
            .map(|g| GroupColumn { name: g.name.clone(), labels: rows.iter().map(|&r| g.labels[r].clone()).collect() });
        out.time = self
            .time
            .as_ref()
            .map(|t| TimeColumn { name: t.name.clone(), index: rows.iter().map(|&r| t.index[r]).collect() });
        Ok(out)
    }

    /// Append `numerator / denominator` as a new column. Rows with a zero
    /// denominator are dropped and counted.
    pub fn derive_ratio(&self, numerator: &str, denominator: &str, new_name: &str) -> Result<Filtered> {
        let num = self.column_index(numerator)?;
        let den = self.column_index(denominator)?;
        if self.columns.iter().any(|c| c == new_name) {
            return Err(Error::NameCollision(new_name.to_string()));
        }

        let mut keep = Vec::with_capacity(self.n_rows);
        let mut ratios = Vec::with_capacity(self.n_rows);
        for i in 0..self.n_rows {
            let d = self.value(i, den);
            if d == 0.0 {
                continue;
            }
            let r = self.value(i, num) / d;
            if r.is_finite() {
                keep.push(i);
                ratios.push(r);
            }
        }
        let dropped = self.n_rows - keep.len();
        if keep.len() < MIN_ROWS {
            return Err(Error::InsufficientRows { found: keep.len(), required: MIN_ROWS });
        }

        let base = self.select_rows(&keep)?;
        let d = self.n_cols();
        let mut values = Vec::with_capacity(keep.len() * (d + 1));
        for (i, r) in ratios.iter().enumerate() {
            values.extend_from_slice(base.row(i));
            values.push(*r);
        }
        let mut columns = self.columns.clone();
        columns.push(new_name.to_string());
        let mut dataset = Self::new(columns, values)?;
        dataset.groups = base.groups;
        dataset.time = base.time;
        Ok(Filtered { dataset, dropped })
    }

    /// Replace each named column by `(x - mean) / std` using the sample
    /// standard deviation.
    pub fn standardize<S: AsRef<str>>(&self, cols: &[S]) -> Result<Self> {
        let mut out = self.clone();
        let d = self.n_cols();
        let n = self.n_rows as f64;
        for name in cols {
            let j = self.column_index(name.as_ref())?;
            let mean = self.column(j).sum::<f64>() / n;
            let var = self.column(j).map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            let std = var.sqrt();
            if std.is_nan() || std <= 0.0 {
                return Err(Error::ZeroVariance(name.as_ref().to_string()));
            }
            for i in 0..self.n_rows {
                out.values[i * d + j] = (self.values[i * d + j] - mean) / std;
            }
        }
        Ok(out)
    }
}
