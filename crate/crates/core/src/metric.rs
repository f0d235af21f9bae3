//! Scaled Euclidean distances over feature subsets.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Default cap on the memory a materialized distance matrix may use (2 GiB).
pub const DEFAULT_MEMORY_LIMIT: u128 = 2 << 30;

/// A distance measure: an ordered feature subset with one positive scale per
/// feature, combined through the Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSpec {
    features: Vec<usize>,
    scales: Vec<f64>,
}

impl DistanceSpec {
    /// Unit-scale distance over `features`.
    pub fn new(features: Vec<usize>) -> Result<Self> {
        let scales = vec![1.0; features.len()];
        Self::with_scales(features, scales)
    }

    pub fn with_scales(features: Vec<usize>, scales: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSpec("empty feature list".into()));
        }
        if scales.len() != features.len() {
            return Err(Error::InvalidSpec(format!("{} scales for {} features", scales.len(), features.len())));
        }
        let mut sorted = features.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSpec("duplicate feature".into()));
        }
        if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidSpec(format!("non-positive scale {s}")));
        }
        Ok(Self { features, scales })
    }

    /// Unit-scale distance over the named columns of `ds`.
    pub fn from_names<S: AsRef<str>>(ds: &Dataset, names: &[S]) -> Result<Self> {
        Self::new(ds.column_indices(names)?)
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    /// The same features with every scale multiplied by `alpha`.
    pub fn rescaled(&self, alpha: f64) -> Result<Self> {
        Self::with_scales(self.features.clone(), self.scales.iter().map(|s| s * alpha).collect())
    }

    pub fn validate_for(&self, ds: &Dataset) -> Result<()> {
        match self.features.iter().find(|&&f| f >= ds.n_cols()) {
            Some(f) => Err(Error::InvalidSpec(format!("feature index {f} out of range for {} columns", ds.n_cols()))),
            None => Ok(()),
        }
    }

    pub fn column_names(&self, ds: &Dataset) -> Vec<String> {
        self.features.iter().map(|&f| ds.column_names()[f].clone()).collect()
    }
}

/// Distance between rows `i` and `j`. Evaluation order is fixed (features in
/// spec order), and swapping `i` and `j` only flips signs before squaring, so
/// the result is bit-identical in both orders.
#[inline]
pub fn pair_distance(ds: &Dataset, spec: &DistanceSpec, i: usize, j: usize) -> f64 {
    let (a, b) = (ds.row(i), ds.row(j));
    let mut acc = 0.0;
    for (&f, &s) in spec.features.iter().zip(&spec.scales) {
        let t = s * (a[f] - b[f]);
        acc += t * t;
    }
    acc.sqrt()
}

/// Dense symmetric N×N distance matrix with an exact zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

pub fn pairwise_distances(ds: &Dataset, spec: &DistanceSpec) -> Result<DistanceMatrix> {
    pairwise_distances_with_limit(ds, spec, DEFAULT_MEMORY_LIMIT)
}

/// Materialize all pairwise distances. Each unordered pair is computed once
/// and mirrored. Rows are filled in parallel; the output does not depend on
/// the number of worker threads.
pub fn pairwise_distances_with_limit(ds: &Dataset, spec: &DistanceSpec, limit_bytes: u128) -> Result<DistanceMatrix> {
    spec.validate_for(ds)?;
    let n = ds.n_rows();
    let required = (n as u128) * (n as u128) * std::mem::size_of::<f64>() as u128;
    if required > limit_bytes {
        return Err(Error::MemoryLimit { n, required, limit: limit_bytes });
    }

    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
            *slot = pair_distance(ds, spec, i, j);
        }
    });
    for i in 0..n {
        for j in (i + 1)..n {
            values[j * n + i] = values[i * n + j];
        }
    }
    Ok(DistanceMatrix { n, values })
}

/// A distance measure over a fixed set of points, either computed on demand
/// from the features or read from a materialized matrix.
#[derive(Debug, Clone, Copy)]
pub enum Space<'a> {
    Features { ds: &'a Dataset, spec: &'a DistanceSpec },
    Precomputed(&'a DistanceMatrix),
}

impl<'a> Space<'a> {
    pub fn features(ds: &'a Dataset, spec: &'a DistanceSpec) -> Result<Self> {
        spec.validate_for(ds)?;
        Ok(Space::Features { ds, spec })
    }

    pub fn n(&self) -> usize {
        match self {
            Space::Features { ds, .. } => ds.n_rows(),
            Space::Precomputed(m) => m.n(),
        }
    }

    /// Write the distances from point `i` to every point into `out`.
    /// `out[i]` is set to zero.
    pub fn fill_row(&self, i: usize, out: &mut [f64]) {
        match self {
            Space::Features { ds, spec } => {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = if j == i { 0.0 } else { pair_distance(ds, spec, i, j) };
                }
            }
            Space::Precomputed(m) => out.copy_from_slice(m.row(i)),
        }
    }
}
