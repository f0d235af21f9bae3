//! Neighbor ranks and conditional rank samples.
//!
//! The rank `r_ij` of point `j` relative to point `i` is its position in the
//! ascending order of distances from `i`, self excluded, so the nearest
//! neighbor has rank 1. Exact distance ties are broken by ascending point
//! index, which makes every row of ranks a permutation of `1..N-1`.
//!
//! Two routes produce conditional rank samples:
//! - [`rank_from_distances`] + [`nearest_neighbor_pairs`] + [`conditional_ranks`]
//!   sort every row of both spaces;
//! - [`conditional_sample`] selects only the `k` nearest neighbors in space A
//!   and counts the space-B rank of each one, never materializing a rank
//!   matrix.
//!
//! Both routes return identical samples.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::{pair_distance, DistanceMatrix, DistanceSpec, Space};

/// Fraction of tied pairs in a row above which a warning is logged.
pub const TIE_WARN_FRACTION: f64 = 0.01;

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TieStats {
    /// Number of (i, j) entries whose distance equals that of the preceding
    /// neighbor of `i`.
    pub tied_pairs: usize,
    /// Largest per-row fraction of tied entries.
    pub max_row_fraction: f64,
}

/// Full N×N neighbor ranks. Diagonal entries are stored as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    n: usize,
    ranks: Vec<u32>,
    ties: TieStats,
}

impl RankMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.n..(i + 1) * self.n]
    }

    pub fn ties(&self) -> TieStats {
        self.ties
    }
}

pub fn rank_from_distances(dm: &DistanceMatrix) -> Result<RankMatrix> {
    let n = dm.n();
    if n < 3 {
        return Err(Error::InsufficientRows { found: n, required: 3 });
    }
    let mut ranks = vec![0u32; n * n];
    let tied: Vec<usize> = ranks
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, out)| {
            let mut order: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dm.get(i, j), j)).collect();
            order.sort_unstable_by(by_distance_then_index);
            let mut tied = 0;
            for (pos, &(d, j)) in order.iter().enumerate() {
                out[j] = pos as u32 + 1;
                if pos > 0 && order[pos - 1].0 == d {
                    tied += 1;
                }
            }
            tied
        })
        .collect();

    let tied_pairs = tied.iter().sum();
    let max_row_fraction = tied.iter().copied().max().unwrap_or(0) as f64 / (n - 1) as f64;
    if max_row_fraction > TIE_WARN_FRACTION {
        log::warn!(
            "{:.1}% of neighbors are tied in at least one row; ranks depend on the index tie-break \
             (constant or discretized features?)",
            100.0 * max_row_fraction
        );
    }
    Ok(RankMatrix { n, ranks, ties: TieStats { tied_pairs, max_row_fraction } })
}

/// An ordered pair (i, j) where `j` is among the `k` nearest neighbors of `i`
/// in the conditioning space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborPair {
    pub i: usize,
    pub j: usize,
    pub rank_a: u32,
}

/// Conditioning pairs before their ranks in the second space are known.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPairs {
    pub n: usize,
    pub k: usize,
    pub pairs: Vec<NeighborPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankPair {
    pub i: usize,
    pub j: usize,
    pub rank_a: u32,
    pub rank_b: u32,
}

/// Ranks in space B of the `k` nearest space-A neighbors of each
/// conditioning point, ordered by `(i, rank_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRankSample {
    pub n: usize,
    pub k: usize,
    pub pairs: Vec<RankPair>,
    /// Pairs whose space-A selection or space-B rank involved an exact
    /// distance tie. Only the selection route counts these.
    pub tied_pairs: Option<usize>,
}

pub fn check_k(n: usize, k: usize) -> Result<()> {
    let max = n.saturating_sub(2);
    if k == 0 || k > max {
        Err(Error::KOutOfRange { k, max })
    } else {
        Ok(())
    }
}

pub fn nearest_neighbor_pairs(rm: &RankMatrix, k: usize) -> Result<NeighborPairs> {
    let n = rm.n();
    check_k(n, k)?;
    let mut pairs = Vec::with_capacity(n * k);
    let mut slots = vec![0usize; k];
    for i in 0..n {
        for (j, &r) in rm.row(i).iter().enumerate() {
            if j != i && (r as usize) <= k {
                slots[r as usize - 1] = j;
            }
        }
        pairs.extend(slots.iter().enumerate().map(|(r, &j)| NeighborPair { i, j, rank_a: r as u32 + 1 }));
    }
    Ok(NeighborPairs { n, k, pairs })
}

pub fn conditional_ranks(skeleton: &NeighborPairs, rm_b: &RankMatrix) -> Result<ConditionalRankSample> {
    if rm_b.n() != skeleton.n {
        return Err(Error::SizeMismatch { expected: skeleton.n, found: rm_b.n() });
    }
    let pairs = skeleton
        .pairs
        .iter()
        .map(|p| RankPair { i: p.i, j: p.j, rank_a: p.rank_a, rank_b: rm_b.get(p.i, p.j) })
        .collect();
    Ok(ConditionalRankSample { n: skeleton.n, k: skeleton.k, pairs, tied_pairs: None })
}

fn row_is_constant(row: &[f64], i: usize) -> bool {
    let mut it = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, d)| *d);
    let first = it.next();
    it.all(|d| Some(d) == first)
}

struct PointResult {
    pairs: Vec<RankPair>,
    tied: usize,
    varied_a: bool,
    varied_b: bool,
}

/// Conditional rank sample by order-statistic selection.
///
/// For each conditioning point, the `k` nearest neighbors in `a` are found by
/// selection (ties by index), then each one's rank in `b` is counted
/// directly. Points are processed in parallel and concatenated in the order
/// of `points`. Fails with [`Error::DegenerateDistance`] if either space has
/// all distances tied on every processed row.
pub fn conditional_sample(a: &Space, b: &Space, k: usize, points: &[usize]) -> Result<ConditionalRankSample> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::SizeMismatch { expected: n, found: b.n() });
    }
    check_k(n, k)?;
    if let Some(&bad) = points.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }

    let results: Vec<PointResult> = points
        .par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], Vec::with_capacity(n)),
            |(row_a, row_b, cands), &i| {
                a.fill_row(i, row_a);
                b.fill_row(i, row_b);
                cands.clear();
                cands.extend((0..n).filter(|&j| j != i).map(|j| (row_a[j], j)));
                if k < cands.len() {
                    cands.select_nth_unstable_by(k - 1, by_distance_then_index);
                    cands.truncate(k);
                }
                cands.sort_unstable_by(by_distance_then_index);

                let mut tied = 0;
                let pairs = cands
                    .iter()
                    .enumerate()
                    .map(|(pos, &(da, j))| {
                        let db = row_b[j];
                        let (mut less, mut eq_a, mut eq_b) = (0u32, false, false);
                        for m in 0..n {
                            if m == i || m == j {
                                continue;
                            }
                            let dm = row_b[m];
                            if dm < db || (dm == db && m < j) {
                                less += 1;
                            }
                            eq_b |= dm == db;
                            eq_a |= row_a[m] == da;
                        }
                        if eq_a || eq_b {
                            tied += 1;
                        }
                        RankPair { i, j, rank_a: pos as u32 + 1, rank_b: less + 1 }
                    })
                    .collect();
                PointResult { pairs, tied, varied_a: !row_is_constant(row_a, i), varied_b: !row_is_constant(row_b, i) }
            },
        )
        .collect();

    if !results.iter().any(|r| r.varied_a) || !results.iter().any(|r| r.varied_b) {
        return Err(Error::DegenerateDistance);
    }
    let tied_pairs = results.iter().map(|r| r.tied).sum();
    let pairs = results.into_iter().flat_map(|r| r.pairs).collect();
    Ok(ConditionalRankSample { n, k, pairs, tied_pairs: Some(tied_pairs) })
}

/// Rank of `j` relative to `i` by a plain full sort of the distances from
/// `i`. Test oracle for the fast routes.
pub fn oracle_rank(ds: &Dataset, spec: &DistanceSpec, i: usize, j: usize) -> Result<u32> {
    let n = ds.n_rows();
    spec.validate_for(ds)?;
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
    }
    if i == j {
        return Err(Error::SelfPair(i));
    }
    let mut all: Vec<(f64, usize)> = (0..n).filter(|&m| m != i).map(|m| (pair_distance(ds, spec, i, m), m)).collect();
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
    let pos = all.iter().position(|&(_, m)| m == j).expect("j is a neighbor of i");
    Ok(pos as u32 + 1)
}
