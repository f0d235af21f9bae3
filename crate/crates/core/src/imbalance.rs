//! The information imbalance between two distance measures.
//!
//! For spaces A and B over the same N points, the imbalance from A to B is
//! estimated as twice the mean space-B rank of the space-A nearest
//! neighbors, divided by N:
//!
//! ```text
//! Δ(A→B) ≈ 2 ⟨r^B | r^A = 1⟩ / N
//! ```
//!
//! It is the finite-sample form of `2 lim_{ε→0} ⟨c_B | c_A = ε⟩`, where the
//! copula variable `c_A` is the probability mass within distance `d_A` of a
//! point (estimated by `r_A / N`). Equivalent spaces give `Δ → 0` (exactly
//! `2/N` on a finite sample) and independent spaces give `Δ ≈ 1`, because
//! the space-B rank of a space-A neighbor is then uniform on `1..N-1`.
//!
//! Plotting `(Δ(A→B), Δ(B→A))` on the imbalance plane separates four kinds
//! of relationship; see [`classify`].
//!
//! With `k > 1` the average runs over the `k` nearest space-A neighbors. This
//! is an extension of the nearest-neighbor estimator and is flagged as such
//! in [`ImbalanceEstimate::is_extension`].

use std::f64::consts::SQRT_2;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::{pairwise_distances, DistanceSpec, Space};
use crate::rank::{
    conditional_ranks, conditional_sample, nearest_neighbor_pairs, rank_from_distances, ConditionalRankSample,
};

/// Uniform subsample of conditioning points, drawn without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsample {
    pub points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImbalanceOptions {
    /// Number of space-A neighbors per conditioning point.
    pub k: usize,
    /// Restrict the conditioning points, for large N. Ranks are still taken
    /// over all N points.
    pub subsample: Option<Subsample>,
}

impl Default for ImbalanceOptions {
    fn default() -> Self {
        Self { k: 1, subsample: None }
    }
}

impl ImbalanceOptions {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    /// Conditioning points in ascending index order.
    pub fn conditioning_points(&self, n: usize) -> Result<Vec<usize>> {
        match self.subsample {
            None => Ok((0..n).collect()),
            Some(Subsample { points, seed }) => {
                if points == 0 || points > n {
                    return Err(Error::InvalidParameter(format!(
                        "subsample of {points} conditioning points from N={n}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut idx = index::sample(&mut rng, n, points).into_vec();
                idx.sort_unstable();
                Ok(idx)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceEstimate {
    pub delta: f64,
    pub n: usize,
    pub k: usize,
    /// Number of conditioning pairs averaged over.
    pub pairs: usize,
    pub mean_rank: f64,
    /// Standard error of the mean of the per-pair contributions `2 r^B / N`.
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tied_pairs: Option<usize>,
}

impl ImbalanceEstimate {
    pub fn is_extension(&self) -> bool {
        self.k > 1
    }
}

/// Reduce a conditional rank sample to an estimate. Sums are exact integer
/// sums, so the result does not depend on the order of the pairs.
pub fn estimate_from_sample(sample: &ConditionalRankSample) -> ImbalanceEstimate {
    let m = sample.pairs.len() as u128;
    let (sum, sum_sq) = sample.pairs.iter().fold((0u128, 0u128), |(s, q), p| {
        let r = p.rank_b as u128;
        (s + r, q + r * r)
    });
    let n = sample.n as f64;
    let mean_rank = sum as f64 / m as f64;
    let rank_var = if m > 1 { (m * sum_sq - sum * sum) as f64 / (m * (m - 1)) as f64 } else { 0.0 };
    let stderr = 2.0 / n * (rank_var / m as f64).sqrt();
    ImbalanceEstimate {
        delta: 2.0 * mean_rank / n,
        n: sample.n,
        k: sample.k,
        pairs: sample.pairs.len(),
        mean_rank,
        stderr,
        tied_pairs: sample.tied_pairs,
    }
}

fn warn_on_ties(est: &ImbalanceEstimate) {
    if let Some(t) = est.tied_pairs {
        if t * 100 > est.pairs {
            log::warn!("{t} of {} conditioning pairs involve exact distance ties", est.pairs);
        }
    }
}

/// Imbalance between two arbitrary spaces over the same points.
pub fn imbalance_between(a: &Space, b: &Space, opts: &ImbalanceOptions) -> Result<ImbalanceEstimate> {
    let points = opts.conditioning_points(a.n())?;
    let sample = conditional_sample(a, b, opts.k, &points)?;
    let est = estimate_from_sample(&sample);
    warn_on_ties(&est);
    Ok(est)
}

/// Δ(A→B) over the feature spaces `spec_a` and `spec_b` of `ds`.
pub fn information_imbalance(
    ds: &Dataset,
    spec_a: &DistanceSpec,
    spec_b: &DistanceSpec,
    opts: &ImbalanceOptions,
) -> Result<ImbalanceEstimate> {
    imbalance_between(&Space::features(ds, spec_a)?, &Space::features(ds, spec_b)?, opts)
}

/// Δ(A→B) through full distance and rank matrices. Slower, and used to
/// cross-check [`information_imbalance`].
pub fn information_imbalance_by_sorting(
    ds: &Dataset,
    spec_a: &DistanceSpec,
    spec_b: &DistanceSpec,
    k: usize,
) -> Result<ImbalanceEstimate> {
    let ra = rank_from_distances(&pairwise_distances(ds, spec_a)?)?;
    let rb = rank_from_distances(&pairwise_distances(ds, spec_b)?)?;
    let sample = conditional_ranks(&nearest_neighbor_pairs(&ra, k)?, &rb)?;
    Ok(estimate_from_sample(&sample))
}

/// Both directions, `(Δ(A→B), Δ(B→A))`.
pub fn imbalance_pair(
    ds: &Dataset,
    spec_a: &DistanceSpec,
    spec_b: &DistanceSpec,
    opts: &ImbalanceOptions,
) -> Result<(ImbalanceEstimate, ImbalanceEstimate)> {
    Ok((information_imbalance(ds, spec_a, spec_b, opts)?, information_imbalance(ds, spec_b, spec_a, opts)?))
}

/// A point on the imbalance plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub delta_ab: f64,
    pub delta_ba: f64,
    pub label: String,
}

impl PlanePoint {
    pub fn new(delta_ab: f64, delta_ba: f64, label: impl Into<String>) -> Self {
        Self { delta_ab, delta_ba, label: label.into() }
    }

    pub fn swapped(&self) -> Self {
        Self { delta_ab: self.delta_ba, delta_ba: self.delta_ab, label: self.label.clone() }
    }
}

pub fn plane_point(
    ds: &Dataset,
    spec_a: &DistanceSpec,
    spec_b: &DistanceSpec,
    opts: &ImbalanceOptions,
    label: impl Into<String>,
) -> Result<PlanePoint> {
    let (ab, ba) = imbalance_pair(ds, spec_a, spec_b, opts)?;
    Ok(PlanePoint::new(ab.delta, ba.delta, label))
}

/// `(Δ(A→B) + Δ(B→A)) / √2`, a single dissimilarity between two spaces.
pub fn symmetric_imbalance(pp: &PlanePoint) -> f64 {
    (pp.delta_ab + pp.delta_ba) / SQRT_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    Equivalent,
    AContainsB,
    BContainsA,
    SymmetricShared,
    Independent,
}

impl Relationship {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relationship::Equivalent => "equivalent",
            Relationship::AContainsB => "a_contains_b",
            Relationship::BContainsA => "b_contains_a",
            Relationship::SymmetricShared => "symmetric_shared",
            Relationship::Independent => "independent",
        }
    }
}

impl std::fmt::Display for Relationship {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Region boundaries on the imbalance plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    tau_low: f64,
    gap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { tau_low: 0.25, gap: 0.25 }
    }
}

impl Thresholds {
    pub fn new(tau_low: f64, gap: f64) -> Result<Self> {
        for (name, v) in [("tau_low", tau_low), ("gap", gap)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidThresholds(format!("{name}={v} is outside (0, 1)")));
            }
        }
        Ok(Self { tau_low, gap })
    }

    pub fn tau_low(&self) -> f64 {
        self.tau_low
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: Relationship,
    pub thresholds: Thresholds,
}

/// Place a plane point in one of the relationship regions:
///
/// - both imbalances below `tau_low`: equivalent;
/// - `Δ(A→B) < tau_low ≤ Δ(B→A)` with a difference above `gap`: A contains B
///   (and the mirror case);
/// - both above `1 - tau_low`: independent;
/// - anything else: the spaces share information symmetrically.
pub fn classify(pp: &PlanePoint, th: Thresholds) -> Classification {
    let (ab, ba, tau) = (pp.delta_ab, pp.delta_ba, th.tau_low);
    let class = if ab < tau && ba < tau {
        Relationship::Equivalent
    } else if ab < tau && tau <= ba && ba - ab > th.gap {
        Relationship::AContainsB
    } else if ba < tau && tau <= ab && ab - ba > th.gap {
        Relationship::BContainsA
    } else if ab > 1.0 - tau && ba > 1.0 - tau {
        Relationship::Independent
    } else {
        Relationship::SymmetricShared
    };
    Classification { class, thresholds: th }
}

/// Distribution of space-B ranks over the conditioning pairs, binned evenly
/// over the rank range `[1, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalHistogram {
    pub n: usize,
    pub k: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
}

impl ConditionalHistogram {
    /// Bin holding rank `r` (1-based) for `bins` bins over `1..N-1`.
    pub fn bin_of(rank: u32, n: usize, bins: usize) -> usize {
        ((rank as usize - 1) * bins) / (n - 1)
    }

    pub fn from_sample(sample: &ConditionalRankSample, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
        }
        let n = sample.n;
        let mut counts = vec![0u64; bins];
        for p in &sample.pairs {
            counts[Self::bin_of(p.rank_b, n, bins)] += 1;
        }
        let total = sample.pairs.len() as f64;
        let frequencies = counts.iter().map(|&c| c as f64 / total).collect();
        let edges = (0..=bins).map(|b| 1.0 + (b * (n - 1)) as f64 / bins as f64).collect();
        Ok(Self { n, k: sample.k, edges, counts, frequencies })
    }
}

pub fn conditional_histogram(
    ds: &Dataset,
    spec_a: &DistanceSpec,
    spec_b: &DistanceSpec,
    opts: &ImbalanceOptions,
    bins: usize,
) -> Result<ConditionalHistogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let points = opts.conditioning_points(ds.n_rows())?;
    let sample = conditional_sample(&Space::features(ds, spec_a)?, &Space::features(ds, spec_b)?, opts.k, &points)?;
    ConditionalHistogram::from_sample(&sample, bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize, SynthKind, SynthSpec};
    use proptest::prelude::*;
    use rand::Rng;

    fn gaussian(cols: usize, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * cols).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        Dataset::new((0..cols).map(|j| format!("c{j}")).collect(), v).unwrap()
    }

    fn spec(f: &[usize]) -> DistanceSpec {
        DistanceSpec::new(f.to_vec()).unwrap()
    }

    fn aniso(seed: u64) -> Dataset {
        synthesize(&SynthSpec { kind: SynthKind::GaussAniso3d { sigmas: [1.0, 1.0, 0.1] }, n: 1000, seed }).unwrap()
    }

    #[test]
    fn identity_is_two_over_n() {
        let ds = gaussian(3, 100, 1);
        let e = information_imbalance(&ds, &spec(&[0, 1]), &spec(&[0, 1]), &ImbalanceOptions::default()).unwrap();
        assert_eq!(e.delta, 0.02);
        assert_eq!(e.mean_rank, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn independent_columns_near_one() {
        let ds = gaussian(2, 1000, 17);
        let e = information_imbalance(&ds, &spec(&[0]), &spec(&[1]), &ImbalanceOptions::default()).unwrap();
        assert!((0.9..=1.1).contains(&e.delta), "{e:?}");
        // Uniform ranks on 1..N-1: per-pair sd ≈ 2/√12, over √N pairs.
        assert!((e.stderr - 2.0 / 12f64.sqrt() / 1000f64.sqrt()).abs() < 0.005);
    }

    #[test]
    fn xyz_and_xy_nearly_equivalent() {
        let ds = aniso(7);
        let (ab, ba) = imbalance_pair(&ds, &spec(&[0, 1, 2]), &spec(&[0, 1]), &ImbalanceOptions::default()).unwrap();
        assert!(ab.delta < 0.1 && ba.delta < 0.1, "{} {}", ab.delta, ba.delta);
    }

    #[test]
    fn plane_point_examples() {
        let ds = aniso(7);
        let opts = ImbalanceOptions::default();
        let indep = plane_point(&ds, &spec(&[0]), &spec(&[1]), &opts, "x|y").unwrap();
        assert!((indep.delta_ab - 1.0).abs() < 0.1 && (indep.delta_ba - 1.0).abs() < 0.1);

        let contained = plane_point(&ds, &spec(&[0, 1, 2]), &spec(&[0]), &opts, "xyz|x").unwrap();
        // Population value of Δ(x→xyz) is about 0.55 at this N.
        assert!(contained.delta_ab < 0.3 && contained.delta_ba > 0.45, "{contained:?}");
        assert!(contained.delta_ba > contained.delta_ab);

        let same = plane_point(&ds, &spec(&[1]), &spec(&[1]), &opts, "y|y").unwrap();
        assert_eq!((same.delta_ab, same.delta_ba), (0.002, 0.002));
    }

    #[test]
    fn symmetric_values() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-4;
        assert!(close(symmetric_imbalance(&PlanePoint::new(0.1, 0.1, "")), 0.1414));
        assert!(close(symmetric_imbalance(&PlanePoint::new(0.02, 0.02, "")), 0.02828));
        assert_eq!(symmetric_imbalance(&PlanePoint::new(1.0, 1.0, "")), 2.0 / SQRT_2);
    }

    #[test]
    fn classification_rules() {
        let th = Thresholds::default();
        let c = |a, b| classify(&PlanePoint::new(a, b, ""), th).class;
        assert_eq!(c(0.03, 0.05), Relationship::Equivalent);
        assert_eq!(c(0.08, 0.9), Relationship::AContainsB);
        assert_eq!(c(0.9, 0.08), Relationship::BContainsA);
        assert_eq!(c(0.97, 0.99), Relationship::Independent);
        assert_eq!(c(0.4, 0.45), Relationship::SymmetricShared);
        // Contained side below tau_low but the gap is too small.
        assert_eq!(c(0.2, 0.3), Relationship::SymmetricShared);
        assert!(Thresholds::new(0.0, 0.2).is_err());
        assert!(Thresholds::new(0.2, 1.0).is_err());
        assert_eq!(classify(&PlanePoint::new(0.5, 0.5, ""), th).thresholds, th);
    }

    #[test]
    fn histogram_of_identical_spaces() {
        let ds = gaussian(2, 200, 4);
        let h = conditional_histogram(&ds, &spec(&[0, 1]), &spec(&[0, 1]), &ImbalanceOptions::default(), 10).unwrap();
        assert_eq!(h.counts[0], 200);
        assert_eq!(h.frequencies[0], 1.0);
        assert_eq!(h.edges.first(), Some(&1.0));
        assert_eq!(h.edges.last(), Some(&200.0));
        assert!(conditional_histogram(&ds, &spec(&[0]), &spec(&[1]), &ImbalanceOptions::default(), 0).is_err());
    }

    #[test]
    fn histogram_uniform_under_independence() {
        let ds = gaussian(2, 1000, 23);
        let bins = 10;
        let h = conditional_histogram(&ds, &spec(&[0]), &spec(&[1]), &ImbalanceOptions::default(), bins).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        assert!((h.frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for b in 0..bins {
            // Ranks 1..=999 falling into bin b, each equally likely.
            let width = (1..1000u32).filter(|&r| ConditionalHistogram::bin_of(r, 1000, bins) == b).count();
            let p = width as f64 / 999.0;
            let (e, sd) = (1000.0 * p, (1000.0 * p * (1.0 - p)).sqrt());
            assert!((h.counts[b] as f64 - e).abs() < 4.0 * sd, "bin {b}: {} vs {e}", h.counts[b]);
        }
    }

    #[test]
    fn richer_space_gives_more_peaked_histogram() {
        let ds = aniso(7);
        let opts = ImbalanceOptions::default();
        let fwd = conditional_histogram(&ds, &spec(&[0, 1]), &spec(&[0]), &opts, 20).unwrap();
        let back = conditional_histogram(&ds, &spec(&[0]), &spec(&[0, 1]), &opts, 20).unwrap();
        assert!(fwd.frequencies[0] > back.frequencies[0]);
    }

    #[test]
    fn extension_flag_and_subsampling() {
        let ds = gaussian(2, 300, 2);
        let e = information_imbalance(&ds, &spec(&[0]), &spec(&[0, 1]), &ImbalanceOptions::with_k(3)).unwrap();
        assert!(e.is_extension());
        assert_eq!(e.pairs, 900);

        let opts = ImbalanceOptions { k: 1, subsample: Some(Subsample { points: 100, seed: 9 }) };
        let s1 = information_imbalance(&ds, &spec(&[0]), &spec(&[1]), &opts).unwrap();
        let s2 = information_imbalance(&ds, &spec(&[0]), &spec(&[1]), &opts).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.pairs, 100);
        assert_eq!(s1.n, 300);
        let bad = ImbalanceOptions { k: 1, subsample: Some(Subsample { points: 301, seed: 0 }) };
        assert!(information_imbalance(&ds, &spec(&[0]), &spec(&[1]), &bad).is_err());
    }

    #[test]
    fn degenerate_space_is_an_error() {
        let cols = vec![("x".into(), vec![0.1, 0.5, 0.2, 0.9]), ("c".into(), vec![3.0; 4])];
        let ds = Dataset::from_columns(cols).unwrap();
        let err = information_imbalance(&ds, &spec(&[0]), &spec(&[1]), &ImbalanceOptions::default()).unwrap_err();
        assert_eq!(err.to_string(), "degenerate distance measure: all pairwise distances are tied");
    }

    proptest! {
        #[test]
        fn identity_law_and_bounds(seed in any::<u64>(), n in 3usize..120, d in 1usize..4) {
            let ds = gaussian(d + 1, n, seed);
            let opts = ImbalanceOptions::default();
            let a = spec(&(0..d).collect::<Vec<_>>());
            let b = spec(&[d]);
            let same = information_imbalance(&ds, &a, &a, &opts).unwrap();
            prop_assert_eq!(same.delta, 2.0 / n as f64);
            let e = information_imbalance(&ds, &a, &b, &opts).unwrap();
            prop_assert!(e.delta >= 2.0 / n as f64 && e.delta <= 2.0 * (n - 1) as f64 / n as f64);
            prop_assert_eq!(e.delta, 2.0 * e.mean_rank / n as f64);
        }

        #[test]
        fn scale_invariance_is_exact(seed in any::<u64>(), alpha in prop::sample::select(vec![1e-3, 0.3, 1.0, 7.0, 1e3]),
                                     beta in prop::sample::select(vec![1e-3, 0.3, 1.0, 7.0, 1e3])) {
            let ds = gaussian(3, 80, seed);
            let opts = ImbalanceOptions::default();
            let (a, b) = (spec(&[0, 1]), spec(&[1, 2]));
            let base = information_imbalance(&ds, &a, &b, &opts).unwrap();
            let scaled = information_imbalance(&ds, &a.rescaled(alpha).unwrap(), &b.rescaled(beta).unwrap(), &opts).unwrap();
            prop_assert_eq!(base.delta.to_bits(), scaled.delta.to_bits());
        }

        #[test]
        fn swapping_spaces_swaps_plane_components(seed in any::<u64>()) {
            let ds = gaussian(3, 60, seed);
            let opts = ImbalanceOptions::default();
            let (a, b) = (spec(&[0]), spec(&[1, 2]));
            let p = plane_point(&ds, &a, &b, &opts, "p").unwrap();
            let q = plane_point(&ds, &b, &a, &opts, "p").unwrap();
            prop_assert_eq!(p.swapped(), q);
        }

        #[test]
        fn fast_route_matches_sorting_route(seed in any::<u64>(), n in 3usize..150, k in 1usize..3) {
            let k = k.min(n - 2);
            let ds = gaussian(3, n, seed);
            let (a, b) = (spec(&[0, 2]), spec(&[1]));
            let fast = information_imbalance(&ds, &a, &b, &ImbalanceOptions::with_k(k)).unwrap();
            let slow = information_imbalance_by_sorting(&ds, &a, &b, k).unwrap();
            prop_assert_eq!(fast.delta.to_bits(), slow.delta.to_bits());
            prop_assert_eq!(fast.stderr.to_bits(), slow.stderr.to_bits());
            prop_assert_eq!(fast.mean_rank.to_bits(), slow.mean_rank.to_bits());
        }

        #[test]
        fn row_order_does_not_matter(seed in any::<u64>(), n in 5usize..80) {
            let ds = gaussian(2, n, seed);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(!seed);
            for i in (1..n).rev() { perm.swap(i, rng.random_range(0..=i)); }
            let shuffled = ds.select_rows(&perm).unwrap();
            let opts = ImbalanceOptions::default();
            let e1 = information_imbalance(&ds, &spec(&[0]), &spec(&[1]), &opts).unwrap();
            let e2 = information_imbalance(&shuffled, &spec(&[0]), &spec(&[1]), &opts).unwrap();
            prop_assert_eq!(e1.delta, e2.delta);
        }
    }
}
