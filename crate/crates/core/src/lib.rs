//! Information imbalance between distance measures.
//!
//! Given two distance measures over the same points, the information
//! imbalance tells whether they are equivalent, independent, share
//! information symmetrically, or whether one contains the information of the
//! other. It is computed from neighbor ranks alone, so it is insensitive to
//! the scale and units of each distance.
//!
//! - [`dataset`]: CSV ingestion, derived columns, synthetic fixtures.
//! - [`metric`]: scaled Euclidean distances over feature subsets.
//! - [`rank`]: neighbor ranks and conditional rank samples.
//! - [`imbalance`]: the estimator, imbalance plane, classification, histograms.
//! - [`select`]: feature-subset search and relative-scale optimization.
//! - [`lag`]: time-lagged pairing of panel data and lag scans.

pub mod dataset;
pub mod error;
pub mod imbalance;
pub mod lag;
pub mod metric;
pub mod rank;
pub mod select;

pub use dataset::{Dataset, Filtered, SynthKind, SynthSpec};
pub use error::{Error, Result};
pub use imbalance::{
    classify, imbalance_pair, information_imbalance, plane_point, symmetric_imbalance, Classification,
    ImbalanceEstimate, ImbalanceOptions, PlanePoint, Relationship, Thresholds,
};
pub use lag::{build_lagged_pairs, lag_scan, LagRecord, LagScanResult, LagSpec, LagStatus};
pub use metric::{DistanceMatrix, DistanceSpec, Space};
pub use rank::{ConditionalRankSample, RankMatrix};
pub use select::{
    exhaustive_best_subsets, greedy_forward, native_order, random_baseline, scale_optimize, ObjectiveMode, ScaleSearch,
    SelectionObjective, SelectionTrace, Strategy,
};
