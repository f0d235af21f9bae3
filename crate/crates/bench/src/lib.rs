//! Shared fixtures for the benchmarks.

use imbal_core::{Dataset, SynthKind, SynthSpec};

/// Isotropic 4-D Gaussian sample with columns `x, y, z, w`.
pub fn gaussian4(n: usize, seed: u64) -> Dataset {
    imbal_core::dataset::synthesize(&SynthSpec { kind: SynthKind::GaussIso4d, n, seed }).expect("valid fixture")
}
