//! Fixtures shared by the engine benchmarks.

use fincomplete_core::construct;
use fincomplete_core::search::{self, GenConfig};
use fincomplete_core::{FiniteModel, Limits, Partition};

/// The `n`-fold power of a `k`-parameter model on `m` points.
pub fn power_fixture(m: usize, k: usize, n: usize, seed: u64) -> FiniteModel {
    let cfg = GenConfig { homogeneous: true, ..GenConfig::sized(seed, m, k) };
    let mut rng = search::stream_rng(seed, 0);
    let base = loop {
        let b = search::random_model_with(&mut rng, &cfg).expect("feasible configuration");
        if b.num_points() == m && b.num_params() == k {
            break b;
        }
    };
    construct::power_model(&base, n, &Limits::default()).expect("within limits")
}

/// A random model with exactly `m` points and `k` parameters.
pub fn model_fixture(m: usize, k: usize, seed: u64) -> FiniteModel {
    let cfg = GenConfig::sized(seed, m, k);
    let mut rng = search::stream_rng(seed, 0);
    loop {
        let b = search::random_model_with(&mut rng, &cfg).expect("feasible configuration");
        if b.num_points() == m && b.num_params() == k {
            return b;
        }
    }
}

/// Partition of the `n`-fold power of `m` points by the sum of coordinates.
pub fn sum_partition(m: usize, n: usize) -> Partition {
    construct::power_statistic(m, n, |t| t.iter().sum::<usize>())
}
