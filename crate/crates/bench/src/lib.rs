//! Shared fixtures for the criterion benchmarks.

use sparsevq::{generate, DatasetKind, DatasetSpec};

/// `n` seeded samples in `[0, 100]`; continuous, so all values are distinct.
pub fn fixture(kind: DatasetKind, n: usize) -> Vec<f64> {
    generate(&DatasetSpec::generated(kind, n, (0.0, 100.0), 42)).expect("valid fixture spec")
}

/// Sorted copy of `fixture`.
pub fn sorted_fixture(kind: DatasetKind, n: usize) -> Vec<f64> {
    let mut v = fixture(kind, n);
    v.sort_by(f64::total_cmp);
    v
}
