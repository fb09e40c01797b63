//! The lower-triangular step basis.
//!
//! Column `j` of the basis is the step function that is `0` on rows `< j` and
//! `d[j]` on rows `>= j`, where `d` is the difference sequence of the base
//! values. Coefficients over this basis produce piecewise-constant vectors:
//! a zero coefficient merges a row with the run above it.
//!
//! The matrix is never materialized. Products are prefix sums and column
//! inner products are suffix sums, both `O(m)`.

use serde::{Deserialize, Serialize};

use crate::distinct::{check_len, SortedDistinctVector};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBasis {
    base_values: Vec<f64>,
    diffs: Vec<f64>,
}

impl StepBasis {
    /// Builds the basis from arbitrary base values: `d[0] = v[0]`,
    /// `d[j] = v[j] - v[j-1]`.
    pub fn from_base_values(base_values: Vec<f64>) -> Self {
        let diffs = base_values
            .iter()
            .scan(0.0, |prev, &v| {
                let d = v - *prev;
                *prev = v;
                Some(d)
            })
            .collect();
        StepBasis { base_values, diffs }
    }

    pub fn base_values(&self) -> &[f64] {
        &self.base_values
    }

    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    /// Dimension `m`.
    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    /// Squared norm of column `j`: `d[j]^2 * (m - j)`.
    pub fn column_norm_sq(&self, j: usize) -> f64 {
        self.diffs[j] * self.diffs[j] * (self.len() - j) as f64
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.column_norm_sq(j)).collect()
    }

    /// `true` when column `j` is identically zero (only possible for `j = 0`
    /// when the smallest value is `0`).
    pub fn is_structural_zero(&self, j: usize) -> bool {
        self.diffs[j] == 0.0
    }

    /// `N_p * alpha` as running prefix sums of `d[j] * alpha[j]`.
    pub fn apply(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), alpha.len())?;
        let mut acc = 0.0;
        Ok(self
            .diffs
            .iter()
            .zip(alpha)
            .map(|(d, a)| {
                acc += d * a;
                acc
            })
            .collect())
    }

    /// `N_p^T r`: entry `j` is `d[j]` times the suffix sum of `r` from `j`.
    pub fn transpose_apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), r.len())?;
        let mut out = vec![0.0; self.len()];
        let mut suffix = 0.0;
        for j in (0..self.len()).rev() {
            suffix += r[j];
            out[j] = self.diffs[j] * suffix;
        }
        Ok(out)
    }

    /// Dense row-major `m x m` matrix, for oracle comparisons only.
    #[cfg(test)]
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.len();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if j <= i { self.diffs[j] } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

/// Step basis whose base values are the distinct values themselves, so the
/// all-ones coefficient vector reconstructs them.
pub fn build_step_basis(d: &SortedDistinctVector) -> StepBasis {
    StepBasis::from_base_values(d.values().to_vec())
}

pub fn apply_basis(b: &StepBasis, alpha: &[f64]) -> Result<Vec<f64>> {
    b.apply(alpha)
}
