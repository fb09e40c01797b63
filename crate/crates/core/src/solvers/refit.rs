//! Unpenalized least-squares refit restricted to a support.
//!
//! Selecting columns `h_1 < ... < h_s` of the step basis restricts the fit to
//! vectors that are constant on each segment `[h_t, h_{t+1})` and zero on the
//! rows before `h_1`. The least-squares level of a segment is the mean of the
//! target over it, and the coefficients follow from the level differences.

use crate::basis::StepBasis;
use crate::distinct::check_len;
use crate::error::{invalid, Error, Result};

use super::SparseCoefficients;

/// Per-segment (weighted) means of `values`; segment `t` spans
/// `starts[t]..starts[t + 1]`, the last one runs to the end.
pub fn segment_levels(values: &[f64], starts: &[usize], weights: Option<&[f64]>) -> Vec<f64> {
    let m = values.len();
    starts
        .iter()
        .enumerate()
        .map(|(t, &lo)| {
            let hi = starts.get(t + 1).copied().unwrap_or(m);
            let seg = &values[lo..hi];
            if seg.len() == 1 {
                return seg[0];
            }
            match weights {
                None => seg.iter().sum::<f64>() / seg.len() as f64,
                Some(w) => {
                    let w = &w[lo..hi];
                    let total: f64 = w.iter().sum();
                    seg.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / total
                }
            }
        })
        .collect()
}

/// Least-squares coefficients on `support`, zero elsewhere.
pub fn post_ls_refit(
    b: &StepBasis,
    target: &[f64],
    support: &[usize],
) -> Result<SparseCoefficients> {
    let m = b.len();
    check_len(m, target.len())?;
    if support.is_empty() {
        return Err(invalid("refit support is empty"));
    }
    if support.windows(2).any(|p| p[0] >= p[1]) {
        return Err(invalid("refit support must be strictly ascending"));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= m) {
        return Err(invalid(format!(
            "support index {j} out of range for m = {m}"
        )));
    }
    if let Some(&j) = support.iter().find(|&&j| b.is_structural_zero(j)) {
        return Err(Error::SingularSupport(j));
    }

    let levels = segment_levels(target, support, None);
    let diffs = b.diffs();
    let mut alpha = vec![0.0; m];
    let mut prev = 0.0;
    for (&j, &level) in support.iter().zip(&levels) {
        alpha[j] = (level - prev) / diffs[j];
        prev = level;
    }
    Ok(SparseCoefficients::new(alpha, 0.0, 0.0, 0))
}
