//! Cyclic coordinate descent for
//!
//! ```text
//! F(a) = ||t - N a||^2 + lambda1 * ||a||_1 - lambda2 * ||a||^2
//! ```
//!
//! There is no `1/2` in front of the quadratic term, so the exact coordinate
//! minimizer along column `c` is `S(rho, lambda1 / 2) / (||c||^2 - lambda2)`
//! with `rho = c^T (t - N a) + ||c||^2 a_k`. On the scaled quantity
//! `rho / (||c||^2 - lambda2)` the dead zone is
//! `lambda1 / (2 (||c||^2 - lambda2))`, see [`shrinkage_threshold`].
//!
//! One sweep costs `O(m)`: column inner products against the residual are
//! suffix sums, and every update to column `j` shifts the residual on rows
//! `>= j` by a constant, which is carried as a running correction.

use serde::{Deserialize, Serialize};

use crate::basis::StepBasis;
use crate::distinct::check_len;
use crate::error::{invalid, Error, Result};

/// Relative safety margin on `2 * lambda2 < min ||c||^2`.
const LAMBDA2_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence threshold on the largest absolute coordinate change in a sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub lambda1: f64,
    /// Magnitude of the negative-L2 term; `0` disables it.
    pub lambda2: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-7,
            max_sweeps: 10_000,
            lambda1: 0.0,
            lambda2: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda1(mut self, lambda1: f64) -> Self {
        self.lambda1 = lambda1;
        self
    }

    pub fn with_lambda2(mut self, lambda2: f64) -> Self {
        self.lambda2 = lambda2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_sweeps == 0 {
            return Err(invalid("max_sweeps must be >= 1"));
        }
        if !(self.lambda1 >= 0.0) || !self.lambda1.is_finite() {
            return Err(invalid(format!(
                "lambda1 must be finite and >= 0, got {}",
                self.lambda1
            )));
        }
        if !(self.lambda2 >= 0.0) || !self.lambda2.is_finite() {
            return Err(invalid(format!(
                "lambda2 must be finite and >= 0, got {}",
                self.lambda2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub sweeps_run: usize,
    pub final_max_delta: f64,
    pub converged: bool,
}

/// Coefficient vector over the step basis together with its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCoefficients {
    pub alpha: Vec<f64>,
    /// Ascending indices of the nonzero entries of `alpha`.
    pub support: Vec<usize>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub iterations: usize,
}

impl SparseCoefficients {
    pub fn new(alpha: Vec<f64>, lambda1: f64, lambda2: f64, iterations: usize) -> Self {
        let support = alpha
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, _)| j)
            .collect();
        SparseCoefficients {
            alpha,
            support,
            lambda1,
            lambda2,
            iterations,
        }
    }
}

/// `sign(x) * max(|x| - a, 0)`.
pub fn soft_threshold(x: f64, a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(invalid(format!("soft threshold must be >= 0, got {a}")));
    }
    Ok(soft(x, a))
}

#[inline]
fn soft(x: f64, a: f64) -> f64 {
    if x > a {
        x - a
    } else if x < -a {
        x + a
    } else {
        0.0
    }
}

/// Dead-zone half-width applied to the scaled coordinate value
/// `rho / (||c||^2 - lambda2)`.
pub fn shrinkage_threshold(col_norm_sq: f64, lambda1: f64, lambda2: f64) -> f64 {
    lambda1 / (2.0 * (col_norm_sq - lambda2))
}

/// Largest `lambda2` accepted for `b`: `(1 - 1e-6) * min ||c||^2 / 2` over
/// the non-zero columns.
pub fn max_lambda2(b: &StepBasis) -> f64 {
    min_active_norm_sq(b) * (1.0 - LAMBDA2_MARGIN) / 2.0
}

fn min_active_norm_sq(b: &StepBasis) -> f64 {
    (0..b.len())
        .filter(|&j| !b.is_structural_zero(j))
        .map(|j| b.column_norm_sq(j))
        .fold(f64::INFINITY, f64::min)
}

/// Value of `F(alpha)` as defined in the module docs.
pub fn objective(
    b: &StepBasis,
    target: &[f64],
    alpha: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    check_len(b.len(), target.len())?;
    let fit = b.apply(alpha)?;
    let rss: f64 = target
        .iter()
        .zip(&fit)
        .map(|(t, f)| (t - f) * (t - f))
        .sum();
    let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
    let l2: f64 = alpha.iter().map(|a| a * a).sum();
    Ok(rss + lambda1 * l1 - lambda2 * l2)
}

/// L1-penalized least squares by cyclic coordinate descent.
///
/// `cfg.lambda2` is ignored; use [`lasso_neg_l2_cd`] for the relaxed
/// objective. `alpha0 = None` starts from all ones, which reconstructs the
/// base values exactly.
pub fn lasso_cd(
    b: &StepBasis,
    target: &[f64],
    cfg: &SolverConfig,
    alpha0: Option<&[f64]>,
) -> Result<(SparseCoefficients, SolveTrace)> {
    let cfg = SolverConfig {
        lambda2: 0.0,
        ..*cfg
    };
    coordinate_descent(b, target, &cfg, alpha0)
}

/// L1 minus L2 penalized least squares by cyclic coordinate descent.
///
/// Requires `2 * lambda2 < min ||c_j||^2` (non-zero columns only) with a
/// relative margin of `1e-6`, which keeps every coordinate subproblem
/// strictly convex. With `lambda2 = 0` this is exactly [`lasso_cd`].
pub fn lasso_neg_l2_cd(
    b: &StepBasis,
    target: &[f64],
    cfg: &SolverConfig,
    alpha0: Option<&[f64]>,
) -> Result<(SparseCoefficients, SolveTrace)> {
    cfg.validate()?;
    if cfg.lambda2 > 0.0 {
        let min_norm = min_active_norm_sq(b);
        if 2.0 * cfg.lambda2 > min_norm * (1.0 - LAMBDA2_MARGIN) {
            return Err(Error::Lambda2TooLarge {
                twice_lambda2: 2.0 * cfg.lambda2,
                min_col_norm_sq: min_norm,
            });
        }
    }
    coordinate_descent(b, target, cfg, alpha0)
}

fn coordinate_descent(
    b: &StepBasis,
    target: &[f64],
    cfg: &SolverConfig,
    alpha0: Option<&[f64]>,
) -> Result<(SparseCoefficients, SolveTrace)> {
    cfg.validate()?;
    let m = b.len();
    check_len(m, target.len())?;
    if let Some(p) = target.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(p));
    }
    let mut alpha = match alpha0 {
        Some(a) => {
            check_len(m, a.len())?;
            a.to_vec()
        }
        None => vec![1.0; m],
    };

    let diffs = b.diffs();
    let norms = b.column_norms_sq();
    let half_l1 = cfg.lambda1 / 2.0;
    for (j, a) in alpha.iter_mut().enumerate() {
        if b.is_structural_zero(j) {
            *a = 0.0;
        }
    }

    let mut suffix = vec![0.0; m];
    let mut trace = SolveTrace {
        sweeps_run: 0,
        final_max_delta: f64::INFINITY,
        converged: false,
    };
    let mut prev_obj = if cfg!(debug_assertions) {
        objective(b, target, &alpha, cfg.lambda1, cfg.lambda2)?
    } else {
        0.0
    };

    for sweep in 0..cfg.max_sweeps {
        // Fresh residual and its suffix sums each sweep.
        let mut fit = 0.0;
        for i in 0..m {
            fit += diffs[i] * alpha[i];
            suffix[i] = target[i] - fit;
        }
        for i in (0..m.saturating_sub(1)).rev() {
            suffix[i] += suffix[i + 1];
        }

        // Sum of d[j] * delta[j] over coordinates already moved this sweep.
        let mut shift = 0.0;
        let mut max_delta: f64 = 0.0;
        for k in 0..m {
            if diffs[k] == 0.0 {
                continue;
            }
            let rows = (m - k) as f64;
            let grad = diffs[k] * (suffix[k] - shift * rows);
            let rho = grad + norms[k] * alpha[k];
            let next = soft(rho, half_l1) / (norms[k] - cfg.lambda2);
            if !next.is_finite() {
                return Err(Error::Divergence {
                    sweep,
                    coordinate: k,
                });
            }
            let delta = next - alpha[k];
            if !(shift + diffs[k] * delta).is_finite() {
                return Err(Error::Divergence {
                    sweep,
                    coordinate: k,
                });
            }
            if delta != 0.0 {
                shift += diffs[k] * delta;
                alpha[k] = next;
                max_delta = max_delta.max(delta.abs());
            }
        }

        trace.sweeps_run = sweep + 1;
        trace.final_max_delta = max_delta;

        if cfg!(debug_assertions) {
            let obj = objective(b, target, &alpha, cfg.lambda1, cfg.lambda2)?;
            if !obj.is_finite() {
                return Err(Error::Divergence {
                    sweep,
                    coordinate: m,
                });
            }
            debug_assert!(
                obj <= prev_obj + 1e-9 * (1.0 + prev_obj.abs()),
                "objective increased in sweep {sweep}: {prev_obj} -> {obj}"
            );
            prev_obj = obj;
        }

        if max_delta <= cfg.tolerance {
            trace.converged = true;
            break;
        }
    }

    Ok((
        SparseCoefficients::new(alpha, cfg.lambda1, cfg.lambda2, trace.sweeps_run),
        trace,
    ))
}
