//! Sparse least-squares solvers over a [`StepBasis`](crate::StepBasis).

mod cd;
mod l0;
mod refit;

pub use cd::{
    lasso_cd, lasso_neg_l2_cd, max_lambda2, objective, shrinkage_threshold, soft_threshold,
    SolveTrace, SolverConfig, SparseCoefficients,
};
pub use l0::{exhaustive_l0, solve_l0_dp, L0Partition, EXHAUSTIVE_MAX_LEN};
pub use refit::{post_ls_refit, segment_levels};
