//! Scalar vector quantization posed as sparse least squares.
//!
//! A vector is reduced to its sorted distinct values `v`, which are written
//! as `N α` for a lower-triangular step basis `N` whose column `j` carries
//! the gap `v[j] - v[j-1]` below row `j`. A sparse `α` keeps only a few
//! steps, so `N α` takes only a few distinct values. The library solves for
//! `α` with L1, L1 minus L2, iterative L1, and exact L0 (dynamic programming)
//! formulations, and also offers k-means, clustering plus least-squares, and
//! uniform baselines.
//!
//! ```
//! use sparsevq::{quantize, Method, QuantizeRequest};
//!
//! let w = [1.0, 2.0, 10.0, 11.0, 2.0];
//! let q = quantize(&w, &QuantizeRequest::new(Method::L0).with_target(2)).unwrap();
//! assert_eq!(q.data, vec![1.5, 1.5, 10.5, 10.5, 1.5]);
//! assert_eq!(q.distinct_count, 2);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod clustering;
pub mod data;
pub mod distinct;
pub mod error;
pub mod eval;
pub mod io;
pub mod quantize;
pub mod rng;
pub mod solvers;

pub use basis::{apply_basis, build_step_basis, StepBasis};
pub use clustering::{assignment_segments, kmeans_1d, kmeans_1d_weighted, ClusterAssignment};
pub use data::{generate, DatasetKind, DatasetSpec, MogComponent};
pub use distinct::{
    extract_distinct, flatten_matrix, restore_matrix, scatter_to_original, MatrixShape,
    SortedDistinctVector,
};
pub use error::{Error, Result};
pub use eval::{
    hard_sigmoid, l2_loss, l2_loss_distinct, run_bench, BenchReport, BenchRow, SweepSpec,
};
pub use io::{read_csv, read_pgm, write_csv, write_pgm, ImageBuffer, PgmEncoding};
pub use quantize::{
    quantize, quantize_cluster_ls, quantize_kmeans, quantize_l0, quantize_l1,
    quantize_l1_iterative, quantize_l1_l2, quantize_uniform, Clamp, ClusterOptions,
    IterativeSchedule, Method, QuantizeRequest, QuantizedVector, Weighting,
};
pub use solvers::{
    lasso_cd, lasso_neg_l2_cd, post_ls_refit, solve_l0_dp, L0Partition, SolverConfig,
    SparseCoefficients,
};
