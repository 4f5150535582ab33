//! Alternating maximization for best multilinear-rank and best rank-one
//! approximation.
//!
//! The multilinear solvers maximize `‖T ×₁ U₁ᵀ ⋯ ×_d U_dᵀ‖²` over tuples of
//! orthonormal frames. Each single-mode subproblem is a Ky-Fan trace
//! maximization solved by the top eigenspace of a Gram matrix.

mod gram;
mod multilinear;
mod rank_one;

pub use gram::{build_gram, objective, top_eigenspace, EigenBlock, GramMatrix, DENSE_EIGEN_MAX, GAP_RTOL};
pub(crate) use gram::partial_core;
pub use multilinear::{amm, hosvd_init, mamm, pair_schedule, random_init, single_mode_gains, two_ammv};
pub(crate) use rank_one::{contract_except, prepare_start, value as rank_one_objective};
pub use rank_one::{
    random_unit_vectors, rank_one_2amm, rank_one_amm, rank_one_m2amm, singular_tuple_residual, RankOneResult,
};

pub use crate::trace::{CandidateLog, RunTrace, StopReason, StopRule};
