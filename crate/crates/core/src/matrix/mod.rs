//! Matrix-level low-rank approximation: truncated SVD, alternating
//! row/column sampling refinement, and the CUR family.

mod cur;

pub use cur::{
    cur_classic, cur_error_bound, cur_local, cur_optimal, exhaustive_mu, pivot_search, CurKind, MatrixCurFactors,
    PivotFallback, PivotObjective, PivotResult, SIGNIFICANT_RTOL,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, PINV_RTOL};
use crate::tensor::IndexSet;

/// Leading singular triples `σ₁ ≥ … ≥ σ_r > 0`.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `Σ σ_i u_i v_iᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.sigma));
        &self.u * s * self.v.transpose()
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub factors: SvdFactors,
    pub approx: DMatrix<f64>,
    /// `‖A − A_k‖ = (Σ_{j>k} σ_j²)^{1/2}`.
    pub error: f64,
}

/// Best rank-`k` approximation. Requests beyond the numerical rank return
/// the exact matrix with the retained triples only.
pub fn svd_rank_k(a: &DMatrix<f64>, k: usize) -> Result<TruncatedSvd> {
    if k == 0 {
        return Err(Error::Dimension("rank must be at least 1".into()));
    }
    let (u, s, v) = linalg::svd_sorted(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let keep = s.iter().take(k).take_while(|&&x| x > PINV_RTOL * smax && x > 0.0).count();
    let factors = SvdFactors { u: u.columns(0, keep).into_owned(), sigma: s[..keep].to_vec(), v: v.columns(0, keep).into_owned() };
    let error = s[keep..].iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(TruncatedSvd { approx: factors.reconstruct(), factors, error })
}

/// Iterates of the alternating sampling refinement.
#[derive(Clone, Debug)]
pub struct RefineTrace {
    /// `‖A − B_t‖`, non-increasing.
    pub errors: Vec<f64>,
    /// `‖B_t‖`, non-decreasing.
    pub norms: Vec<f64>,
    pub approx: DMatrix<f64>,
}

/// Starts from the best rank-`k` approximation of `A` with rows projected on
/// the span of the sampled rows `I₀`, then alternately projects `A` on the
/// current `k`-dimensional column space and row space.
///
/// Stops after `max_rounds` approximations or once the relative error
/// improvement drops below `1e-14`.
pub fn row_sample_refine(a: &DMatrix<f64>, k: usize, rows: &IndexSet, max_rounds: usize) -> Result<RefineTrace> {
    let (m, n) = a.shape();
    if rows.extent() != m {
        return Err(Error::InvalidIndexSet(format!("row set over {} rows, matrix has {m}", rows.extent())));
    }
    if k == 0 || k > m.min(n) {
        return Err(Error::Dimension(format!("rank {k} invalid for a {m}×{n} matrix")));
    }
    if rows.len() < k {
        return Err(Error::DegenerateSample { found: rows.len(), needed: k });
    }
    let all: Vec<usize> = (0..n).collect();
    let sampled = linalg::select(a, rows.as_slice(), &all);
    let (_, s, v) = linalg::svd_sorted(&sampled);
    let smax = s.first().copied().unwrap_or(0.0);
    let dim = s.iter().take_while(|&&x| x > PINV_RTOL * smax && x > 0.0).count();
    if dim < k {
        return Err(Error::DegenerateSample { found: dim, needed: k });
    }
    let w = v.columns(0, dim);
    let projected = a * w * w.transpose();
    let mut b = svd_rank_k(&projected, k)?.approx;

    let mut errors = vec![(a - &b).norm()];
    let mut norms = vec![b.norm()];
    let mut use_columns = true;
    while errors.len() < max_rounds.max(1) {
        let (u, _, v) = linalg::svd_sorted(&b);
        b = if use_columns {
            let uk = u.columns(0, k);
            uk * (uk.transpose() * a)
        } else {
            let vk = v.columns(0, k);
            (a * vk) * vk.transpose()
        };
        use_columns = !use_columns;
        let err = (a - &b).norm();
        let prev = *errors.last().expect("non-empty");
        errors.push(err);
        norms.push(b.norm());
        if prev - err <= 1e-14 * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(RefineTrace { errors, norms, approx: b })
}
