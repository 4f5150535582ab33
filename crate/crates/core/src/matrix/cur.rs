use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::IndexSet;

/// Singular values below this fraction of `σ₁` do not count as significant
/// in [`PivotObjective::SigmaProduct`].
pub const SIGNIFICANT_RTOL: f64 = 1e-8;

/// Condition number above which a pivot block counts as singular.
pub(crate) const PIVOT_MAX_COND: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurKind {
    Optimal,
    Local,
    Classic,
}

/// Behaviour of [`cur_classic`] when the pivot block is singular.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotFallback {
    #[default]
    Error,
    PseudoInverse,
}

/// `B = C·U·R` with `C = A[:,J]`, `R = A[I,:]`.
#[derive(Clone, Debug)]
pub struct MatrixCurFactors {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub c: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub kind: CurKind,
    /// Set when a classic pivot was singular and the pseudoinverse was used.
    pub used_pinv: bool,
}

impl MatrixCurFactors {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (self.c.row(i) * &self.u * self.r.column(j))[(0, 0)]
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.c * &self.u * &self.r
    }

    /// Stored values `|J|m + |I|n + |I||J|`.
    pub fn storage_len(&self) -> usize {
        self.c.len() + self.r.len() + self.u.len()
    }
}

fn check_sets(a: &DMatrix<f64>, rows: &IndexSet, cols: &IndexSet) -> Result<()> {
    if rows.extent() != a.nrows() || cols.extent() != a.ncols() {
        return Err(Error::InvalidIndexSet(format!(
            "index sets over {}×{}, matrix is {}×{}",
            rows.extent(),
            cols.extent(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn blocks(a: &DMatrix<f64>, rows: &IndexSet, cols: &IndexSet) -> (DMatrix<f64>, DMatrix<f64>) {
    let all_rows: Vec<usize> = (0..a.nrows()).collect();
    let all_cols: Vec<usize> = (0..a.ncols()).collect();
    (linalg::select(a, &all_rows, cols.as_slice()), linalg::select(a, rows.as_slice(), &all_cols))
}

/// Least-squares core `U* = C† A R†`.
pub fn cur_optimal(a: &DMatrix<f64>, rows: &IndexSet, cols: &IndexSet) -> Result<MatrixCurFactors> {
    check_sets(a, rows, cols)?;
    let (c, r) = blocks(a, rows, cols);
    let u = linalg::pinv(&c) * a * linalg::pinv(&r);
    Ok(MatrixCurFactors { rows: rows.clone(), cols: cols.clone(), c, u, r, kind: CurKind::Optimal, used_pinv: false })
}

/// Core fitted to the block `A[I′,J′]` only:
/// `U = A[I′,J]† A[I′,J′] A[I,J′]†`.
pub fn cur_local(
    a: &DMatrix<f64>,
    rows: &IndexSet,
    cols: &IndexSet,
    fit_rows: &IndexSet,
    fit_cols: &IndexSet,
) -> Result<MatrixCurFactors> {
    check_sets(a, rows, cols)?;
    check_sets(a, fit_rows, fit_cols)?;
    let (c, r) = blocks(a, rows, cols);
    let left = linalg::select(a, fit_rows.as_slice(), cols.as_slice());
    let mid = linalg::select(a, fit_rows.as_slice(), fit_cols.as_slice());
    let right = linalg::select(a, rows.as_slice(), fit_cols.as_slice());
    let u = linalg::pinv(&left) * mid * linalg::pinv(&right);
    Ok(MatrixCurFactors { rows: rows.clone(), cols: cols.clone(), c, u, r, kind: CurKind::Local, used_pinv: false })
}

/// Skeleton approximation `B = A[:,J] A[I,J]⁻¹ A[I,:]` with `|I| = |J|`.
pub fn cur_classic(a: &DMatrix<f64>, rows: &IndexSet, cols: &IndexSet, fallback: PivotFallback) -> Result<MatrixCurFactors> {
    check_sets(a, rows, cols)?;
    if rows.len() != cols.len() {
        return Err(Error::Dimension(format!("pivot block is {}×{}, must be square", rows.len(), cols.len())));
    }
    let (c, r) = blocks(a, rows, cols);
    let pivot = linalg::select(a, rows.as_slice(), cols.as_slice());
    let (u, used_pinv) = match linalg::inverse_checked(&pivot, PIVOT_MAX_COND) {
        Ok(inv) => (inv, false),
        Err(_) if fallback == PivotFallback::PseudoInverse => (linalg::pinv(&pivot), true),
        Err(_) => return Err(Error::SingularPivot { block: "A[I,J]".into() }),
    };
    Ok(MatrixCurFactors { rows: rows.clone(), cols: cols.clone(), c, u, r, kind: CurKind::Classic, used_pinv })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotObjective {
    /// `|det A[I,J]|`.
    AbsDet,
    /// Product of the singular values of `A[I,J]` that are at least
    /// [`SIGNIFICANT_RTOL`]` · σ₁`.
    SigmaProduct,
}

impl PivotObjective {
    pub fn score(self, block: &DMatrix<f64>) -> f64 {
        match self {
            Self::AbsDet => linalg::determinant(block).abs(),
            Self::SigmaProduct => {
                let s = linalg::singular_values(block);
                match s.first() {
                    Some(&s1) if s1 > 0.0 => s.iter().take_while(|&&x| x >= SIGNIFICANT_RTOL * s1).product(),
                    _ => 0.0,
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct PivotResult {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub score: f64,
}

/// Best of `trials` uniformly random `k × k` pivots. The draws form one
/// seeded stream, so a longer search never scores below a shorter one with
/// the same seed; ties keep the earliest draw.
pub fn pivot_search(a: &DMatrix<f64>, k: usize, trials: usize, objective: PivotObjective, seed: u64) -> Result<PivotResult> {
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::Dimension(format!("pivot size {k} invalid for a {m}×{n} matrix")));
    }
    if trials == 0 {
        return Err(Error::Dimension("at least one trial required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<usize>, f64)> = None;
    for _ in 0..trials {
        let mut rows = sample(&mut rng, m, k).into_vec();
        let mut cols = sample(&mut rng, n, k).into_vec();
        rows.sort_unstable();
        cols.sort_unstable();
        let score = objective.score(&linalg::select(a, &rows, &cols));
        if best.as_ref().is_none_or(|b| score > b.2) {
            best = Some((rows, cols, score));
        }
    }
    let (rows, cols, score) = best.expect("trials ≥ 1");
    Ok(PivotResult { rows: IndexSet::new(rows, m)?, cols: IndexSet::new(cols, n)?, score })
}

/// `μ_k = max |det A[I,J]|` over all `k × k` minors, by enumeration.
pub fn exhaustive_mu(a: &DMatrix<f64>, k: usize) -> Result<PivotResult> {
    use itertools::Itertools;
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::Dimension(format!("pivot size {k} invalid for a {m}×{n} matrix")));
    }
    let col_sets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let mut best = (Vec::new(), Vec::new(), -1.0);
    for rows in (0..m).combinations(k) {
        for cols in &col_sets {
            let s = linalg::determinant(&linalg::select(a, &rows, cols)).abs();
            if s > best.2 {
                best = (rows.clone(), cols.clone(), s);
            }
        }
    }
    Ok(PivotResult { rows: IndexSet::new(best.0, m)?, cols: IndexSet::new(best.1, n)?, score: best.2 })
}

/// Entrywise error bound `(k+1)·μ/|det A[I,J]|·σ_{k+1}(A)` for the classic
/// CUR approximation, valid whenever `mu_estimate ≥ μ_k`.
pub fn cur_error_bound(a: &DMatrix<f64>, rows: &IndexSet, cols: &IndexSet, mu_estimate: f64) -> Result<f64> {
    check_sets(a, rows, cols)?;
    let k = rows.len();
    if cols.len() != k {
        return Err(Error::Dimension("pivot block must be square".into()));
    }
    let det = linalg::determinant(&linalg::select(a, rows.as_slice(), cols.as_slice()));
    if det == 0.0 {
        return Err(Error::ZeroDeterminant);
    }
    let s = linalg::singular_values(a);
    let tail = s.get(k).copied().unwrap_or(0.0);
    Ok((k as f64 + 1.0) * mu_estimate / det.abs() * tail)
}
