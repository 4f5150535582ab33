//! Dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here returns spectra in non-increasing order and fixes the sign
//! of each singular/eigen vector (largest-magnitude component positive) so
//! that traces are reproducible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative cutoff below which singular values are treated as zero by [`pinv`].
pub const PINV_RTOL: f64 = 1e-12;

/// Thin SVD `A = U diag(s) Vᵀ` with `s` sorted non-increasing.
///
/// `U` is `m×p`, `V` is `n×p`, `p = min(m, n)`.
pub fn svd_sorted(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let p = m.min(n);
    if p == 0 {
        return (DMatrix::zeros(m, 0), Vec::new(), DMatrix::zeros(n, 0));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut uo = DMatrix::zeros(m, p);
    let mut vo = DMatrix::zeros(n, p);
    let mut s = Vec::with_capacity(p);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u.column(src).into_owned();
        let mut vcol = vt.row(src).transpose();
        if leading_sign(ucol.as_slice()) < 0.0 {
            ucol.neg_mut();
            vcol.neg_mut();
        }
        uo.set_column(dst, &ucol);
        vo.set_column(dst, &vcol);
        s.push(svd.singular_values[src]);
    }
    (uo, s, vo)
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Full symmetric eigendecomposition with eigenvalues non-increasing.
///
/// Column `k` of the returned matrix is the unit eigenvector for `values[k]`.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = symmetrize(a);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        if leading_sign(col.as_slice()) < 0.0 {
            col.neg_mut();
        }
        vecs.set_column(dst, &col);
        vals.push(eig.eigenvalues[src]);
    }
    (vals, vecs)
}

/// Leading `r` eigenpairs of a symmetric matrix by block subspace iteration
/// with Rayleigh–Ritz extraction. Returns `r + 1` Ritz values when `r < n` so
/// callers can report the gap.
pub fn sym_eigen_top_iterative(a: &DMatrix<f64>, r: usize, seed: u64) -> (Vec<f64>, DMatrix<f64>) {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    let n = a.nrows();
    let a = symmetrize(a);
    let block = (r + 1 + 8).min(n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut q = DMatrix::from_fn(n, block, |_, _| StandardNormal.sample(&mut rng));
    q = orthonormal_columns(&q);
    let mut prev: Vec<f64> = vec![f64::INFINITY; r.min(block)];
    let mut ritz_vals = Vec::new();
    let mut ritz_vecs = DMatrix::zeros(n, 0);
    for _ in 0..1000 {
        let z = &a * &q;
        q = orthonormal_columns(&z);
        let small = q.transpose() * &a * &q;
        let (vals, vecs) = sym_eigen_desc(&small);
        ritz_vecs = &q * vecs;
        ritz_vals = vals;
        q = ritz_vecs.clone();
        let scale = ritz_vals.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        let converged = prev
            .iter()
            .zip(&ritz_vals)
            .all(|(p, v)| (p - v).abs() <= 1e-14 * scale);
        prev = ritz_vals[..r.min(block)].to_vec();
        if converged {
            // One residual check to guard against false plateaus.
            let resid = &a * ritz_vecs.columns(0, r) - ritz_vecs.columns(0, r) * DMatrix::from_diagonal(&DVector::from_column_slice(&ritz_vals[..r]));
            if resid.norm() <= 1e-10 * scale {
                break;
            }
        }
    }
    let keep = (r + 1).min(block);
    let mut out = ritz_vecs.columns(0, keep).into_owned();
    for mut col in out.column_iter_mut() {
        if leading_sign(col.as_slice()) < 0.0 {
            col.neg_mut();
        }
    }
    (ritz_vals[..keep].to_vec(), out)
}

/// Orthonormal basis of the column space via Householder QR (thin Q).
pub(crate) fn orthonormal_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

/// Moore–Penrose pseudoinverse; singular values below `PINV_RTOL · σ_max` are dropped.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let (u, s, v) = svd_sorted(a);
    let mut out = DMatrix::zeros(n, m);
    let Some(&smax) = s.first() else {
        return out;
    };
    if smax == 0.0 {
        return out;
    }
    for (k, &sk) in s.iter().enumerate() {
        if sk <= PINV_RTOL * smax {
            break;
        }
        out += (v.column(k) / sk) * u.column(k).transpose();
    }
    out
}

/// 2-norm condition number; infinite when the matrix is singular or empty.
pub fn condition(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Solves `A x = b` for square `A`, refusing when `cond(A)` exceeds `max_cond`.
pub fn solve_checked(a: &DMatrix<f64>, b: &DVector<f64>, max_cond: f64) -> Result<DVector<f64>, f64> {
    let cond = condition(a);
    if cond.is_nan() || cond > max_cond {
        return Err(cond);
    }
    a.clone().lu().solve(b).ok_or(f64::INFINITY)
}

/// Inverse of a square matrix refusing condition numbers above `max_cond`.
pub fn inverse_checked(a: &DMatrix<f64>, max_cond: f64) -> Result<DMatrix<f64>, f64> {
    let cond = condition(a);
    if cond.is_nan() || cond > max_cond {
        return Err(cond);
    }
    a.clone().try_inverse().ok_or(f64::INFINITY)
}

pub fn determinant(a: &DMatrix<f64>) -> f64 {
    a.clone().lu().determinant()
}

/// Submatrix with the given rows and columns (in the order given).
pub fn select(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Entrywise max norm.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn leading_sign(v: &[f64]) -> f64 {
    let mut best = 0.0_f64;
    for &x in v {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_and_sorts() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (u, s, v) = svd_sorted(&a);
        assert!(s[0] >= s[1]);
        let rec = &u * DMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose();
        assert!((rec - a).norm() < 1e-12);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let p = pinv(&a);
        assert!((&a * &p * &a - &a).norm() < 1e-12);
        assert!((&p * &a * &p - &p).norm() < 1e-12);
    }

    #[test]
    fn eigen_descending() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0, 4.0]));
        let (vals, vecs) = sym_eigen_desc(&a);
        assert_eq!(vals, vec![5.0, 4.0, 1.0]);
        assert!((vecs[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn iterative_matches_dense_top_block() {
        let n = 40;
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let a = &b * b.transpose();
        let (dv, dvecs) = sym_eigen_desc(&a);
        let (iv, ivecs) = sym_eigen_top_iterative(&a, 3, 1);
        for k in 0..4 {
            assert!((dv[k] - iv[k]).abs() < 1e-8 * dv[0]);
        }
        let pd = dvecs.columns(0, 3) * dvecs.columns(0, 3).transpose();
        let pi = ivecs.columns(0, 3) * ivecs.columns(0, 3).transpose();
        assert!((pd - pi).norm() < 1e-8);
    }
}
