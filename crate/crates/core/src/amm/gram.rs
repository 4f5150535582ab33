use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grassmann::{OrthoFrame, SubspaceTuple};
use crate::linalg;
use crate::tensor::Tensor;

/// Dimension above which the top eigenspace is found iteratively.
pub const DENSE_EIGEN_MAX: usize = 512;

/// Relative eigen-gap at or below which the top eigenspace counts as tied.
pub const GAP_RTOL: f64 = 1e-12;

/// `A_i = Σ v vᵀ` over `v = T × (⊗_{l≠i} u_{j_l,l})`, whose top-`r_i`
/// eigenspace is the best mode-`i` subspace with the other modes fixed.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub mode: usize,
    pub matrix: DMatrix<f64>,
}

impl GramMatrix {
    /// `tr(Uᵀ A U)`, the objective when mode `i` uses the frame `u`.
    pub fn trace_on(&self, u: &DMatrix<f64>) -> f64 {
        (u.transpose() * &self.matrix * u).trace()
    }
}

/// `T ×_{l≠i} U_lᵀ` unfolded at mode `i`; `A_i = M Mᵀ`.
pub(crate) fn partial_core(t: &Tensor, tuple: &SubspaceTuple, skip: &[usize]) -> Result<Tensor> {
    check_tuple(t, tuple)?;
    let mut order: Vec<usize> = (0..t.order()).filter(|l| !skip.contains(l)).collect();
    // contract the modes with the strongest reduction first
    order.sort_by(|&a, &b| {
        let ra = tuple.frame(a).rank() as f64 / t.shape()[a] as f64;
        let rb = tuple.frame(b).rank() as f64 / t.shape()[b] as f64;
        ra.total_cmp(&rb)
    });
    let mut m = t.clone();
    for l in order {
        m = m.mode_product(l, &tuple.frame(l).basis().transpose())?;
    }
    Ok(m)
}

fn check_tuple(t: &Tensor, tuple: &SubspaceTuple) -> Result<()> {
    if tuple.len() != t.order() {
        return Err(Error::Dimension(format!("{} frames for order {}", tuple.len(), t.order())));
    }
    for (m, (f, &n)) in tuple.frames().iter().zip(t.shape()).enumerate() {
        if f.ambient() != n {
            return Err(Error::Dimension(format!("frame {m} has {} rows, mode extent is {n}", f.ambient())));
        }
    }
    Ok(())
}

/// Gram matrix of mode `i`. Frame `i` of `tuple` is ignored.
pub fn build_gram(t: &Tensor, tuple: &SubspaceTuple, i: usize) -> Result<GramMatrix> {
    if i >= t.order() {
        return Err(Error::InvalidModes(format!("mode {i} out of range for order {}", t.order())));
    }
    let m = partial_core(t, tuple, &[i])?.unfold(i)?;
    Ok(GramMatrix { mode: i, matrix: linalg::symmetrize(&(&m * m.transpose())) })
}

/// `‖T ×₁ U₁ᵀ ⋯ ×_d U_dᵀ‖²`, the squared norm of the projection.
pub fn objective(t: &Tensor, tuple: &SubspaceTuple) -> Result<f64> {
    Ok(partial_core(t, tuple, &[])?.hs_norm().powi(2))
}

/// Leading eigenspace of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct EigenBlock {
    pub frame: OrthoFrame,
    /// `λ₁ ≥ … ≥ λ_r`.
    pub values: Vec<f64>,
    /// `λ_{r+1}` when `r < n`.
    pub next: Option<f64>,
    /// `λ_r − λ_{r+1}`, infinite when `r = n`.
    pub gap: f64,
    /// The gap is zero to [`GAP_RTOL`], so the subspace is not unique.
    pub degenerate: bool,
}

impl EigenBlock {
    /// Ky-Fan sum `λ₁ + … + λ_r`.
    pub fn value(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Top-`r` eigenspace: dense decomposition up to [`DENSE_EIGEN_MAX`], block
/// subspace iteration above.
pub fn top_eigenspace(a: &DMatrix<f64>, r: usize) -> Result<EigenBlock> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("{}×{} matrix is not square", n, a.ncols())));
    }
    if r == 0 || r > n {
        return Err(Error::Dimension(format!("cannot take {r} eigenvectors of a {n}×{n} matrix")));
    }
    let (values, vecs) = if n <= DENSE_EIGEN_MAX { linalg::sym_eigen_desc(a) } else { linalg::sym_eigen_top_iterative(a, r, 0) };
    let next = values.get(r).copied();
    let gap = next.map_or(f64::INFINITY, |l| values[r - 1] - l);
    let scale = values[0].abs().max(values[r - 1].abs());
    let degenerate = gap <= GAP_RTOL * scale;
    let frame = OrthoFrame::from_orthonormal(vecs.columns(0, r).into_owned());
    Ok(EigenBlock { frame, values: values[..r].to_vec(), next, gap, degenerate })
}
