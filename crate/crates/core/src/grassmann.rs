//! Orthonormal frames, their completions, and the affine chart of
//! `Gr(r₁,n₁) × … × Gr(r_d,n_d)` around an anchor tuple.
//!
//! A chart point `X = (X₁,…,X_d)` with `X_i ∈ ℝ^{(n_i−r_i)×r_i}` stands for
//! the subspaces spanned by `U_i + U_i^⊥ X_i`, where `[U_i | U_i^⊥]` is the
//! anchor's full orthonormal basis of mode `i`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Singular-value ratio below which a chart block `Y` counts as singular.
pub const CHART_RTOL: f64 = 1e-10;

/// Relative column norm below which Gram–Schmidt declares rank loss.
const RANK_RTOL: f64 = 1e-10;

/// `n × r` matrix with orthonormal columns, optionally completed to an
/// orthonormal basis of `ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoFrame {
    basis: DMatrix<f64>,
    completion: Option<DMatrix<f64>>,
}

impl OrthoFrame {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (n, r) = basis.shape();
        if r == 0 || r > n {
            return Err(Error::Dimension(format!("frame must be n×r with 1 ≤ r ≤ n, got {n}×{r}")));
        }
        let err = linalg::max_abs(&(basis.transpose() * &basis - DMatrix::identity(r, r)));
        if err > ortho_tol(n) {
            return Err(Error::DegenerateInput(format!("columns are not orthonormal (error {err:e})")));
        }
        Ok(Self { basis, completion: None })
    }

    pub(crate) fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        debug_assert!(basis.ncols() >= 1 && basis.ncols() <= basis.nrows());
        Self { basis, completion: None }
    }

    /// Gram–Schmidt (with one reorthogonalization pass) on the columns of `m`.
    ///
    /// Column `k` of the result has a positive component along input column
    /// `k`, so the first column is the normalized first input column and an
    /// orthonormal input comes back unchanged up to rounding.
    pub fn orthonormalize(m: &DMatrix<f64>) -> Result<Self> {
        let (n, r) = m.shape();
        if r == 0 || r > n {
            return Err(Error::DegenerateInput(format!("cannot orthonormalize {r} columns in ℝ^{n}")));
        }
        let mut q = DMatrix::<f64>::zeros(n, r);
        for k in 0..r {
            let a = m.column(k);
            let anorm = a.norm();
            let mut v = a.into_owned();
            for _ in 0..2 {
                for j in 0..k {
                    let qj = q.column(j);
                    let c = qj.dot(&v);
                    v.axpy(-c, &qj, 1.0);
                }
            }
            let vnorm = v.norm();
            if anorm == 0.0 || vnorm <= RANK_RTOL * anorm {
                return Err(Error::DegenerateInput(format!("column {k} is numerically dependent on its predecessors")));
            }
            q.set_column(k, &(v / vnorm));
        }
        Ok(Self { basis: q, completion: None })
    }

    /// Returns a copy carrying an orthonormal basis of the complement.
    pub fn complete(&self) -> Self {
        if self.completion.is_some() {
            return self.clone();
        }
        let (n, r) = self.basis.shape();
        let completion = if r == n {
            DMatrix::zeros(n, 0)
        } else {
            // eigenvectors of the projector for eigenvalue 0 span the complement
            let proj = &self.basis * self.basis.transpose();
            let (_, vecs) = linalg::sym_eigen_desc(&proj);
            let mut c = vecs.columns(r, n - r).into_owned();
            // one projection pass keeps ‖basisᵀ completion‖ at rounding level
            c -= &self.basis * (self.basis.transpose() * &c);
            Self::orthonormalize(&c).expect("complement of an orthonormal frame has full rank").basis
        };
        Self { basis: self.basis.clone(), completion: Some(completion) }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn completion(&self) -> Option<&DMatrix<f64>> {
        self.completion.as_ref()
    }

    /// `[basis | completion]`, an `n × n` orthogonal matrix.
    ///
    /// # Panics
    /// If the frame has not been completed.
    pub fn full_basis(&self) -> DMatrix<f64> {
        let c = self.completion.as_ref().expect("frame completion required");
        let (n, r) = self.basis.shape();
        let mut q = DMatrix::zeros(n, n);
        q.columns_mut(0, r).copy_from(&self.basis);
        q.columns_mut(r, n - r).copy_from(c);
        q
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

/// `‖sin Θ‖_F` for the principal angles between two subspaces of equal
/// dimension; computed as `‖B − A(AᵀB)‖_F`.
pub fn principal_angle_distance(a: &OrthoFrame, b: &OrthoFrame) -> Result<f64> {
    if a.basis.shape() != b.basis.shape() {
        return Err(Error::Dimension(format!("frames {:?} and {:?} differ in shape", a.basis.shape(), b.basis.shape())));
    }
    let ab = a.basis.transpose() * &b.basis;
    let ba = b.basis.transpose() * &a.basis;
    let one = (&b.basis - &a.basis * ab).norm();
    let two = (&a.basis - &b.basis * ba).norm();
    Ok(0.5 * (one + two))
}

/// One frame per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceTuple {
    frames: Vec<OrthoFrame>,
}

impl SubspaceTuple {
    pub fn new(frames: Vec<OrthoFrame>) -> Self {
        Self { frames }
    }

    pub fn frames(&self) -> &[OrthoFrame] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &OrthoFrame {
        &self.frames[i]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.frames.iter().map(OrthoFrame::rank).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.frames.iter().map(OrthoFrame::ambient).collect()
    }

    pub fn set_frame(&mut self, i: usize, frame: OrthoFrame) {
        debug_assert_eq!(frame.basis.shape(), self.frames[i].basis.shape());
        self.frames[i] = frame;
    }

    pub fn with_completions(&self) -> Self {
        Self { frames: self.frames.iter().map(OrthoFrame::complete).collect() }
    }

    /// Local chart dimension `L = Σ (n_i − r_i) r_i`.
    pub fn chart_dim(&self) -> usize {
        self.frames.iter().map(|f| (f.ambient() - f.rank()) * f.rank()).sum()
    }

    /// Largest per-mode principal-angle distance to `other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Dimension("tuples differ in length".into()));
        }
        self.frames
            .iter()
            .zip(&other.frames)
            .try_fold(0.0_f64, |m, (a, b)| Ok(m.max(principal_angle_distance(a, b)?)))
    }
}

/// Local coordinates `X = (X₁,…,X_d)` relative to an anchor tuple.
///
/// The flat layout used by [`ChartPoint::to_flat`] lists modes in order and
/// each block row-major, so coordinate `(i, p, q)` sits at
/// `offset_i + p·r_i + q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    blocks: Vec<DMatrix<f64>>,
}

impl ChartPoint {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Self {
        Self { blocks }
    }

    pub fn zeros(anchor: &SubspaceTuple) -> Self {
        Self {
            blocks: anchor.frames.iter().map(|f| DMatrix::zeros(f.ambient() - f.rank(), f.rank())).collect(),
        }
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(DMatrix::len).sum()
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            for p in 0..b.nrows() {
                out.extend(b.row(p).iter());
            }
        }
        out
    }

    /// Inverse of [`ChartPoint::to_flat`] for the block shapes of `anchor`.
    pub fn from_flat(anchor: &SubspaceTuple, flat: &[f64]) -> Result<Self> {
        if flat.len() != anchor.chart_dim() {
            return Err(Error::Dimension(format!("{} coordinates for chart dimension {}", flat.len(), anchor.chart_dim())));
        }
        let mut off = 0;
        let blocks = anchor
            .frames
            .iter()
            .map(|f| {
                let (rows, cols) = (f.ambient() - f.rank(), f.rank());
                let b = DMatrix::from_row_slice(rows, cols, &flat[off..off + rows * cols]);
                off += rows * cols;
                b
            })
            .collect();
        Ok(Self { blocks })
    }

    fn check_against(&self, anchor: &SubspaceTuple) -> Result<()> {
        if self.blocks.len() != anchor.len() {
            return Err(Error::Dimension(format!("{} blocks for {} modes", self.blocks.len(), anchor.len())));
        }
        for (i, (b, f)) in self.blocks.iter().zip(&anchor.frames).enumerate() {
            if b.shape() != (f.ambient() - f.rank(), f.rank()) {
                return Err(Error::Dimension(format!("chart block {i} has shape {:?}", b.shape())));
            }
        }
        Ok(())
    }
}

/// Split of `Z_i = [U_i|U_i^⊥]ᵀ V_i` into its top `r_i × r_i` block `Y` and
/// bottom `(n_i − r_i) × r_i` block `X`.
#[derive(Clone, Debug)]
pub struct ChartBlock {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

/// Maps a chart point to the subspaces it represents, orthonormalized.
pub fn chart_to_tuple(anchor: &SubspaceTuple, x: &ChartPoint) -> Result<SubspaceTuple> {
    x.check_against(anchor)?;
    let frames = anchor
        .frames
        .iter()
        .zip(&x.blocks)
        .map(|(f, xi)| {
            if xi.iter().all(|&v| v == 0.0) {
                return Ok(OrthoFrame::from_orthonormal(f.basis.clone()));
            }
            let completed;
            let c = match &f.completion {
                Some(c) => c,
                None => {
                    completed = f.complete();
                    completed.completion.as_ref().expect("completed")
                }
            };
            OrthoFrame::orthonormalize(&(&f.basis + c * xi))
        })
        .collect::<Result<_>>()?;
    Ok(SubspaceTuple { frames })
}

/// Chart coordinates of `target` relative to `anchor`: block `i` is
/// `X_{i,0} Y_{i,0}⁻¹`. Also returns the `(Y, X)` split per mode.
pub fn tuple_to_chart(anchor: &SubspaceTuple, target: &SubspaceTuple) -> Result<(ChartPoint, Vec<ChartBlock>)> {
    if anchor.len() != target.len() {
        return Err(Error::Dimension("anchor and target differ in length".into()));
    }
    let mut blocks = Vec::with_capacity(anchor.len());
    let mut splits = Vec::with_capacity(anchor.len());
    for (mode, (a, t)) in anchor.frames.iter().zip(&target.frames).enumerate() {
        if a.basis.shape() != t.basis.shape() {
            return Err(Error::Dimension(format!("mode {mode}: frames differ in shape")));
        }
        let completed;
        let a = if a.completion.is_some() {
            a
        } else {
            completed = a.complete();
            &completed
        };
        let z = a.full_basis().transpose() * &t.basis;
        let (split, block) = split_chart(&z, a.rank()).ok_or(Error::OutOfChart { mode })?;
        blocks.push(block);
        splits.push(split);
    }
    Ok((ChartPoint { blocks }, splits))
}

/// Splits `Z` and returns `X Y⁻¹`, or `None` when `Y` is singular to
/// [`CHART_RTOL`].
pub(crate) fn split_chart(z: &DMatrix<f64>, r: usize) -> Option<(ChartBlock, DMatrix<f64>)> {
    let n = z.nrows();
    let y = z.rows(0, r).into_owned();
    let x = z.rows(r, n - r).into_owned();
    let s = linalg::singular_values(&y);
    let (smax, smin) = (s[0], s[s.len() - 1]);
    if smin <= CHART_RTOL * smax || smax == 0.0 {
        return None;
    }
    let yinv = y.clone().try_inverse()?;
    let block = &x * yinv;
    Some((ChartBlock { y, x }, block))
}

fn ortho_tol(n: usize) -> f64 {
    1e-12 * (n as f64).sqrt().max(1.0)
}
