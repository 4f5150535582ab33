//! Dense d-mode tensors.
//!
//! Storage is a flat `Vec<f64>` in row-major order: the last index varies
//! fastest. Every unfolding derives its column order from that convention:
//! the non-row modes are listed in increasing mode order and the last listed
//! mode varies fastest. Modes are 0-based throughout.

pub mod io;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grassmann::SubspaceTuple;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {n} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// # Panics
    /// If `shape` is empty or has a zero extent.
    pub fn zeros(shape: &[usize]) -> Self {
        validate_shape(shape).expect("valid shape");
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0; shape.len()];
        for slot in t.data.iter_mut() {
            *slot = f(&idx);
            increment(&mut idx, shape);
        }
        t
    }

    /// Outer product `x₁ ⊗ … ⊗ x_d`.
    pub fn outer(vectors: &[&[f64]]) -> Self {
        let shape: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        Self::from_fn(&shape, |idx| idx.iter().zip(vectors).map(|(&i, v)| v[i]).product())
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self::from_fn(&[m.nrows(), m.ncols()], |idx| m[(idx[0], idx[1])])
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.order() != 2 {
            return Err(Error::Dimension(format!("expected a 2-mode tensor, got shape {:?}", self.shape)));
        }
        Ok(DMatrix::from_row_slice(self.shape[0], self.shape[1], &self.data))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of modes `d`.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        let mut off = 0;
        for (&i, &n) in idx.iter().zip(&self.shape) {
            debug_assert!(i < n);
            off = off * n + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    /// Standard inner product `Σ s_j t_j`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Permutes the axes: mode `k` of the result is mode `axes[k]` of `self`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        let d = self.order();
        let mut seen = vec![false; d];
        if axes.len() != d || axes.iter().any(|&a| a >= d || std::mem::replace(&mut seen[a], true)) {
            return Err(Error::InvalidModes(format!("{axes:?} is not a permutation of 0..{d}")));
        }
        let new_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let old_strides = self.strides();
        let src_strides: Vec<usize> = axes.iter().map(|&a| old_strides[a]).collect();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0; d];
        for _ in 0..self.len() {
            let off: usize = idx.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
            out.push(self.data[off]);
            increment(&mut idx, &new_shape);
        }
        Ok(Self { shape: new_shape, data: out })
    }

    /// Mode-`mode` product with a matrix `M` (`p × n_mode`):
    /// `out[.., a, ..] = Σ_j M[a, j] · T[.., j, ..]`.
    pub fn mode_product(&self, mode: usize, m: &DMatrix<f64>) -> Result<Self> {
        if mode >= self.order() {
            return Err(Error::InvalidModes(format!("mode {mode} out of range for order {}", self.order())));
        }
        let n = self.shape[mode];
        if m.ncols() != n {
            return Err(Error::Dimension(format!("matrix has {} columns, mode {mode} has extent {n}", m.ncols())));
        }
        let p = m.nrows();
        let outer: usize = self.shape[..mode].iter().product();
        let inner: usize = self.shape[mode + 1..].iter().product();
        let mut out = vec![0.0; outer * p * inner];
        for o in 0..outer {
            let src = &self.data[o * n * inner..(o + 1) * n * inner];
            let dst = &mut out[o * p * inner..(o + 1) * p * inner];
            for a in 0..p {
                let drow = &mut dst[a * inner..(a + 1) * inner];
                for j in 0..n {
                    let c = m[(a, j)];
                    if c == 0.0 {
                        continue;
                    }
                    let srow = &src[j * inner..(j + 1) * inner];
                    for (d, s) in drow.iter_mut().zip(srow) {
                        *d += c * s;
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[mode] = p;
        Ok(Self { shape, data: out })
    }

    /// Contracts every mode `i` with `Some(x_i)` against that vector and keeps
    /// the remaining modes in order. Contracting every mode yields a tensor of
    /// shape `[1]`.
    pub fn contract_vectors(&self, vectors: &[Option<&[f64]>]) -> Result<Self> {
        if vectors.len() != self.order() {
            return Err(Error::Dimension(format!("{} vectors for order {}", vectors.len(), self.order())));
        }
        let mut cur = self.clone();
        let mut kept = Vec::new();
        for (mode, v) in vectors.iter().enumerate().rev() {
            match v {
                Some(x) => {
                    if x.len() != self.shape[mode] {
                        return Err(Error::Dimension(format!(
                            "vector {mode} has length {}, expected {}",
                            x.len(),
                            self.shape[mode]
                        )));
                    }
                    cur = cur.mode_product(mode, &DMatrix::from_row_slice(1, x.len(), x))?;
                }
                None => kept.push(self.shape[mode]),
            }
        }
        kept.reverse();
        if kept.is_empty() {
            kept.push(1);
        }
        Ok(Self { shape: kept, data: cur.data })
    }

    /// Contraction `T × X` over the strictly increasing mode list `modes`;
    /// the result lives on the remaining modes. A full contraction returns a
    /// `[1]`-shaped tensor holding `⟨T, X⟩`.
    pub fn contract(&self, x: &Self, modes: &[usize]) -> Result<Self> {
        let d = self.order();
        if modes.is_empty() || modes.windows(2).any(|w| w[0] >= w[1]) || modes.iter().any(|&m| m >= d) {
            return Err(Error::InvalidModes(format!("{modes:?} must be strictly increasing within 0..{d}")));
        }
        let expected: Vec<usize> = modes.iter().map(|&m| self.shape[m]).collect();
        if x.shape != expected {
            return Err(Error::Dimension(format!("operand shape {:?}, expected {expected:?}", x.shape)));
        }
        let kept: Vec<usize> = (0..d).filter(|m| !modes.contains(m)).collect();
        let axes: Vec<usize> = kept.iter().chain(modes).copied().collect();
        let p = self.permute(&axes)?;
        let nc = x.len();
        let nk = self.len() / nc;
        let data: Vec<f64> = (0..nk)
            .map(|r| p.data[r * nc..(r + 1) * nc].iter().zip(&x.data).map(|(a, b)| a * b).sum())
            .collect();
        let shape = if kept.is_empty() { vec![1] } else { kept.iter().map(|&m| self.shape[m]).collect() };
        Ok(Self { shape, data })
    }

    /// Mode-`l` unfolding `T_l(T)`, an `n_l × N/n_l` matrix.
    pub fn unfold(&self, l: usize) -> Result<DMatrix<f64>> {
        let d = self.order();
        if l >= d {
            return Err(Error::InvalidModes(format!("mode {l} out of range for order {d}")));
        }
        let rest: Vec<usize> = (0..d).filter(|&m| m != l).collect();
        self.unfold_bipartite(&[l], &rest)
    }

    /// Inverse of [`Tensor::unfold`].
    pub fn fold(m: &DMatrix<f64>, l: usize, shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        let d = shape.len();
        if l >= d {
            return Err(Error::InvalidModes(format!("mode {l} out of range for order {d}")));
        }
        let n: usize = shape.iter().product();
        if m.nrows() != shape[l] || m.nrows() * m.ncols() != n {
            return Err(Error::Dimension(format!("{}x{} matrix cannot fold into {shape:?} at mode {l}", m.nrows(), m.ncols())));
        }
        let mut axes = vec![l];
        axes.extend((0..d).filter(|&x| x != l));
        let permuted_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
        let mut data = Vec::with_capacity(n);
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter());
        }
        let permuted = Self { shape: permuted_shape, data };
        let mut inverse = vec![0; d];
        for (k, &a) in axes.iter().enumerate() {
            inverse[a] = k;
        }
        permuted.permute(&inverse)
    }

    /// Unfolding into the mode groups `rows` and `cols`, which must partition
    /// `0..d`. Each group is taken in increasing mode order.
    pub fn unfold_bipartite(&self, rows: &[usize], cols: &[usize]) -> Result<DMatrix<f64>> {
        let d = self.order();
        let mut k: Vec<usize> = rows.to_vec();
        let mut l: Vec<usize> = cols.to_vec();
        k.sort_unstable();
        l.sort_unstable();
        let mut all: Vec<usize> = k.iter().chain(&l).copied().collect();
        all.sort_unstable();
        if k.is_empty() || l.is_empty() || all != (0..d).collect::<Vec<_>>() {
            return Err(Error::InvalidModes(format!("{rows:?} | {cols:?} is not a partition of 0..{d}")));
        }
        let nrows: usize = k.iter().map(|&m| self.shape[m]).product();
        let axes: Vec<usize> = k.iter().chain(&l).copied().collect();
        let p = self.permute(&axes)?;
        Ok(DMatrix::from_row_slice(nrows, self.len() / nrows, &p.data))
    }

    /// Core tensor and orthogonal projection onto `⊗ U_i`.
    ///
    /// The core has shape `r₁×…×r_d` with entries `⟨T, ⊗ u_{j_i,i}⟩`.
    pub fn project(&self, frames: &SubspaceTuple) -> Result<(Self, Self)> {
        let core = self.core(frames)?;
        let mut proj = core.clone();
        for (mode, f) in frames.frames().iter().enumerate() {
            proj = proj.mode_product(mode, f.basis())?;
        }
        Ok((core, proj))
    }

    /// Core tensor `T ×₁ U₁ᵀ ⋯ ×_d U_dᵀ` alone.
    pub fn core(&self, frames: &SubspaceTuple) -> Result<Self> {
        self.check_frames(frames)?;
        let mut core = self.clone();
        for (mode, f) in frames.frames().iter().enumerate() {
            core = core.mode_product(mode, &f.basis().transpose())?;
        }
        Ok(core)
    }

    /// `f_T(x₁,…,x_d) = ⟨T, x₁⊗…⊗x_d⟩`.
    pub fn rank_one_value(&self, vectors: &[&[f64]]) -> Result<f64> {
        let opts: Vec<Option<&[f64]>> = vectors.iter().map(|v| Some(*v)).collect();
        Ok(self.contract_vectors(&opts)?.data[0])
    }

    pub(crate) fn check_frames(&self, frames: &SubspaceTuple) -> Result<()> {
        if frames.len() != self.order() {
            return Err(Error::Dimension(format!("{} frames for order {}", frames.len(), self.order())));
        }
        for (mode, (f, &n)) in frames.frames().iter().zip(&self.shape).enumerate() {
            if f.ambient() != n {
                return Err(Error::Dimension(format!("frame {mode} has {} rows, mode extent is {n}", f.ambient())));
            }
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!("shapes {:?} and {:?} differ", self.shape, other.shape)));
        }
        Ok(())
    }
}

/// Sorted, duplicate-free, non-empty set of indices into `0..extent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
    extent: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, extent: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidIndexSet("empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet(format!("{indices:?} is not strictly increasing")));
        }
        if indices.iter().any(|&i| i >= extent) {
            return Err(Error::InvalidIndexSet(format!("{indices:?} exceeds extent {extent}")));
        }
        Ok(Self { indices, extent })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, extent: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, extent)
    }

    pub fn full(extent: usize) -> Self {
        Self { indices: (0..extent).collect(), extent }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extent(&self) -> usize {
        self.extent
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Dimension(format!("invalid shape {shape:?}")));
    }
    Ok(())
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Advances a multi-index in row-major order; wraps to zero after the end.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}
