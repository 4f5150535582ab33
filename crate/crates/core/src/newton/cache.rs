use itertools::Itertools;
use nalgebra::DMatrix;

use crate::amm::partial_core;
use crate::error::{Error, Result};
use crate::grassmann::SubspaceTuple;
use crate::tensor::Tensor;

/// Contractions `C_ij(J) = T × (⊗_{(k,l)∈J} u_{k,l})` of the tensor with one
/// anchor basis vector on every mode other than `i` and `j`.
#[derive(Clone, Debug)]
pub struct ContractionCache {
    order: usize,
    /// Indexed by unordered pair `i < j`; each entry holds `(J, C_ij(J))`
    /// with `J` listing `k_l` for the remaining modes in increasing order.
    pairs: Vec<Vec<(Vec<usize>, DMatrix<f64>)>>,
    ranks: Vec<usize>,
}

fn pair_index(d: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * d - a * (a + 1) / 2 + (b - a - 1)
}

/// Builds every `C_ij(J)` for the anchor frames.
pub fn build_contraction_cache(t: &Tensor, anchor: &SubspaceTuple) -> Result<ContractionCache> {
    t.check_frames(anchor)?;
    let d = t.order();
    if d < 2 {
        return Err(Error::Dimension("contractions need at least two modes".into()));
    }
    let ranks = anchor.ranks();
    let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
    for (i, j) in (0..d).tuple_combinations() {
        let rest: Vec<usize> = (0..d).filter(|&l| l != i && l != j).collect();
        let entries = if rest.is_empty() {
            vec![(Vec::new(), t.to_matrix()?)]
        } else {
            let core = partial_core(t, anchor, &[i, j])?;
            let rows = core.unfold_bipartite(&rest, &[i, j])?;
            let shape = t.shape();
            rest.iter()
                .map(|&l| 0..ranks[l])
                .multi_cartesian_product()
                .enumerate()
                .map(|(row, idx)| (idx, DMatrix::from_row_slice(shape[i], shape[j], rows.row(row).transpose().as_slice())))
                .collect()
        };
        pairs.push(entries);
    }
    Ok(ContractionCache { order: d, pairs, ranks })
}

impl ContractionCache {
    /// `R_ij = Π_{l∉{i,j}} r_l`.
    pub fn count(&self, i: usize, j: usize) -> usize {
        (0..self.order).filter(|&l| l != i && l != j).map(|l| self.ranks[l]).product()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Multi-indices `J` in the order [`ContractionCache::matrices`] uses.
    pub fn indices(&self, i: usize, j: usize) -> Vec<&[usize]> {
        self.pairs[pair_index(self.order, i, j)].iter().map(|(k, _)| k.as_slice()).collect()
    }

    /// `C_ij(J)` for all `J`, as `n_i × n_j` matrices.
    pub fn matrices(&self, i: usize, j: usize) -> Vec<DMatrix<f64>> {
        assert!(i != j && i < self.order && j < self.order, "mode pair ({i}, {j}) invalid");
        let entries = &self.pairs[pair_index(self.order, i, j)];
        if i < j {
            entries.iter().map(|(_, c)| c.clone()).collect()
        } else {
            entries.iter().map(|(_, c)| c.transpose()).collect()
        }
    }

    /// Borrowed `C_ab(J)` for `a < b`.
    pub(crate) fn raw(&self, i: usize, j: usize) -> &[(Vec<usize>, DMatrix<f64>)] {
        &self.pairs[pair_index(self.order, i, j)]
    }

    /// `A_j = Σ_{k,J} (C_ji(J) u_{k,i})(C_ji(J) u_{k,i})ᵀ`, computed through the
    /// partner mode `i` (any `i ≠ j`).
    pub fn gram(&self, anchor: &SubspaceTuple, j: usize, i: usize) -> DMatrix<f64> {
        let u = anchor.frame(i).basis();
        let n = anchor.frame(j).ambient();
        let mut a = DMatrix::zeros(n, n);
        for (_, c) in self.raw(i, j) {
            // stored as C_ab with a < b
            let m = if j < i { c * u } else { c.transpose() * u };
            a += &m * m.transpose();
        }
        crate::linalg::symmetrize(&a)
    }
}
