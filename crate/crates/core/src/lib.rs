//! Low-rank approximation of dense tensors.
//!
//! The crate covers best multilinear-rank and best rank-one approximation by
//! alternating maximization (AMM, MAMM, 2AMMV and their rank-one
//! counterparts), Newton iterations on the fixed-point equations, and CUR
//! (skeleton) approximations of matrices and of 3- and 4-mode tensors.

pub mod amm;
pub mod error;
pub mod grassmann;
pub mod linalg;
pub mod matrix;
pub mod newton;
pub mod rank222;
pub mod synth;
pub mod tensor;
pub mod tensor_cur;
pub mod trace;

pub use error::{Error, Result};
pub use grassmann::{ChartPoint, OrthoFrame, SubspaceTuple};
pub use tensor::{IndexSet, Tensor};

#[cfg(test)]
pub(crate) mod testutil {
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use crate::tensor::Tensor;

    pub fn gaussian_tensor(shape: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(shape, |_| StandardNormal.sample(&mut rng))
    }

    pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }
}
