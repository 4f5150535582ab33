//! Real rank of `2×2×2` tensors.
//!
//! A real `2×2×2` tensor has rank at most 3. Generic tensors have rank 2
//! when Cayley's hyperdeterminant is positive and rank 3 when it is
//! negative; for Gaussian entries the first case has probability `π/4`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::amm::{hosvd_init, StopRule};
use crate::error::{Error, Result};
use crate::linalg;
use crate::newton::{hybrid_newton2, NewtonStop};
use crate::tensor::Tensor;

/// `|Δ| ≤ HYPERDET_RTOL·‖T‖⁴` counts as a vanishing hyperdeterminant.
pub const HYPERDET_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank222 {
    Rank(u8),
    /// Vanishing hyperdeterminant on a tensor that is neither rank one nor
    /// a pencil of rank-one terms: the sign test cannot decide.
    Degenerate,
}

impl fmt::Display for Rank222 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rank(r) => write!(f, "{r}"),
            Self::Degenerate => f.write_str("degenerate"),
        }
    }
}

fn check_shape(t: &Tensor) -> Result<()> {
    if t.shape() != [2, 2, 2] {
        return Err(Error::Dimension(format!("expected a 2×2×2 tensor, got {:?}", t.shape())));
    }
    Ok(())
}

/// Cayley's hyperdeterminant of a `2×2×2` tensor.
pub fn hyperdeterminant(t: &Tensor) -> Result<f64> {
    check_shape(t)?;
    let a = |i: usize, j: usize, k: usize| t.get(&[i, j, k]);
    let (a000, a001, a010, a011) = (a(0, 0, 0), a(0, 0, 1), a(0, 1, 0), a(0, 1, 1));
    let (a100, a101, a110, a111) = (a(1, 0, 0), a(1, 0, 1), a(1, 1, 0), a(1, 1, 1));
    let squares = (a000 * a111).powi(2) + (a001 * a110).powi(2) + (a010 * a101).powi(2) + (a100 * a011).powi(2);
    let pairs = a000 * a111 * a001 * a110
        + a000 * a111 * a010 * a101
        + a000 * a111 * a100 * a011
        + a001 * a110 * a010 * a101
        + a001 * a110 * a100 * a011
        + a010 * a101 * a100 * a011;
    let quads = a000 * a011 * a101 * a110 + a001 * a010 * a100 * a111;
    Ok(squares - 2.0 * pairs + 4.0 * quads)
}

fn unfolding_ranks(t: &Tensor) -> Result<[usize; 3]> {
    let mut out = [0; 3];
    for (l, r) in out.iter_mut().enumerate() {
        let s = linalg::singular_values(&t.unfold(l)?);
        *r = s.iter().filter(|&&x| x > 1e-12 * s[0]).count();
    }
    Ok(out)
}

/// Rank of a `2×2×2` tensor: zero and rank-one tensors exactly, rank 2 for
/// a rank-deficient unfolding, otherwise by the sign of the hyperdeterminant.
pub fn classify_rank222(t: &Tensor) -> Result<Rank222> {
    check_shape(t)?;
    let norm = t.hs_norm();
    if norm == 0.0 {
        return Ok(Rank222::Rank(0));
    }
    let ranks = unfolding_ranks(t)?;
    if ranks == [1, 1, 1] {
        return Ok(Rank222::Rank(1));
    }
    if ranks.contains(&1) {
        // a ⊗ M with M a 2×2 matrix of rank 2
        return Ok(Rank222::Rank(2));
    }
    let delta = hyperdeterminant(t)?;
    if delta.abs() <= HYPERDET_RTOL * norm.powi(4) {
        Ok(Rank222::Degenerate)
    } else if delta > 0.0 {
        Ok(Rank222::Rank(2))
    } else {
        Ok(Rank222::Rank(3))
    }
}

/// Draws `samples` Gaussian `2×2×2` tensors from one seeded stream and
/// returns the fraction of rank at most 2 with its binomial standard error.
/// Degenerate draws are discarded and redrawn.
pub fn rank222_experiment(samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 100 {
        return Err(Error::InvalidSpec(format!("need at least 100 samples, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut low = 0usize;
    let mut taken = 0usize;
    while taken < samples {
        let t = Tensor::from_fn(&[2, 2, 2], |_| StandardNormal.sample(&mut rng));
        match classify_rank222(&t)? {
            Rank222::Degenerate => continue,
            Rank222::Rank(r) => {
                taken += 1;
                if r <= 2 {
                    low += 1;
                }
            }
        }
    }
    let p = low as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

/// Best `(2,2,2)`-approximation of a 3-mode tensor (HOSVD start, one AMM
/// sweep, Newton-2, AMM fallback) and the rank of its core.
pub fn best222_core_rank(t: &Tensor, stop: &NewtonStop, fallback: &StopRule) -> Result<(Tensor, Rank222)> {
    if t.order() != 3 || t.shape().iter().any(|&n| n < 2) {
        return Err(Error::Dimension(format!("need a 3-mode tensor with every extent ≥ 2, got {:?}", t.shape())));
    }
    let init = hosvd_init(t, &[2, 2, 2])?;
    let (tuple, _) = hybrid_newton2(t, &init, 1, stop, fallback)?;
    let core = t.core(&tuple)?;
    let rank = classify_rank222(&core)?;
    Ok((core, rank))
}
