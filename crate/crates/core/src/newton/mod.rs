//! Newton iterations on the fixed-point equations of alternating
//! maximization.
//!
//! Newton-1 works in the ambient coordinates of the rank-one problem.
//! Newton-2 works in Grassmann chart coordinates around the current tuple and
//! uses a closed-form derivative of the AMM map built from cached pairwise
//! contractions.

mod cache;
mod newton1;
mod newton2;

pub use cache::{build_contraction_cache, ContractionCache};
pub use newton1::{hybrid_rank_one, newton1, newton1_jacobian};
pub use newton2::{
    chart_decomposition, chart_map, hybrid_newton2, newton2, newton2_derivative, ChartDecomposition, DECREASE_TOL,
    SPECTRUM_GAP_RTOL,
};

use crate::error::{Error, Result};

/// Condition estimate above which a Newton system counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Stopping rule of the Newton methods: at most `max_iters` steps, stop once
/// a step moves the iterate by `change_tol` or less.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonStop {
    pub max_iters: usize,
    pub change_tol: f64,
}

impl Default for NewtonStop {
    fn default() -> Self {
        Self { max_iters: 10, change_tol: (-10.0f64).exp() }
    }
}

impl NewtonStop {
    pub fn new(max_iters: usize, change_tol: f64) -> Result<Self> {
        let s = Self { max_iters, change_tol };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !self.change_tol.is_finite() || self.change_tol < 0.0 {
            return Err(Error::InvalidSpec(format!("invalid Newton stop rule {self:?}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerance_is_e_to_minus_ten() {
        let s = NewtonStop::default();
        assert_eq!(s.max_iters, 10);
        assert!((s.change_tol - 4.53999e-5).abs() < 1e-10);
        assert!(NewtonStop::new(0, 1.0).is_err());
    }
}
