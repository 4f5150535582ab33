use nalgebra::{DMatrix, DVector};

use super::{NewtonStop, MAX_CONDITION};
use crate::amm::{contract_except, prepare_start, rank_one_amm, rank_one_objective, RankOneResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::Tensor;
use crate::trace::{RunTrace, StopReason, StopRule};

fn offsets(shape: &[usize]) -> Vec<usize> {
    let mut off = vec![0; shape.len() + 1];
    for (i, &n) in shape.iter().enumerate() {
        off[i + 1] = off[i] + n;
    }
    off
}

fn check_order(t: &Tensor) -> Result<()> {
    if t.order() < 3 {
        return Err(Error::Dimension(format!("Newton-1 needs at least three modes, got {}", t.order())));
    }
    Ok(())
}

/// `F_i(x) = T × (⊗_{j≠i} x_j)` stacked over all modes.
fn contraction_map(t: &Tensor, xs: &[Vec<f64>]) -> Result<DVector<f64>> {
    let mut out = Vec::with_capacity(t.shape().iter().sum());
    for i in 0..t.order() {
        out.extend(contract_except(t, xs, &[i])?.into_data());
    }
    Ok(DVector::from_vec(out))
}

fn split(shape: &[usize], flat: &DVector<f64>) -> Vec<Vec<f64>> {
    let off = offsets(shape);
    (0..shape.len()).map(|i| flat.as_slice()[off[i]..off[i + 1]].to_vec()).collect()
}

fn stack(xs: &[Vec<f64>]) -> DVector<f64> {
    DVector::from_iterator(xs.iter().map(Vec::len).sum(), xs.iter().flatten().copied())
}

/// Jacobian `DG = I − DF` of `G(x) = x − F(x)`: identity diagonal blocks and
/// off-diagonal block `(i, j)` equal to `−T × (⊗_{k≠i,j} x_k)` as an
/// `n_i × n_j` matrix.
pub fn newton1_jacobian(t: &Tensor, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_order(t)?;
    if xs.len() != t.order() {
        return Err(Error::Dimension(format!("{} vectors for order {}", xs.len(), t.order())));
    }
    let shape = t.shape();
    let off = offsets(shape);
    let mut dg = DMatrix::identity(off[shape.len()], off[shape.len()]);
    for i in 0..t.order() {
        for j in i + 1..t.order() {
            let c = contract_except(t, xs, &[i, j])?.into_data();
            let block = DMatrix::from_row_slice(shape[i], shape[j], &c);
            dg.view_mut((off[i], off[j]), (shape[i], shape[j])).copy_from(&(-&block));
            dg.view_mut((off[j], off[i]), (shape[j], shape[i])).copy_from(&(-block.transpose()));
        }
    }
    Ok(dg)
}

/// Newton iteration on `G(x) = x − F(x)` started from the rescaled point
/// `f_T(ψ)^{−1/(d−2)} ψ`, whose fixed points are rescaled singular tuples.
/// The result is renormalized to unit vectors.
pub fn newton1(t: &Tensor, start: &[Vec<f64>], stop: &NewtonStop) -> Result<RankOneResult> {
    check_order(t)?;
    stop.validate()?;
    let (psi, f0) = prepare_start(t, start)?;
    let scale = f0.powf(-1.0 / (t.order() as f64 - 2.0));
    let mut phi = stack(&psi) * scale;
    let mut trace = RunTrace::start(f0);
    let mut growth = 0;
    let mut last_residual = f64::INFINITY;
    for _ in 0..stop.max_iters {
        let xs = split(t.shape(), &phi);
        let g = &phi - contraction_map(t, &xs)?;
        let residual = g.norm();
        trace.residuals.push(residual);
        growth = if residual > last_residual { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(Error::Divergence);
        }
        last_residual = residual;
        let dg = newton1_jacobian(t, &xs)?;
        let delta = linalg::solve_checked(&dg, &g, MAX_CONDITION).map_err(|condition| Error::SingularJacobian { condition })?;
        trace.solved(1);
        phi -= &delta;
        let step = delta.norm();
        trace.displacements.push(step);
        let unit = normalized(t.shape(), &phi)?;
        trace.iteration(rank_one_objective(t, &unit)?.abs());
        if step <= stop.change_tol {
            trace.stop = StopReason::Converged;
            break;
        }
    }
    let mut vectors = normalized(t.shape(), &phi)?;
    let mut lambda = rank_one_objective(t, &vectors)?;
    if lambda < 0.0 {
        vectors[0].iter_mut().for_each(|v| *v = -*v);
        lambda = -lambda;
    }
    let g = stack(&vectors) * lambda.powf(-1.0 / (t.order() as f64 - 2.0));
    let xs = split(t.shape(), &g);
    trace.residuals.push((&g - contraction_map(t, &xs)?).norm());
    Ok(RankOneResult { vectors, lambda, trace })
}

fn normalized(shape: &[usize], phi: &DVector<f64>) -> Result<Vec<Vec<f64>>> {
    split(shape, phi)
        .into_iter()
        .map(|z| {
            let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n == 0.0 || !n.is_finite() {
                return Err(Error::Divergence);
            }
            Ok(z.into_iter().map(|v| v / n).collect())
        })
        .collect()
}

/// `sweeps` rank-one AMM sweeps followed by Newton-1. If Newton fails the
/// run continues from the warm start with rank-one AMM under `fallback`.
pub fn hybrid_rank_one(
    t: &Tensor,
    init: &[Vec<f64>],
    sweeps: usize,
    stop: &NewtonStop,
    fallback: &StopRule,
) -> Result<RankOneResult> {
    let mut warm = if sweeps > 0 {
        rank_one_amm(t, init, &StopRule { max_iters: sweeps, fit_tol: 0.0 })?
    } else {
        let (vectors, lambda) = prepare_start(t, init)?;
        RankOneResult { vectors, lambda, trace: RunTrace::start(lambda) }
    };
    match newton1(t, &warm.vectors, stop) {
        Ok(newton) => {
            warm.trace.extend(newton.trace);
            Ok(RankOneResult { vectors: newton.vectors, lambda: newton.lambda, trace: warm.trace })
        }
        Err(e @ (Error::SingularJacobian { .. } | Error::Divergence)) => {
            let rest = rank_one_amm(t, &warm.vectors, fallback)?;
            warm.trace.extend(rest.trace);
            warm.trace.stop = StopReason::Fallback(fallback_tag(&e).into());
            Ok(RankOneResult { vectors: rest.vectors, lambda: rest.lambda, trace: warm.trace })
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn fallback_tag(e: &Error) -> &'static str {
    match e {
        Error::SingularJacobian { .. } => "singular_jacobian",
        Error::Divergence => "divergence",
        Error::DegenerateSpectrum { .. } => "degenerate_spectrum",
        Error::OutOfChart { .. } => "out_of_chart",
        Error::ObjectiveDecrease { .. } => "objective_decrease",
        _ => "error",
    }
}
