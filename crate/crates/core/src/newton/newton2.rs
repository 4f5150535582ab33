use nalgebra::{DMatrix, DVector};

use super::cache::{build_contraction_cache, ContractionCache};
use super::newton1::fallback_tag;
use super::{NewtonStop, MAX_CONDITION};
use crate::amm::{amm, build_gram, objective, top_eigenspace};
use crate::error::{Error, Result};
use crate::grassmann::{chart_to_tuple, split_chart, tuple_to_chart, ChartBlock, ChartPoint, SubspaceTuple};
use crate::linalg;
use crate::tensor::Tensor;
use crate::trace::{RunTrace, StopReason, StopRule};

/// Eigen-gap `λ_{r_j} − λ_{r_j+1}` below this multiple of `λ₁` is treated as
/// degenerate.
pub const SPECTRUM_GAP_RTOL: f64 = 1e-10;

/// A Newton-2 step is rejected when it leaves the objective more than this
/// below the best value accepted so far.
pub const DECREASE_TOL: f64 = 1e-9;

/// Spectral data of the AMM map at an anchor, one entry per mode.
#[derive(Clone, Debug)]
pub struct ChartDecomposition {
    /// `Z_{j,0}` split into `Y_{j,0}` (top `r_j` rows) and `X_{j,0}`.
    pub blocks: Vec<ChartBlock>,
    /// `Y_{j,0}⁻¹`.
    pub y_inv: Vec<DMatrix<f64>>,
    /// Eigenvalues of `A_j` in decreasing order.
    pub values: Vec<Vec<f64>>,
    /// Matching orthonormal eigenvectors `v_{1,j}, …, v_{n_j,j}` as columns.
    pub vectors: Vec<DMatrix<f64>>,
    /// `F(0)`: block `j` is `X_{j,0} Y_{j,0}⁻¹`.
    pub f0: ChartPoint,
}

/// Eigendecomposes every `A_j` (reassembled from the cache) and expresses
/// its top-`r_j` eigenspace in the anchor's chart.
///
/// `anchor` must carry completions, see [`SubspaceTuple::with_completions`].
pub fn chart_decomposition(anchor: &SubspaceTuple, cache: &ContractionCache) -> Result<ChartDecomposition> {
    let d = anchor.len();
    let mut out = ChartDecomposition {
        blocks: Vec::with_capacity(d),
        y_inv: Vec::with_capacity(d),
        values: Vec::with_capacity(d),
        vectors: Vec::with_capacity(d),
        f0: ChartPoint::new(Vec::new()),
    };
    let mut f0 = Vec::with_capacity(d);
    for j in 0..d {
        let partner = if j == 0 { 1 } else { 0 };
        let a = cache.gram(anchor, j, partner);
        let (values, vectors) = linalg::sym_eigen_desc(&a);
        let r = anchor.frame(j).rank();
        if r < values.len() {
            let gap = values[r - 1] - values[r];
            if gap.is_nan() || gap <= SPECTRUM_GAP_RTOL * values[0].abs() {
                return Err(Error::DegenerateSpectrum { mode: j, gap });
            }
        }
        let z = anchor.frame(j).full_basis().transpose() * vectors.columns(0, r);
        let (block, fj) = split_chart(&z, r).ok_or(Error::OutOfChart { mode: j })?;
        let y_inv = block.y.clone().try_inverse().ok_or(Error::OutOfChart { mode: j })?;
        out.blocks.push(block);
        out.y_inv.push(y_inv);
        out.values.push(values);
        out.vectors.push(vectors);
        f0.push(fj);
    }
    out.f0 = ChartPoint::new(f0);
    Ok(out)
}

fn offsets(anchor: &SubspaceTuple) -> Vec<usize> {
    let mut off = vec![0];
    for f in anchor.frames() {
        off.push(off.last().unwrap() + (f.ambient() - f.rank()) * f.rank());
    }
    off
}

/// `F(0)` and the derivative `DF(0)` of the AMM map in the anchor's chart.
///
/// Row `offset_j + s·r_j + t` holds output coordinate `(s, t)` of `F_j`;
/// column `offset_i + p·r_i + q` the input coordinate `g_{pq,i}`. Diagonal
/// blocks are zero since `F_j` ignores `X_j`.
pub fn newton2_derivative(
    anchor: &SubspaceTuple,
    cache: &ContractionCache,
    decomp: &ChartDecomposition,
) -> Result<(ChartPoint, DMatrix<f64>)> {
    let d = anchor.len();
    let off = offsets(anchor);
    let dim = off[d];
    let mut df = DMatrix::zeros(dim, dim);
    for j in 0..d {
        let rj = anchor.frame(j).rank();
        let nj = anchor.frame(j).ambient();
        if rj == nj {
            continue;
        }
        let vals = &decomp.values[j];
        let vecs = &decomp.vectors[j];
        let q_j = anchor.frame(j).full_basis();
        // complement eigenvectors in anchor coordinates
        let lower = q_j.transpose() * vecs.columns(rj, nj - rj);
        let (x0, yinv) = (&decomp.blocks[j].x, &decomp.y_inv[j]);
        let xy = x0 * yinv;
        for i in (0..d).filter(|&i| i != j) {
            let ri = anchor.frame(i).rank();
            let ni = anchor.frame(i).ambient();
            if ri == ni {
                continue;
            }
            let q_i = anchor.frame(i).full_basis();
            // P_J = Vⱼᵀ C_ji(J) Q_i: both sides in eigen / anchor coordinates
            let projected: Vec<DMatrix<f64>> = cache
                .raw(i, j)
                .iter()
                .map(|(_, c)| if j < i { vecs.transpose() * c * &q_i } else { vecs.transpose() * c.transpose() * &q_i })
                .collect();
            for p in 0..ni - ri {
                for q in 0..ri {
                    // coefficients of w_k on v_l, l > r_j
                    let mut coeff = DMatrix::zeros(nj - rj, rj);
                    for pj in &projected {
                        for k in 0..rj {
                            for l in rj..nj {
                                let b = pj[(l, ri + p)] * pj[(k, q)] + pj[(l, q)] * pj[(k, ri + p)];
                                coeff[(l - rj, k)] += b;
                            }
                        }
                    }
                    for k in 0..rj {
                        for l in rj..nj {
                            coeff[(l - rj, k)] /= vals[k] - vals[l];
                        }
                    }
                    let w = &lower * coeff;
                    let v = w.rows(0, rj);
                    let u = w.rows(rj, nj - rj);
                    let deriv = u * yinv - &xy * v * yinv;
                    let col = off[i] + p * ri + q;
                    for s in 0..nj - rj {
                        for t in 0..rj {
                            df[(off[j] + s * rj + t, col)] = deriv[(s, t)];
                        }
                    }
                }
            }
        }
    }
    Ok((decomp.f0.clone(), df))
}

/// The AMM map in chart coordinates, evaluated directly: move to the tuple
/// `x` represents, replace every frame by the top eigenspace of its Gram
/// matrix, and read the result back in the chart.
pub fn chart_map(t: &Tensor, anchor: &SubspaceTuple, x: &ChartPoint) -> Result<ChartPoint> {
    let tuple = chart_to_tuple(anchor, x)?;
    let frames = (0..t.order())
        .map(|j| Ok(top_eigenspace(&build_gram(t, &tuple, j)?.matrix, tuple.frame(j).rank())?.frame))
        .collect::<Result<Vec<_>>>()?;
    Ok(tuple_to_chart(anchor, &SubspaceTuple::new(frames))?.0)
}

/// Newton iteration on `G(X) = X − F(X)`, re-anchored at the current tuple
/// before every step so each step starts from `X = 0`:
/// `δ = (I − DF(0))⁻¹ F(0)`, then the tuple represented by `δ` is
/// orthonormalized and becomes the next anchor.
pub fn newton2(t: &Tensor, init: &SubspaceTuple, stop: &NewtonStop) -> Result<(SubspaceTuple, RunTrace)> {
    let (tuple, trace, err) = newton2_run(t, init, stop)?;
    match err {
        Some(e) => Err(e),
        None => Ok((tuple, trace)),
    }
}

/// Like [`newton2`], but a failing step ends the run and is handed back with
/// the last accepted tuple instead of discarding it.
pub(crate) fn newton2_run(t: &Tensor, init: &SubspaceTuple, stop: &NewtonStop) -> Result<(SubspaceTuple, RunTrace, Option<Error>)> {
    stop.validate()?;
    t.check_frames(init)?;
    let mut tuple = init.clone();
    let mut current = objective(t, &tuple)?;
    let mut best = current;
    let mut trace = RunTrace::start(current);
    for _ in 0..stop.max_iters {
        match newton2_step(t, &tuple) {
            Ok((next, step, residual)) => {
                trace.solved(t.order());
                trace.residuals.push(residual);
                let value = objective(t, &next)?;
                if value < best - DECREASE_TOL {
                    return Ok((tuple, trace, Some(Error::ObjectiveDecrease { before: current, after: value })));
                }
                tuple = next;
                current = value;
                best = best.max(value);
                trace.displacements.push(step);
                trace.update(value);
                trace.iteration(value);
                if step <= stop.change_tol {
                    trace.stop = StopReason::Converged;
                    break;
                }
            }
            Err(e) => return Ok((tuple, trace, Some(e))),
        }
    }
    Ok((tuple, trace, None))
}

/// One re-anchored Newton step: the new tuple, `‖δ‖`, and `‖F(0)‖`.
fn newton2_step(t: &Tensor, tuple: &SubspaceTuple) -> Result<(SubspaceTuple, f64, f64)> {
    let anchor = tuple.with_completions();
    let cache = build_contraction_cache(t, &anchor)?;
    let decomp = chart_decomposition(&anchor, &cache)?;
    let (f0, df) = newton2_derivative(&anchor, &cache, &decomp)?;
    let rhs = DVector::from_vec(f0.to_flat());
    let m = DMatrix::identity(df.nrows(), df.ncols()) - df;
    let delta = linalg::solve_checked(&m, &rhs, MAX_CONDITION).map_err(|condition| Error::SingularJacobian { condition })?;
    let step = ChartPoint::from_flat(&anchor, delta.as_slice())?;
    Ok((chart_to_tuple(&anchor, &step)?, delta.norm(), rhs.norm()))
}

/// `warm` AMM sweeps, then Newton-2. If a Newton step fails the run resumes
/// from the last accepted tuple with AMM under `fallback`, and the trace's
/// stop reason records why.
pub fn hybrid_newton2(
    t: &Tensor,
    init: &SubspaceTuple,
    warm: usize,
    stop: &NewtonStop,
    fallback: &StopRule,
) -> Result<(SubspaceTuple, RunTrace)> {
    let (start, mut trace) = if warm > 0 {
        amm(t, init, &StopRule { max_iters: warm, fit_tol: 0.0 })?
    } else {
        (init.clone(), RunTrace::start(objective(t, init)?))
    };
    let (tuple, newton, err) = newton2_run(t, &start, stop)?;
    trace.extend(newton);
    match err {
        None => Ok((tuple, trace)),
        Some(e @ Error::Dimension(_)) => Err(e),
        Some(e) => {
            let (tuple, rest) = amm(t, &tuple, fallback)?;
            trace.extend(rest);
            trace.stop = StopReason::Fallback(fallback_tag(&e).into());
            Ok((tuple, trace))
        }
    }
}
