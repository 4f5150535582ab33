use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::gram::{build_gram, objective, top_eigenspace, EigenBlock};
use crate::error::{Error, Result};
use crate::grassmann::{OrthoFrame, SubspaceTuple};
use crate::tensor::Tensor;
use crate::trace::{CandidateLog, RunTrace, StopReason, StopRule};

fn check_start(t: &Tensor, init: &SubspaceTuple) -> Result<()> {
    t.check_frames(init)
}

fn check_ranks(shape: &[usize], ranks: &[usize]) -> Result<()> {
    if shape.len() != ranks.len() {
        return Err(Error::Dimension(format!("{} ranks for order {}", ranks.len(), shape.len())));
    }
    if let Some(m) = (0..shape.len()).find(|&m| ranks[m] == 0 || ranks[m] > shape[m]) {
        return Err(Error::Dimension(format!("rank {} invalid for mode {m} of extent {}", ranks[m], shape[m])));
    }
    Ok(())
}

/// Candidate update of mode `i`: objective before and the best frame.
fn candidate(t: &Tensor, tuple: &SubspaceTuple, i: usize) -> Result<(f64, EigenBlock)> {
    let g = build_gram(t, tuple, i)?;
    let before = g.trace_on(tuple.frame(i).basis());
    Ok((before, top_eigenspace(&g.matrix, tuple.frame(i).rank())?))
}

/// Replaces frame `i` by the top eigenspace of its Gram matrix unless that
/// would lower the objective or the eigen-gap is tied without a gain.
/// Returns the objective afterwards.
pub(crate) fn update_mode(t: &Tensor, tuple: &mut SubspaceTuple, i: usize, trace: &mut RunTrace) -> Result<f64> {
    let (before, eb) = candidate(t, tuple, i)?;
    trace.solved(1);
    commit(tuple, i, before, eb, trace)
}

fn commit(tuple: &mut SubspaceTuple, i: usize, before: f64, eb: EigenBlock, trace: &mut RunTrace) -> Result<f64> {
    let after = eb.value();
    if after > before || (after == before && !eb.degenerate) {
        tuple.set_frame(i, eb.frame);
        Ok(after)
    } else {
        if eb.degenerate {
            trace.degenerate_updates += 1;
        }
        Ok(before)
    }
}

/// Alternating maximization: cyclic sweeps over the modes, each replacing
/// `U_i` by the top-`r_i` eigenspace of `A_i`. One iteration is one sweep.
pub fn amm(t: &Tensor, init: &SubspaceTuple, stop: &StopRule) -> Result<(SubspaceTuple, RunTrace)> {
    stop.validate()?;
    check_start(t, init)?;
    let mut tuple = init.clone();
    let mut current = objective(t, &tuple)?;
    let mut trace = RunTrace::start(current);
    for _ in 0..stop.max_iters {
        let mut value = current;
        for i in 0..t.order() {
            value = update_mode(t, &mut tuple, i, &mut trace)?;
            trace.update(value);
        }
        trace.iteration(value);
        if stop.converged(current, value) {
            trace.stop = StopReason::Converged;
            return Ok((tuple, trace));
        }
        current = value;
    }
    trace.stop = StopReason::MaxIters;
    Ok((tuple, trace))
}

/// Greedy alternating maximization: every step evaluates the single-mode
/// updates of all modes except the one committed last and commits the one
/// with the largest objective (lowest mode wins ties). One iteration is one
/// committed step.
pub fn mamm(t: &Tensor, init: &SubspaceTuple, stop: &StopRule) -> Result<(SubspaceTuple, RunTrace)> {
    stop.validate()?;
    check_start(t, init)?;
    let mut tuple = init.clone();
    let mut current = objective(t, &tuple)?;
    let mut trace = RunTrace::start(current);
    let mut last: Option<usize> = None;
    for _ in 0..stop.max_iters {
        let mut evaluated = Vec::new();
        for i in (0..t.order()).filter(|&i| Some(i) != last) {
            let (before, eb) = candidate(t, &tuple, i)?;
            trace.solved(1);
            evaluated.push((i, before, eb));
        }
        if evaluated.is_empty() {
            trace.stop = StopReason::Converged;
            return Ok((tuple, trace));
        }
        let chosen = (0..evaluated.len()).fold(0, |b, k| if evaluated[k].2.value() > evaluated[b].2.value() { k } else { b });
        trace.candidates.push(CandidateLog {
            candidates: evaluated.iter().map(|(i, _, eb)| (vec![*i], eb.value())).collect(),
            chosen,
        });
        let (mode, before, eb) = evaluated.swap_remove(chosen);
        if eb.value() <= before {
            trace.stop = StopReason::Converged;
            return Ok((tuple, trace));
        }
        let value = commit(&mut tuple, mode, before, eb, &mut trace)?;
        trace.update(value);
        trace.iteration(value);
        last = Some(mode);
        if stop.converged(current, value) {
            trace.stop = StopReason::Converged;
            return Ok((tuple, trace));
        }
        current = value;
    }
    trace.stop = StopReason::MaxIters;
    Ok((tuple, trace))
}

/// Mode pairs `(a, b)`, `a < b`, in decreasing lexicographic order.
pub fn pair_schedule(d: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
    pairs.reverse();
    pairs
}

/// Pairwise alternating maximization: each outer iteration cycles over the
/// mode pairs and maximizes over each pair by an inner alternating run
/// governed by `inner`.
pub fn two_ammv(t: &Tensor, init: &SubspaceTuple, stop: &StopRule, inner: &StopRule) -> Result<(SubspaceTuple, RunTrace)> {
    stop.validate()?;
    inner.validate()?;
    check_start(t, init)?;
    if t.order() < 2 {
        return Err(Error::Dimension("pairwise updates need at least two modes".into()));
    }
    let mut tuple = init.clone();
    let mut current = objective(t, &tuple)?;
    let mut trace = RunTrace::start(current);
    for _ in 0..stop.max_iters {
        let mut value = current;
        for (a, b) in pair_schedule(t.order()) {
            for _ in 0..inner.max_iters {
                let start = value;
                for i in [a, b] {
                    value = update_mode(t, &mut tuple, i, &mut trace)?;
                    trace.update(value);
                }
                if inner.converged(start, value) {
                    break;
                }
            }
        }
        trace.iteration(value);
        if stop.converged(current, value) {
            trace.stop = StopReason::Converged;
            return Ok((tuple, trace));
        }
        current = value;
    }
    trace.stop = StopReason::MaxIters;
    Ok((tuple, trace))
}

/// Per mode, the leading `r_l` left singular vectors of the unfolding `T_l`.
pub fn hosvd_init(t: &Tensor, ranks: &[usize]) -> Result<SubspaceTuple> {
    check_ranks(t.shape(), ranks)?;
    let frames = (0..t.order())
        .map(|l| {
            let m = t.unfold(l)?;
            Ok(top_eigenspace(&(&m * m.transpose()), ranks[l])?.frame)
        })
        .collect::<Result<_>>()?;
    Ok(SubspaceTuple::new(frames))
}

/// Orthonormalized standard Gaussian frames from one seeded stream.
pub fn random_init(shape: &[usize], ranks: &[usize], seed: u64) -> Result<SubspaceTuple> {
    check_ranks(shape, ranks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = shape
        .iter()
        .zip(ranks)
        .map(|(&n, &r)| {
            // Gaussian matrices have full rank almost surely; redraw otherwise
            loop {
                let m = nalgebra::DMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
                if let Ok(f) = OrthoFrame::orthonormalize(&m) {
                    return f;
                }
            }
        })
        .collect();
    Ok(SubspaceTuple::new(frames))
}

/// Objective gain available from replacing each single frame by the top
/// eigenspace of its Gram matrix; all zero at a 1-semi-maximum.
pub fn single_mode_gains(t: &Tensor, tuple: &SubspaceTuple) -> Result<Vec<f64>> {
    (0..t.order())
        .map(|i| {
            let (before, eb) = candidate(t, tuple, i)?;
            Ok(eb.value() - before)
        })
        .collect()
}
