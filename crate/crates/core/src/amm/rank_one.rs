use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::multilinear::pair_schedule;
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::Tensor;
use crate::trace::{CandidateLog, RunTrace, StopReason, StopRule};

/// Outcome of a best rank-one run: unit vectors `x_i`, the value
/// `λ = f_T(x₁,…,x_d)` and the run history (objective `f_T`).
#[derive(Clone, Debug)]
pub struct RankOneResult {
    pub vectors: Vec<Vec<f64>>,
    pub lambda: f64,
    pub trace: RunTrace,
}

/// `T` contracted with `x_j` on every mode not listed in `keep`.
pub(crate) fn contract_except(t: &Tensor, xs: &[Vec<f64>], keep: &[usize]) -> Result<Tensor> {
    let opts: Vec<Option<&[f64]>> =
        xs.iter().enumerate().map(|(m, x)| if keep.contains(&m) { None } else { Some(x.as_slice()) }).collect();
    t.contract_vectors(&opts)
}

pub(crate) fn value(t: &Tensor, xs: &[Vec<f64>]) -> Result<f64> {
    let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
    t.rank_one_value(&refs)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Normalizes the start, rejects `f_T = 0` and flips `x₁` when `f_T < 0`.
pub(crate) fn prepare_start(t: &Tensor, init: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    if init.len() != t.order() {
        return Err(Error::Dimension(format!("{} vectors for order {}", init.len(), t.order())));
    }
    let mut xs = Vec::with_capacity(init.len());
    for (m, x) in init.iter().enumerate() {
        if x.len() != t.shape()[m] {
            return Err(Error::Dimension(format!("vector {m} has length {}, expected {}", x.len(), t.shape()[m])));
        }
        let n = norm(x);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateStart(format!("start vector {m} is zero")));
        }
        xs.push(x.iter().map(|v| v / n).collect::<Vec<f64>>());
    }
    let mut f = value(t, &xs)?;
    if f == 0.0 {
        return Err(Error::DegenerateStart("f_T vanishes at the start".into()));
    }
    if f < 0.0 {
        xs[0].iter_mut().for_each(|v| *v = -*v);
        f = -f;
    }
    Ok((xs, f))
}

/// Best `x_i` with the others fixed: `T × (⊗_{j≠i} x_j)` normalized. The new
/// value `‖v‖` never falls below the old `⟨v, x_i⟩` beyond rounding.
fn vector_update(t: &Tensor, xs: &mut [Vec<f64>], i: usize) -> Result<f64> {
    let v = contract_except(t, xs, &[i])?.into_data();
    let n = norm(&v);
    if n == 0.0 {
        return Err(Error::DegenerateStart(format!("contraction for mode {i} vanished")));
    }
    xs[i] = v.iter().map(|a| a / n).collect();
    Ok(n)
}

/// Alternating maximization of `f_T` over unit vectors, one mode at a time.
pub fn rank_one_amm(t: &Tensor, init: &[Vec<f64>], stop: &StopRule) -> Result<RankOneResult> {
    stop.validate()?;
    let (mut xs, mut current) = prepare_start(t, init)?;
    let mut trace = RunTrace::start(current);
    trace.stop = StopReason::MaxIters;
    for _ in 0..stop.max_iters {
        let mut f = current;
        for i in 0..t.order() {
            f = vector_update(t, &mut xs, i)?;
            trace.solved(1);
            trace.update(f);
        }
        trace.iteration(f);
        let done = stop.converged(current, f);
        current = f;
        if done {
            trace.stop = StopReason::Converged;
            break;
        }
    }
    let lambda = value(t, &xs)?;
    Ok(RankOneResult { vectors: xs, lambda, trace })
}

/// Top singular triple of the matrix `T × (⊗_{j≠a,b} x_j)`, oriented so that
/// the new `x_a` does not point away from the old one.
fn pair_candidate(t: &Tensor, xs: &[Vec<f64>], a: usize, b: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let m = contract_except(t, xs, &[a, b])?.to_matrix()?;
    let (u, s, v) = linalg::svd_sorted(&m);
    if s[0] == 0.0 {
        return Err(Error::DegenerateStart(format!("contraction for modes ({a}, {b}) vanished")));
    }
    let (mut ua, mut vb): (Vec<f64>, Vec<f64>) = (u.column(0).iter().copied().collect(), v.column(0).iter().copied().collect());
    if ua.iter().zip(&xs[a]).map(|(p, q)| p * q).sum::<f64>() < 0.0 {
        ua.iter_mut().for_each(|x| *x = -*x);
        vb.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((s[0], ua, vb))
}

fn check_pairs(t: &Tensor) -> Result<()> {
    if t.order() < 2 {
        return Err(Error::Dimension("pairwise updates need at least two modes".into()));
    }
    Ok(())
}

/// Alternating SVD: cycles over mode pairs, replacing `(x_a, x_b)` by the top
/// singular pair of the contracted matrix.
pub fn rank_one_2amm(t: &Tensor, init: &[Vec<f64>], stop: &StopRule) -> Result<RankOneResult> {
    stop.validate()?;
    check_pairs(t)?;
    let (mut xs, mut current) = prepare_start(t, init)?;
    let mut trace = RunTrace::start(current);
    for _ in 0..stop.max_iters {
        let mut f = current;
        for (a, b) in pair_schedule(t.order()) {
            let (s, ua, vb) = pair_candidate(t, &xs, a, b)?;
            trace.solved(1);
            if s >= f {
                xs[a] = ua;
                xs[b] = vb;
                f = s;
            }
            trace.update(f);
        }
        trace.iteration(f);
        let done = stop.converged(current, f);
        current = f;
        if done {
            trace.stop = StopReason::Converged;
            let lambda = value(t, &xs)?;
            return Ok(RankOneResult { vectors: xs, lambda, trace });
        }
    }
    let lambda = value(t, &xs)?;
    Ok(RankOneResult { vectors: xs, lambda, trace })
}

/// Greedy alternating SVD: evaluates the pair updates (all pairs first, then
/// all but the last committed one) and commits the largest.
pub fn rank_one_m2amm(t: &Tensor, init: &[Vec<f64>], stop: &StopRule) -> Result<RankOneResult> {
    stop.validate()?;
    check_pairs(t)?;
    let (mut xs, mut current) = prepare_start(t, init)?;
    let mut trace = RunTrace::start(current);
    let mut last = None;
    for _ in 0..stop.max_iters {
        let pairs: Vec<(usize, usize)> = pair_schedule(t.order()).into_iter().filter(|p| Some(*p) != last).rev().collect();
        if pairs.is_empty() {
            trace.stop = StopReason::Converged;
            break;
        }
        let mut evaluated = Vec::with_capacity(pairs.len());
        for &(a, b) in &pairs {
            evaluated.push(pair_candidate(t, &xs, a, b)?);
            trace.solved(1);
        }
        let chosen = (0..evaluated.len()).fold(0, |b, k| if evaluated[k].0 > evaluated[b].0 { k } else { b });
        trace.candidates.push(CandidateLog {
            candidates: pairs.iter().zip(&evaluated).map(|(&(a, b), e)| (vec![a, b], e.0)).collect(),
            chosen,
        });
        let (s, ua, vb) = evaluated.swap_remove(chosen);
        if s <= current {
            trace.stop = StopReason::Converged;
            break;
        }
        let (a, b) = pairs[chosen];
        xs[a] = ua;
        xs[b] = vb;
        trace.update(s);
        trace.iteration(s);
        last = Some((a, b));
        let done = stop.converged(current, s);
        current = s;
        if done {
            trace.stop = StopReason::Converged;
            break;
        }
    }
    let lambda = value(t, &xs)?;
    Ok(RankOneResult { vectors: xs, lambda, trace })
}

/// Normalized standard Gaussian vectors from one seeded stream.
pub fn random_unit_vectors(shape: &[usize], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shape
        .iter()
        .map(|&n| loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let nv = norm(&v);
            if nv > 0.0 {
                break v.into_iter().map(|a| a / nv).collect();
            }
        })
        .collect()
}

/// `max_i ‖T × (⊗_{j≠i} x_j) − λ x_i‖`, zero exactly at a singular tuple.
pub fn singular_tuple_residual(t: &Tensor, xs: &[Vec<f64>], lambda: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..t.order() {
        let v = DVector::from_vec(contract_except(t, xs, &[i])?.into_data());
        let x = DVector::from_column_slice(&xs[i]);
        worst = worst.max((v - x * lambda).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{gaussian_matrix, gaussian_tensor};

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = norm(v);
        v.iter().map(|a| a / n).collect()
    }

    fn tight() -> StopRule {
        StopRule { max_iters: 2000, fit_tol: 1e-15 }
    }

    fn aligned(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs()
    }

    #[test]
    fn recovers_rank_one_tensor() {
        let (a, b, c) = (unit(&[1.0, 2.0, 2.0]), unit(&[3.0, -4.0]), unit(&[1.0, 1.0, 0.0, 1.0]));
        let t = Tensor::outer(&[&a, &b, &c]).scale(3.0);
        let init = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]];
        for solver in [rank_one_amm, rank_one_2amm, rank_one_m2amm] {
            let r = solver(&t, &init, &StopRule::default()).unwrap();
            assert!((r.lambda - 3.0).abs() < 1e-12);
            for (x, y) in r.vectors.iter().zip([&a, &b, &c]) {
                assert!((aligned(x, y) - 1.0).abs() < 1e-12);
            }
        }
        let two = rank_one_2amm(&t, &init, &StopRule::default()).unwrap();
        assert!((two.trace.objectives[1] - 3.0).abs() < 1e-12);
        // a pair step leaves the third vector alone, so the greedy run needs two
        let greedy = rank_one_m2amm(&t, &init, &StopRule::default()).unwrap();
        assert!((greedy.trace.objectives[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn converged_run_is_a_singular_tuple() {
        let t = gaussian_tensor(&[5, 5, 5], 1);
        // f_T is flat to second order at a critical point, so stalling on it
        // pins the vectors only to about sqrt(eps) relative to λ
        let stop = StopRule { max_iters: 2000, fit_tol: 0.0 };
        let r = rank_one_amm(&t, &random_unit_vectors(t.shape(), 2), &stop).unwrap();
        assert_eq!(r.trace.stop, StopReason::Converged);
        assert!(singular_tuple_residual(&t, &r.vectors, r.lambda).unwrap() < 1e-8 * r.lambda);
        assert!(r.trace.is_monotone(1e-12));
        assert!(r.trace.objectives.iter().all(|&f| f > 0.0));
    }

    #[test]
    fn matrix_case_gives_top_singular_value() {
        let a = gaussian_matrix(6, 4, 3);
        let t = Tensor::from_matrix(&a);
        let s1 = a.singular_values().max();
        let init = random_unit_vectors(&[6, 4], 4);
        assert!((rank_one_amm(&t, &init, &tight()).unwrap().lambda - s1).abs() < 1e-8);
        assert!((rank_one_2amm(&t, &init, &StopRule::default()).unwrap().lambda - s1).abs() < 1e-12);
        assert!((rank_one_m2amm(&t, &init, &StopRule::default()).unwrap().lambda - s1).abs() < 1e-12);
    }

    #[test]
    fn asvd_with_fixed_third_factor_is_slice_svd() {
        let t = gaussian_tensor(&[4, 5, 3], 5);
        let z = unit(&[0.3, -1.0, 0.5]);
        let slice = t.contract_vectors(&[None, None, Some(&z)]).unwrap().to_matrix().unwrap();
        let init = vec![vec![1.0; 4], vec![1.0; 5], z.clone()];
        let (s, _, _) = pair_candidate(&t, &init, 0, 1).unwrap();
        assert!((s - slice.singular_values().max()).abs() < 1e-12);
    }

    #[test]
    fn negative_start_is_flipped() {
        let t = Tensor::outer(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = rank_one_amm(&t, &[vec![-1.0, 0.1], vec![0.1, 1.0]], &StopRule::default()).unwrap();
        assert!(r.trace.objectives[0] > 0.0);
        assert!((r.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_starts_are_rejected() {
        let t = Tensor::outer(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]]);
        let init = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(matches!(rank_one_amm(&t, &init, &StopRule::default()), Err(Error::DegenerateStart(_))));
        let zero = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(matches!(rank_one_2amm(&t, &zero, &StopRule::default()), Err(Error::DegenerateStart(_))));
    }

    #[test]
    fn greedy_commits_best_pair_and_skips_last() {
        let t = gaussian_tensor(&[4, 4, 4, 4], 6);
        let r = rank_one_m2amm(&t, &random_unit_vectors(t.shape(), 7), &StopRule::default()).unwrap();
        assert_eq!(r.trace.candidates[0].candidates.len(), 6);
        for (k, log) in r.trace.candidates.iter().enumerate() {
            let best = log.candidates[log.chosen].1;
            assert!(log.candidates.iter().all(|c| c.1 <= best));
            if k > 0 {
                let prev = &r.trace.candidates[k - 1];
                assert_eq!(log.candidates.len(), 5);
                assert!(log.candidates.iter().all(|c| c.0 != prev.candidates[prev.chosen].0));
            }
        }
        assert!(r.trace.is_monotone(1e-12));
    }

    #[test]
    fn asvd_dominates_amm_stepwise() {
        let mut dominated = 0;
        let trials = 20;
        for s in 0..trials {
            let t = gaussian_tensor(&[4, 4, 4], 100 + s);
            let init = random_unit_vectors(t.shape(), 200 + s);
            let a = rank_one_amm(&t, &init, &tight()).unwrap();
            let b = rank_one_2amm(&t, &init, &tight()).unwrap();
            let steps = a.trace.objectives.len().min(b.trace.objectives.len());
            if (0..steps).all(|k| b.trace.objectives[k] >= a.trace.objectives[k] - 1e-12) {
                dominated += 1;
            }
            let c = rank_one_m2amm(&t, &init, &tight()).unwrap();
            for r in [&a, &b, &c] {
                assert!(r.trace.is_monotone(1e-12));
                assert!(singular_tuple_residual(&t, &r.vectors, r.lambda).unwrap() < 1e-6);
            }
        }
        assert!(2 * dominated >= trials);
    }

    #[test]
    fn random_unit_vectors_are_unit_and_seeded() {
        let v = random_unit_vectors(&[3, 4], 9);
        assert_eq!(v, random_unit_vectors(&[3, 4], 9));
        assert!(v.iter().all(|x| (norm(x) - 1.0).abs() < 1e-14));
    }
}
