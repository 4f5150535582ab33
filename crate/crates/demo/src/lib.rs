//! WebAssembly bindings behind `www/index.html`: solver traces on a
//! generated tensor, the 2×2×2 rank statistic, and a CUR error heatmap.

use lowrank::amm::{amm, mamm, random_init, two_ammv, RunTrace, StopRule};
use lowrank::matrix::{cur_classic, cur_optimal, pivot_search, PivotFallback, PivotObjective};
use lowrank::newton::{hybrid_newton2, NewtonStop};
use lowrank::rank222::rank222_experiment;
use lowrank::synth::GeneratorSpec;
use lowrank::Tensor;
use wasm_bindgen::prelude::*;

fn generate(spec: &str) -> Result<Tensor, String> {
    spec.parse::<GeneratorSpec>().and_then(|g| g.generate()).map_err(|e| e.to_string())
}

fn parse_ranks(ranks: &str) -> Result<Vec<usize>, String> {
    ranks.split(',').map(|r| r.trim().parse().map_err(|_| format!("bad rank '{r}'"))).collect()
}

/// Objective traces of several solvers started from one random tuple.
#[wasm_bindgen]
pub struct Traces {
    names: Vec<String>,
    stops: Vec<String>,
    series: Vec<Vec<f64>>,
    tensor_norm: f64,
}

#[wasm_bindgen]
impl Traces {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> String {
        self.names[i].clone()
    }

    pub fn stop(&self, i: usize) -> String {
        self.stops[i].clone()
    }

    /// `‖P(T)‖` after each iteration.
    pub fn norms(&self, i: usize) -> Vec<f64> {
        self.series[i].iter().map(|v| v.max(0.0).sqrt()).collect()
    }

    pub fn tensor_norm(&self) -> f64 {
        self.tensor_norm
    }
}

pub fn compare_traces_impl(spec: &str, ranks: &str, seed: u64, max_iters: usize) -> Result<Traces, String> {
    let t = generate(spec)?;
    let ranks = parse_ranks(ranks)?;
    if t.order() < 3 {
        return Err("pick a tensor with at least three modes".into());
    }
    let init = random_init(t.shape(), &ranks, seed).map_err(|e| e.to_string())?;
    let stop = StopRule::new(max_iters, 1e-12).map_err(|e| e.to_string())?;
    let newton = NewtonStop { max_iters, ..NewtonStop::default() };
    let runs: Vec<(&str, lowrank::Result<RunTrace>)> = vec![
        ("amm", amm(&t, &init, &stop).map(|r| r.1)),
        ("mamm", mamm(&t, &init, &stop).map(|r| r.1)),
        ("2ammv", two_ammv(&t, &init, &stop, &StopRule { max_iters: 5, fit_tol: 1e-12 }).map(|r| r.1)),
        ("newton2", hybrid_newton2(&t, &init, 3, &newton, &stop).map(|r| r.1)),
    ];
    let mut out = Traces { names: vec![], stops: vec![], series: vec![], tensor_norm: t.hs_norm() };
    for (name, run) in runs {
        let trace = run.map_err(|e| format!("{name}: {e}"))?;
        out.names.push(name.into());
        out.stops.push(trace.stop.to_string());
        out.series.push(trace.objectives);
    }
    Ok(out)
}

/// Runs AMM, MAMM, 2AMMV and hybrid Newton-2 on the generated tensor.
#[wasm_bindgen]
pub fn compare_traces(spec: &str, ranks: &str, seed: u32, max_iters: u32) -> Result<Traces, JsError> {
    compare_traces_impl(spec, ranks, seed.into(), max_iters as usize).map_err(|e| JsError::new(&e))
}

/// `[fraction of rank ≤ 2, standard error]` over Gaussian 2×2×2 samples.
#[wasm_bindgen]
pub fn rank222_fraction(samples: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    let (p, se) = rank222_experiment(samples as usize, seed.into()).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(vec![p, se])
}

/// A matrix, its CUR approximation and the chosen cross.
#[wasm_bindgen]
pub struct CurView {
    rows: usize,
    cols: usize,
    pivot_rows: Vec<u32>,
    pivot_cols: Vec<u32>,
    error: Vec<f64>,
    relative_error: f64,
}

#[wasm_bindgen]
impl CurView {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pivot_rows(&self) -> Vec<u32> {
        self.pivot_rows.clone()
    }

    pub fn pivot_cols(&self) -> Vec<u32> {
        self.pivot_cols.clone()
    }

    /// `|A − B|` in row-major order.
    pub fn error(&self) -> Vec<f64> {
        self.error.clone()
    }

    /// `‖A − B‖ / ‖A‖`.
    pub fn relative_error(&self) -> f64 {
        self.relative_error
    }
}

pub fn cur_heatmap_impl(spec: &str, k: usize, optimal: bool, seed: u64) -> Result<CurView, String> {
    let t = generate(spec)?;
    let a = t.to_matrix().map_err(|_| "CUR heatmaps need a matrix spec, e.g. lowrank:24x20:3,3:0.01:1".to_string())?;
    let pivot = pivot_search(&a, k, 200, PivotObjective::AbsDet, seed).map_err(|e| e.to_string())?;
    let f = if optimal {
        cur_optimal(&a, &pivot.rows, &pivot.cols)
    } else {
        cur_classic(&a, &pivot.rows, &pivot.cols, PivotFallback::PseudoInverse)
    }
    .map_err(|e| e.to_string())?;
    let diff = &a - f.reconstruct();
    let (m, n) = a.shape();
    Ok(CurView {
        rows: m,
        cols: n,
        pivot_rows: pivot.rows.as_slice().iter().map(|&i| i as u32).collect(),
        pivot_cols: pivot.cols.as_slice().iter().map(|&j| j as u32).collect(),
        error: (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| diff[(i, j)].abs()).collect(),
        relative_error: diff.norm() / a.norm().max(f64::MIN_POSITIVE),
    })
}

/// CUR approximation of a generated matrix from the best of 200 random
/// `k × k` crosses.
#[wasm_bindgen]
pub fn cur_heatmap(spec: &str, k: u32, optimal: bool, seed: u32) -> Result<CurView, JsError> {
    cur_heatmap_impl(spec, k as usize, optimal, seed.into()).map_err(|e| JsError::new(&e))
}
