//! Benchmark run matrix for the lowrank solvers: every selected algorithm
//! against every seed, one CSV row per run plus one average row per
//! algorithm.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use lowrank::amm::{
    amm, hosvd_init, mamm, random_init, random_unit_vectors, rank_one_2amm, rank_one_amm, rank_one_m2amm, two_ammv,
    RankOneResult, RunTrace, StopReason, StopRule,
};
use lowrank::matrix::{cur_classic, cur_optimal, pivot_search, svd_rank_k, PivotFallback, PivotObjective};
use lowrank::newton::{hybrid_newton2, hybrid_rank_one, NewtonStop};
use lowrank::tensor_cur::{choose_cur3_indices, choose_cur4_indices, Cur3Factors, Cur4Factors};
use lowrank::{SubspaceTuple, Tensor};

/// Pivot draws per CUR index search.
pub const CUR_TRIALS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Amm,
    Mamm,
    TwoAmmv,
    Rank1Amm,
    Rank1Asvd,
    Rank1Masvd,
    Newton1,
    Newton2,
    Hybrid,
    SvdK,
    CurClassic,
    CurOptimal,
    CurTensor,
}

impl Algorithm {
    pub const ALL: [Algorithm; 13] = [
        Self::Amm,
        Self::Mamm,
        Self::TwoAmmv,
        Self::Rank1Amm,
        Self::Rank1Asvd,
        Self::Rank1Masvd,
        Self::Newton1,
        Self::Newton2,
        Self::Hybrid,
        Self::SvdK,
        Self::CurClassic,
        Self::CurOptimal,
        Self::CurTensor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Amm => "amm",
            Self::Mamm => "mamm",
            Self::TwoAmmv => "2ammv",
            Self::Rank1Amm => "rank1-amm",
            Self::Rank1Asvd => "rank1-asvd",
            Self::Rank1Masvd => "rank1-masvd",
            Self::Newton1 => "newton1",
            Self::Newton2 => "newton2",
            Self::Hybrid => "hybrid",
            Self::SvdK => "svd-k",
            Self::CurClassic => "cur-classic",
            Self::CurOptimal => "cur-optimal",
            Self::CurTensor => "cur-tensor",
        }
    }

    /// Whether successive objectives of a run can only grow.
    pub fn is_alternating(self) -> bool {
        matches!(self, Self::Amm | Self::Mamm | Self::TwoAmmv | Self::Rank1Amm | Self::Rank1Asvd | Self::Rank1Masvd)
    }

    fn check(self, shape: &[usize], ranks: &[usize]) -> Result<(), String> {
        let d = shape.len();
        let fits = ranks.len() == d && ranks.iter().zip(shape).all(|(&r, &n)| r >= 1 && r <= n);
        match self {
            Self::Amm | Self::Mamm | Self::TwoAmmv | Self::Newton2 | Self::Hybrid if !fits => {
                Err(format!("ranks {ranks:?} do not fit shape {shape:?}"))
            }
            Self::Newton2 if d < 3 => Err("newton2 needs at least three modes".into()),
            Self::Hybrid if d < 3 => Err("hybrid needs at least three modes".into()),
            Self::Rank1Asvd | Self::Rank1Masvd | Self::Newton1 if d < 3 => {
                Err(format!("{} needs at least three modes", self.name()))
            }
            Self::SvdK if !fits => Err(format!("ranks {ranks:?} do not fit shape {shape:?}")),
            Self::CurClassic | Self::CurOptimal if d != 2 => Err(format!("{} needs a matrix", self.name())),
            Self::CurClassic | Self::CurOptimal if ranks[0] > shape[0].min(shape[1]) => {
                Err(format!("pivot size {} too large for {shape:?}", ranks[0]))
            }
            Self::CurTensor if d == 3 && (ranks[0].pow(2) > shape[0] || ranks[0] > shape[1].min(shape[2])) => {
                Err(format!("k = {} too large for {shape:?}", ranks[0]))
            }
            Self::CurTensor if d == 4 && shape.iter().any(|&n| ranks[0] > n) => {
                Err(format!("k = {} too large for {shape:?}", ranks[0]))
            }
            Self::CurTensor if d != 3 && d != 4 => Err("cur-tensor needs three or four modes".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|a| a.name()).collect();
            format!("unknown algorithm '{s}' (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitKind {
    /// Seeded random orthonormal frames or unit vectors.
    #[default]
    Random,
    /// Truncated HOSVD; identical for every seed.
    Hosvd,
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Self::Random),
            "hosvd" => Ok(Self::Hosvd),
            _ => Err(format!("unknown init '{s}' (expected random or hosvd)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    /// One rank per mode; CUR variants read `k` from the first entry and the
    /// rank-one solvers ignore it.
    pub ranks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub stop: StopRule,
    pub newton: NewtonStop,
    /// AMM sweeps before a Newton method takes over.
    pub warm_sweeps: usize,
    pub init: InitKind,
    pub trace_dir: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(algorithms: Vec<Algorithm>, ranks: Vec<usize>) -> Self {
        Self {
            algorithms,
            ranks,
            seeds: (0..10).collect(),
            stop: StopRule::default(),
            newton: NewtonStop::default(),
            warm_sweeps: 1,
            init: InitKind::Random,
            trace_dir: None,
        }
    }

    pub fn validate(&self, shape: &[usize]) -> Result<(), String> {
        if self.algorithms.is_empty() {
            return Err("no algorithm selected".into());
        }
        if self.seeds.is_empty() {
            return Err("no seed selected".into());
        }
        if self.ranks.is_empty() {
            return Err("no ranks given".into());
        }
        self.stop.validate().map_err(|e| e.to_string())?;
        self.newton.validate().map_err(|e| e.to_string())?;
        self.algorithms.iter().try_for_each(|a| a.check(shape, &self.ranks))
    }
}

/// One `(algorithm, seed)` cell of the run matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub iterations: usize,
    pub seconds: f64,
    /// HS norm of the approximation.
    pub hs_norm: f64,
    /// HS norm of `T` minus the approximation.
    pub residual: f64,
    pub stop_reason: String,
    /// Objective after each iteration; empty for direct methods.
    pub objectives: Vec<f64>,
}

/// A run that failed even after every fallback.
#[derive(Clone, Debug)]
pub struct RunFailure {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub message: String,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} seed {}: {}", self.algorithm, self.seed, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub failures: Vec<RunFailure>,
}

fn rank_one_start(t: &Tensor, init: InitKind, seed: u64) -> lowrank::Result<Vec<Vec<f64>>> {
    match init {
        InitKind::Random => Ok(random_unit_vectors(t.shape(), seed)),
        InitKind::Hosvd => Ok(hosvd_init(t, &vec![1; t.order()])?
            .frames()
            .iter()
            .map(|f| f.basis().column(0).iter().copied().collect())
            .collect()),
    }
}

fn multilinear_start(t: &Tensor, ranks: &[usize], init: InitKind, seed: u64) -> lowrank::Result<SubspaceTuple> {
    match init {
        InitKind::Random => random_init(t.shape(), ranks, seed),
        InitKind::Hosvd => hosvd_init(t, ranks),
    }
}

fn from_tuple(alg: Algorithm, seed: u64, t: &Tensor, tuple: &SubspaceTuple, trace: RunTrace) -> lowrank::Result<BenchRecord> {
    let (core, p) = t.project(tuple)?;
    Ok(BenchRecord {
        algorithm: alg,
        seed,
        iterations: trace.iterations(),
        seconds: trace.elapsed(),
        hs_norm: core.hs_norm(),
        residual: t.sub(&p)?.hs_norm(),
        stop_reason: trace.stop.to_string(),
        objectives: trace.objectives,
    })
}

fn from_rank_one(alg: Algorithm, seed: u64, t: &Tensor, r: RankOneResult) -> BenchRecord {
    BenchRecord {
        algorithm: alg,
        seed,
        iterations: r.trace.iterations(),
        seconds: r.trace.elapsed(),
        hs_norm: r.lambda.abs(),
        residual: (t.hs_norm().powi(2) - r.lambda.powi(2)).max(0.0).sqrt(),
        stop_reason: r.trace.stop.to_string(),
        objectives: r.trace.objectives,
    }
}

fn direct(alg: Algorithm, seed: u64, t: &Tensor, approx: &Tensor, started: Instant, reason: &str) -> lowrank::Result<BenchRecord> {
    Ok(BenchRecord {
        algorithm: alg,
        seed,
        iterations: 0,
        seconds: started.elapsed().as_secs_f64(),
        hs_norm: approx.hs_norm(),
        residual: t.sub(approx)?.hs_norm(),
        stop_reason: reason.into(),
        objectives: Vec::new(),
    })
}

/// Runs one cell of the matrix.
pub fn run_one(t: &Tensor, config: &BenchConfig, alg: Algorithm, seed: u64) -> lowrank::Result<BenchRecord> {
    let ranks = &config.ranks;
    let stop = &config.stop;
    let started = Instant::now();
    match alg {
        Algorithm::Amm | Algorithm::Mamm | Algorithm::TwoAmmv => {
            let init = multilinear_start(t, ranks, config.init, seed)?;
            let (tuple, trace) = match alg {
                Algorithm::Amm => amm(t, &init, stop)?,
                Algorithm::Mamm => mamm(t, &init, stop)?,
                _ => two_ammv(t, &init, stop, stop)?,
            };
            from_tuple(alg, seed, t, &tuple, trace)
        }
        Algorithm::Rank1Amm | Algorithm::Rank1Asvd | Algorithm::Rank1Masvd | Algorithm::Newton1 => {
            let init = rank_one_start(t, config.init, seed)?;
            let r = match alg {
                Algorithm::Rank1Amm => rank_one_amm(t, &init, stop)?,
                Algorithm::Rank1Asvd => rank_one_2amm(t, &init, stop)?,
                Algorithm::Rank1Masvd => rank_one_m2amm(t, &init, stop)?,
                _ => hybrid_rank_one(t, &init, config.warm_sweeps, &config.newton, stop)?,
            };
            Ok(from_rank_one(alg, seed, t, r))
        }
        Algorithm::Newton2 => {
            let init = multilinear_start(t, ranks, config.init, seed)?;
            let (tuple, trace) = hybrid_newton2(t, &init, config.warm_sweeps, &config.newton, stop)?;
            from_tuple(alg, seed, t, &tuple, trace)
        }
        Algorithm::Hybrid if ranks.iter().all(|&r| r == 1) => {
            let init = rank_one_start(t, config.init, seed)?;
            let r = hybrid_rank_one(t, &init, config.warm_sweeps, &config.newton, stop)?;
            Ok(from_rank_one(alg, seed, t, r))
        }
        Algorithm::Hybrid => {
            let init = multilinear_start(t, ranks, config.init, seed)?;
            let (tuple, trace) = hybrid_newton2(t, &init, config.warm_sweeps, &config.newton, stop)?;
            from_tuple(alg, seed, t, &tuple, trace)
        }
        Algorithm::SvdK if t.order() == 2 => {
            let svd = svd_rank_k(&t.to_matrix()?, ranks[0])?;
            direct(alg, seed, t, &Tensor::from_matrix(&svd.approx), started, "direct")
        }
        Algorithm::SvdK => {
            let tuple = hosvd_init(t, ranks)?;
            let (_, p) = t.project(&tuple)?;
            direct(alg, seed, t, &p, started, "direct")
        }
        Algorithm::CurClassic | Algorithm::CurOptimal => {
            let a = t.to_matrix()?;
            let pivot = pivot_search(&a, ranks[0], CUR_TRIALS, PivotObjective::AbsDet, seed)?;
            let f = if alg == Algorithm::CurClassic {
                cur_classic(&a, &pivot.rows, &pivot.cols, PivotFallback::PseudoInverse)?
            } else {
                cur_optimal(&a, &pivot.rows, &pivot.cols)?
            };
            let reason = if f.used_pinv { "pinv" } else { "direct" };
            direct(alg, seed, t, &Tensor::from_matrix(&f.reconstruct()), started, reason)
        }
        Algorithm::CurTensor => {
            let k = ranks[0];
            let approx = if t.order() == 3 {
                let [i1, i2, i3] = choose_cur3_indices(t, k, CUR_TRIALS, seed)?;
                Cur3Factors::build(t, &i1, &i2, &i3, PivotFallback::PseudoInverse)?.reconstruct()
            } else {
                let [a, b, c, d] = choose_cur4_indices(t, k, CUR_TRIALS, seed)?;
                Cur4Factors::build(t, [&a, &b, &c, &d], PivotFallback::PseudoInverse)?.reconstruct()
            };
            direct(alg, seed, t, &approx, started, "direct")
        }
    }
}

/// Every algorithm with every seed, in configuration order. Failed cells are
/// reported separately and leave no record.
pub fn run_bench(t: &Tensor, config: &BenchConfig) -> Result<BenchOutcome, String> {
    config.validate(t.shape())?;
    let mut out = BenchOutcome::default();
    for &alg in &config.algorithms {
        for &seed in &config.seeds {
            match run_one(t, config, alg, seed) {
                Ok(r) => out.records.push(r),
                Err(e) => out.failures.push(RunFailure { algorithm: alg, seed, message: e.to_string() }),
            }
        }
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 7] = ["algorithm", "seed", "iters", "seconds", "hs_norm", "residual", "stop_reason"];

/// Writes the records followed by one `avg` row per algorithm.
pub fn write_csv<W: Write>(records: &[BenchRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.algorithm.name().to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            format!("{:.3}", r.seconds),
            format!("{:.12e}", r.hs_norm),
            format!("{:.12e}", r.residual),
            r.stop_reason.clone(),
        ])?;
    }
    let mut seen = Vec::new();
    for r in records {
        if seen.contains(&r.algorithm) {
            continue;
        }
        seen.push(r.algorithm);
        let rows: Vec<&BenchRecord> = records.iter().filter(|x| x.algorithm == r.algorithm).collect();
        let n = rows.len() as f64;
        let mean = |f: fn(&BenchRecord) -> f64| rows.iter().map(|x| f(x)).sum::<f64>() / n;
        out.write_record([
            r.algorithm.name().to_string(),
            "avg".into(),
            format!("{:.1}", mean(|x| x.iterations as f64)),
            format!("{:.3}", mean(|x| x.seconds)),
            format!("{:.12e}", mean(|x| x.hs_norm)),
            format!("{:.12e}", mean(|x| x.residual)),
            summarize_stops(&rows),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn summarize_stops(rows: &[&BenchRecord]) -> String {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for r in rows {
        match counts.iter_mut().find(|(s, _)| *s == r.stop_reason) {
            Some((_, c)) => *c += 1,
            None => counts.push((&r.stop_reason, 1)),
        }
    }
    counts.iter().map(|(s, c)| format!("{s}={c}")).collect::<Vec<_>>().join(";")
}

/// Writes `<algorithm>-seed<seed>.csv` with one `iteration,objective` row per
/// iterate for every record that has a trace.
pub fn write_traces(records: &[BenchRecord], dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in records.iter().filter(|r| !r.objectives.is_empty()) {
        let path = dir.join(format!("{}-seed{}.csv", r.algorithm.name(), r.seed));
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "objective"])?;
        for (i, v) in r.objectives.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:.17e}")])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Largest difference of final HS norms between converged multilinear runs
/// with the same seed, for flagging runs that ended in different basins.
pub fn converged_spread(records: &[BenchRecord], seed: u64) -> Option<f64> {
    let norms: Vec<f64> = records
        .iter()
        .filter(|r| r.seed == seed && r.stop_reason == StopReason::Converged.to_string())
        .filter(|r| matches!(r.algorithm, Algorithm::Amm | Algorithm::Mamm | Algorithm::TwoAmmv | Algorithm::Newton2 | Algorithm::Hybrid))
        .map(|r| r.hs_norm)
        .collect();
    (norms.len() >= 2).then(|| norms.iter().cloned().fold(f64::MIN, f64::max) - norms.iter().cloned().fold(f64::MAX, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lowrank::synth::GeneratorSpec;

    fn tensor(spec: &str) -> Tensor {
        spec.parse::<GeneratorSpec>().unwrap().generate().unwrap()
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("hooi".parse::<Algorithm>().is_err());
    }

    #[test]
    fn exact_lowrank_is_recovered_by_amm_and_mamm() {
        let t = tensor("lowrank:6x6x6:2,2,2:0:1");
        let mut c = BenchConfig::new(vec![Algorithm::Amm, Algorithm::Mamm], vec![2, 2, 2]);
        c.stop = StopRule { max_iters: 100, fit_tol: 1e-12 };
        c.seeds = vec![0, 1];
        let out = run_bench(&t, &c).unwrap();
        assert!(out.failures.is_empty());
        for r in &out.records {
            assert!((r.hs_norm - t.hs_norm()).abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn three_seeds_give_three_rows_and_an_average() {
        let t = tensor("gaussian:5x4x3:2");
        let mut c = BenchConfig::new(vec![Algorithm::Amm], vec![2, 2, 2]);
        c.seeds = vec![4, 5, 6];
        let out = run_bench(&t, &c).unwrap();
        let mut buf = Vec::new();
        write_csv(&out.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[4].starts_with("amm,avg,"));
    }

    #[test]
    fn alternating_traces_are_monotone() {
        let t = tensor("gaussian:5x5x5:3");
        let mut c = BenchConfig::new(
            vec![Algorithm::Amm, Algorithm::Mamm, Algorithm::TwoAmmv, Algorithm::Rank1Amm, Algorithm::Rank1Asvd, Algorithm::Rank1Masvd],
            vec![2, 2, 2],
        );
        c.seeds = vec![0, 1, 2];
        for r in run_bench(&t, &c).unwrap().records {
            assert!(r.objectives.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)), "{}", r.algorithm);
        }
    }

    #[test]
    fn every_algorithm_runs_where_it_applies() {
        let cube = tensor("composite-cur:4x4x4:2:1");
        let mut c = BenchConfig::new(Algorithm::ALL.iter().copied().filter(|a| !matches!(a, Algorithm::CurClassic | Algorithm::CurOptimal)).collect(), vec![2, 2, 2]);
        c.seeds = vec![0];
        let out = run_bench(&cube, &c).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        let cur = out.records.iter().find(|r| r.algorithm == Algorithm::CurTensor).unwrap();
        assert!(cur.residual < 1e-8 * cube.hs_norm());

        let m = tensor("lowrank:8x6:2,2:0:4");
        let c = BenchConfig::new(vec![Algorithm::SvdK, Algorithm::CurClassic, Algorithm::CurOptimal, Algorithm::Amm], vec![2, 2]);
        let out = run_bench(&m, &c).unwrap();
        assert!(out.failures.is_empty());
        assert!(out.records.iter().all(|r| r.residual < 1e-8 * m.hs_norm() || r.algorithm == Algorithm::Amm));
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let t = tensor("gaussian:3x3x3:1");
        assert!(run_bench(&t, &BenchConfig::new(vec![], vec![1, 1, 1])).is_err());
        assert!(run_bench(&t, &BenchConfig::new(vec![Algorithm::Amm], vec![4, 1, 1])).is_err());
        assert!(run_bench(&t, &BenchConfig::new(vec![Algorithm::Amm], vec![1, 1])).is_err());
        assert!(run_bench(&t, &BenchConfig::new(vec![Algorithm::CurClassic], vec![1, 1, 1])).is_err());
        assert!(run_bench(&t, &BenchConfig::new(vec![Algorithm::CurTensor], vec![2, 2, 2])).is_err());
        let m = tensor("gaussian:3x3:1");
        assert!(run_bench(&m, &BenchConfig::new(vec![Algorithm::Newton1], vec![1, 1])).is_err());
    }

    #[test]
    fn spread_only_counts_converged_multilinear_runs() {
        let rec = |algorithm, hs_norm, stop: &str| BenchRecord {
            algorithm,
            seed: 0,
            iterations: 1,
            seconds: 0.0,
            hs_norm,
            residual: 0.0,
            stop_reason: stop.into(),
            objectives: vec![],
        };
        let rs = [rec(Algorithm::Amm, 1.0, "converged"), rec(Algorithm::Mamm, 1.5, "converged"), rec(Algorithm::TwoAmmv, 9.0, "max_iters")];
        assert_eq!(converged_spread(&rs, 0), Some(0.5));
        assert_eq!(converged_spread(&rs[..1], 0), None);
    }
}
