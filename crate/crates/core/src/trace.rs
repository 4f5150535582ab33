//! Per-run solver records.

use std::fmt;

use web_time::Instant;

use crate::error::{Error, Result};

/// Stopping rule of the alternating family: stop after `max_iters`
/// iterations or once the relative objective change of an iteration drops
/// to `fit_tol` or below.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    pub fit_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_iters: 10, fit_tol: 1e-4 }
    }
}

impl StopRule {
    pub fn new(max_iters: usize, fit_tol: f64) -> Result<Self> {
        let rule = Self { max_iters, fit_tol };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !self.fit_tol.is_finite() || self.fit_tol < 0.0 {
            return Err(Error::InvalidSpec(format!("invalid stop rule {self:?}")));
        }
        Ok(())
    }

    /// Relative change `|new − old| / |new|`, zero when both vanish.
    pub(crate) fn converged(&self, old: f64, new: f64) -> bool {
        let scale = new.abs().max(old.abs());
        scale == 0.0 || (new - old).abs() <= self.fit_tol * scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    /// Relative objective change (or Newton displacement) fell below tolerance.
    Converged,
    MaxIters,
    /// A Newton phase gave up and the run finished with alternating sweeps.
    Fallback(String),
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Converged => f.write_str("converged"),
            Self::MaxIters => f.write_str("max_iters"),
            Self::Fallback(why) => write!(f, "fallback:{why}"),
        }
    }
}

/// Candidate objective values of one greedy step.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateLog {
    /// `(block, value)`: block is the mode or mode pair that was evaluated.
    pub candidates: Vec<(Vec<usize>, f64)>,
    /// Index into `candidates` of the committed block.
    pub chosen: usize,
}

/// Objective history of a run. Entry 0 of `objectives`, `seconds` and
/// `subproblems` describes the starting point; entry `t` the state after
/// iteration `t`.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub objectives: Vec<f64>,
    /// Wall-clock seconds since the run started.
    pub seconds: Vec<f64>,
    /// Cumulative eigen/SVD subproblems solved.
    pub subproblems: Vec<usize>,
    /// Objective after every individual block update, starting point first.
    pub updates: Vec<f64>,
    /// Greedy variants only.
    pub candidates: Vec<CandidateLog>,
    /// Newton variants only: norm of the step of each iteration.
    pub displacements: Vec<f64>,
    /// Newton variants only: fixed-point residual `‖x − F(x)‖` at each
    /// iterate, starting point first.
    pub residuals: Vec<f64>,
    /// Updates skipped because of a tie at the eigen-gap.
    pub degenerate_updates: usize,
    pub stop: StopReason,
    start: Instant,
    solved: usize,
}

impl RunTrace {
    pub(crate) fn start(objective: f64) -> Self {
        Self {
            objectives: vec![objective],
            seconds: vec![0.0],
            subproblems: vec![0],
            updates: vec![objective],
            candidates: Vec::new(),
            displacements: Vec::new(),
            residuals: Vec::new(),
            degenerate_updates: 0,
            stop: StopReason::MaxIters,
            start: Instant::now(),
            solved: 0,
        }
    }

    pub(crate) fn solved(&mut self, n: usize) {
        self.solved += n;
    }

    pub(crate) fn update(&mut self, objective: f64) {
        self.updates.push(objective);
    }

    pub(crate) fn iteration(&mut self, objective: f64) {
        self.objectives.push(objective);
        self.seconds.push(self.start.elapsed().as_secs_f64());
        self.subproblems.push(self.solved);
    }

    /// Appends `other` as a continuation of this run.
    pub(crate) fn extend(&mut self, other: RunTrace) {
        let offset = self.solved;
        let t0 = self.start.elapsed().as_secs_f64() - other.start.elapsed().as_secs_f64();
        self.objectives.extend(other.objectives.iter().skip(1));
        self.seconds.extend(other.seconds.iter().skip(1).map(|s| s + t0.max(0.0)));
        self.subproblems.extend(other.subproblems.iter().skip(1).map(|s| s + offset));
        self.updates.extend(other.updates.iter().skip(1));
        self.candidates.extend(other.candidates);
        self.displacements.extend(other.displacements);
        self.residuals.extend(other.residuals);
        self.degenerate_updates += other.degenerate_updates;
        self.solved += other.solved;
        self.stop = other.stop;
    }

    pub fn iterations(&self) -> usize {
        self.objectives.len() - 1
    }

    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().expect("trace starts non-empty")
    }

    pub fn elapsed(&self) -> f64 {
        *self.seconds.last().expect("trace starts non-empty")
    }

    /// True when both the per-iteration and per-update objectives never drop
    /// by more than `rtol` relative to the larger value.
    pub fn is_monotone(&self, rtol: f64) -> bool {
        let ok = |w: &[f64]| w[1] >= w[0] - rtol * w[0].abs().max(w[1].abs());
        self.objectives.windows(2).all(ok) && self.updates.windows(2).all(ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_rule_defaults_and_validation() {
        let s = StopRule::default();
        assert_eq!((s.max_iters, s.fit_tol), (10, 1e-4));
        assert!(StopRule::new(0, 1e-4).is_err());
        assert!(StopRule::new(3, -1.0).is_err());
        assert!(StopRule::new(3, f64::NAN).is_err());
        assert!(s.converged(1.0, 1.00005));
        assert!(!s.converged(1.0, 1.001));
        assert!(s.converged(0.0, 0.0));
    }

    #[test]
    fn trace_bookkeeping() {
        let mut t = RunTrace::start(1.0);
        t.solved(3);
        t.update(1.5);
        t.iteration(1.5);
        assert_eq!(t.iterations(), 1);
        assert_eq!(t.subproblems, vec![0, 3]);
        assert!(t.is_monotone(0.0));
        let mut more = RunTrace::start(1.5);
        more.solved(2);
        more.update(1.4);
        more.iteration(1.4);
        more.stop = StopReason::Converged;
        t.extend(more);
        assert_eq!(t.objectives, vec![1.0, 1.5, 1.4]);
        assert_eq!(t.subproblems, vec![0, 3, 5]);
        assert!(!t.is_monotone(1e-12));
        assert_eq!(t.stop.to_string(), "converged");
        assert_eq!(StopReason::Fallback("singular".into()).to_string(), "fallback:singular");
    }
}
