//! Result records shared by the classical games and estimators.

use crate::rng::{self, StreamRng};

/// How a probability is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

impl EvalMode {
    pub fn monte_carlo(trials: u64, seed: u64) -> Self {
        EvalMode::MonteCarlo { trials, seed }
    }
}

/// An exact or sampled figure with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct GameReport {
    pub mode: EvalMode,
    pub value: f64,
    /// Half-width of a 95% normal confidence interval; zero for exact values.
    pub ci_halfwidth: f64,
}

/// z-score of a two-sided 95% normal interval.
pub const Z95: f64 = 1.959_963_984_540_054;

impl GameReport {
    pub fn exact(value: f64) -> Self {
        GameReport {
            mode: EvalMode::Exact,
            value,
            ci_halfwidth: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.mode == EvalMode::Exact
    }

    pub fn seed(&self) -> Option<u64> {
        match self.mode {
            EvalMode::Exact => None,
            EvalMode::MonteCarlo { seed, .. } => Some(seed),
        }
    }

    pub fn trials(&self) -> u64 {
        match self.mode {
            EvalMode::Exact => 0,
            EvalMode::MonteCarlo { trials, .. } => trials,
        }
    }
}

/// Bernoulli mean estimate from `successes` out of `trials`.
pub(crate) fn bernoulli(successes: u64, trials: u64, seed: u64) -> GameReport {
    let p = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
    let ci = if trials == 0 {
        0.0
    } else {
        Z95 * (p * (1.0 - p) / trials as f64).sqrt()
    };
    GameReport {
        mode: EvalMode::MonteCarlo { trials, seed },
        value: p,
        ci_halfwidth: ci,
    }
}

/// Runs `trials` Bernoulli experiments, each on its own RNG stream.
pub(crate) fn run_bernoulli<F>(trials: u64, seed: u64, mut trial: F) -> GameReport
where
    F: FnMut(&mut StreamRng) -> bool,
{
    let mut hits = 0u64;
    for i in 0..trials {
        let mut r = rng::stream(seed, i);
        if trial(&mut r) {
            hits += 1;
        }
    }
    bernoulli(hits, trials, seed)
}
