//! Optimal control search.
//!
//! The stationary indicator is a ratio of two bilinear forms over pairs of
//! probability vectors with a positive denominator, so its extremum over all
//! randomized strategies is attained at a pair of point masses. The search
//! therefore reduces to scanning the test-function table `C = A / B` over
//! all deterministic controls `(m0, m1)`.

use std::fmt;
use std::str::FromStr;

use rand::RngExt;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::absorption::{require_positive, AbsorptionAnalysis, DEFAULT_POSITIVITY_EPSILON};
use crate::error::Result;
use crate::model::{label_of, ChainSpec, Strategy};
use crate::rng::stream_rng;
use crate::stationary::{cost_coefficients, indicator, Route};

/// Slack allowed before a randomized strategy counts as beating the optimum.
pub const REFUTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    /// True when `candidate` is strictly better than `incumbent`.
    fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Direction::Maximize => candidate > incumbent,
            Direction::Minimize => candidate < incumbent,
        }
    }

    /// How far `value` lies beyond `optimum` in the improving direction.
    fn excess(self, value: f64, optimum: f64) -> f64 {
        match self {
            Direction::Maximize => value - optimum,
            Direction::Minimize => optimum - value,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Maximize => "maximize",
            Direction::Minimize => "minimize",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "max" | "maximize" => Ok(Direction::Maximize),
            "min" | "minimize" => Ok(Direction::Minimize),
            other => Err(format!("unknown direction `{other}` (expected max or min)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalControl {
    /// Transfer target after boundary 0 (label).
    pub m0_star: usize,
    /// Transfer target after boundary 1 (label).
    pub m1_star: usize,
    pub value: f64,
    pub direction: Direction,
    /// Test function indexed `[m0][m1]` by internal index.
    pub c_table: Vec<Vec<f64>>,
}

/// Index of the extremum of a table; ties go to the lexicographically
/// smallest `(m0, m1)`.
pub fn extremum(table: &[Vec<f64>], direction: Direction) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            match best {
                Some((_, _, b)) if !direction.improves(v, b) => {}
                _ => best = Some((i, j, v)),
            }
        }
    }
    best
}

/// Finds the optimal deterministic control.
///
/// Strict positivity of every absorption probability is required; without
/// it the bilinear representation may have a vanishing denominator.
pub fn solve_tuning(spec: &ChainSpec, direction: Direction) -> Result<OptimalControl> {
    let analysis = AbsorptionAnalysis::compute(spec)?;
    solve_with_analysis(spec, &analysis, direction)
}

pub fn solve_with_analysis(
    spec: &ChainSpec,
    analysis: &AbsorptionAnalysis,
    direction: Direction,
) -> Result<OptimalControl> {
    require_positive(analysis, DEFAULT_POSITIVITY_EPSILON)?;
    let table = cost_coefficients(spec, analysis)?;
    let (i, j, value) = extremum(&table.c_table, direction).expect("validated model has internal states");
    Ok(OptimalControl {
        m0_star: label_of(i),
        m1_star: label_of(j),
        value,
        direction,
        c_table: table.c_table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefutationReport {
    pub samples: usize,
    pub seed: u64,
    pub direction: Direction,
    /// Best indicator value among the sampled strategies.
    pub best_observed: Option<f64>,
    /// Distance from the best sample to the optimum, non-negative when the
    /// optimum holds.
    pub gap: Option<f64>,
    /// Samples beating the optimum by more than the tolerance.
    pub violations: usize,
}

/// Draws a point uniformly from the probability simplex.
pub fn flat_dirichlet<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        // all draws underflowed to zero; astronomically unlikely
        v.fill(1.0 / n as f64);
    }
    v
}

/// Evaluates random strategies against a solved optimum.
///
/// Any violation means the optimum is wrong, so this is a self-check of the
/// solver rather than part of the solution.
pub fn refute_with_random_strategies(
    spec: &ChainSpec,
    control: &OptimalControl,
    samples: usize,
    seed: u64,
) -> Result<RefutationReport> {
    let analysis = AbsorptionAnalysis::compute(spec)?;
    let n = spec.n_internal;
    let direction = control.direction;
    let mut rng = stream_rng(seed, 0);
    let mut best: Option<f64> = None;
    let mut violations = 0;
    for _ in 0..samples {
        let strategy = Strategy {
            alpha0: flat_dirichlet(&mut rng, n),
            alpha1: flat_dirichlet(&mut rng, n),
        };
        let value = indicator(&strategy, spec, &analysis, Route::Embedded)?;
        if direction.excess(value, control.value) > REFUTATION_TOLERANCE {
            violations += 1;
        }
        if best.is_none_or(|b| direction.improves(value, b)) {
            best = Some(value);
        }
    }
    Ok(RefutationReport {
        samples,
        seed,
        direction,
        best_observed: best,
        gap: best.map(|b| -direction.excess(b, control.value)),
        violations,
    })
}
