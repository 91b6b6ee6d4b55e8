//! The embedded chain of successive boundary states and the stationary cost
//! indicator of a strategy.
//!
//! Under a strategy `(alpha0, alpha1)` the sequence of boundary states hit by
//! the controlled process is a two-state Markov chain. Its transition matrix
//! follows from the absorption probabilities:
//!
//! ```text
//! p~[i][j] = sum_l alpha_i[l] * b[l][j]
//! ```
//!
//! The long-run profit per boundary-to-boundary cycle is then
//! `I = pi0 * rho0 + pi1 * rho1`, where `rho_i = sum_l alpha_i[l] (d_i[l] + r[l])`.
//! Expanding the closed-form stationary distribution gives the same value as
//! a ratio of two bilinear forms in `(alpha0, alpha1)`, with kernels
//!
//! ```text
//! A(m0, m1) = (d0[m0] + r[m0]) b[m1][0] + (d1[m1] + r[m1]) b[m0][1]
//! B(m0, m1) = b[m0][1] + b[m1][0]
//! ```
//!
//! All three evaluations are available through [`Route`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::absorption::AbsorptionAnalysis;
use crate::error::{Result, TuningError};
use crate::model::{label_of, Boundary, ChainSpec, Strategy, ValidationReport, ViolationCode};

/// `p~01 + p~10` at or below this makes the embedded chain reducible.
pub const DEGENERATE_THRESHOLD: f64 = 1e-14;

// Tables with at least this many rows are filled in parallel.
const PARALLEL_TABLE_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedChain {
    pub p_tilde: [[f64; 2]; 2],
    pub pi: [f64; 2],
    pub rho: [f64; 2],
}

impl EmbeddedChain {
    pub fn new(strategy: &Strategy, spec: &ChainSpec, analysis: &AbsorptionAnalysis) -> Result<Self> {
        let p_tilde = embedded_transition(strategy, analysis)?;
        let pi = stationary_distribution(&p_tilde)?;
        let rho = visit_income(strategy, spec, analysis)?;
        Ok(EmbeddedChain { p_tilde, pi, rho })
    }

    /// Stationary profit per embedded step.
    pub fn indicator(&self) -> f64 {
        self.pi[0] * self.rho[0] + self.pi[1] * self.rho[1]
    }

    /// Max-norm of `pi P~ - pi`.
    pub fn balance_residual(&self) -> f64 {
        (0..2)
            .map(|j| {
                let flow = self.pi[0] * self.p_tilde[0][j] + self.pi[1] * self.p_tilde[1][j];
                (flow - self.pi[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn check_dims(strategy: &Strategy, analysis: &AbsorptionAnalysis) -> Result<()> {
    let n = analysis.n_internal();
    for (name, len) in [
        ("alpha0", strategy.alpha0.len()),
        ("alpha1", strategy.alpha1.len()),
    ] {
        if len != n {
            return Err(TuningError::DimensionMismatch(format!(
                "{name} has {len} entries, model has {n} internal states"
            )));
        }
    }
    if analysis.r.len() != n {
        return Err(TuningError::DimensionMismatch(format!(
            "analysis has {} absorption rows but {} incomes",
            n,
            analysis.r.len()
        )));
    }
    Ok(())
}

fn check_spec_dims(spec: &ChainSpec, analysis: &AbsorptionAnalysis) -> Result<()> {
    let n = analysis.n_internal();
    if spec.d0.len() != n || spec.d1.len() != n {
        return Err(TuningError::DimensionMismatch(format!(
            "model transfer costs do not match {n} analysed states"
        )));
    }
    Ok(())
}

/// Transition matrix of the embedded boundary chain.
pub fn embedded_transition(strategy: &Strategy, analysis: &AbsorptionAnalysis) -> Result<[[f64; 2]; 2]> {
    check_dims(strategy, analysis)?;
    let mut p = [[0.0; 2]; 2];
    for from in Boundary::BOTH {
        let alpha = strategy.distribution(from);
        for to in 0..2 {
            p[from.index()][to] = alpha.iter().zip(&analysis.b).map(|(a, b)| a * b[to]).sum();
        }
    }
    Ok(p)
}

/// Closed-form stationary distribution of a two-state chain.
pub fn stationary_distribution(p_tilde: &[[f64; 2]; 2]) -> Result<[f64; 2]> {
    let (p01, p10) = (p_tilde[0][1], p_tilde[1][0]);
    let flux = p01 + p10;
    if flux.is_nan() || flux <= DEGENERATE_THRESHOLD {
        return Err(TuningError::DegenerateChain(flux));
    }
    Ok([p10 / flux, p01 / flux])
}

/// Expected profit of one boundary-to-boundary cycle started from each
/// boundary: transfer cost plus income until the next boundary hit.
pub fn visit_income(
    strategy: &Strategy,
    spec: &ChainSpec,
    analysis: &AbsorptionAnalysis,
) -> Result<[f64; 2]> {
    check_dims(strategy, analysis)?;
    check_spec_dims(spec, analysis)?;
    let mut rho = [0.0; 2];
    for from in Boundary::BOTH {
        let d = spec.transfer_costs(from);
        rho[from.index()] = strategy
            .distribution(from)
            .iter()
            .zip(d.iter().zip(&analysis.r))
            .map(|(a, (d, r))| a * (d + r))
            .sum();
    }
    Ok(rho)
}

/// Numerator, denominator and test-function tables over all deterministic
/// controls, indexed `[m0][m1]` by internal index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCoefficients {
    pub a_table: Vec<Vec<f64>>,
    pub b_table: Vec<Vec<f64>>,
    pub c_table: Vec<Vec<f64>>,
}

impl CostCoefficients {
    pub fn n_internal(&self) -> usize {
        self.c_table.len()
    }
}

#[inline]
fn numerator_kernel(spec: &ChainSpec, analysis: &AbsorptionAnalysis, m0: usize, m1: usize) -> f64 {
    let (b, r) = (&analysis.b, &analysis.r);
    (spec.d0[m0] + r[m0]) * b[m1][0] + (spec.d1[m1] + r[m1]) * b[m0][1]
}

#[inline]
fn denominator_kernel(analysis: &AbsorptionAnalysis, m0: usize, m1: usize) -> f64 {
    analysis.b[m0][1] + analysis.b[m1][0]
}

pub fn cost_coefficients(spec: &ChainSpec, analysis: &AbsorptionAnalysis) -> Result<CostCoefficients> {
    let n = analysis.n_internal();
    if analysis.r.len() != n {
        return Err(TuningError::DimensionMismatch(
            "analysis vectors differ in length".into(),
        ));
    }
    check_spec_dims(spec, analysis)?;

    let row = |m0: usize| -> (Vec<f64>, Vec<f64>) {
        (0..n)
            .map(|m1| {
                (
                    numerator_kernel(spec, analysis, m0, m1),
                    denominator_kernel(analysis, m0, m1),
                )
            })
            .unzip()
    };
    let rows: Vec<(Vec<f64>, Vec<f64>)> = if n >= PARALLEL_TABLE_SIZE {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    };

    let mut report = ValidationReport::default();
    for (m0, (_, den)) in rows.iter().enumerate() {
        for (m1, &v) in den.iter().enumerate() {
            if v.is_nan() || v <= 0.0 {
                report.error(
                    ViolationCode::BNotPositive,
                    Some(label_of(m0)),
                    format!("B({}, {}) = {v}", label_of(m0), label_of(m1)),
                );
            }
        }
    }
    if !report.is_ok() {
        return Err(TuningError::BNotPositive(report));
    }

    let (a_table, b_table): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let c_table = a_table
        .iter()
        .zip(&b_table)
        .map(|(a, b)| a.iter().zip(b).map(|(a, b)| a / b).collect())
        .collect();
    Ok(CostCoefficients {
        a_table,
        b_table,
        c_table,
    })
}

/// Which formula evaluates the stationary indicator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// `pi0 rho0 + pi1 rho1` through the embedded chain. O(n).
    #[default]
    Embedded,
    /// Ratio of products of single sums. O(n).
    Ratio,
    /// Ratio of bilinear forms with the `A` and `B` kernels. O(n^2).
    Fractional,
}

impl Route {
    pub const ALL: [Route; 3] = [Route::Embedded, Route::Ratio, Route::Fractional];

    pub fn as_str(self) -> &'static str {
        match self {
            Route::Embedded => "embedded",
            Route::Ratio => "ratio",
            Route::Fractional => "fractional",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Route {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "embedded" => Ok(Route::Embedded),
            "ratio" => Ok(Route::Ratio),
            "fractional" => Ok(Route::Fractional),
            other => Err(format!(
                "unknown route `{other}` (expected embedded, ratio or fractional)"
            )),
        }
    }
}

/// Stationary profit per embedded step of `strategy`.
pub fn indicator(
    strategy: &Strategy,
    spec: &ChainSpec,
    analysis: &AbsorptionAnalysis,
    route: Route,
) -> Result<f64> {
    match route {
        Route::Embedded => EmbeddedChain::new(strategy, spec, analysis).map(|e| e.indicator()),
        Route::Ratio => ratio_indicator(strategy, spec, analysis),
        Route::Fractional => fractional_indicator(strategy, spec, analysis),
    }
}

fn ratio_indicator(strategy: &Strategy, spec: &ChainSpec, analysis: &AbsorptionAnalysis) -> Result<f64> {
    check_dims(strategy, analysis)?;
    check_spec_dims(spec, analysis)?;
    let (a0, a1) = (&strategy.alpha0, &strategy.alpha1);
    let dot =
        |a: &[f64], f: &dyn Fn(usize) -> f64| -> f64 { a.iter().enumerate().map(|(l, x)| x * f(l)).sum() };

    let profit0 = dot(a0, &|m| spec.d0[m] + analysis.r[m]);
    let profit1 = dot(a1, &|m| spec.d1[m] + analysis.r[m]);
    let leave0 = dot(a0, &|l| analysis.b[l][1]);
    let leave1 = dot(a1, &|l| analysis.b[l][0]);

    let den = leave0 + leave1;
    if den.is_nan() || den <= DEGENERATE_THRESHOLD {
        return Err(TuningError::DegenerateChain(den));
    }
    Ok((profit0 * leave1 + profit1 * leave0) / den)
}

fn fractional_indicator(strategy: &Strategy, spec: &ChainSpec, analysis: &AbsorptionAnalysis) -> Result<f64> {
    check_dims(strategy, analysis)?;
    check_spec_dims(spec, analysis)?;
    let (num, den) = bilinear_forms(strategy, spec, analysis);
    if den.is_nan() || den <= DEGENERATE_THRESHOLD {
        return Err(TuningError::DegenerateChain(den));
    }
    Ok(num / den)
}

/// `(sum A(m0,m1) a0[m0] a1[m1], sum B(m0,m1) a0[m0] a1[m1])`.
pub(crate) fn bilinear_forms(
    strategy: &Strategy,
    spec: &ChainSpec,
    analysis: &AbsorptionAnalysis,
) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (m0, &w0) in strategy.alpha0.iter().enumerate() {
        for (m1, &w1) in strategy.alpha1.iter().enumerate() {
            let w = w0 * w1;
            num += numerator_kernel(spec, analysis, m0, m1) * w;
            den += denominator_kernel(analysis, m0, m1) * w;
        }
    }
    (num, den)
}

/// Denominator of the bilinear representation, exposed for consistency
/// checks against `p~01 + p~10`.
pub fn bilinear_denominator(strategy: &Strategy, analysis: &AbsorptionAnalysis) -> Result<f64> {
    check_dims(strategy, analysis)?;
    let mut den = 0.0;
    for (m0, &w0) in strategy.alpha0.iter().enumerate() {
        for (m1, &w1) in strategy.alpha1.iter().enumerate() {
            den += denominator_kernel(analysis, m0, m1) * w0 * w1;
        }
    }
    Ok(den)
}
