//! Absorbing-chain characteristics of the free evolution: absorption
//! probabilities into each boundary and expected income collected before
//! absorption.
//!
//! Both come from the fundamental matrix `(I - P00)^-1`, which is never
//! formed; every quantity is obtained from an LU solve of `(I - P00) X = rhs`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TuningError};
use crate::model::{label_of, ChainSpec, ValidationReport, ViolationCode};

/// Default threshold for the strict positivity check of absorption
/// probabilities.
pub const DEFAULT_POSITIVITY_EPSILON: f64 = 1e-12;

/// Relative residual bound accepted from the linear solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

// Pivots of the LU factors below this (relative to the matrix norm) mean the
// system is singular for practical purposes.
const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionAnalysis {
    /// `b[i] = [P(absorbed in 0), P(absorbed in 1)]` starting from internal index `i`.
    pub b: Vec<[f64; 2]>,
    /// Expected income before absorption, start state included.
    pub r: Vec<f64>,
}

impl AbsorptionAnalysis {
    pub fn compute(spec: &ChainSpec) -> Result<Self> {
        Ok(AbsorptionAnalysis {
            b: absorption_probabilities(spec)?,
            r: expected_income(spec)?,
        })
    }

    pub fn n_internal(&self) -> usize {
        self.b.len()
    }
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Solves `(I - P00) X = rhs` by LU with partial pivoting.
///
/// Fails with `SingularSystem` when a pivot vanishes or the residual exceeds
/// `1e-10 * max(1, |rhs|_max)`; for a validated model this cannot happen, so
/// the error points at an inconsistency upstream.
pub fn fundamental_solve(p00: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p00.nrows();
    if p00.ncols() != n || rhs.nrows() != n {
        return Err(TuningError::DimensionMismatch(format!(
            "P00 is {}x{}, right-hand side has {} rows",
            p00.nrows(),
            p00.ncols(),
            rhs.nrows()
        )));
    }
    let system = DMatrix::identity(n, n) - p00;
    let scale = system.amax().max(1.0);
    let lu = system.clone().lu();
    let min_pivot = lu.u().diagonal().amin();
    if min_pivot <= PIVOT_TOLERANCE * scale {
        return Err(TuningError::SingularSystem(format!(
            "smallest LU pivot is {min_pivot:e}"
        )));
    }
    let x = lu
        .solve(rhs)
        .ok_or_else(|| TuningError::SingularSystem("LU solve failed".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(TuningError::SingularSystem("solution is not finite".into()));
    }
    let residual = (&system * &x - rhs).amax();
    let bound = RESIDUAL_TOLERANCE * rhs.amax().max(1.0);
    if residual > bound {
        return Err(TuningError::SingularSystem(format!(
            "residual {residual:e} exceeds {bound:e}"
        )));
    }
    Ok(x)
}

/// `(I - P00)^-1` itself. Only meant for diagnostics and tests.
pub fn fundamental_matrix(p00: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p00.nrows();
    fundamental_solve(p00, &DMatrix::identity(n, n))
}

/// Absorption probability matrix `B = (I - P00)^-1 P01`.
pub fn absorption_probabilities(spec: &ChainSpec) -> Result<Vec<[f64; 2]>> {
    let p00 = to_matrix(&spec.p00);
    let p01 = DMatrix::from_fn(spec.n_internal, 2, |i, j| spec.p01[i][j]);
    let b = fundamental_solve(&p00, &p01)?;
    Ok(b.row_iter().map(|row| [row[0], row[1]]).collect())
}

/// Expected income before absorption, `r = (I - P00)^-1 c`.
pub fn expected_income(spec: &ChainSpec) -> Result<Vec<f64>> {
    let p00 = to_matrix(&spec.p00);
    let c = DMatrix::from_column_slice(spec.n_internal, 1, &spec.c);
    let r = fundamental_solve(&p00, &c)?;
    Ok(r.iter().copied().collect())
}

/// Reports every absorption probability that is not strictly above
/// `epsilon`.
pub fn check_positivity(analysis: &AbsorptionAnalysis, epsilon: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (i, row) in analysis.b.iter().enumerate() {
        for (boundary, &p) in row.iter().enumerate() {
            if p <= epsilon {
                report.error(
                    ViolationCode::BNotPositive,
                    Some(label_of(i)),
                    format!(
                        "absorption probability from state {} into boundary {boundary} is {p} (threshold {epsilon})",
                        label_of(i)
                    ),
                );
            }
        }
    }
    report
}

/// Like [`check_positivity`], but fails with `B_NOT_POSITIVE`.
pub fn require_positive(analysis: &AbsorptionAnalysis, epsilon: f64) -> Result<()> {
    let report = check_positivity(analysis, epsilon);
    if report.is_ok() {
        Ok(())
    } else {
        Err(TuningError::BNotPositive(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference() -> ChainSpec {
        ChainSpec {
            n_internal: 2,
            p00: vec![vec![0.2, 0.3], vec![0.4, 0.1]],
            p01: vec![[0.3, 0.2], [0.1, 0.4]],
            c: vec![1.0, 2.0],
            d0: vec![-0.5, -1.0],
            d1: vec![-0.7, -0.2],
        }
    }

    #[test]
    fn zero_block_solve_is_identity() {
        let p00 = DMatrix::zeros(3, 3);
        let v = DMatrix::from_column_slice(3, 1, &[1.5, -2.0, 7.0]);
        assert_eq!(fundamental_solve(&p00, &v).unwrap(), v);
    }

    #[test]
    fn inverse_of_reference_block() {
        // det(I - P00) = 0.8 * 0.9 - 0.3 * 0.4 = 0.6
        let p00 = to_matrix(&reference().p00);
        let inv = fundamental_matrix(&p00).unwrap();
        let expected = [[1.5, 0.5], [2.0 / 3.0, 4.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(inv[(i, j)], expected[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn singular_system() {
        let p00 = DMatrix::from_element(1, 1, 1.0);
        let rhs = DMatrix::from_element(1, 1, 1.0);
        let err = fundamental_solve(&p00, &rhs).unwrap_err();
        assert_eq!(err.code(), "SINGULAR_SYSTEM");

        // closed pair inside a larger block
        let p00 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.2, 0.2, 0.2]);
        assert!(matches!(
            fundamental_matrix(&p00),
            Err(TuningError::SingularSystem(_))
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let p00 = DMatrix::zeros(2, 2);
        let rhs = DMatrix::zeros(3, 1);
        assert!(matches!(
            fundamental_solve(&p00, &rhs),
            Err(TuningError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn reference_absorption_and_income() {
        let a = AbsorptionAnalysis::compute(&reference()).unwrap();
        assert_abs_diff_eq!(a.b[0][0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(a.b[0][1], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(a.b[1][0], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.b[1][1], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.r[0], 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(a.r[1], 10.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn immediate_absorption() {
        let spec = ChainSpec {
            n_internal: 2,
            p00: vec![vec![0.0; 2]; 2],
            p01: vec![[0.25, 0.75], [0.6, 0.4]],
            c: vec![3.0, -1.0],
            d0: vec![0.0; 2],
            d1: vec![0.0; 2],
        };
        let a = AbsorptionAnalysis::compute(&spec).unwrap();
        assert_eq!(a.b, spec.p01);
        assert_eq!(a.r, spec.c);
    }

    #[test]
    fn zero_income() {
        let mut spec = reference();
        spec.c = vec![0.0, 0.0];
        assert_eq!(expected_income(&spec).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn positivity_threshold() {
        let a = AbsorptionAnalysis::compute(&reference()).unwrap();
        assert!(check_positivity(&a, DEFAULT_POSITIVITY_EPSILON).is_ok());

        let report = check_positivity(&a, 0.4);
        // only b(3,0) = 1/3 falls below 0.4
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].state, Some(3));

        let edge = AbsorptionAnalysis {
            b: vec![[0.0, 1.0]],
            r: vec![1.0],
        };
        let report = check_positivity(&edge, DEFAULT_POSITIVITY_EPSILON);
        assert!(report.has_error(ViolationCode::BNotPositive));
        assert_eq!(report.errors[0].state, Some(2));
        assert!(matches!(
            require_positive(&edge, DEFAULT_POSITIVITY_EPSILON),
            Err(TuningError::BNotPositive(_))
        ));
    }
}
