//! Model description: internal/boundary state structure, transition blocks,
//! incomes, transfer costs and control strategies.
//!
//! External labels follow the usual convention for this model: boundary
//! states are `0` and `1`, internal states are `2..=N`. Storage is 0-based
//! over internal states only, so internal index `k` is label `k + 2`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TuningError};

/// Tolerance for row sums of the transition blocks and strategy masses.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Label of the first internal state.
pub const FIRST_INTERNAL_LABEL: usize = 2;

/// Index of a boundary state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Boundary {
    Zero = 0,
    One = 1,
}

impl Boundary {
    pub const BOTH: [Boundary; 2] = [Boundary::Zero, Boundary::One];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Boundary::Zero),
            1 => Some(Boundary::One),
            _ => None,
        }
    }
}

/// Converts a 0-based internal index into its external label.
pub fn label_of(index: usize) -> usize {
    index + FIRST_INTERNAL_LABEL
}

/// Converts an external internal-state label into a 0-based index.
pub fn index_of(label: usize, n_internal: usize) -> Result<usize> {
    if (FIRST_INTERNAL_LABEL..FIRST_INTERNAL_LABEL + n_internal).contains(&label) {
        Ok(label - FIRST_INTERNAL_LABEL)
    } else {
        Err(TuningError::LabelOutOfRange { label, n_internal })
    }
}

/// Full model of the controlled absorbing chain.
///
/// The boundary-to-boundary block is the identity and the boundary-to-internal
/// block is zero; neither is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_internal: usize,
    /// Internal-to-internal one-step transition probabilities.
    pub p00: Vec<Vec<f64>>,
    /// Internal-to-boundary one-step transition probabilities `[to 0, to 1]`.
    pub p01: Vec<[f64; 2]>,
    /// Income per step spent in each internal state.
    pub c: Vec<f64>,
    /// Cost of a transfer from boundary 0 into each internal state.
    pub d0: Vec<f64>,
    /// Cost of a transfer from boundary 1 into each internal state.
    pub d1: Vec<f64>,
}

impl ChainSpec {
    /// Transfer cost vector for the given boundary.
    pub fn transfer_costs(&self, from: Boundary) -> &[f64] {
        match from {
            Boundary::Zero => &self.d0,
            Boundary::One => &self.d1,
        }
    }

    /// Validates and returns `self`, or the report as an error.
    pub fn validated(self) -> Result<Self> {
        let report = validate_chain(&self);
        if report.is_ok() {
            Ok(self)
        } else {
            Err(TuningError::InvalidModel(report))
        }
    }

    /// The complete `(N + 1) x (N + 1)` transition matrix in label order.
    pub fn full_transition_matrix(&self) -> Vec<Vec<f64>> {
        let size = self.n_internal + 2;
        let mut full = vec![vec![0.0; size]; size];
        full[0][0] = 1.0;
        full[1][1] = 1.0;
        for (i, (row, exits)) in self.p00.iter().zip(&self.p01).enumerate() {
            let out = &mut full[label_of(i)];
            out[0] = exits[0];
            out[1] = exits[1];
            for (j, &p) in row.iter().enumerate() {
                out[label_of(j)] = p;
            }
        }
        full
    }
}

/// A control strategy: where to send the process after each boundary hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    /// Transfer distribution used after absorption in boundary 0.
    pub alpha0: Vec<f64>,
    /// Transfer distribution used after absorption in boundary 1.
    pub alpha1: Vec<f64>,
}

impl Strategy {
    pub fn distribution(&self, from: Boundary) -> &[f64] {
        match from {
            Boundary::Zero => &self.alpha0,
            Boundary::One => &self.alpha1,
        }
    }

    /// Uniform transfer distributions after both boundaries.
    pub fn uniform(n_internal: usize) -> Self {
        let v = vec![1.0 / n_internal as f64; n_internal];
        Strategy {
            alpha0: v.clone(),
            alpha1: v,
        }
    }

    pub fn validated(self, n_internal: usize) -> Result<Self> {
        let report = validate_strategy(&self, n_internal);
        if report.is_ok() {
            Ok(self)
        } else {
            Err(TuningError::InvalidStrategy(report))
        }
    }
}

/// Builds the strategy concentrated at `m0` after boundary 0 and at `m1`
/// after boundary 1 (labels).
pub fn degenerate_strategy(m0: usize, m1: usize, n_internal: usize) -> Result<Strategy> {
    let i0 = index_of(m0, n_internal)?;
    let i1 = index_of(m1, n_internal)?;
    let mut alpha0 = vec![0.0; n_internal];
    let mut alpha1 = vec![0.0; n_internal];
    alpha0[i0] = 1.0;
    alpha1[i1] = 1.0;
    Ok(Strategy { alpha0, alpha1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptyModel,
    DimensionMismatch,
    NonFinite,
    ProbabilityOutOfRange,
    RowSum,
    NoAbsorption,
    NotNormalized,
    NegativeMass,
    BNotPositive,
    PositiveTransferCost,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyModel => "EMPTY_MODEL",
            ViolationCode::DimensionMismatch => "DIMENSION_MISMATCH",
            ViolationCode::NonFinite => "NON_FINITE",
            ViolationCode::ProbabilityOutOfRange => "PROBABILITY_OUT_OF_RANGE",
            ViolationCode::RowSum => "ROW_SUM",
            ViolationCode::NoAbsorption => "NO_ABSORPTION",
            ViolationCode::NotNormalized => "NOT_NORMALIZED",
            ViolationCode::NegativeMass => "NEGATIVE_MASS",
            ViolationCode::BNotPositive => "B_NOT_POSITIVE",
            ViolationCode::PositiveTransferCost => "POSITIVE_TRANSFER_COST",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    /// Offending state label, if the violation is tied to one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: ViolationCode) -> bool {
        self.errors.iter().any(|v| v.code == code)
    }

    pub(crate) fn error(&mut self, code: ViolationCode, state: Option<usize>, message: String) {
        self.errors.push(Violation { code, message, state });
    }

    fn warning(&mut self, code: ViolationCode, state: Option<usize>, message: String) {
        self.warnings.push(Violation { code, message, state });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.errors.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a [`ChainSpec`].
///
/// Violations are reported, never raised. Absorption is checked by a
/// reverse breadth-first search from the boundary over strictly positive
/// transitions, so it is exact.
pub fn validate_chain(spec: &ChainSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = spec.n_internal;
    if n == 0 {
        report.error(
            ViolationCode::EmptyModel,
            None,
            "model has no internal states".into(),
        );
        return report;
    }

    let mut shapes_ok = true;
    for (name, len) in [
        ("p00", spec.p00.len()),
        ("p01", spec.p01.len()),
        ("c", spec.c.len()),
        ("d0", spec.d0.len()),
        ("d1", spec.d1.len()),
    ] {
        if len != n {
            shapes_ok = false;
            report.error(
                ViolationCode::DimensionMismatch,
                None,
                format!("{name} has {len} rows, expected {n}"),
            );
        }
    }
    for (i, row) in spec.p00.iter().enumerate() {
        if row.len() != n {
            shapes_ok = false;
            report.error(
                ViolationCode::DimensionMismatch,
                Some(label_of(i)),
                format!(
                    "p00 row for state {} has {} entries, expected {n}",
                    label_of(i),
                    row.len()
                ),
            );
        }
    }
    if !shapes_ok {
        return report;
    }

    let mut finite = true;
    for (name, v) in [("c", &spec.c), ("d0", &spec.d0), ("d1", &spec.d1)] {
        for (i, x) in v.iter().enumerate() {
            if !x.is_finite() {
                finite = false;
                report.error(
                    ViolationCode::NonFinite,
                    Some(label_of(i)),
                    format!("{name} entry for state {} is not finite", label_of(i)),
                );
            }
        }
    }

    for i in 0..n {
        let label = label_of(i);
        let entries = spec.p00[i].iter().chain(spec.p01[i].iter());
        let mut row_finite = true;
        for &p in entries.clone() {
            if !p.is_finite() {
                row_finite = false;
            } else if !(0.0..=1.0).contains(&p) {
                report.error(
                    ViolationCode::ProbabilityOutOfRange,
                    Some(label),
                    format!("row for state {label} has probability {p} outside [0, 1]"),
                );
            }
        }
        if !row_finite {
            finite = false;
            report.error(
                ViolationCode::NonFinite,
                Some(label),
                format!("row for state {label} has a non-finite probability"),
            );
            continue;
        }
        let sum: f64 = entries.sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            report.error(
                ViolationCode::RowSum,
                Some(label),
                format!("row for state {label} sums to {sum}, expected 1"),
            );
        }
    }

    if finite {
        for i in absorption_unreachable(spec) {
            report.error(
                ViolationCode::NoAbsorption,
                Some(label_of(i)),
                format!("no boundary state is reachable from state {}", label_of(i)),
            );
        }
    }

    for (boundary, d) in [(0, &spec.d0), (1, &spec.d1)] {
        for (i, &x) in d.iter().enumerate() {
            if x > 0.0 {
                report.warning(
                    ViolationCode::PositiveTransferCost,
                    Some(label_of(i)),
                    format!(
                        "transfer cost from boundary {boundary} into state {} is positive ({x})",
                        label_of(i)
                    ),
                );
            }
        }
    }
    report
}

/// Internal indices from which no boundary state can be reached.
fn absorption_unreachable(spec: &ChainSpec) -> Vec<usize> {
    let n = spec.n_internal;
    // predecessors[j] = internal states with a positive step into j
    let mut predecessors = vec![Vec::new(); n];
    for (i, row) in spec.p00.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                predecessors[j].push(i);
            }
        }
    }
    let mut reaches = vec![false; n];
    let mut queue = VecDeque::new();
    for (i, exits) in spec.p01.iter().enumerate() {
        if exits[0] > 0.0 || exits[1] > 0.0 {
            reaches[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        for &i in &predecessors[j] {
            if !reaches[i] {
                reaches[i] = true;
                queue.push_back(i);
            }
        }
    }
    (0..n).filter(|&i| !reaches[i]).collect()
}

/// Checks that both transfer distributions are probability vectors of
/// length `n_internal`.
pub fn validate_strategy(strategy: &Strategy, n_internal: usize) -> ValidationReport {
    let mut report = ValidationReport::default();
    for boundary in Boundary::BOTH {
        let name = match boundary {
            Boundary::Zero => "alpha0",
            Boundary::One => "alpha1",
        };
        let alpha = strategy.distribution(boundary);
        if alpha.len() != n_internal {
            report.error(
                ViolationCode::DimensionMismatch,
                None,
                format!("{name} has {} entries, expected {n_internal}", alpha.len()),
            );
            continue;
        }
        if let Some(i) = alpha.iter().position(|x| !x.is_finite()) {
            report.error(
                ViolationCode::NonFinite,
                Some(label_of(i)),
                format!("{name} entry for state {} is not finite", label_of(i)),
            );
            continue;
        }
        for (i, &a) in alpha.iter().enumerate() {
            if a < 0.0 {
                report.error(
                    ViolationCode::NegativeMass,
                    Some(label_of(i)),
                    format!("{name} assigns negative mass {a} to state {}", label_of(i)),
                );
            }
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            report.error(
                ViolationCode::NotNormalized,
                None,
                format!("{name} sums to {sum}, expected 1"),
            );
        }
    }
    report
}
