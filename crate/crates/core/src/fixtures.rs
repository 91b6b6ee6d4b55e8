//! Reference models and random model generators for tests, benchmarks and
//! the CLI acceptance suite.

use rand::{Rng, RngExt};
use rand_distr::Exp1;

use crate::model::{ChainSpec, Strategy};
use crate::optimizer::flat_dirichlet;

/// Two internal states, hand-checkable in exact arithmetic.
///
/// `B = [[1/2, 1/2], [1/3, 2/3]]`, `r = [5/2, 10/3]`, and the best
/// deterministic control is `(3, 3)` with value `129/45`.
pub fn reference_instance() -> ChainSpec {
    ChainSpec {
        n_internal: 2,
        p00: vec![vec![0.2, 0.3], vec![0.4, 0.1]],
        p01: vec![[0.3, 0.2], [0.1, 0.4]],
        c: vec![1.0, 2.0],
        d0: vec![-0.5, -1.0],
        d1: vec![-0.7, -0.2],
    }
}

/// Single internal state that is left after one step: every cycle earns
/// exactly `5 - 1 = 4`.
pub fn one_step_instance() -> ChainSpec {
    ChainSpec {
        n_internal: 1,
        p00: vec![vec![0.0]],
        p01: vec![[0.5, 0.5]],
        c: vec![5.0],
        d0: vec![-1.0],
        d1: vec![-1.0],
    }
}

/// Sign pattern of generated incomes and costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostProfile {
    /// Incomes in `[0.5, 5)`, costs in `[-0.5, 0)`: every cycle profit is
    /// positive, so the indicator is bounded away from zero.
    Profitable,
    /// Incomes in `[-3, 3)`, costs in `[-2, 1)`.
    Signed,
}

/// Random model with every absorption probability strictly positive.
///
/// Each internal state exits directly to both boundaries with probability at
/// least `0.05 / total weight`, and roughly a third of the internal
/// transitions are zero.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, n_internal: usize, profile: CostProfile) -> ChainSpec {
    let mut p00 = Vec::with_capacity(n_internal);
    let mut p01 = Vec::with_capacity(n_internal);
    for _ in 0..n_internal {
        let exits = [
            0.05 + rng.sample::<f64, _>(Exp1),
            0.05 + rng.sample::<f64, _>(Exp1),
        ];
        let row: Vec<f64> = (0..n_internal)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    2.0 * rng.sample::<f64, _>(Exp1)
                }
            })
            .collect();
        let total = exits[0] + exits[1] + row.iter().sum::<f64>();
        p01.push([exits[0] / total, exits[1] / total]);
        p00.push(row.into_iter().map(|w| w / total).collect());
    }
    let (c_range, d_range) = match profile {
        CostProfile::Profitable => (0.5..5.0, -0.5..0.0),
        CostProfile::Signed => (-3.0..3.0, -2.0..1.0),
    };
    let mut draw = |range: std::ops::Range<f64>| -> Vec<f64> {
        (0..n_internal).map(|_| rng.random_range(range.clone())).collect()
    };
    let c = draw(c_range);
    let d0 = draw(d_range.clone());
    let d1 = draw(d_range);
    ChainSpec {
        n_internal,
        p00,
        p01,
        c,
        d0,
        d1,
    }
}

/// Strategy with both distributions drawn uniformly from the simplex.
pub fn random_strategy<R: Rng + ?Sized>(rng: &mut R, n_internal: usize) -> Strategy {
    Strategy {
        alpha0: flat_dirichlet(rng, n_internal),
        alpha1: flat_dirichlet(rng, n_internal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_chain, validate_strategy};
    use crate::rng::stream_rng;

    #[test]
    fn generated_models_are_valid() {
        let mut rng = stream_rng(1, 0);
        for n in 1..=8 {
            for profile in [CostProfile::Profitable, CostProfile::Signed] {
                let spec = random_spec(&mut rng, n, profile);
                assert!(validate_chain(&spec).is_ok());
                assert!(validate_strategy(&random_strategy(&mut rng, n), n).is_ok());
            }
        }
        assert!(validate_chain(&reference_instance()).is_ok());
        assert!(validate_chain(&one_step_instance()).is_ok());
    }
}
