//! Optimal intervention control of a discrete-time absorbing Markov chain.
//!
//! A process evolves freely over a finite set of internal states until it
//! hits one of two boundary states. A controller then transfers it back into
//! an internal state, paying a transfer cost, and the free evolution resumes.
//! The crate evaluates the long-run profit per boundary-to-boundary cycle of
//! any (randomized) transfer strategy and finds the optimal deterministic
//! strategy.
//!
//! * [`model`]: model and strategy types, validation.
//! * [`absorption`]: absorption probabilities and pre-absorption income.
//! * [`stationary`]: embedded boundary chain and the stationary indicator.
//! * [`optimizer`]: optimal control search and a randomized self-check.
//! * [`simulator`]: Monte Carlo simulation of the controlled process.

pub mod absorption;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod optimizer;
pub mod rng;
pub mod simulator;
pub mod stationary;

pub use absorption::{check_positivity, AbsorptionAnalysis};
pub use error::{Result, TuningError};
pub use model::{
    degenerate_strategy, validate_chain, validate_strategy, Boundary, ChainSpec, Strategy, ValidationReport,
    Violation, ViolationCode,
};
pub use optimizer::{
    refute_with_random_strategies, solve_tuning, Direction, OptimalControl, RefutationReport,
};
pub use simulator::{
    sample_trajectory, simulate, simulate_with, EventKind, SimulationOptions, SimulationStats,
    TrajectoryEvent,
};
pub use stationary::{cost_coefficients, indicator, CostCoefficients, EmbeddedChain, Route};
