//! Monte Carlo simulation of the controlled process.
//!
//! The process evolves freely over internal states until it hits a boundary
//! state, is then transferred into an internal state drawn from the strategy
//! distribution of that boundary, and so on. A *cycle* runs from one boundary
//! hit to the next: it collects the transfer cost, the income of the arrival
//! state, and the income of every internal state occupied until the next
//! absorption. The boundary step itself collects nothing.
//!
//! The segment from the initial state (the smallest internal label) to the
//! first absorption belongs to no cycle and is excluded from the statistics.

use rand::{Rng, RngExt};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TuningError};
use crate::model::{index_of, label_of, validate_chain, validate_strategy, Boundary, ChainSpec, Strategy};
use crate::rng::stream_rng;

/// Default bound on the length of one free-evolution segment.
pub const DEFAULT_CYCLE_LIMIT: u64 = 1_000_000_000;

// Number of batches for the batch-means standard error.
const BATCHES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    FreeMove,
    Absorption,
    Transfer,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::FreeMove => "free_move",
            EventKind::Absorption => "absorption",
            EventKind::Transfer => "transfer",
        }
    }
}

/// One step of the simulated process.
///
/// The initial state is reported as a `free_move` at step 0. A `transfer`
/// occupies the arrival state, so its `income_delta` is the transfer cost
/// plus the income of that state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub step: u64,
    pub state: usize,
    pub event_kind: EventKind,
    pub income_delta: f64,
}

/// Inverse-CDF samplers for one-step transitions and transfers.
///
/// Outcomes are ordered by ascending state label, boundary states first.
#[derive(Debug, Clone)]
pub struct TransitionSampler {
    // per internal state: cumulative probabilities over labels 0..=N
    step_cdf: Vec<Vec<f64>>,
    step_fallback: Vec<usize>,
    // per boundary: cumulative probabilities over internal indices
    transfer_cdf: [Vec<f64>; 2],
    transfer_fallback: [usize; 2],
}

fn cumulative(probs: impl Iterator<Item = f64>) -> (Vec<f64>, usize) {
    let mut acc = 0.0;
    let mut last_positive = 0;
    let cdf = probs
        .enumerate()
        .map(|(k, p)| {
            if p > 0.0 {
                last_positive = k;
            }
            acc += p;
            acc
        })
        .collect();
    (cdf, last_positive)
}

fn invert(cdf: &[f64], fallback: usize, u: f64) -> usize {
    let k = cdf.partition_point(|&c| c <= u);
    // rows may sum to slightly less than one
    if k < cdf.len() {
        k
    } else {
        fallback
    }
}

impl TransitionSampler {
    pub fn new(spec: &ChainSpec, strategy: &Strategy) -> Self {
        let (step_cdf, step_fallback) = spec
            .p00
            .iter()
            .zip(&spec.p01)
            .map(|(row, exits)| cumulative(exits.iter().chain(row.iter()).copied()))
            .unzip();
        let (cdf0, fb0) = cumulative(strategy.alpha0.iter().copied());
        let (cdf1, fb1) = cumulative(strategy.alpha1.iter().copied());
        TransitionSampler {
            step_cdf,
            step_fallback,
            transfer_cdf: [cdf0, cdf1],
            transfer_fallback: [fb0, fb1],
        }
    }

    /// Label of the next state after internal index `from`.
    pub fn next_state<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        invert(&self.step_cdf[from], self.step_fallback[from], u)
    }

    /// Internal index the process is transferred into after hitting `from`.
    pub fn transfer_target<R: Rng + ?Sized>(&self, from: Boundary, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let b = from.index();
        invert(&self.transfer_cdf[b], self.transfer_fallback[b], u)
    }
}

/// Event-by-event generator of the controlled process.
struct Walker<'a> {
    spec: &'a ChainSpec,
    sampler: TransitionSampler,
    rng: Pcg64,
    step: u64,
    state: usize,
    started: bool,
}

impl<'a> Walker<'a> {
    fn new(spec: &'a ChainSpec, strategy: &Strategy, rng: Pcg64) -> Self {
        Walker {
            spec,
            sampler: TransitionSampler::new(spec, strategy),
            rng,
            step: 0,
            state: label_of(0),
            started: false,
        }
    }

    fn next_event(&mut self) -> TrajectoryEvent {
        if !self.started {
            self.started = true;
            return TrajectoryEvent {
                step: 0,
                state: self.state,
                event_kind: EventKind::FreeMove,
                income_delta: self.spec.c[0],
            };
        }
        self.step += 1;
        let (state, event_kind, income_delta) = match Boundary::from_index(self.state) {
            Some(boundary) => {
                let i = self.sampler.transfer_target(boundary, &mut self.rng);
                let cost = self.spec.transfer_costs(boundary)[i];
                (label_of(i), EventKind::Transfer, cost + self.spec.c[i])
            }
            None => {
                let from = self.state - label_of(0);
                let next = self.sampler.next_state(from, &mut self.rng);
                if next < label_of(0) {
                    (next, EventKind::Absorption, 0.0)
                } else {
                    (next, EventKind::FreeMove, self.spec.c[next - label_of(0)])
                }
            }
        };
        self.state = state;
        TrajectoryEvent {
            step: self.step,
            state,
            event_kind,
            income_delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationStats {
    pub cycles: u64,
    pub total_income: f64,
    pub i_hat: f64,
    /// Batch-means standard error of `i_hat`.
    pub std_error: f64,
    /// Cycles started from boundary 0 and boundary 1.
    pub boundary_counts: [u64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub replications: usize,
    pub cycle_limit: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            replications: 1,
            cycle_limit: DEFAULT_CYCLE_LIMIT,
        }
    }
}

fn check_inputs(spec: &ChainSpec, strategy: &Strategy) -> Result<()> {
    let report = validate_chain(spec);
    if !report.is_ok() {
        return Err(TuningError::InvalidModel(report));
    }
    let report = validate_strategy(strategy, spec.n_internal);
    if !report.is_ok() {
        return Err(TuningError::InvalidStrategy(report));
    }
    Ok(())
}

/// Simulates `cycles` boundary-to-boundary cycles after a warm-up segment.
pub fn simulate(spec: &ChainSpec, strategy: &Strategy, cycles: u64, seed: u64) -> Result<SimulationStats> {
    simulate_with(spec, strategy, cycles, seed, &SimulationOptions::default())
}

/// Runs `options.replications` independent replications of `cycles` cycles
/// each and pools them. Replication `k` uses random stream `k` of `seed`.
pub fn simulate_with(
    spec: &ChainSpec,
    strategy: &Strategy,
    cycles: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<SimulationStats> {
    check_inputs(spec, strategy)?;
    if cycles == 0 {
        return Err(TuningError::InvalidArgument("cycles must be at least 1".into()));
    }
    if options.replications == 0 {
        return Err(TuningError::InvalidArgument(
            "replications must be at least 1".into(),
        ));
    }
    let runs: Vec<SimulationStats> = (0..options.replications as u64)
        .into_par_iter()
        .map(|k| run_replication(spec, strategy, cycles, stream_rng(seed, k), options.cycle_limit))
        .collect::<Result<_>>()?;
    Ok(pool(&runs))
}

fn pool(runs: &[SimulationStats]) -> SimulationStats {
    if let [single] = runs {
        return single.clone();
    }
    let cycles: u64 = runs.iter().map(|s| s.cycles).sum();
    let total_income: f64 = runs.iter().map(|s| s.total_income).sum();
    let n = cycles as f64;
    let variance: f64 = runs
        .iter()
        .map(|s| (s.cycles as f64 / n * s.std_error).powi(2))
        .sum();
    SimulationStats {
        cycles,
        total_income,
        i_hat: total_income / n,
        std_error: variance.sqrt(),
        boundary_counts: [
            runs.iter().map(|s| s.boundary_counts[0]).sum(),
            runs.iter().map(|s| s.boundary_counts[1]).sum(),
        ],
    }
}

fn run_replication(
    spec: &ChainSpec,
    strategy: &Strategy,
    cycles: u64,
    rng: Pcg64,
    cycle_limit: u64,
) -> Result<SimulationStats> {
    let mut walker = Walker::new(spec, strategy, rng);

    // warm-up: initial state to first absorption
    let mut event = walker.next_event();
    let mut segment_steps = 0u64;
    while event.event_kind != EventKind::Absorption {
        segment_steps += 1;
        if segment_steps > cycle_limit {
            return Err(TuningError::CycleLimit { limit: cycle_limit });
        }
        event = walker.next_event();
    }

    let batches = BATCHES.min(cycles);
    let batch_size = cycles / batches;
    let mut batch_means = Vec::with_capacity(batches as usize);
    let mut batch_sum = 0.0;

    let mut boundary_counts = [0u64; 2];
    let mut total_income = 0.0;
    for n in 0..cycles {
        boundary_counts[event.state] += 1;
        let mut cycle_income = 0.0;
        segment_steps = 0;
        loop {
            event = walker.next_event();
            cycle_income += event.income_delta;
            if event.event_kind == EventKind::Absorption {
                break;
            }
            segment_steps += 1;
            if segment_steps > cycle_limit {
                return Err(TuningError::CycleLimit { limit: cycle_limit });
            }
        }
        total_income += cycle_income;

        if n < batches * batch_size {
            batch_sum += cycle_income;
            if (n + 1) % batch_size == 0 {
                batch_means.push(batch_sum / batch_size as f64);
                batch_sum = 0.0;
            }
        }
    }

    let std_error = if batch_means.len() >= 2 {
        let k = batch_means.len() as f64;
        let mean = batch_means.iter().sum::<f64>() / k;
        let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };

    Ok(SimulationStats {
        cycles,
        total_income,
        i_hat: total_income / cycles as f64,
        std_error,
        boundary_counts,
    })
}

/// Events of the process for global steps `0..max_steps`.
pub fn sample_trajectory(
    spec: &ChainSpec,
    strategy: &Strategy,
    max_steps: u64,
    seed: u64,
) -> Result<Vec<TrajectoryEvent>> {
    check_inputs(spec, strategy)?;
    if max_steps == 0 {
        return Err(TuningError::InvalidArgument(
            "max_steps must be at least 1".into(),
        ));
    }
    let mut walker = Walker::new(spec, strategy, stream_rng(seed, 0));
    Ok((0..max_steps).map(|_| walker.next_event()).collect())
}

/// Outcome of repeated free-evolution runs from one internal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub segments: u64,
    /// Number of runs absorbed in boundary 0 and boundary 1.
    pub absorbed: [u64; 2],
    /// Mean income collected before absorption, start state included.
    pub mean_income: f64,
    pub income_std_error: f64,
}

/// Runs the uncontrolled chain from `start` (label) until absorption,
/// `segments` times.
pub fn simulate_segments(spec: &ChainSpec, start: usize, segments: u64, seed: u64) -> Result<SegmentStats> {
    let report = validate_chain(spec);
    if !report.is_ok() {
        return Err(TuningError::InvalidModel(report));
    }
    let start = index_of(start, spec.n_internal)?;
    let sampler = TransitionSampler::new(spec, &crate::model::Strategy::uniform(spec.n_internal));
    let mut rng = stream_rng(seed, 0);
    let mut absorbed = [0u64; 2];
    // Welford accumulation of mean and squared deviations
    let (mut mean_income, mut m2) = (0.0, 0.0);
    for k in 1..=segments {
        let mut state = start;
        let mut income = spec.c[state];
        loop {
            let next = sampler.next_state(state, &mut rng);
            if next < label_of(0) {
                absorbed[next] += 1;
                break;
            }
            state = next - label_of(0);
            income += spec.c[state];
        }
        let delta = income - mean_income;
        mean_income += delta / k as f64;
        m2 += delta * (income - mean_income);
    }
    let n = segments as f64;
    let income_std_error = if segments > 1 {
        (m2 / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(SegmentStats {
        segments,
        absorbed,
        mean_income,
        income_std_error,
    })
}
