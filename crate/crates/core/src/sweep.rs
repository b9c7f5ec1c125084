//! Buffer-capacity sweeps, optimal buffer search, and calibration against
//! the embedded reference table.
//!
//! A sweep re-emulates a circuit for every requested capacity plus the
//! infinite baseline, derives the DTMC of each run, and collects the
//! queueing metrics. The optimal buffer is the smallest finite capacity
//! whose assembly depth matches the infinite baseline.
//!
//! Calibration grid-searches production rates and profile shapes against
//! the reference measurements. A candidate is scored with two runs per
//! qubit count: a free-running infinite-buffer emulation (transitions,
//! state count, infinite-buffer mean jobs) and a size-7 run under the
//! look-ahead policy (utilization), mirroring the controlled-distillery
//! setup the reference's finite-buffer figures come from.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::circuit::{generate_adder, AdderProfile, Circuit, ProfileShape};
use crate::emulator::{emulate, BufferCapacity, EmulatorConfig, EmulatorError, Policy};
use crate::markov::{build_chain, check_ergodic, queue_metrics, steady_state, MarkovError, QueueMetrics};
use crate::reference::{ReferenceTable, Table1Row};
use crate::Rational;

/// Buffer size of the reference's finite-buffer configuration.
pub const REFERENCE_BUFFER: u32 = 7;

/// Look-ahead window (slots) used for finite-buffer metric runs: two full
/// default stages of demand.
pub const REFERENCE_LOOKAHEAD_WINDOW: u32 = 36;

/// Default calibration grid.
pub const DEFAULT_RATE_GRID: [(i64, i64); 5] = [(1, 5), (2, 9), (1, 4), (16, 63), (1, 3)];
pub const DEFAULT_SHAPE_GRID: [ProfileShape; 3] = [
    ProfileShape::Uniform,
    ProfileShape::Burst,
    ProfileShape::Tapered,
];
pub const DEFAULT_CALIBRATION_NS: [u32; 5] = [16, 32, 64, 128, 256];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepError {
    /// Calibration called with an empty rate, shape, or qubit grid.
    EmptyGrid,
    /// Sweep capacities must be non-empty and distinct.
    InvalidCapacities,
    /// The base emulator config is invalid.
    Config(EmulatorError),
    /// A qubit count without a reference row.
    MissingReference(u32),
    /// Circuit generation failed inside a calibration run.
    Circuit(String),
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepError::EmptyGrid => write!(f, "calibration grid is empty"),
            SweepError::InvalidCapacities => {
                write!(f, "sweep capacities must be non-empty and distinct")
            }
            SweepError::Config(e) => write!(f, "{e}"),
            SweepError::MissingReference(n) => {
                write!(f, "no reference row for {n} qubits")
            }
            SweepError::Circuit(why) => write!(f, "circuit generation failed: {why}"),
        }
    }
}

impl core::error::Error for SweepError {}

/// Per-row failure inside a sweep; the sweep itself keeps going.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowError {
    /// Capacity override made the config invalid (e.g. stock > capacity).
    Config(EmulatorError),
    /// Chain construction or steady-state solve failed.
    Chain(MarkovError),
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowError::Config(e) => write!(f, "{e}"),
            RowError::Chain(e) => write!(f, "{e}"),
        }
    }
}

/// Capacity range plus the base config whose capacity field is overridden
/// per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub capacities: Vec<BufferCapacity>,
    pub base: EmulatorConfig,
}

impl SweepConfig {
    /// Capacities `0..=max_finite` plus infinite, under the default config.
    pub fn range_with_infinite(max_finite: u32) -> SweepConfig {
        let mut capacities: Vec<BufferCapacity> =
            (0..=max_finite).map(BufferCapacity::Finite).collect();
        capacities.push(BufferCapacity::Infinite);
        SweepConfig {
            capacities,
            base: EmulatorConfig::default(),
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.capacities.is_empty() {
            return Err(SweepError::InvalidCapacities);
        }
        let mut seen = self.capacities.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.capacities.len() {
            return Err(SweepError::InvalidCapacities);
        }
        self.base.validate().map_err(SweepError::Config)
    }
}

/// One capacity's outcome within a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub capacity: BufferCapacity,
    pub assembly_depth: u64,
    pub stall_steps: u64,
    pub pause_steps: u64,
    /// Chain metrics; `None` when `error` is set.
    pub metrics: Option<QueueMetrics>,
    pub ergodic: bool,
    /// Steady state solved on the unique closed class of a reducible chain.
    pub solved_on_subset: bool,
    pub error: Option<RowError>,
}

/// Sweep outcome: per-capacity rows (ordered by capacity, infinite last)
/// plus the infinite-capacity baseline depth.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub label: String,
    pub qubits: u32,
    pub t_count: u64,
    pub rows: Vec<SweepRow>,
    pub baseline_depth: u64,
}

fn run_row(timeline: &crate::circuit::SlotTimeline, config: &EmulatorConfig) -> SweepRow {
    let capacity = config.buffer_capacity;
    if let Err(e) = config.validate() {
        return SweepRow {
            capacity,
            assembly_depth: 0,
            stall_steps: 0,
            pause_steps: 0,
            metrics: None,
            ergodic: false,
            solved_on_subset: false,
            error: Some(RowError::Config(e)),
        };
    }
    let trace = emulate(timeline, config);
    let (metrics, ergodic, solved_on_subset, error) = match build_chain(&trace) {
        Ok(chain) => {
            let report = check_ergodic(&chain);
            match steady_state(&chain) {
                Ok(nu) => (
                    Some(queue_metrics(&nu, &chain)),
                    report.ergodic,
                    nu.solved_on_subset,
                    None,
                ),
                Err(e) => (None, report.ergodic, false, Some(RowError::Chain(e))),
            }
        }
        Err(e) => (None, false, false, Some(RowError::Chain(e))),
    };
    SweepRow {
        capacity,
        assembly_depth: trace.assembly_depth,
        stall_steps: trace.stall_steps,
        pause_steps: trace.pause_steps,
        metrics,
        ergodic,
        solved_on_subset,
        error,
    }
}

/// Emulates `circuit` once per capacity (plus the always-run infinite
/// baseline) and derives chain metrics per row. Row-level failures are
/// recorded on the row; the sweep never aborts.
pub fn sweep_buffers(circuit: &Circuit, config: &SweepConfig) -> Result<SweepReport, SweepError> {
    config.validate()?;
    let timeline = circuit.sequentialize();
    let mut capacities = config.capacities.clone();
    capacities.sort();
    let infinite_requested = capacities.contains(&BufferCapacity::Infinite);

    let mut rows = Vec::with_capacity(capacities.len());
    let mut baseline_row: Option<SweepRow> = None;
    for &capacity in &capacities {
        let row_config = EmulatorConfig {
            buffer_capacity: capacity,
            ..config.base.clone()
        };
        let row = run_row(&timeline, &row_config);
        if capacity == BufferCapacity::Infinite {
            baseline_row = Some(row.clone());
        }
        rows.push(row);
    }
    // The infinite baseline always runs; when not requested it stays out
    // of the rows but still defines the reference depth.
    let baseline = match baseline_row {
        Some(row) => row,
        None => {
            debug_assert!(!infinite_requested);
            run_row(
                &timeline,
                &EmulatorConfig {
                    buffer_capacity: BufferCapacity::Infinite,
                    ..config.base.clone()
                },
            )
        }
    };
    let baseline_depth = baseline.assembly_depth;
    Ok(SweepReport {
        label: circuit.label.clone(),
        qubits: circuit.n_qubits(),
        t_count: circuit.t_count(),
        rows,
        baseline_depth,
    })
}

/// Smallest finite capacity whose depth equals the infinite baseline; when
/// none matches, the smallest finite capacity achieving the minimum finite
/// depth. Reports with no finite rows return `Infinite`.
pub fn optimal_buffer(report: &SweepReport) -> BufferCapacity {
    let finite: Vec<&SweepRow> = report
        .rows
        .iter()
        .filter(|r| r.capacity.is_finite() && r.error.is_none())
        .collect();
    if finite.is_empty() {
        return BufferCapacity::Infinite;
    }
    for row in &finite {
        if row.assembly_depth == report.baseline_depth {
            return row.capacity;
        }
    }
    let min_depth = finite.iter().map(|r| r.assembly_depth).min().unwrap();
    finite
        .iter()
        .find(|r| r.assembly_depth == min_depth)
        .unwrap()
        .capacity
}

/// Relative errors of one calibrated row against the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRowError {
    pub qubits: u32,
    pub transitions_error: f64,
    pub states_error: f64,
    pub utilization_error: f64,
    pub mean_infinite_error: f64,
}

impl CalibrationRowError {
    pub fn total(&self) -> f64 {
        self.transitions_error + self.states_error + self.utilization_error
            + self.mean_infinite_error
    }
}

/// Winning grid point with its per-row errors and mean objective.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub best_rate: Rational,
    pub best_shape: ProfileShape,
    pub per_n_errors: Vec<CalibrationRowError>,
    pub objective: f64,
}

/// The two emulation runs scored per calibration candidate.
struct CandidateRuns {
    transitions: u64,
    states_infinite: u64,
    mean_infinite: f64,
    utilization: f64,
}

fn candidate_runs(n: u32, rate: Rational, shape: ProfileShape) -> Result<CandidateRuns, SweepError> {
    let profile = AdderProfile::for_shape(shape);
    let circuit = generate_adder(n, &profile)
        .map_err(|e| SweepError::Circuit(alloc::format!("{e}")))?;
    let timeline = circuit.sequentialize();

    let infinite = EmulatorConfig {
        production_rate: rate,
        ..EmulatorConfig::default()
    };
    infinite.validate().map_err(SweepError::Config)?;
    let trace = emulate(&timeline, &infinite);
    let (transitions, states_infinite) = (trace.assembly_depth, trace.distinct_states() as u64);
    let mean_infinite = chain_mean(&trace).unwrap_or(f64::INFINITY);

    let size7 = EmulatorConfig {
        production_rate: rate,
        buffer_capacity: BufferCapacity::Finite(REFERENCE_BUFFER),
        policy: Policy::Lookahead {
            window: REFERENCE_LOOKAHEAD_WINDOW,
        },
        ..EmulatorConfig::default()
    };
    let trace7 = emulate(&timeline, &size7);
    let utilization = chain_metrics(&trace7)
        .map(|m| m.utilization)
        .unwrap_or(f64::INFINITY);
    Ok(CandidateRuns {
        transitions,
        states_infinite,
        mean_infinite,
        utilization,
    })
}

fn chain_metrics(trace: &crate::emulator::EmulationTrace) -> Option<QueueMetrics> {
    let chain = build_chain(trace).ok()?;
    let nu = steady_state(&chain).ok()?;
    Some(queue_metrics(&nu, &chain))
}

fn chain_mean(trace: &crate::emulator::EmulationTrace) -> Option<f64> {
    chain_metrics(trace).map(|m| m.mean_jobs)
}

/// Grid-search over rates and shapes, scoring each candidate against the
/// reference rows for `ns` with the symmetric relative-error objective
/// (transitions, state count, utilization, infinite-buffer mean jobs,
/// equally weighted). Ties keep the earliest grid point.
pub fn calibrate(
    reference: &ReferenceTable,
    rate_grid: &[Rational],
    shapes: &[ProfileShape],
    ns: &[u32],
) -> Result<CalibrationResult, SweepError> {
    if rate_grid.is_empty() || shapes.is_empty() || ns.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    for &n in ns {
        if reference.row(n).is_none() {
            return Err(SweepError::MissingReference(n));
        }
    }
    let mut best: Option<CalibrationResult> = None;
    for &shape in shapes {
        for &rate in rate_grid {
            let mut errors = Vec::with_capacity(ns.len());
            let mut total = 0.0f64;
            for &n in ns {
                let reference_row = reference.row(n).expect("checked above");
                let runs = candidate_runs(n, rate, shape)?;
                let row = CalibrationRowError {
                    qubits: n,
                    transitions_error: (runs.transitions as f64
                        - reference_row.transitions as f64)
                        .abs()
                        / reference_row.transitions as f64,
                    states_error: (runs.states_infinite as f64
                        - reference_row.states_infinite as f64)
                        .abs()
                        / reference_row.states_infinite as f64,
                    utilization_error: (runs.utilization - reference_row.utilization).abs(),
                    mean_infinite_error: (runs.mean_infinite - reference_row.mean_infinite)
                        .abs()
                        / reference_row.mean_infinite,
                };
                total += row.total();
                errors.push(row);
            }
            let objective = total / ns.len() as f64;
            let better = match &best {
                None => true,
                Some(b) => objective < b.objective,
            };
            if better {
                best = Some(CalibrationResult {
                    best_rate: rate,
                    best_shape: shape,
                    per_n_errors: errors,
                    objective,
                });
            }
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// Runs [`calibrate`] on the shipped default grid.
pub fn default_calibration(reference: &ReferenceTable) -> CalibrationResult {
    let rates: Vec<Rational> = DEFAULT_RATE_GRID
        .iter()
        .map(|&(p, q)| Rational::new(p, q))
        .collect();
    calibrate(
        reference,
        &rates,
        &DEFAULT_SHAPE_GRID,
        &DEFAULT_CALIBRATION_NS,
    )
    .expect("default grid is non-empty and covered by the reference")
}

/// Computes one reference-schema row.
///
/// Transitions, infinite-buffer states, and infinite-buffer mean jobs come
/// from the shipped default configuration (uniform profile, free-running
/// distillery). The size-7 mean and the utilization come from a size-7
/// buffer run under the look-ahead policy with the calibrated rate and
/// profile shape, reproducing the reference's controlled-distillery setup.
pub fn table1_row(n: u32, calibration: &CalibrationResult) -> Result<Table1Row, SweepError> {
    let uniform = generate_adder(n, &AdderProfile::uniform())
        .map_err(|e| SweepError::Circuit(alloc::format!("{e}")))?;
    let trace = emulate(&uniform.sequentialize(), &EmulatorConfig::default());
    let transitions = trace.assembly_depth;
    let states_infinite = trace.distinct_states() as u64;
    let mean_infinite = chain_mean(&trace).unwrap_or(f64::NAN);

    let calibrated = generate_adder(n, &AdderProfile::for_shape(calibration.best_shape))
        .map_err(|e| SweepError::Circuit(alloc::format!("{e}")))?;
    let size7 = EmulatorConfig {
        production_rate: calibration.best_rate,
        buffer_capacity: BufferCapacity::Finite(REFERENCE_BUFFER),
        policy: Policy::Lookahead {
            window: REFERENCE_LOOKAHEAD_WINDOW,
        },
        ..EmulatorConfig::default()
    };
    let trace7 = emulate(&calibrated.sequentialize(), &size7);
    let (mean_size7, utilization) = match chain_metrics(&trace7) {
        Some(m) => (m.mean_jobs, m.utilization),
        None => (f64::NAN, f64::NAN),
    };
    Ok(Table1Row {
        qubits: n,
        mean_size7,
        mean_infinite,
        states_infinite,
        utilization,
        transitions,
    })
}

/// Full reference-schema view: calibrates on the default grid, then
/// computes one row per qubit count.
pub fn table1_rows(ns: &[u32]) -> Result<(CalibrationResult, Vec<Table1Row>), SweepError> {
    let reference = ReferenceTable::embedded();
    let calibration = default_calibration(&reference);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        rows.push(table1_row(n, &calibration)?);
    }
    Ok((calibration, rows))
}

/// Size-7 metrics (mean jobs, utilization, buffer-full probability) for one
/// adder under the calibrated configuration.
pub fn size7_metrics(n: u32, calibration: &CalibrationResult) -> Result<QueueMetrics, SweepError> {
    let circuit = generate_adder(n, &AdderProfile::for_shape(calibration.best_shape))
        .map_err(|e| SweepError::Circuit(alloc::format!("{e}")))?;
    let config = EmulatorConfig {
        production_rate: calibration.best_rate,
        buffer_capacity: BufferCapacity::Finite(REFERENCE_BUFFER),
        policy: Policy::Lookahead {
            window: REFERENCE_LOOKAHEAD_WINDOW,
        },
        ..EmulatorConfig::default()
    };
    let trace = emulate(&circuit.sequentialize(), &config);
    chain_metrics(&trace).ok_or(SweepError::Circuit(String::from("metrics unavailable")))
}
