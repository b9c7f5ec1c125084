//! Deterministic emulation and queueing analysis of the T-state
//! distillery/buffer subsystem of surface-code assemblies.
//!
//! The pipeline has four stages, one per module:
//!
//! 1. [`circuit`] — Clifford+T circuits: carry-ripple adder generation,
//!    gate-list parsing, and sequentialization into one-gate-per-step
//!    slot timelines.
//! 2. [`emulator`] — step-by-step emulation of distilled-state production,
//!    buffering and consumption over a timeline, yielding the occupancy
//!    trace and the assembly depth.
//! 3. [`markov`] — the DTMC derived from an occupancy trace: transition
//!    matrix, ergodicity checks, steady-state solve, queueing metrics.
//! 4. [`sweep`] — buffer-capacity sweeps, optimal buffer search, and
//!    calibration of emulator parameters against the embedded reference
//!    measurements in [`reference`].
//!
//! Everything in this crate is a pure function of its inputs; the crate is
//! `no_std` (with `alloc`) and all types are `Send + Sync`.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod circuit;
pub mod emulator;
pub mod markov;
pub mod reference;
pub mod sweep;

/// Exact rational used for production rates and phases.
pub type Rational = num_rational::Ratio<i64>;

pub use circuit::{
    generate_adder, AdderProfile, Circuit, CircuitError, CircuitStats, Gate, GateKind,
    ProfileShape, Slot, SlotTimeline,
};
pub use emulator::{
    emulate, shutdown_time, BufferCapacity, EmulationTrace, EmulatorConfig, EmulatorError,
    Policy, ShutdownReport, StepEvent,
};
pub use markov::{
    build_chain, check_ergodic, power_iteration, queue_metrics, steady_state, ErgodicityReport,
    MarkovError, QueueMetrics, SteadyStateDistribution, TransitionMatrix,
};
pub use reference::{ReferenceRow, ReferenceTable, Table1Row};
pub use sweep::{
    calibrate, default_calibration, optimal_buffer, size7_metrics, sweep_buffers, table1_row,
    table1_rows, CalibrationResult, CalibrationRowError, RowError, SweepConfig, SweepError,
    SweepReport, SweepRow,
};
