//! Step-by-step emulation of the distillery–buffer–consumer system.
//!
//! Time is discrete; each step runs two phases in a fixed order:
//!
//! 1. **Distillery phase.** A held (completed but undelivered) state is
//!    delivered if the system has room. Otherwise, an idle distillery starts
//!    a new distillation if the policy allows, and any distillation in
//!    progress advances; on completion the state is delivered when there is
//!    room and held when there is not. Deliver-before-execute means a state
//!    delivered in step `t` can feed the same step's T gate, which is what
//!    keeps zero-capacity buffers from stalling a well-scheduled circuit.
//! 2. **Main-track phase.** The current slot executes. Clifford slots always
//!    advance; a T slot consumes one state when the system is non-empty and
//!    stalls otherwise (the slot retries next step).
//!
//! Occupancy is recorded after both phases. The system holds at most `b + 1`
//! jobs for a finite buffer of capacity `b`: `b` buffered plus one in
//! service. Production never overflows — the distillery holds the completed
//! state and pauses instead.
//!
//! Distillation durations are integers derived from the rational
//! `production_rate`: with the accumulated progress carried across
//! completions, the k-th completion lands on the step where
//! `floor(rate · steps + phase · rate)` increments, so a rate of 16/63
//! (one state per 3.9375 slots) is realized exactly by integer steps with
//! durations cycling through {4, 3}.

use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::circuit::{Slot, SlotTimeline};
use crate::Rational;

/// Buffer capacity: a finite count of storable states, or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BufferCapacity {
    Finite(u32),
    Infinite,
}

impl BufferCapacity {
    pub fn is_finite(self) -> bool {
        matches!(self, BufferCapacity::Finite(_))
    }
}

impl PartialOrd for BufferCapacity {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Infinite compares above every finite capacity.
impl Ord for BufferCapacity {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        use BufferCapacity::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => core::cmp::Ordering::Less,
            (Infinite, Finite(_)) => core::cmp::Ordering::Greater,
            (Infinite, Infinite) => core::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for BufferCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BufferCapacity::Finite(b) => write!(f, "{b}"),
            BufferCapacity::Infinite => write!(f, "inf"),
        }
    }
}

/// Distillery control policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Always distill; when a completed state cannot be delivered the
    /// distillery holds it and pauses until room appears.
    StopWhenFull,
    /// Start a new distillation only while the T demand within the next
    /// `window` slots exceeds the states already in the system or pipeline.
    Lookahead { window: u32 },
}

/// Emulation parameters. `Default` carries the calibrated values that
/// reproduce the embedded reference measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmulatorConfig {
    /// Distilled states per slot; must be in (0, 1] (sequential
    /// distillation allows at most one completion per step).
    pub production_rate: Rational,
    pub buffer_capacity: BufferCapacity,
    pub policy: Policy,
    /// Steps until the first (pre-started) distillation completes; 0 means
    /// a state is already waiting when emulation begins.
    pub warmup_remaining: u32,
    /// Progress, in steps, already made on the *next* distillation when the
    /// warmup state completes. Must satisfy `phase · rate < 1`.
    pub production_phase: Rational,
    /// States pre-loaded into the buffer; at most the capacity when finite.
    pub initial_stock: u32,
}

impl Default for EmulatorConfig {
    fn default() -> EmulatorConfig {
        EmulatorConfig {
            production_rate: Rational::new(16, 63),
            buffer_capacity: BufferCapacity::Infinite,
            policy: Policy::StopWhenFull,
            warmup_remaining: 3,
            production_phase: Rational::new(1, 2),
            initial_stock: 0,
        }
    }
}

impl EmulatorConfig {
    pub fn with_capacity(capacity: BufferCapacity) -> EmulatorConfig {
        EmulatorConfig {
            buffer_capacity: capacity,
            ..EmulatorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmulatorError> {
        if self.production_rate <= Rational::zero() || self.production_rate > Rational::one() {
            return Err(EmulatorError::InvalidConfig(
                "production_rate must be in (0, 1]",
            ));
        }
        if self.production_phase.is_negative()
            || self.production_phase * self.production_rate >= Rational::one()
        {
            return Err(EmulatorError::InvalidConfig(
                "production_phase must be in [0, 1/rate)",
            ));
        }
        if let Policy::Lookahead { window } = self.policy {
            if window == 0 {
                return Err(EmulatorError::InvalidConfig(
                    "lookahead window must be positive",
                ));
            }
        }
        if let BufferCapacity::Finite(b) = self.buffer_capacity {
            if self.initial_stock > b {
                return Err(EmulatorError::InvalidConfig(
                    "initial_stock exceeds buffer capacity",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmulatorError {
    InvalidConfig(&'static str),
}

impl fmt::Display for EmulatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmulatorError::InvalidConfig(why) => write!(f, "invalid emulator config: {why}"),
        }
    }
}

impl core::error::Error for EmulatorError {}

/// What happened in one step, for trace export. When several things happen
/// in the same step the first applicable label wins, in this order:
/// consume, stall, deliver, hold, pause, idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    /// A T slot consumed a state.
    Consume,
    /// A T slot waited because the system was empty.
    Stall,
    /// A distilled state entered the system.
    Deliver,
    /// A distillation completed but found no room; the state is now held.
    Hold,
    /// The distillery spent the step holding or policy-gated.
    Pause,
    Idle,
}

impl StepEvent {
    pub fn name(self) -> &'static str {
        match self {
            StepEvent::Consume => "consume",
            StepEvent::Stall => "stall",
            StepEvent::Deliver => "deliver",
            StepEvent::Hold => "hold",
            StepEvent::Pause => "pause",
            StepEvent::Idle => "idle",
        }
    }
}

/// Result of an emulation: the occupancy trace `k_0 … k_D` (jobs in the
/// system after each step) plus counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmulationTrace {
    /// `assembly_depth + 1` entries; `occupancy[t]` is the jobs in the
    /// system after step `t`.
    pub occupancy: Vec<u32>,
    /// One event per step `1..=assembly_depth`.
    pub events: Vec<StepEvent>,
    /// Steps a T slot spent waiting for a state.
    pub stall_steps: u64,
    /// Steps the distillery spent holding a finished state or policy-gated.
    pub pause_steps: u64,
    /// Completed distillations, including a state still held at the end.
    pub produced: u64,
    /// States consumed by T slots; equals the timeline's t-slot count.
    pub consumed: u64,
    /// Total steps executed; slot count plus stall steps.
    pub assembly_depth: u64,
    /// A completed state was still held undelivered when the run ended.
    pub held_at_end: bool,
}

impl EmulationTrace {
    /// Distinct occupancy values observed (the DTMC state count).
    pub fn distinct_states(&self) -> usize {
        let mut seen = self.occupancy.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn max_occupancy(&self) -> u32 {
        self.occupancy.iter().copied().max().unwrap_or(0)
    }
}

/// Distillery pipeline state.
enum Distillery {
    /// Pre-started first distillation.
    Warmup { remaining: u32 },
    Distilling { remaining: u64 },
    /// Completed state waiting for room.
    Holding,
    /// Nothing in flight (policy-gated, or the instant after a delivery).
    Idle,
}

/// Deterministic emulation of `timeline` under `config`.
///
/// The config must satisfy [`EmulatorConfig::validate`]; every valid config
/// emulates without error (pathological ones merely stall or pause).
pub fn emulate(timeline: &SlotTimeline, config: &EmulatorConfig) -> EmulationTrace {
    emulate_inner(timeline, config, None, u64::MAX).expect("uncut emulation terminates")
}

fn emulate_inner(
    timeline: &SlotTimeline,
    config: &EmulatorConfig,
    cutoff: Option<u64>,
    step_budget: u64,
) -> Option<EmulationTrace> {
    debug_assert!(config.validate().is_ok());
    let slots = &timeline.slots;
    // Prefix t-slot counts so the lookahead demand query is O(1).
    let mut t_prefix = Vec::with_capacity(slots.len() + 1);
    t_prefix.push(0u64);
    for s in slots {
        t_prefix.push(t_prefix.last().unwrap() + u64::from(*s == Slot::T));
    }

    let rate = config.production_rate;
    let mut occ: u32 = config.initial_stock;
    let mut progress = config.production_phase * rate;
    let mut state = if config.warmup_remaining == 0 {
        Distillery::Holding
    } else {
        Distillery::Warmup {
            remaining: config.warmup_remaining,
        }
    };
    let mut produced: u64 = u64::from(config.warmup_remaining == 0);
    let mut consumed: u64 = 0;
    let mut stalls: u64 = 0;
    let mut pauses: u64 = 0;
    let mut pc: usize = 0;
    let mut t: u64 = 0;
    let mut occupancy = Vec::with_capacity(slots.len() + 1);
    occupancy.push(occ);
    let mut events = Vec::with_capacity(slots.len());

    let room = |occ: u32| match config.buffer_capacity {
        BufferCapacity::Infinite => true,
        BufferCapacity::Finite(b) => occ < b + 1,
    };

    while pc < slots.len() {
        t += 1;
        if t > step_budget {
            return None;
        }
        let production_on = cutoff.is_none_or(|c| t <= c);
        let mut delivered = false;
        let mut held_now = false;
        let mut paused_now = false;

        // Distillery phase.
        if let Distillery::Holding = state {
            if room(occ) {
                occ += 1;
                delivered = true;
                state = Distillery::Idle;
            } else {
                pauses += 1;
                paused_now = true;
            }
        }
        if let Distillery::Idle = state {
            let start = production_on
                && match config.policy {
                    Policy::StopWhenFull => true,
                    Policy::Lookahead { window } => {
                        let end = (pc + window as usize).min(slots.len());
                        let demand = t_prefix[end] - t_prefix[pc];
                        demand > u64::from(occ)
                    }
                };
            if start {
                // Smallest integer duration that carries the accumulated
                // progress past one whole state.
                let d = ((Rational::one() - progress) / rate).ceil().to_integer() as u64;
                progress = progress + Rational::from_integer(d as i64) * rate - Rational::one();
                state = Distillery::Distilling { remaining: d };
            } else {
                pauses += 1;
                paused_now = true;
            }
        }
        let ticked_out = match &mut state {
            Distillery::Warmup { remaining } if production_on => {
                *remaining -= 1;
                *remaining == 0
            }
            Distillery::Distilling { remaining } if production_on => {
                *remaining -= 1;
                *remaining == 0
            }
            Distillery::Warmup { .. } | Distillery::Distilling { .. } => {
                pauses += 1;
                paused_now = true;
                false
            }
            _ => false,
        };
        if ticked_out {
            produced += 1;
            // Occupancy may rise by at most one per step: a completion in
            // the same step as a hold release is held in turn.
            if room(occ) && !delivered {
                occ += 1;
                delivered = true;
                state = Distillery::Idle;
            } else {
                state = Distillery::Holding;
                held_now = true;
            }
        }

        // Main-track phase.
        let mut consumed_now = false;
        let mut stalled_now = false;
        match slots[pc] {
            Slot::Clifford => pc += 1,
            Slot::T => {
                if occ >= 1 {
                    occ -= 1;
                    consumed += 1;
                    consumed_now = true;
                    pc += 1;
                } else {
                    stalls += 1;
                    stalled_now = true;
                }
            }
        }

        occupancy.push(occ);
        events.push(if consumed_now {
            StepEvent::Consume
        } else if stalled_now {
            StepEvent::Stall
        } else if delivered {
            StepEvent::Deliver
        } else if held_now {
            StepEvent::Hold
        } else if paused_now {
            StepEvent::Pause
        } else {
            StepEvent::Idle
        });
    }

    let held_at_end = matches!(state, Distillery::Holding);
    debug_assert_eq!(
        produced as i64 - consumed as i64,
        i64::from(occ) - i64::from(config.initial_stock) + i64::from(held_at_end)
    );
    Some(EmulationTrace {
        occupancy,
        events,
        stall_steps: stalls,
        pause_steps: pauses,
        produced,
        consumed,
        assembly_depth: t,
        held_at_end,
    })
}

/// When the distillery can shut down without stretching the assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShutdownReport {
    /// Earliest step after which the states already in the system cover all
    /// remaining T demand.
    pub shutdown_step: u64,
    /// Re-emulation with production disabled after `shutdown_step` produced
    /// the same assembly depth.
    pub verified: bool,
}

/// Finds the earliest step `t*` with `occupancy(t*) >= remaining T slots`,
/// then verifies by re-emulating with production cut after `t*`.
pub fn shutdown_time(timeline: &SlotTimeline, config: &EmulatorConfig) -> ShutdownReport {
    let trace = emulate(timeline, config);
    let total_t = timeline.t_slots();
    let mut consumed_by = 0u64;
    let mut shutdown_step = trace.assembly_depth;
    for t in 0..=trace.assembly_depth {
        if t > 0 && trace.events[(t - 1) as usize] == StepEvent::Consume {
            consumed_by += 1;
        }
        let remaining = total_t - consumed_by;
        if u64::from(trace.occupancy[t as usize]) >= remaining {
            shutdown_step = t;
            break;
        }
    }
    let budget = 4 * (trace.assembly_depth + timeline.len() as u64) + 1000;
    let verified = emulate_inner(timeline, config, Some(shutdown_step), budget)
        .map(|cut| cut.assembly_depth == trace.assembly_depth)
        .unwrap_or(false);
    ShutdownReport {
        shutdown_step,
        verified,
    }
}
