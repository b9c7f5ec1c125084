//! Clifford+T circuits, adder schedule generation, gate-list parsing, and
//! sequentialization into discrete slot timelines.
//!
//! Only the T/Clifford distinction of a gate matters downstream: the emulator
//! consumes one distilled state per T slot and nothing per Clifford slot. The
//! concrete Clifford gates produced by [`generate_adder`] are therefore an
//! arbitrary but deterministic assignment.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Gate vocabulary of the `.ctq` format: T plus the Clifford labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    T,
    H,
    S,
    X,
    Z,
    Cx,
    Cz,
    M,
}

impl GateKind {
    /// Number of qubit targets this kind requires.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn is_t(self) -> bool {
        self == GateKind::T
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::T => "t",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::X => "x",
            GateKind::Z => "z",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::M => "m",
        }
    }

    fn from_mnemonic(s: &str) -> Option<GateKind> {
        Some(match s {
            "t" => GateKind::T,
            "h" => GateKind::H,
            "s" => GateKind::S,
            "x" => GateKind::X,
            "z" => GateKind::Z,
            "cx" => GateKind::Cx,
            "cz" => GateKind::Cz,
            "m" => GateKind::M,
            _ => return None,
        })
    }
}

/// One gate: a kind plus its qubit targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<u32>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<u32>) -> Gate {
        Gate { kind, targets }
    }
}

/// Ordered Clifford+T gate list. Gate order is total; no parallelism is
/// represented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n_qubits: u32,
    gates: Vec<Gate>,
    pub label: String,
}

/// Errors from circuit construction, generation, and parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CircuitError {
    /// Adder generation requires at least 2 qubits.
    InvalidQubitCount,
    /// Profile violates its invariants (offsets, stage geometry).
    InvalidProfile(String),
    /// Gate list contains no gates.
    EmptyCircuit,
    /// Unrecognized gate mnemonic at the given 1-based line.
    UnknownGate(usize),
    /// Missing, repeated, negative, or out-of-range target at the given
    /// 1-based line; also wrong target arity for the gate kind.
    MalformedLine(usize),
    /// A gate targets a qubit index at or beyond the qubit count.
    TargetOutOfRange,
}

impl fmt::Display for CircuitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitError::InvalidQubitCount => write!(f, "adder requires at least 2 qubits"),
            CircuitError::InvalidProfile(why) => write!(f, "invalid adder profile: {why}"),
            CircuitError::EmptyCircuit => write!(f, "gate list contains no gates"),
            CircuitError::UnknownGate(line) => write!(f, "unknown gate mnemonic on line {line}"),
            CircuitError::MalformedLine(line) => write!(f, "malformed gate on line {line}"),
            CircuitError::TargetOutOfRange => write!(f, "gate target exceeds qubit count"),
        }
    }
}

impl core::error::Error for CircuitError {}

impl Circuit {
    /// Builds a circuit, checking the per-gate target invariants.
    pub fn new(n_qubits: u32, gates: Vec<Gate>, label: &str) -> Result<Circuit, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::InvalidQubitCount);
        }
        for gate in &gates {
            if gate.targets.len() != gate.kind.arity() {
                return Err(CircuitError::TargetOutOfRange);
            }
            if gate.targets.iter().any(|&q| q >= n_qubits) {
                return Err(CircuitError::TargetOutOfRange);
            }
            if gate.kind.arity() == 2 && gate.targets[0] == gate.targets[1] {
                return Err(CircuitError::TargetOutOfRange);
            }
        }
        Ok(Circuit {
            n_qubits,
            gates,
            label: label.to_string(),
        })
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of T gates.
    pub fn t_count(&self) -> u64 {
        self.gates.iter().filter(|g| g.kind.is_t()).count() as u64
    }

    /// Parses the `.ctq` gate-list format: an optional `qubits <k>` header,
    /// one gate per line (case-insensitive mnemonic plus decimal targets),
    /// `#` comments, blank lines ignored. Without a header the qubit count
    /// is inferred as 1 + the maximum target index.
    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        let mut gates = Vec::new();
        let mut header: Option<u32> = None;
        let mut max_target = 0u32;
        let mut seen_significant = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-empty line").to_ascii_lowercase();
            if word == "qubits" && !seen_significant {
                let k = parts
                    .next()
                    .and_then(|v| v.parse::<u32>().ok())
                    .filter(|&k| k > 0)
                    .ok_or(CircuitError::MalformedLine(line_no))?;
                if parts.next().is_some() {
                    return Err(CircuitError::MalformedLine(line_no));
                }
                header = Some(k);
                seen_significant = true;
                continue;
            }
            seen_significant = true;
            let kind =
                GateKind::from_mnemonic(&word).ok_or(CircuitError::UnknownGate(line_no))?;
            let mut targets = Vec::with_capacity(kind.arity());
            for part in parts {
                let q: u32 = part
                    .parse()
                    .map_err(|_| CircuitError::MalformedLine(line_no))?;
                targets.push(q);
                max_target = max_target.max(q);
            }
            if targets.len() != kind.arity() {
                return Err(CircuitError::MalformedLine(line_no));
            }
            if kind.arity() == 2 && targets[0] == targets[1] {
                return Err(CircuitError::MalformedLine(line_no));
            }
            if let Some(k) = header {
                if targets.iter().any(|&q| q >= k) {
                    return Err(CircuitError::MalformedLine(line_no));
                }
            }
            gates.push(Gate::new(kind, targets));
        }
        if gates.is_empty() {
            return Err(CircuitError::EmptyCircuit);
        }
        let n_qubits = header.unwrap_or(max_target + 1);
        Circuit::new(n_qubits, gates, "parsed")
    }

    /// Emits the `.ctq` text form. `Circuit::parse` of the result restores
    /// the same qubit count and gate list.
    pub fn serialize(&self) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        for gate in &self.gates {
            out.push_str(gate.kind.mnemonic());
            for &q in &gate.targets {
                out.push_str(&format!(" {q}"));
            }
            out.push('\n');
        }
        out
    }

    /// One slot per gate in circuit order: t-slot exactly where the gate is T.
    pub fn sequentialize(&self) -> SlotTimeline {
        SlotTimeline {
            slots: self
                .gates
                .iter()
                .map(|g| if g.kind.is_t() { Slot::T } else { Slot::Clifford })
                .collect(),
            source: self.label.clone(),
        }
    }

    pub fn stats(&self) -> CircuitStats {
        let t_count = self.t_count();
        let slot_count = self.gates.len() as u64;
        CircuitStats {
            t_count,
            clifford_count: slot_count - t_count,
            slot_count,
            sequential_t_depth: t_count,
        }
    }
}

/// A discrete-time schedule: one gate slot per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotTimeline {
    pub slots: Vec<Slot>,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Clifford,
    T,
}

impl SlotTimeline {
    pub fn from_slots(slots: Vec<Slot>, source: &str) -> SlotTimeline {
        SlotTimeline {
            slots,
            source: source.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn t_slots(&self) -> u64 {
        self.slots.iter().filter(|s| **s == Slot::T).count() as u64
    }
}

/// Slot/T-gate counts of a circuit. `sequential_t_depth` equals `t_count`:
/// with strictly sequential gates every T layer has exactly one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitStats {
    pub t_count: u64,
    pub clifford_count: u64,
    pub slot_count: u64,
    pub sequential_t_depth: u64,
}

/// How T gates are laid out inside each adder stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileShape {
    /// T gates evenly spread through the stage (default offsets {2,6,10,14}).
    Uniform,
    /// T gates packed at the stage head (default offsets {1,2,3,4}).
    Burst,
    /// Two-phase layout: the first `t_per_stage·stages` slots carry one T
    /// every `t_per_stage` slots, the remaining T gates are spread evenly
    /// over the tail. Ignores `t_offsets`.
    Tapered,
}

impl ProfileShape {
    pub fn name(self) -> &'static str {
        match self {
            ProfileShape::Uniform => "uniform",
            ProfileShape::Burst => "burst",
            ProfileShape::Tapered => "tapered",
        }
    }

    pub fn from_name(name: &str) -> Option<ProfileShape> {
        Some(match name {
            "uniform" => ProfileShape::Uniform,
            "burst" => ProfileShape::Burst,
            "tapered" => ProfileShape::Tapered,
            _ => return None,
        })
    }
}

/// Parameterization of the generated carry-ripple adder schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderProfile {
    pub shape: ProfileShape,
    pub slots_per_stage: u32,
    pub t_per_stage: u32,
    /// Slot offsets (0-based, within a stage) carrying T gates; unused by
    /// the tapered shape.
    pub t_offsets: Vec<u32>,
    /// Emit `n` stages instead of `n − 1`, raising the T-count to `4n`.
    pub extra_stage: bool,
}

impl AdderProfile {
    pub fn uniform() -> AdderProfile {
        AdderProfile {
            shape: ProfileShape::Uniform,
            slots_per_stage: 18,
            t_per_stage: 4,
            t_offsets: vec![2, 6, 10, 14],
            extra_stage: false,
        }
    }

    pub fn burst() -> AdderProfile {
        AdderProfile {
            t_offsets: vec![1, 2, 3, 4],
            shape: ProfileShape::Burst,
            ..AdderProfile::uniform()
        }
    }

    pub fn tapered() -> AdderProfile {
        AdderProfile {
            shape: ProfileShape::Tapered,
            ..AdderProfile::uniform()
        }
    }

    pub fn for_shape(shape: ProfileShape) -> AdderProfile {
        match shape {
            ProfileShape::Uniform => AdderProfile::uniform(),
            ProfileShape::Burst => AdderProfile::burst(),
            ProfileShape::Tapered => AdderProfile::tapered(),
        }
    }

    fn validate(&self) -> Result<(), CircuitError> {
        if self.slots_per_stage == 0 || self.t_per_stage == 0 {
            return Err(CircuitError::InvalidProfile(
                "stage geometry must be positive".into(),
            ));
        }
        if self.t_per_stage > self.slots_per_stage {
            return Err(CircuitError::InvalidProfile(
                "more T gates than slots per stage".into(),
            ));
        }
        match self.shape {
            ProfileShape::Tapered => {
                // Two-phase rule needs room: phase 2 must hold t_per_stage−1
                // T gates per stage with spacing above 1.
                if self.t_per_stage < 2 || self.slots_per_stage < 2 * self.t_per_stage {
                    return Err(CircuitError::InvalidProfile(
                        "tapered shape requires slots_per_stage >= 2*t_per_stage".into(),
                    ));
                }
            }
            _ => {
                if self.t_offsets.len() != self.t_per_stage as usize {
                    return Err(CircuitError::InvalidProfile(
                        "t_offsets length must equal t_per_stage".into(),
                    ));
                }
                if !self.t_offsets.windows(2).all(|w| w[0] < w[1]) {
                    return Err(CircuitError::InvalidProfile(
                        "t_offsets must be strictly increasing".into(),
                    ));
                }
                if self.t_offsets.iter().any(|&o| o >= self.slots_per_stage) {
                    return Err(CircuitError::InvalidProfile(
                        "t_offset outside stage".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// T-slot positions (0-based) over the whole schedule for `stages`
    /// stages, per the shape rules.
    fn t_positions(&self, stages: u32) -> Vec<u64> {
        let sps = self.slots_per_stage as u64;
        let tps = self.t_per_stage as u64;
        let m = stages as u64;
        match self.shape {
            ProfileShape::Uniform | ProfileShape::Burst => {
                let mut out = Vec::with_capacity((tps * m) as usize);
                for s in 0..m {
                    for &o in &self.t_offsets {
                        out.push(s * sps + o as u64);
                    }
                }
                out
            }
            ProfileShape::Tapered => {
                // Phase 1 keeps the one-T-per-production-period cadence; the
                // sub-offset lines T slots up with the default production
                // phase so the head of the schedule never stalls.
                let c1 = 2.min(tps - 1);
                let mut out = Vec::with_capacity((tps * m) as usize);
                for j in 0..m {
                    out.push(j * tps + c1);
                }
                let q2 = (sps - tps) * m;
                let r = (tps - 1) * m;
                let c2 = c1.min(q2.div_ceil(r) - 1);
                for k in 0..r {
                    out.push(tps * m + k * q2 / r + c2);
                }
                out
            }
        }
    }
}

impl Default for AdderProfile {
    fn default() -> AdderProfile {
        AdderProfile::uniform()
    }
}

/// Deterministic Clifford filler for generated stages. Only the T/Clifford
/// distinction matters to the emulator.
fn filler_clifford(slot: u64, a: u32, b: u32) -> Gate {
    match slot % 6 {
        0 => Gate::new(GateKind::H, vec![a]),
        1 => Gate::new(GateKind::Cx, vec![a, b]),
        2 => Gate::new(GateKind::S, vec![b]),
        3 => Gate::new(GateKind::Cz, vec![a, b]),
        4 => Gate::new(GateKind::X, vec![b]),
        _ => Gate::new(GateKind::Z, vec![a]),
    }
}

/// Generates the carry-ripple adder schedule: `n − 1` stages (`n` with
/// `extra_stage`) of `slots_per_stage` gates, `t_per_stage` T gates per
/// stage at the profile's positions.
pub fn generate_adder(n: u32, profile: &AdderProfile) -> Result<Circuit, CircuitError> {
    if n < 2 {
        return Err(CircuitError::InvalidQubitCount);
    }
    profile.validate()?;
    let stages = if profile.extra_stage { n } else { n - 1 };
    let total = stages as u64 * profile.slots_per_stage as u64;
    let t_positions = profile.t_positions(stages);
    let mut is_t = vec![false; total as usize];
    for &p in &t_positions {
        is_t[p as usize] = true;
    }
    let mut gates = Vec::with_capacity(total as usize);
    for (i, &t) in is_t.iter().enumerate() {
        let stage = i as u64 / profile.slots_per_stage as u64;
        // Stage s couples qubits (s, s+1); the extra stage wraps to 0.
        let a = (stage % n as u64) as u32;
        let b = ((stage + 1) % n as u64) as u32;
        if t {
            gates.push(Gate::new(GateKind::T, vec![b]));
        } else {
            gates.push(filler_clifford(i as u64, a, b));
        }
    }
    let label = format!(
        "adder{n}-{}{}",
        profile.shape.name(),
        if profile.extra_stage { "-x" } else { "" }
    );
    Circuit::new(n, gates, &label)
}
