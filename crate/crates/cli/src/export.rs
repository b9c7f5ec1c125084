//! Fixed-format CSV and JSON writers. Formatting is byte-stable:
//! probabilities carry 6 decimals, reference-schema columns carry the
//! 2-decimal presentation of the embedded table, rationals print as `p/q`.

use anyhow::{anyhow, Context, Result};
use distillq_core::{
    CalibrationResult, EmulationTrace, ErgodicityReport, ReferenceRow, SteadyStateDistribution,
    SweepReport, Table1Row, TransitionMatrix,
};
use serde::{Deserialize, Serialize};

use crate::config::format_rational;

pub fn trace_csv(trace: &EmulationTrace) -> String {
    let mut out = String::from("step,occupancy,event\n");
    out.push_str(&format!("0,{},idle\n", trace.occupancy[0]));
    for (i, event) in trace.events.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            i + 1,
            trace.occupancy[i + 1],
            event.name()
        ));
    }
    out
}

#[derive(Debug, Serialize)]
struct TraceJson<'a> {
    occupancy: &'a [u32],
    events: Vec<&'static str>,
    stall_steps: u64,
    pause_steps: u64,
    produced: u64,
    consumed: u64,
    assembly_depth: u64,
    held_at_end: bool,
}

pub fn trace_json(trace: &EmulationTrace) -> Result<String> {
    let body = TraceJson {
        occupancy: &trace.occupancy,
        events: trace.events.iter().map(|e| e.name()).collect(),
        stall_steps: trace.stall_steps,
        pause_steps: trace.pause_steps,
        produced: trace.produced,
        consumed: trace.consumed,
        assembly_depth: trace.assembly_depth,
        held_at_end: trace.held_at_end,
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}

pub const SWEEP_HEADER: &str =
    "qubits,capacity,depth,stalls,pauses,v0,v_full,mean_jobs,utilization,num_states,num_transitions";

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &report.rows {
        match (&row.metrics, &row.error) {
            (Some(m), None) => out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}\n",
                report.qubits,
                row.capacity,
                row.assembly_depth,
                row.stall_steps,
                row.pause_steps,
                m.v0,
                m.v_full,
                m.mean_jobs,
                m.utilization,
                m.num_states,
                m.num_transitions
            )),
            _ => out.push_str(&format!(
                "{},{},{},{},{},,,,,,\n",
                report.qubits, row.capacity, row.assembly_depth, row.stall_steps, row.pause_steps
            )),
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct SweepRowJson {
    capacity: String,
    depth: u64,
    stalls: u64,
    pauses: u64,
    ergodic: bool,
    solved_on_subset: bool,
    error: Option<String>,
    v0: Option<f64>,
    v_full: Option<f64>,
    mean_jobs: Option<f64>,
    utilization: Option<f64>,
    num_states: Option<u64>,
    num_transitions: Option<u64>,
}

#[derive(Debug, Serialize)]
struct SweepJson {
    label: String,
    qubits: u32,
    t_count: u64,
    baseline_depth: u64,
    optimal_buffer: String,
    rows: Vec<SweepRowJson>,
}

pub fn sweep_json(report: &SweepReport) -> Result<String> {
    let body = SweepJson {
        label: report.label.clone(),
        qubits: report.qubits,
        t_count: report.t_count,
        baseline_depth: report.baseline_depth,
        optimal_buffer: distillq_core::optimal_buffer(report).to_string(),
        rows: report
            .rows
            .iter()
            .map(|row| SweepRowJson {
                capacity: row.capacity.to_string(),
                depth: row.assembly_depth,
                stalls: row.stall_steps,
                pauses: row.pause_steps,
                ergodic: row.ergodic,
                solved_on_subset: row.solved_on_subset,
                error: row.error.map(|e| e.to_string()),
                v0: row.metrics.map(|m| m.v0),
                v_full: row.metrics.map(|m| m.v_full),
                mean_jobs: row.metrics.map(|m| m.mean_jobs),
                utilization: row.metrics.map(|m| m.utilization),
                num_states: row.metrics.map(|m| m.num_states),
                num_transitions: row.metrics.map(|m| m.num_transitions),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}

pub const TABLE1_HEADER: &str =
    "qubits,mean_size7,mean_infinite,states_infinite,utilization,transitions";

pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from(TABLE1_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{:.2},{:.2},{},{:.2},{}\n",
            row.qubits,
            row.mean_size7,
            row.mean_infinite,
            row.states_infinite,
            row.utilization,
            row.transitions
        ));
    }
    out
}

pub fn reference_csv(rows: &[ReferenceRow]) -> String {
    let mut out = String::from(TABLE1_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{:.2},{:.2},{},{:.2},{}\n",
            row.qubits,
            row.mean_size7,
            row.mean_infinite,
            row.states_infinite,
            row.utilization,
            row.transitions
        ));
    }
    out
}

#[derive(Debug, Serialize)]
struct Table1Json<'a> {
    calibrated_rate: String,
    calibrated_shape: &'a str,
    rows: Vec<Table1RowJson>,
}

#[derive(Debug, Serialize)]
struct Table1RowJson {
    qubits: u32,
    mean_size7: f64,
    mean_infinite: f64,
    states_infinite: u64,
    utilization: f64,
    transitions: u64,
}

pub fn table1_json(calibration: &CalibrationResult, rows: &[Table1Row]) -> Result<String> {
    let body = Table1Json {
        calibrated_rate: format_rational(calibration.best_rate),
        calibrated_shape: calibration.best_shape.name(),
        rows: rows
            .iter()
            .map(|r| Table1RowJson {
                qubits: r.qubits,
                mean_size7: r.mean_size7,
                mean_infinite: r.mean_infinite,
                states_infinite: r.states_infinite,
                utilization: r.utilization,
                transitions: r.transitions,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}

/// Matrix document: `{"states": [...], "counts": [[...]], "probs": [[...]],
/// "total_transitions": N}`. On import only `probs` is required.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default)]
    pub states: Option<Vec<u32>>,
    #[serde(default)]
    pub counts: Option<Vec<Vec<u64>>>,
    pub probs: Vec<Vec<f64>>,
    #[serde(default)]
    pub total_transitions: Option<u64>,
}

pub fn matrix_json(matrix: &TransitionMatrix) -> Result<String> {
    let body = MatrixJson {
        states: Some(matrix.states.clone()),
        counts: Some(matrix.counts.clone()),
        probs: matrix.probs.clone(),
        total_transitions: Some(matrix.total_transitions),
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}

pub fn matrix_from_json(text: &str) -> Result<TransitionMatrix> {
    let doc: MatrixJson = serde_json::from_str(text).context("parsing matrix JSON")?;
    let n = doc.probs.len();
    let states = doc
        .states
        .unwrap_or_else(|| (0..n as u32).collect());
    let mut matrix = TransitionMatrix::from_probs(states, doc.probs)
        .map_err(|e| anyhow!("invalid matrix: {e}"))?;
    if let Some(counts) = doc.counts {
        if counts.len() == n && counts.iter().all(|row| row.len() == n) {
            matrix.total_transitions = counts.iter().flatten().sum();
            matrix.counts = counts;
        }
    }
    if let Some(total) = doc.total_transitions {
        matrix.total_transitions = total;
    }
    Ok(matrix)
}

fn fmt_vec(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", cells.join(", "))
}

pub fn steady_text(
    matrix: &TransitionMatrix,
    report: &ErgodicityReport,
    nu: &SteadyStateDistribution,
) -> String {
    let states: Vec<String> = matrix.states.iter().map(|s| s.to_string()).collect();
    let mut out = String::new();
    out.push_str(&format!("states = [{}]\n", states.join(", ")));
    out.push_str(&format!("nu = {}\n", fmt_vec(&nu.nu)));
    out.push_str(&format!("residual = {:.3e}\n", nu.residual));
    out.push_str(&format!(
        "ergodic = {} (irreducible = {}, aperiodic = {})\n",
        report.ergodic, report.irreducible, report.aperiodic
    ));
    if nu.solved_on_subset {
        out.push_str("warning: reducible chain; solved on its closed class\n");
    }
    out
}

#[derive(Debug, Serialize)]
struct SteadyJson<'a> {
    states: &'a [u32],
    nu: &'a [f64],
    residual: f64,
    irreducible: bool,
    aperiodic: bool,
    ergodic: bool,
    solved_on_subset: bool,
}

pub fn steady_json(
    matrix: &TransitionMatrix,
    report: &ErgodicityReport,
    nu: &SteadyStateDistribution,
) -> Result<String> {
    let body = SteadyJson {
        states: &matrix.states,
        nu: &nu.nu,
        residual: nu.residual,
        irreducible: report.irreducible,
        aperiodic: report.aperiodic,
        ergodic: report.ergodic,
        solved_on_subset: nu.solved_on_subset,
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}

pub const CALIBRATION_HEADER: &str =
    "qubits,transitions_error,states_error,utilization_error,mean_infinite_error";

pub fn calibration_csv(result: &CalibrationResult) -> String {
    let mut out = String::from(CALIBRATION_HEADER);
    out.push('\n');
    for row in &result.per_n_errors {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            row.qubits,
            row.transitions_error,
            row.states_error,
            row.utilization_error,
            row.mean_infinite_error
        ));
    }
    out
}

#[derive(Debug, Serialize)]
struct CalibrationJson {
    best_rate: String,
    best_shape: String,
    objective: f64,
    per_n_errors: Vec<CalibrationRowJson>,
}

#[derive(Debug, Serialize)]
struct CalibrationRowJson {
    qubits: u32,
    transitions_error: f64,
    states_error: f64,
    utilization_error: f64,
    mean_infinite_error: f64,
}

pub fn calibration_json(result: &CalibrationResult) -> Result<String> {
    let body = CalibrationJson {
        best_rate: format_rational(result.best_rate),
        best_shape: result.best_shape.name().to_string(),
        objective: result.objective,
        per_n_errors: result
            .per_n_errors
            .iter()
            .map(|r| CalibrationRowJson {
                qubits: r.qubits,
                transitions_error: r.transitions_error,
                states_error: r.states_error,
                utilization_error: r.utilization_error,
                mean_infinite_error: r.mean_infinite_error,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}
