//! DTMC analysis of occupancy traces: transition matrix construction,
//! ergodicity checks, steady-state solve, and queueing metrics.
//!
//! States are the *observed* occupancy values; unvisited intermediate values
//! are not padded in. The steady state solves the balance equations
//! `ν = νP`, `Σνᵢ = 1` by direct elimination; [`power_iteration`] is kept as
//! an independent oracle and never feeds the direct path.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;

use crate::emulator::EmulationTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkovError {
    /// A chain needs at least two occupancy entries.
    InsufficientTrace,
    /// More than one closed communicating class: no unique steady state.
    NonUniqueSteadyState,
    /// The balance system could not be eliminated (degenerate probabilities).
    SingularSystem,
    /// Probability rows must be square, non-negative, and sum to 1.
    MalformedMatrix,
}

impl fmt::Display for MarkovError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkovError::InsufficientTrace => write!(f, "trace has fewer than 2 entries"),
            MarkovError::NonUniqueSteadyState => {
                write!(f, "multiple closed classes: steady state is not unique")
            }
            MarkovError::SingularSystem => write!(f, "balance equations are singular"),
            MarkovError::MalformedMatrix => write!(f, "rows must be stochastic"),
        }
    }
}

impl core::error::Error for MarkovError {}

/// Observed-state transition counts and row-stochastic probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    /// Sorted distinct occupancy values; index `i` refers to `states[i]`.
    pub states: Vec<u32>,
    pub counts: Vec<Vec<u64>>,
    pub probs: Vec<Vec<f64>>,
    /// Sum of all counts; equals trace length − 1 for trace-built chains.
    pub total_transitions: u64,
}

impl TransitionMatrix {
    /// Tallies consecutive occupancy pairs. A state with no outgoing
    /// transitions (only possible for the trace's final entry) gets a
    /// probability self-loop so every row stays stochastic; its counts row
    /// stays honest (all zero).
    pub fn from_occupancy(occupancy: &[u32]) -> Result<TransitionMatrix, MarkovError> {
        if occupancy.len() < 2 {
            return Err(MarkovError::InsufficientTrace);
        }
        let mut states: Vec<u32> = occupancy.to_vec();
        states.sort_unstable();
        states.dedup();
        let index = |v: u32| states.binary_search(&v).expect("observed state");
        let n = states.len();
        let mut counts = vec![vec![0u64; n]; n];
        for pair in occupancy.windows(2) {
            counts[index(pair[0])][index(pair[1])] += 1;
        }
        let mut probs = vec![vec![0.0; n]; n];
        for (i, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total == 0 {
                probs[i][i] = 1.0;
            } else {
                for (j, &c) in row.iter().enumerate() {
                    probs[i][j] = c as f64 / total as f64;
                }
            }
        }
        Ok(TransitionMatrix {
            states,
            counts,
            probs,
            total_transitions: occupancy.len() as u64 - 1,
        })
    }

    /// Wraps an externally supplied stochastic matrix (counts unknown).
    pub fn from_probs(states: Vec<u32>, probs: Vec<Vec<f64>>) -> Result<TransitionMatrix, MarkovError> {
        let n = probs.len();
        if n == 0 || states.len() != n {
            return Err(MarkovError::MalformedMatrix);
        }
        for row in &probs {
            if row.len() != n || row.iter().any(|&p| !(0.0..=1.0 + 1e-9).contains(&p)) {
                return Err(MarkovError::MalformedMatrix);
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(MarkovError::MalformedMatrix);
            }
        }
        Ok(TransitionMatrix {
            counts: vec![vec![0; n]; n],
            states,
            probs,
            total_transitions: 0,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Adjacency on positive-probability edges.
    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.probs[i]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, _)| j)
    }
}

/// Builds the DTMC over the trace's occupancy sequence.
pub fn build_chain(trace: &EmulationTrace) -> Result<TransitionMatrix, MarkovError> {
    TransitionMatrix::from_occupancy(&trace.occupancy)
}

/// Ergodicity diagnosis: finite (always), irreducible, aperiodic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    pub aperiodic: bool,
    pub finite: bool,
    pub ergodic: bool,
    /// State values in the communicating class of occupancy 0 (of the
    /// lowest observed state when 0 was never visited).
    pub communicating_class_of_zero: Vec<u32>,
}

/// Strongly connected components by Kosaraju's algorithm (iterative).
fn sccs(matrix: &TransitionMatrix) -> Vec<Vec<usize>> {
    let n = matrix.num_states();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // Post-order DFS with an explicit stack.
        let mut stack = vec![(start, matrix.successors(start))];
        visited[start] = true;
        while let Some((node, iter)) = stack.last_mut() {
            match iter.next() {
                Some(next) if !visited[next] => {
                    visited[next] = true;
                    stack.push((next, matrix.successors(next)));
                }
                Some(_) => {}
                None => {
                    order.push(*node);
                    stack.pop();
                }
            }
        }
    }
    // Reverse graph adjacency.
    let mut rev = vec![Vec::new(); n];
    for i in 0..n {
        for j in matrix.successors(i) {
            rev[j].push(i);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut components = Vec::new();
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for &prev in &rev[node] {
                if comp[prev] == usize::MAX {
                    comp[prev] = id;
                    members.push(prev);
                    stack.push(prev);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Period of the subchain on `class`: gcd of `level(u) + 1 − level(v)` over
/// its edges, from a BFS levelling. 1 means aperiodic; a self-loop forces 1.
fn class_period(matrix: &TransitionMatrix, class: &[usize]) -> u64 {
    let n = matrix.num_states();
    let mut in_class = vec![false; n];
    for &i in class {
        in_class[i] = true;
    }
    let mut level = vec![i64::MIN; n];
    let start = class[0];
    level[start] = 0;
    let mut queue = vec![start];
    let mut head = 0;
    let mut g: i64 = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for v in matrix.successors(u) {
            if !in_class[v] {
                continue;
            }
            if level[v] == i64::MIN {
                level[v] = level[u] + 1;
                queue.push(v);
            } else {
                g = g.gcd(&(level[u] + 1 - level[v]));
            }
        }
    }
    if g == 0 {
        // No cross edge closed a cycle: a single state without a self-loop
        // has no cycle at all; treat as periodic.
        if class.len() == 1 && matrix.probs[class[0]][class[0]] > 0.0 {
            1
        } else {
            0
        }
    } else {
        g.unsigned_abs()
    }
}

/// Checks irreducibility (pairwise reachability) and aperiodicity (cycle
/// gcd 1) of the positive-probability transition graph.
pub fn check_ergodic(matrix: &TransitionMatrix) -> ErgodicityReport {
    let components = sccs(matrix);
    let irreducible = components.len() == 1;
    let zero_idx = matrix
        .states
        .iter()
        .position(|&s| s == 0)
        .unwrap_or(0);
    let zero_class = components
        .iter()
        .find(|c| c.contains(&zero_idx))
        .expect("every state is in a component");
    let aperiodic = if irreducible {
        class_period(matrix, &components[0]) == 1
    } else {
        class_period(matrix, zero_class) == 1
    };
    let ergodic = irreducible && aperiodic;
    ErgodicityReport {
        irreducible,
        aperiodic,
        finite: true,
        ergodic,
        communicating_class_of_zero: zero_class.iter().map(|&i| matrix.states[i]).collect(),
    }
}

/// Steady-state distribution with its balance residual `‖νP − ν‖∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateDistribution {
    /// One probability per matrix state, in state order.
    pub nu: Vec<f64>,
    pub residual: f64,
    /// The chain was reducible; the solve ran on its unique closed class and
    /// the remaining (transient) states were assigned probability 0.
    pub solved_on_subset: bool,
}

/// Solves `ν = νP`, `Σν = 1`.
///
/// Irreducible chains (periodic ones included — the solution is then the
/// time-average distribution) solve directly. A reducible chain with exactly
/// one closed communicating class solves on that class, zero elsewhere,
/// flagged via `solved_on_subset`. Multiple closed classes are an error.
pub fn steady_state(matrix: &TransitionMatrix) -> Result<SteadyStateDistribution, MarkovError> {
    let n = matrix.num_states();
    let components = sccs(matrix);
    let closed: Vec<&Vec<usize>> = components
        .iter()
        .filter(|class| {
            class.iter().all(|&i| {
                matrix
                    .successors(i)
                    .all(|j| class.binary_search(&j).is_ok())
            })
        })
        .collect();
    match closed.len() {
        0 => unreachable!("a finite chain always has a closed class"),
        1 => {}
        _ => return Err(MarkovError::NonUniqueSteadyState),
    }
    let class = closed[0];
    let solved_on_subset = class.len() < n;
    let sub = solve_balance(matrix, class)?;
    let mut nu = vec![0.0; n];
    for (pos, &i) in class.iter().enumerate() {
        nu[i] = sub[pos];
    }
    let residual = balance_residual(matrix, &nu);
    Ok(SteadyStateDistribution {
        nu,
        residual,
        solved_on_subset,
    })
}

/// Direct elimination of the balance equations restricted to `class`:
/// `(Pᵀ − I)ν = 0` with one equation swapped for normalization.
fn solve_balance(matrix: &TransitionMatrix, class: &[usize]) -> Result<Vec<f64>, MarkovError> {
    let m = class.len();
    let mut a = vec![0.0f64; m * m];
    let mut b = vec![0.0f64; m];
    for (r, &i) in class.iter().enumerate() {
        for (c, &j) in class.iter().enumerate() {
            // Row r of the system is balance for state i: Σ_j ν_j P_ji − ν_i.
            a[r * m + c] = matrix.probs[j][i] - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..m {
        a[(m - 1) * m + c] = 1.0;
    }
    b[m - 1] = 1.0;
    // Gaussian elimination with partial pivoting.
    for col in 0..m {
        let mut pivot = col;
        for row in col + 1..m {
            if a[row * m + col].abs() > a[pivot * m + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * m + col].abs() < 1e-300 {
            return Err(MarkovError::SingularSystem);
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * m + col];
        for row in col + 1..m {
            let factor = a[row * m + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..m {
                a[row * m + k] -= factor * a[col * m + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0f64; m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in row + 1..m {
            acc -= a[row * m + k] * x[k];
        }
        x[row] = acc / a[row * m + row];
    }
    // Clamp elimination noise and renormalize.
    let mut total = 0.0;
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        total += *v;
    }
    if total <= 0.0 {
        return Err(MarkovError::SingularSystem);
    }
    for v in x.iter_mut() {
        *v /= total;
    }
    Ok(x)
}

fn balance_residual(matrix: &TransitionMatrix, nu: &[f64]) -> f64 {
    let n = matrix.num_states();
    let mut worst = 0.0f64;
    for j in 0..n {
        let acc: f64 = nu
            .iter()
            .zip(matrix.probs.iter())
            .map(|(&weight, row)| weight * row[j])
            .sum();
        worst = worst.max((acc - nu[j]).abs());
    }
    worst
}

/// Independent oracle: iterate `ν ← νP` from the uniform distribution.
///
/// Converges on ergodic chains; `tol = 0` forces all `iterations`. This path
/// shares no code with [`steady_state`].
pub fn power_iteration(matrix: &TransitionMatrix, iterations: u32, tol: f64) -> Vec<f64> {
    let n = matrix.num_states();
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0f64; n];
    for _ in 0..iterations {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for (&xi, row) in x.iter().zip(matrix.probs.iter()) {
            if xi == 0.0 {
                continue;
            }
            for (out, &p) in next.iter_mut().zip(row.iter()) {
                *out += xi * p;
            }
        }
        let delta = x
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        core::mem::swap(&mut x, &mut next);
        if delta <= tol {
            break;
        }
    }
    x
}

/// The queueing metrics computed from a steady state: idle probability,
/// full probability, mean jobs, utilization, and the chain dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueMetrics {
    /// Steady-state probability of occupancy 0 (0 when never observed).
    pub v0: f64,
    /// Steady-state probability of the highest observed occupancy.
    pub v_full: f64,
    /// Mean jobs in the system: Σ k·ν_k over actual state values.
    pub mean_jobs: f64,
    /// 1 − v0.
    pub utilization: f64,
    pub num_states: u64,
    pub num_transitions: u64,
}

pub fn queue_metrics(nu: &SteadyStateDistribution, matrix: &TransitionMatrix) -> QueueMetrics {
    let v0 = matrix
        .states
        .iter()
        .position(|&s| s == 0)
        .map(|i| nu.nu[i])
        .unwrap_or(0.0);
    let v_full = *nu.nu.last().expect("non-empty chain");
    let mean_jobs = matrix
        .states
        .iter()
        .zip(nu.nu.iter())
        .map(|(&s, &p)| f64::from(s) * p)
        .sum();
    QueueMetrics {
        v0,
        v_full,
        mean_jobs,
        utilization: 1.0 - v0,
        num_states: matrix.num_states() as u64,
        num_transitions: matrix.total_transitions,
    }
}
