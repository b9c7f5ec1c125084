//! Property tests for the spec-level invariants of each module.

use distillq_core::*;
use proptest::prelude::*;

fn arb_slots(max_len: usize) -> impl Strategy<Value = Vec<Slot>> {
    prop::collection::vec(
        prop::bool::weighted(0.25).prop_map(|t| if t { Slot::T } else { Slot::Clifford }),
        0..max_len,
    )
}

fn arb_rate() -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![
        Rational::new(1, 1),
        Rational::new(1, 2),
        Rational::new(1, 3),
        Rational::new(1, 4),
        Rational::new(2, 9),
        Rational::new(16, 63),
        Rational::new(3, 7),
        Rational::new(5, 8),
        Rational::new(1, 8),
    ])
}

fn arb_config() -> impl Strategy<Value = EmulatorConfig> {
    (
        arb_rate(),
        prop_oneof![
            (0u32..10).prop_map(BufferCapacity::Finite),
            Just(BufferCapacity::Infinite),
        ],
        prop_oneof![
            Just(Policy::StopWhenFull),
            (1u32..40).prop_map(|window| Policy::Lookahead { window }),
        ],
        0u32..8,
        0i64..4,
        0u32..6,
    )
        .prop_map(|(rate, capacity, policy, warmup, phase_quarters, stock_raw)| {
            let initial_stock = match capacity {
                BufferCapacity::Finite(b) => stock_raw.min(b),
                BufferCapacity::Infinite => stock_raw,
            };
            EmulatorConfig {
                production_rate: rate,
                buffer_capacity: capacity,
                policy,
                warmup_remaining: warmup,
                production_phase: Rational::new(phase_quarters, 4),
                initial_stock,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn emulator_conservation_and_bounds(slots in arb_slots(200), config in arb_config()) {
        prop_assert!(config.validate().is_ok());
        let timeline = SlotTimeline::from_slots(slots.clone(), "prop");
        let trace = emulate(&timeline, &config);

        // Step bound: occupancy moves by at most one per step.
        for w in trace.occupancy.windows(2) {
            let delta = i64::from(w[1]) - i64::from(w[0]);
            prop_assert!(delta.abs() <= 1);
        }
        // Capacity safety: never above b + 1.
        if let BufferCapacity::Finite(b) = config.buffer_capacity {
            prop_assert!(trace.occupancy.iter().all(|&k| k <= b + 1));
        }
        // Work completion.
        prop_assert_eq!(trace.consumed, timeline.t_slots());
        // Conservation, including a held state.
        let k0 = i64::from(config.initial_stock);
        let kend = i64::from(*trace.occupancy.last().unwrap());
        prop_assert_eq!(
            trace.produced as i64 - trace.consumed as i64,
            kend - k0 + i64::from(trace.held_at_end)
        );
        // Trace geometry.
        prop_assert_eq!(trace.occupancy.len() as u64, trace.assembly_depth + 1);
        prop_assert_eq!(trace.events.len() as u64, trace.assembly_depth);
        prop_assert_eq!(trace.assembly_depth, slots.len() as u64 + trace.stall_steps);
        // Determinism.
        prop_assert_eq!(&emulate(&timeline, &config), &trace);
    }

    #[test]
    fn emulator_depth_monotone_in_capacity(slots in arb_slots(120), config in arb_config()) {
        // Monotonicity holds for the stop-when-full policy. Look-ahead
        // gating can genuinely invert it: a small buffer keeps a completed
        // state held as a hot spare while a large buffer idles the
        // distillery at the demand level and pays full latency on bursts.
        let config = EmulatorConfig {
            policy: Policy::StopWhenFull,
            ..config
        };
        let timeline = SlotTimeline::from_slots(slots, "prop");
        let mut previous = u64::MAX;
        for b in config.initial_stock..config.initial_stock + 8 {
            let cfg = EmulatorConfig {
                buffer_capacity: BufferCapacity::Finite(b),
                ..config.clone()
            };
            let depth = emulate(&timeline, &cfg).assembly_depth;
            prop_assert!(depth <= previous);
            previous = depth;
        }
        let infinite = EmulatorConfig {
            buffer_capacity: BufferCapacity::Infinite,
            ..config.clone()
        };
        prop_assert!(emulate(&timeline, &infinite).assembly_depth <= previous);
    }

    #[test]
    fn shutdown_never_extends_depth(slots in arb_slots(120), config in arb_config()) {
        let timeline = SlotTimeline::from_slots(slots, "prop");
        let report = shutdown_time(&timeline, &config);
        let depth = emulate(&timeline, &config).assembly_depth;
        prop_assert!(report.shutdown_step <= depth);
        prop_assert!(report.verified);
    }

    #[test]
    fn chain_rows_are_stochastic(slots in arb_slots(200), config in arb_config()) {
        let timeline = SlotTimeline::from_slots(slots, "prop");
        let trace = emulate(&timeline, &config);
        prop_assume!(trace.occupancy.len() >= 2);
        let chain = build_chain(&trace).unwrap();
        for row in &chain.probs {
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
        prop_assert_eq!(chain.total_transitions, trace.assembly_depth);
        let total: u64 = chain.counts.iter().flatten().sum();
        prop_assert_eq!(total, trace.assembly_depth);
    }

    #[test]
    fn solver_matches_power_iteration(n in 2usize..20, seed in any::<u64>()) {
        // Strictly positive rows: irreducible and aperiodic by construction.
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row: Vec<f64> = (0..n).map(|_| next() + 1e-3).collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
            rows.push(row);
        }
        let matrix = TransitionMatrix::from_probs((0..n as u32).collect(), rows).unwrap();
        prop_assert!(check_ergodic(&matrix).ergodic);
        let direct = steady_state(&matrix).unwrap();
        prop_assert!(direct.residual <= 1e-10);
        let oracle = power_iteration(&matrix, 4000, 0.0);
        for (a, b) in direct.nu.iter().zip(oracle.iter()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn birth_death_matches_detailed_balance(
        top in 1usize..14,
        p_millis in 50u32..450,
        q_millis in 50u32..450,
    ) {
        let p = f64::from(p_millis) / 1000.0;
        let q = f64::from(q_millis) / 1000.0;
        let mut rows = vec![vec![0.0; top + 1]; top + 1];
        for i in 0..=top {
            if i < top {
                rows[i][i + 1] = p;
            }
            if i > 0 {
                rows[i][i - 1] = q;
            }
            let used: f64 = rows[i].iter().sum();
            rows[i][i] = 1.0 - used;
        }
        let matrix = TransitionMatrix::from_probs((0..=top as u32).collect(), rows).unwrap();
        let nu = steady_state(&matrix).unwrap();
        let rho = p / q;
        let norm: f64 = (0..=top).map(|i| rho.powi(i as i32)).sum();
        for (i, &v) in nu.nu.iter().enumerate() {
            prop_assert!((v - rho.powi(i as i32) / norm).abs() <= 1e-10);
        }
    }

    #[test]
    fn adder_counts_follow_stage_formula(n in 2u32..40, extra in any::<bool>()) {
        let profile = AdderProfile { extra_stage: extra, ..AdderProfile::uniform() };
        let circuit = generate_adder(n, &profile).unwrap();
        let stages = u64::from(if extra { n } else { n - 1 });
        prop_assert_eq!(circuit.gates().len() as u64, 18 * stages);
        prop_assert_eq!(circuit.t_count(), 4 * stages);
        let stats = circuit.stats();
        prop_assert_eq!(stats.slot_count, stats.t_count + stats.clifford_count);
        prop_assert_eq!(stats.sequential_t_depth, stats.t_count);
    }

    #[test]
    fn parse_serialize_roundtrip(n in 2u32..12, seed in any::<u64>(), len in 1usize..60) {
        let mut state = seed | 1;
        let mut next = move |m: u32| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % u64::from(m)) as u32
        };
        let kinds = [
            GateKind::T, GateKind::H, GateKind::S, GateKind::X,
            GateKind::Z, GateKind::Cx, GateKind::Cz, GateKind::M,
        ];
        let mut gates = Vec::with_capacity(len);
        for _ in 0..len {
            let kind = kinds[next(8) as usize];
            let a = next(n);
            let targets = if kind.arity() == 2 {
                let b = (a + 1 + next(n - 1)) % n;
                vec![a, b]
            } else {
                vec![a]
            };
            gates.push(Gate::new(kind, targets));
        }
        let circuit = Circuit::new(n, gates, "prop").unwrap();
        let back = Circuit::parse(&circuit.serialize()).unwrap();
        prop_assert_eq!(back.n_qubits(), circuit.n_qubits());
        prop_assert_eq!(back.gates(), circuit.gates());
    }

    #[test]
    fn sequentialize_preserves_kind_sequence(n in 2u32..10, len in 0usize..50, seed in any::<u64>()) {
        let mut state = seed | 1;
        let mut next = move |m: u32| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % u64::from(m)) as u32
        };
        let mut gates = Vec::with_capacity(len);
        for _ in 0..len {
            if next(3) == 0 {
                gates.push(Gate::new(GateKind::T, vec![next(n)]));
            } else {
                gates.push(Gate::new(GateKind::H, vec![next(n)]));
            }
        }
        let circuit = Circuit::new(n, gates, "prop").unwrap();
        let timeline = circuit.sequentialize();
        prop_assert_eq!(timeline.len(), circuit.gates().len());
        for (slot, gate) in timeline.slots.iter().zip(circuit.gates()) {
            prop_assert_eq!(*slot == Slot::T, gate.kind.is_t());
        }
    }
}

#[test]
fn metrics_invariant_under_clifford_relabeling() {
    let original = generate_adder(6, &AdderProfile::uniform()).unwrap();
    let relabeled_gates: Vec<Gate> = original
        .gates()
        .iter()
        .map(|g| {
            if g.kind.is_t() {
                g.clone()
            } else {
                Gate::new(GateKind::H, vec![g.targets[0].min(5)])
            }
        })
        .collect();
    let relabeled = Circuit::new(6, relabeled_gates, "relabeled").unwrap();
    let config = EmulatorConfig::with_capacity(BufferCapacity::Finite(3));
    let run = |c: &Circuit| {
        let chain = build_chain(&emulate(&c.sequentialize(), &config)).unwrap();
        let nu = steady_state(&chain).unwrap();
        queue_metrics(&nu, &chain)
    };
    assert_eq!(run(&original), run(&relabeled));
}

#[test]
fn default_adder_depth_and_states_across_reference_sizes() {
    // Depth 18·(n−1) with zero stalls even without any buffer, and the
    // infinite state count matching the embedded reference exactly.
    let reference = ReferenceTable::embedded();
    for row in reference.rows() {
        let n = row.qubits;
        let timeline = generate_adder(n, &AdderProfile::uniform())
            .unwrap()
            .sequentialize();
        let trace = emulate(&timeline, &EmulatorConfig::default());
        assert_eq!(trace.assembly_depth, 18 * (u64::from(n) - 1), "n={n}");
        assert_eq!(trace.stall_steps, 0, "n={n}");
        assert_eq!(trace.distinct_states() as u64, row.states_infinite, "n={n}");

        let zero = emulate(
            &timeline,
            &EmulatorConfig::with_capacity(BufferCapacity::Finite(0)),
        );
        assert_eq!(zero.assembly_depth, trace.assembly_depth, "n={n} at b=0");
        assert_eq!(zero.stall_steps, 0, "n={n} at b=0");
    }
}

#[test]
fn pipeline_types_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<Circuit>();
    assert_send_sync::<SlotTimeline>();
    assert_send_sync::<EmulatorConfig>();
    assert_send_sync::<EmulationTrace>();
    assert_send_sync::<TransitionMatrix>();
    assert_send_sync::<SteadyStateDistribution>();
    assert_send_sync::<SweepReport>();
    assert_send_sync::<CalibrationResult>();

    // Distinct emulations may run concurrently with no shared state.
    let circuit = generate_adder(16, &AdderProfile::uniform()).unwrap();
    let timeline = circuit.sequentialize();
    let results: Vec<u64> = std::thread::scope(|scope| {
        (0..4u32)
            .map(|b| {
                let timeline = &timeline;
                scope.spawn(move || {
                    let cfg = EmulatorConfig::with_capacity(BufferCapacity::Finite(b));
                    emulate(timeline, &cfg).assembly_depth
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .map(|h| h.join().unwrap())
            .collect()
    });
    assert!(results.iter().all(|&d| d == 270));
}

#[test]
fn power_iteration_is_independent_of_direct_path() {
    // The oracle converges on the size-7 reference chain too.
    let timeline = generate_adder(16, &AdderProfile::uniform())
        .unwrap()
        .sequentialize();
    let cfg = EmulatorConfig::with_capacity(BufferCapacity::Finite(7));
    let chain = build_chain(&emulate(&timeline, &cfg)).unwrap();
    assert!(check_ergodic(&chain).ergodic);
    let direct = steady_state(&chain).unwrap();
    let oracle = power_iteration(&chain, 20_000, 0.0);
    for (a, b) in direct.nu.iter().zip(oracle.iter()) {
        assert!((a - b).abs() < 1e-8);
    }
}
