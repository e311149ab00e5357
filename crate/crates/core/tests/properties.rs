use proptest::prelude::*;

use qseis::circuit::{Circuit, DiagonalObservable, Gate, GateKind, Statevector};
use qseis::evolve::{
    mutate, mutate_delete, mutate_insert, mutate_modify, mutate_swap, run_evolution,
    EvolutionConfig, Mutation, MutationConfig,
};
use qseis::problem::{synth_instance, Encoding};
use qseis::rng;

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let kinds = prop::sample::select(vec![
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::CRx,
        GateKind::CRy,
        GateKind::CRz,
    ]);
    (kinds, 0..n, 0..n, -10.0f64..10.0).prop_filter_map(
        "control == target",
        move |(k, t, c, th)| {
            if k.is_controlled() {
                (c != t).then(|| Gate::controlled(k, c, t, th))
            } else {
                Some(Gate::single(k, t, th))
            }
        },
    )
}

fn circuit_strategy(max_qubits: usize, max_depth: usize) -> impl Strategy<Value = Circuit> {
    (2..=max_qubits).prop_flat_map(move |n| {
        prop::collection::vec(gate_strategy(n), 0..=max_depth)
            .prop_map(move |gates| Circuit::from_gates(n, gates).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuits_preserve_norm(circuit in circuit_strategy(12, 120)) {
        let state = circuit.run().unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        let p: f64 = state.probabilities().iter().sum();
        prop_assert!((p - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rotation_then_inverse_is_identity(
        circuit in circuit_strategy(6, 30),
        extra in 0usize..1000,
    ) {
        let n = circuit.nqubits();
        let gate = circuit.gates().get(extra % circuit.depth().max(1)).copied()
            .unwrap_or_else(|| Gate::crx(0, n - 1, 1.234));
        let mut state = circuit.run().unwrap();
        let before = state.clone();
        state.apply(&gate).unwrap();
        state.apply(&gate.inverse()).unwrap();
        for (a, b) in state.amplitudes().iter().zip(before.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn expectation_is_linear_in_the_observable(
        circuit in circuit_strategy(6, 40),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        salt in any::<u64>(),
    ) {
        let n = circuit.nqubits();
        let h1 = DiagonalObservable::from_fn(n, |x| ((x as u64 ^ salt) % 97) as f64).unwrap();
        let h2 = DiagonalObservable::from_fn(n, |x| ((x as u64).wrapping_mul(salt | 1) % 13) as f64 - 6.0).unwrap();
        let state = circuit.run().unwrap();
        let combined = h1.linear_combination(a, &h2, b).unwrap();
        let lhs = state.expectation_exact(&combined).unwrap();
        let rhs = a * state.expectation_exact(&h1).unwrap() + b * state.expectation_exact(&h2).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn encoding_round_trips(bits in 1u32..=8, s in prop::collection::vec(any::<u64>(), 1..6)) {
        let enc = Encoding::new(s.len(), bits).unwrap();
        let s: Vec<u64> = s.into_iter().map(|v| v % enc.limit()).collect();
        let x = enc.encode(&s).unwrap();
        prop_assert_eq!(x.len(), enc.nqubits());
        prop_assert_eq!(enc.decode(&x).unwrap(), s.clone());
        prop_assert_eq!(enc.decode_index(enc.encode_index(&s).unwrap()), s);
    }

    #[test]
    fn qubo_energy_is_the_squared_residual(m in 1usize..=4, bits in 1u32..=3, seed in any::<u64>(), basis in any::<usize>()) {
        let p = synth_instance(m, bits, seed).unwrap();
        let qubo = p.build_qubo();
        let x = basis % (1 << p.nqubits());
        let s = p.encoding().decode_index(x);
        let e = qubo.energy_index(x);
        prop_assert_eq!(e, p.objective_int(&s).unwrap());
        prop_assert!(e >= 0.0);
        let spins: Vec<i8> = (0..p.nqubits()).map(|q| 1 - 2 * ((x >> q) & 1) as i8).collect();
        prop_assert!((qubo.to_ising().energy(&spins) - e).abs() < 1e-9);
    }

    #[test]
    fn mutations_keep_circuits_valid_and_shift_depth(
        circuit in circuit_strategy(5, 20),
        seed in any::<u64>(),
    ) {
        let n = circuit.nqubits();
        let mut rng = rng::seeded(seed);
        let d = circuit.depth();

        let mut c = circuit.clone();
        mutate_insert(&mut c, 0.5, &mut rng).unwrap();
        prop_assert_eq!(c.depth(), d + 1);
        prop_assert!(Circuit::from_gates(n, c.gates().to_vec()).is_ok());

        let mut c = circuit.clone();
        if mutate_delete(&mut c, &mut rng).is_ok() {
            prop_assert_eq!(c.depth(), d - 1);
        } else {
            prop_assert_eq!(d, 0);
        }

        let mut c = circuit.clone();
        if mutate_modify(&mut c, &mut rng).is_ok() {
            prop_assert_eq!(c.depth(), d);
        }

        let mut c = circuit.clone();
        match mutate_swap(&mut c, &mut rng) {
            Ok(()) => {
                prop_assert_eq!(c.depth(), d);
                prop_assert_eq!(c.two_qubit_count(), circuit.two_qubit_count());
                prop_assert!(c.gates().iter().all(|g| g.control() != Some(g.target())));
            }
            Err(_) => prop_assert_eq!(circuit.two_qubit_count(), 0),
        }

        let mut c = circuit.clone();
        let op = mutate(&mut c, &MutationConfig::default(), &mut rng).unwrap();
        let expected = match op {
            Mutation::Insert => d + 1,
            Mutation::Delete => d - 1,
            Mutation::Modify | Mutation::Swap => d,
        };
        prop_assert_eq!(c.depth(), expected);
        prop_assert!(op.applicable(&circuit));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_is_elitist_and_nonnegative(seed in any::<u64>(), inst in 0u64..50) {
        let ham = synth_instance(2, 3, inst).unwrap().hamiltonian().unwrap();
        let config = EvolutionConfig { generations: 60, seed, ..EvolutionConfig::default() };
        let result = run_evolution(&ham, &config).unwrap();
        prop_assert_eq!(result.trace.len(), 61);
        for w in result.trace.windows(2) {
            prop_assert!(w[1].best_cost <= w[0].best_cost);
        }
        prop_assert!(result.trace.iter().all(|t| t.best_cost >= -1e-9));
        prop_assert_eq!(result.best.circuit.depth(), result.trace[60].depth);
    }
}

#[test]
fn basis_state_inverse_for_every_kind() {
    for kind in [GateKind::Rx, GateKind::Ry, GateKind::Rz] {
        let g = Gate::single(kind, 1, 0.77);
        let mut s = Statevector::basis(3, 0b101).unwrap();
        let before = s.clone();
        s.apply(&g).unwrap();
        s.apply(&g.inverse()).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
