mod common;

use common::{pauli_dense, small_circuit};
use pbc_core::circuit::{generate_random_family2, Circuit};
use pbc_core::engine::{run_seeded_shot, BackendKind, Case, SampleConfig};
use pbc_core::greedy::{
    brute_force_reduce, build_candidate, greedy_reduce, step_count, weight_histogram,
};
use pbc_core::incpbc::compile_incpbc;
use pbc_core::stats::{
    boxplot_csv, parse_boxplot_csv, parse_spread_csv, spread_csv, BoxplotRow, BoxplotSummary,
    ReductionRow, ReductionTable, Spread,
};
use pbc_core::{gadgetize, CliffordGate, Direction, GreedyConfig, Pauli, PauliOperator};
use proptest::prelude::*;

fn pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
    (prop::collection::vec(0u8..4, n), 0u8..4).prop_map(|(ls, ph)| {
        let letters: Vec<Pauli> =
            ls.iter().map(|l| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][*l as usize]).collect();
        PauliOperator::from_letters(&letters).with_phase_exp(ph)
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = PauliOperator> {
    pauli(n).prop_map(|p| {
        let ph = p.phase_exp() & 2;
        p.with_phase_exp(ph)
    })
}

fn gate(n: usize) -> impl Strategy<Value = CliffordGate> {
    (0..7u8, 0..n, 1..n).prop_map(move |(k, a, off)| {
        let b = (a + off) % n;
        match k {
            0 => CliffordGate::H(a),
            1 => CliffordGate::S(a),
            2 => CliffordGate::Sdg(a),
            3 => CliffordGate::X(a),
            4 => CliffordGate::Z(a),
            5 => CliffordGate::CX { control: a, target: b },
            _ => CliffordGate::CZ(a, b),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn multiply_is_associative_and_squares_to_scalar(p in pauli(9), q in pauli(9), r in pauli(9)) {
        prop_assert_eq!(p.multiply(&q).multiply(&r), p.multiply(&q.multiply(&r)));
        let pp = p.multiply(&p);
        prop_assert!(pp.is_identity());
        prop_assert_eq!(p.multiply(&p.multiply(&q)), pp.multiply(&q));
    }

    #[test]
    fn commutation_matches_product_order(p in pauli(70), q in pauli(70)) {
        prop_assert_eq!(p.commutes_with(&q), q.commutes_with(&p));
        let (pq, qp) = (p.multiply(&q), q.multiply(&p));
        if p.commutes_with(&q) {
            prop_assert_eq!(pq, qp);
        } else {
            prop_assert_eq!(pq, qp.negated());
        }
    }

    #[test]
    fn conjugation_round_trips_and_preserves_structure(
        p in hermitian(5), q in hermitian(5), gates in prop::collection::vec(gate(5), 1..12)
    ) {
        let mut a = p.clone();
        let mut b = q.clone();
        for g in &gates {
            a.conjugate_in_place(g, Direction::Backward);
            b.conjugate_in_place(g, Direction::Backward);
        }
        prop_assert!(a.is_hermitian());
        prop_assert_eq!(a.commutes_with(&b), p.commutes_with(&q));
        for g in gates.iter().rev() {
            a.conjugate_in_place(g, Direction::Forward);
        }
        prop_assert_eq!(a, p);
    }

    #[test]
    fn text_form_round_trips(p in pauli(12)) {
        prop_assert_eq!(PauliOperator::parse(&p.to_string(), 12).unwrap(), p);
    }

    #[test]
    fn single_qubit_conjugation_preserves_weight(p in pauli(4), g in gate(4)) {
        prop_assume!(!g.is_two_qubit());
        prop_assert_eq!(p.conjugate_by_gate(&g, Direction::Forward).weight(), p.weight());
    }

    #[test]
    fn dense_matrix_of_product(p in pauli(2), q in pauli(2)) {
        prop_assert!(pauli_dense(&p.multiply(&q)).approx_eq(&pauli_dense(&p).mul(&pauli_dense(&q))));
    }

    #[test]
    fn greedy_candidate_is_a_signed_product(
        lp in prop::collection::vec(hermitian(10), 0..8),
        signs in prop::collection::vec(any::<bool>(), 8),
        p_r in hermitian(10),
        go in 0usize..4,
    ) {
        let ls = &signs[..lp.len()];
        let res = greedy_reduce(&lp, ls, &p_r, go).unwrap();
        prop_assert_eq!(&res.operator, &build_candidate(&lp, ls, &p_r, &res.subset));
        prop_assert_eq!(res.weight, res.operator.weight());
        prop_assert!(res.weight <= p_r.weight());
        prop_assert_eq!(res.visits as u128, step_count(lp.len() + 1, go));
        prop_assert!(res.distinct <= res.visits);
        let brute = brute_force_reduce(&lp, ls, &p_r).unwrap();
        prop_assert!(brute.weight <= res.weight);
        let h = weight_histogram(&lp, ls, &p_r, go).unwrap();
        prop_assert_eq!(h.total() as u128, step_count(lp.len() + 1, go));
        if go + 1 >= lp.len() {
            prop_assert_eq!(brute.weight, res.weight);
        }
    }

    #[test]
    fn circuits_round_trip_through_text(seed in 0u64..1000, n in 1usize..5, t in 0usize..5) {
        let c = small_circuit(n, t, 2, 6, seed);
        prop_assert_eq!(Circuit::parse(&c.serialize()).unwrap(), c.clone());
        let ac = gadgetize(&c);
        prop_assert_eq!(ac.circuit.t_count(), 0);
        prop_assert_eq!(ac.magic_count, c.t_count());
    }

    #[test]
    fn quantum_steps_commute_and_stay_below_t(seed in 0u64..500, n in 2usize..6, t in 1usize..10, go in 0usize..3) {
        let ac = gadgetize(&generate_random_family2(n, t, seed));
        let cfg = SampleConfig {
            shots: 1,
            seed,
            backend: BackendKind::Dummy,
            greedy: GreedyConfig::structured(go),
            ..SampleConfig::default()
        };
        let prog = run_seeded_shot(&ac, None, &cfg, 0).unwrap();
        let q: Vec<_> = prog.quantum_steps().collect();
        prop_assert!(q.len() <= t);
        for (i, a) in q.iter().enumerate() {
            prop_assert!(a.weight <= a.original_weight && a.original_weight <= t);
            prop_assert!(a.pauli_magic.is_hermitian());
            for b in &q[i + 1..] {
                prop_assert!(a.pauli_magic.commutes_with(&b.pauli_magic));
            }
        }
        prop_assert!(prog.steps.iter().all(|s| s.case != Case::Dependent || s.subset.iter().all(|j| *j < s.id)));
        prop_assert!(prog.stats.d_pbc <= prog.stats.d_pbc_conservative);
    }

    #[test]
    fn incpbc_invariants(seed in 0u64..1000, n in 1usize..6, t in 0usize..6, c2 in 0usize..6) {
        let c = small_circuit(n, t, c2, 10, seed);
        let m = c.metrics();
        let prog = compile_incpbc(&c).unwrap();
        prop_assert_eq!(prog.measurement_count, m.w + 2 * m.t + 3 * m.c2);
        prop_assert!(prog.weights().iter().all(|w| (1..=2).contains(w)));
        prop_assert!(prog.max_live <= 2 * n && prog.slots <= 2 * n);
        prop_assert!(prog.depth <= 3 * m.d_l);
    }

    #[test]
    fn boxplot_invariants(values in prop::collection::vec(-50.0f64..50.0, 1..60)) {
        let b = BoxplotSummary::new(&values).unwrap();
        let (lo, hi) = (b.q1 - 1.5 * (b.q3 - b.q1), b.q3 + 1.5 * (b.q3 - b.q1));
        prop_assert!(b.q1 <= b.median && b.median <= b.q3);
        prop_assert!(b.whisker_low >= lo && b.whisker_high <= hi);
        prop_assert!(b.outliers.iter().all(|x| *x < lo || *x > hi));
        prop_assert_eq!(b.outliers.len() + values.iter().filter(|x| **x >= lo && **x <= hi).count(), values.len());
        let csv = boxplot_csv(&[BoxplotRow { t: 3, summary: b }], None);
        let again = boxplot_csv(&parse_boxplot_csv(&csv).unwrap(), None);
        prop_assert_eq!(csv, again);
    }

    #[test]
    fn spread_and_reduction_tables_round_trip(
        values in prop::collection::vec(0.0f64..20.0, 2..30),
        orig in 0.5f64..20.0,
        cuts in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let s = Spread::new(5, 2, &values);
        prop_assert!(s.lower() <= s.mean && s.mean <= s.upper());
        let back = parse_spread_csv(&spread_csv(std::slice::from_ref(&s), None)).unwrap();
        prop_assert_eq!((back[0].t, back[0].go, back[0].count), (s.t, s.go, s.count));
        prop_assert!((back[0].mean - s.mean).abs() < 1e-6 && (back[0].std - s.std).abs() < 1e-6);
        let row = ReductionRow {
            circuit: "c".into(),
            original: orig,
            weights: cuts.iter().map(|c| orig * (1.0 - c)).collect(),
        };
        let table = ReductionTable { orders: vec![0, 1, 2], rows: vec![row] };
        let parsed = ReductionTable::parse_csv(&table.to_csv(None)).unwrap();
        for k in 0..3 {
            prop_assert!((parsed.rows[0].delta_pct(k) - 100.0 * cuts[k]).abs() < 0.01);
        }
    }
}
