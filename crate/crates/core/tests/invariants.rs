use proptest::prelude::*;

use piezo_core::analysis::{
    assemble_closed_loop, spectral_abscissa, sweep, SweepRow, SweepVariable,
};
use piezo_core::sim::{coupled_rhs, ClosedLoop};
use piezo_core::{
    simulate, step_metrics, BeamParameters, ControllerFamily, ControllerSpec, Scenario,
};

fn family() -> impl Strategy<Value = ControllerFamily> {
    prop_oneof![
        Just(ControllerFamily::OutputShaping),
        Just(ControllerFamily::InputShaping)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn positive_raw_gains_are_spectrally_stable(
        fam in family(),
        kp in 1e-3f64..10.0,
        ki in 1e-3f64..10.0,
        n in 2usize..24,
    ) {
        let mut sc = Scenario::paper(ControllerSpec::raw(fam, kp, ki));
        sc.n = n;
        let s = spectral_abscissa(&assemble_closed_loop(&sc).unwrap()).unwrap();
        prop_assert!(s <= 1e-9, "abscissa {s}");
    }

    #[test]
    fn affine_map_matches_vector_field(
        fam in family(),
        kp in 0.0f64..5.0,
        ki in 0.0f64..5.0,
        reference_on: bool,
        x in prop::collection::vec(-3.0f64..3.0, 17),
    ) {
        let spec = match fam {
            ControllerFamily::InputShaping => ControllerSpec::input_shaping_bar(ki, kp, reference_on),
            _ => ControllerSpec::output_shaping_bar(ki, kp, reference_on),
        };
        let mut sc = Scenario::paper(spec);
        sc.n = 8;
        let a = assemble_closed_loop(&sc).unwrap().apply(&x);
        let b = coupled_rhs(&x, &sc).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn closed_loop_storage_never_increases(
        fam in family(),
        kp in 0.05f64..3.0,
        ki in 0.05f64..3.0,
    ) {
        let mut sc = Scenario::paper(ControllerSpec::raw(fam, kp, ki));
        sc.n = 8;
        sc.t_end = 2.0;
        sc.record_every = 10;
        let run = simulate(&sc).unwrap();
        let top = run.s_d.iter().copied().fold(0.0, f64::max);
        for w in run.s_d.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * top);
        }
    }

    #[test]
    fn metric_invariants(
        samples in prop::collection::vec(-0.5f64..2.0, 2..200),
        target in prop_oneof![0.5f64..3.0, -3.0f64..-0.5],
    ) {
        let t: Vec<f64> = (0..samples.len()).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = samples.iter().map(|v| v * target).collect();
        let m = step_metrics(&t, &y, target);
        prop_assert!(m.overshoot_pct.unwrap() >= 0.0);
        prop_assert!(m.steady_state_error_pct.unwrap() >= 0.0);
        if let (Some(r), Some(s)) = (m.rise_time_10_90, m.settling_time_2pct) {
            prop_assert!(s >= r - 1e-12, "settling {s} < rise {r}");
        }
    }

    #[test]
    fn equilibrium_state_is_fixed(
        fam in family(),
        kp in 0.01f64..5.0,
        ki in 0.01f64..5.0,
        target in -3.0f64..3.0,
    ) {
        let mut sc = Scenario::paper(ControllerSpec::raw(fam, kp, ki));
        sc.strain_target = target;
        let sys = ClosedLoop::new(&sc).unwrap();
        let dx = coupled_rhs(&sys.equilibrium_state(), &sc).unwrap();
        prop_assert!(dx.iter().all(|v| v.abs() <= 1e-12 * (1.0 + target.abs())));
    }
}

#[test]
fn sweep_is_order_deterministic() {
    let mut base = Scenario::paper(ControllerSpec::constant(None));
    base.t_end = 0.5;
    let rows = vec![
        SweepRow {
            label: "a".into(),
            family: ControllerFamily::OutputShaping,
            fixed: 0.3,
            variable: SweepVariable::Kp,
            values: vec![0.0, 0.5, 1.0, 2.0],
            reference_on: true,
        },
        SweepRow {
            label: "b".into(),
            family: ControllerFamily::InputShaping,
            fixed: 0.5,
            variable: SweepVariable::Kp,
            values: vec![0.2, 1.0],
            reference_on: false,
        },
    ];
    let first = sweep(&base, &rows);
    let second = sweep(&base, &rows);
    assert_eq!(first, second);
    let keys: Vec<(String, f64)> = first.iter().map(|c| (c.row.clone(), c.gain)).collect();
    assert_eq!(keys[0], ("a".to_string(), 0.0));
    assert_eq!(keys[5], ("b".to_string(), 1.0));
}

#[test]
fn mesh_refinement_keeps_the_limit() {
    use piezo_core::analysis::convergence_study;
    let mut sc = Scenario::paper(ControllerSpec::output_shaping_bar(0.5, 1.35, true));
    sc.t_end = 8.0;
    let rows = convergence_study(&sc, &[8, 16, 32]).unwrap();
    let p = BeamParameters::PAPER;
    let limit = p.stiffness / (p.stiffness + 0.5 * p.ell);
    for r in &rows {
        assert!(
            (r.limit_strain - limit).abs() < 1e-10,
            "N = {}: {}",
            r.n,
            r.limit_strain
        );
    }
    sc.controller = ControllerSpec::input_shaping_bar(0.45, 1.4, true);
    let rows = convergence_study(&sc, &[8, 16, 32]).unwrap();
    assert!(rows.iter().all(|r| r.limit_error_pct < 1e-10));
    let d: Vec<f64> = rows.iter().filter_map(|r| r.rise_delta).collect();
    assert_eq!(d.len(), 2);
    assert!(d[1] < d[0], "{d:?}");
}
