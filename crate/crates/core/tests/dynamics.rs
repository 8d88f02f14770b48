//! Structural properties of the semidiscrete system and the run loop.

use ks1d::functionals::{f_critical, f_general, mass};
use ks1d::grid::make_grid;
use ks1d::operators::{system_rhs_with, vt_field};
use ks1d::{DiffusionModel, Dynamics, FluxScheme, Forcing, RunStatus, Scenario, State};
use proptest::prelude::*;

fn positive_cells(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..50.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rhs_conserves_mass(
        u in positive_cells(24),
        v in positive_cells(24),
        p in 0.0f64..3.0,
        centered in any::<bool>(),
    ) {
        let g = make_grid::<f64>(24).unwrap();
        let m = DiffusionModel::with_exponent(p).unwrap();
        let flux = if centered { FluxScheme::Centered } else { FluxScheme::ExponentialFitting };
        let s = State::new(0.0, u, v);
        let (du, _) = system_rhs_with(&s, &m, &g, Dynamics::new(flux, Forcing::None)).unwrap();
        let scale: f64 = du.iter().map(|x| x.abs()).sum::<f64>() * g.dx();
        prop_assert!(g.integrate_cells(du).abs() <= 1e-13 * (1.0 + scale));
    }

    #[test]
    fn critical_forms_differ_by_mass_log_two(u in positive_cells(16), v in positive_cells(16)) {
        let g = make_grid::<f64>(16).unwrap();
        let m = DiffusionModel::critical();
        let s = State::new(0.0, u, v);
        let gap = f_general(&s, &m, &g).unwrap() - f_critical(&s, &m, &g).unwrap();
        let want = mass(&s.u, &g) * std::f64::consts::LN_2;
        prop_assert!((gap - want).abs() <= 1e-12 * (1.0 + want));
    }
}

#[test]
fn runs_are_deterministic() {
    let s = Scenario::critical_cosine(32, 0.05, 0.01);
    let a = s.run().unwrap();
    let b = s.run().unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.snapshots, b.snapshots);
}

#[test]
fn vt_matches_time_difference() {
    let s = Scenario::critical_cosine(64, 1e-4, 1e-4).run().unwrap();
    let g = make_grid::<f64>(64).unwrap();
    let start = Scenario::critical_cosine(64, 1e-4, 1e-4);
    let initial = ks1d::grid::make_initial_state(&g, &start.ic).unwrap();
    let vt0 = vt_field(&initial, &g).unwrap();
    let vt1 = vt_field(&s.final_state, &g).unwrap();
    let dt = s.final_state.t - initial.t;
    for i in 0..64 {
        let diff = (s.final_state.v[i] - initial.v[i]) / dt;
        let mid = 0.5 * (vt0[i] + vt1[i]);
        assert!((diff - mid).abs() < 1e-6 * (1.0 + mid.abs()), "cell {i}: {diff} vs {mid}");
    }
}

#[test]
fn terminal_sup_converges_at_second_order() {
    let sups: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| Scenario::critical_cosine(n, 0.1, 0.05).run().unwrap().final_state.sup_u())
        .collect();
    let order = ((sups[1] - sups[0]) / (sups[2] - sups[1])).log2();
    assert!(order > 1.8, "{sups:?} order {order}");
}

#[test]
fn mass_is_conserved_along_a_run() {
    let out = Scenario::critical_bump(64, 10.0f64, 0.2, 0.02).run().unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    for s in &out.snapshots {
        assert!((s.mass - 10.0).abs() <= 1e-12 * 10.0, "{}", s.mass);
    }
}

#[test]
fn single_precision_runs() {
    let out = Scenario::<f32>::critical_cosine(32, 0.02, 0.01).run().unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    let m = out.snapshots.last().unwrap().mass;
    assert!((m - 4.0).abs() < 1e-4);
}

#[test]
fn surrogate_escapes_before_its_ode_bound() {
    let s = Scenario::forced_growth(64, 2.0);
    let g = make_grid::<f64>(64).unwrap();
    let sup0 = ks1d::grid::make_initial_state(&g, &s.ic).unwrap().sup_u();
    let out = s.run().unwrap();
    assert_eq!(out.status, RunStatus::BlowupDetected);
    assert!(out.blowup_time_estimate.unwrap() <= 1.0 / sup0 + 1e-9);
}
