use lorentz_lab::timechange::*;
use proptest::prelude::*;

fn torus() -> TorusFlow {
    TorusFlow { alpha: vec![1.0, 2f64.sqrt()] }
}

fn tau_from(a1: f64, a2: f64, p1: f64, p2: f64) -> TrigPoly {
    TrigPoly {
        constant: 1.0,
        terms: vec![TrigTerm { amp: a1, k: vec![1, 0], phase: p1 }, TrigTerm { amp: a2, k: vec![1, -1], phase: p2 }],
    }
}

fn transfer() -> TrigPoly {
    TrigPoly { constant: 0.0, terms: vec![TrigTerm { amp: 0.02, k: vec![1, 1], phase: 0.3 }] }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn xi_is_bilipschitz_and_inverted_by_z(
        a1 in 0.0f64..0.4, a2 in 0.0f64..0.4, p1 in 0.0f64..6.3, p2 in 0.0f64..6.3,
        x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, t in -50.0f64..50.0, dt in 0.01f64..20.0,
    ) {
        let flow = torus();
        let tc = TimeChange::normalized_trig(tau_from(a1, a2, p1, p2)).unwrap();
        let x = [x0, x1];
        let (xa, xb) = (cocycle_xi(&tc, &flow, &x, t).unwrap(), cocycle_xi(&tc, &flow, &x, t + dt).unwrap());
        prop_assert!(xb - xa >= tc.inf * dt * (1.0 - 1e-9));
        prop_assert!(xb - xa <= tc.sup * dt * (1.0 + 1e-9));
        prop_assert!((inverse_z(&tc, &flow, &x, xa).unwrap() - t).abs() <= 1e-8 * t.abs().max(1.0));
        let z = inverse_z(&tc, &flow, &x, t).unwrap();
        prop_assert!((cocycle_xi(&tc, &flow, &x, z).unwrap() - t).abs() <= 1e-8 * t.abs().max(1.0));
    }

    #[test]
    fn cocycle_identity(x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, t in -30.0f64..30.0, s in -30.0f64..30.0) {
        let flow = torus();
        let tc = TimeChange::normalized_trig(tau_from(0.3, 0.2, 0.1, 2.0)).unwrap();
        let x = [x0, x1];
        let lhs = cocycle_xi(&tc, &flow, &x, t + s).unwrap();
        let rhs = cocycle_xi(&tc, &flow, &x, t).unwrap() + cocycle_xi(&tc, &flow, &flow.evolve(&x, t), s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (t.abs() + s.abs()).max(1.0));
    }

    #[test]
    fn time_changed_flow_is_a_flow(x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, t in 0.0f64..20.0, s in 0.0f64..20.0) {
        let flow = torus();
        let tc = TimeChange::normalized_trig(tau_from(0.3, 0.2, 0.1, 2.0)).unwrap();
        let x = [x0, x1];
        let a = time_changed_evolve(&tc, &flow, &time_changed_evolve(&tc, &flow, &x, t).unwrap(), s).unwrap();
        let b = time_changed_evolve(&tc, &flow, &x, t + s).unwrap();
        prop_assert!(flow.distance(&a, &b) <= 1e-8);
    }
}

#[test]
fn constant_time_changes() {
    let flow = torus();
    let x = [0.2, 0.9];
    let tc = TimeChange::constant(2.0).unwrap();
    for t in [0.5, 3.0, -7.0] {
        assert!((inverse_z(&tc, &flow, &x, t).unwrap() - t / 2.0).abs() <= 1e-12);
    }
    // mean-1 normalization of τ ≡ 2 gives the identity time change
    let n = TimeChange::normalized_trig(TrigPoly::constant(2.0)).unwrap();
    assert!((inverse_z(&n, &flow, &x, 5.0).unwrap() - 5.0).abs() <= 1e-12);
    assert!(TimeChange::constant(0.0).is_err());
    assert!(TimeChange::normalized_trig(TrigPoly::constant(-1.0)).is_err());
}

#[test]
fn cohomologous_pair_is_conjugate_over_long_times() {
    let flow = torus();
    let tau1 = tau_from(0.3, 0.2, 0.2, -0.4);
    let f = transfer();
    let tau2 = cohomologous_partner(&tau1, &f, &flow).unwrap();
    let (tc1, tc2) = (TimeChange::unnormalized_trig(tau1).unwrap(), TimeChange::unnormalized_trig(tau2).unwrap());
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 100.0).collect();
    for x in [[0.3, 0.1], [0.71, 0.42]] {
        let d = conjugacy_defect(&tc1, &tc2, &Observable::Trig(f.clone()), &flow, &x, &grid).unwrap();
        let worst = d.iter().map(|r| r.state_distance.max(r.clock_defect.abs())).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "defect {worst}");
    }
}

#[test]
fn mismatched_pair_drifts_at_mean_gap() {
    let flow = torus();
    let tau1 = tau_from(0.3, 0.2, 0.2, -0.4);
    for gap in [0.1, 0.3] {
        let tc1 = TimeChange::unnormalized_trig(tau1.clone()).unwrap();
        let tc2 = TimeChange::unnormalized_trig(tau1.add(&TrigPoly::constant(gap))).unwrap();
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 5.0).collect();
        let d = conjugacy_defect(&tc1, &tc2, &Observable::Trig(transfer()), &flow, &[0.3, 0.1], &grid).unwrap();
        let fit = drift_slope(&d).unwrap();
        assert!((fit.slope - gap).abs() <= 0.1 * gap, "slope {} vs gap {gap}", fit.slope);
    }
}

#[test]
fn coboundary_solution_solves_the_equation() {
    let flow = torus();
    let g = tau_from(0.3, 0.2, 0.2, -0.4);
    let h = g.coboundary_solution(&flow.alpha).unwrap();
    // h(φ_T x) − h(x) = ∫₀ᵀ (g − ∫g)(φ_t x) dt
    let x = [0.4, 0.6];
    let gc = Observable::Trig(g.add(&TrigPoly::constant(-g.mean())));
    for t_end in [1.0, 10.0, 77.0] {
        let integral = ergodic_average(&gc, &flow, &x, t_end).unwrap() * t_end;
        let diff = h.eval(&flow.evolve(&x, t_end)) - h.eval(&x);
        assert!((integral - diff).abs() <= 1e-9, "{integral} vs {diff}");
    }
    let resonant = TrigPoly { constant: 0.0, terms: vec![TrigTerm { amp: 1.0, k: vec![0, 0], phase: 0.0 }] };
    assert!(resonant.coboundary_solution(&flow.alpha).unwrap().terms.is_empty());
    let rational = TrigPoly { constant: 0.0, terms: vec![TrigTerm { amp: 1.0, k: vec![1, -1], phase: 0.0 }] };
    assert!(rational.coboundary_solution(&[1.0, 1.0]).is_err());
}

#[test]
fn time_changed_average_converges_to_weighted_mean() {
    let flow = torus();
    let tau = tau_from(0.3, 0.2, 0.2, -0.4);
    let tc = TimeChange::unnormalized_trig(tau.clone()).unwrap();
    let f = TrigPoly { constant: 0.5, terms: vec![TrigTerm { amp: 1.0, k: vec![1, 0], phase: 0.2 }] };
    // ∫ f τ / ∫ τ = (0.5 + ½·1·0.3·cos(0)) / 1 for the shared (1,0) mode
    let want = 0.5 + 0.5 * 0.3;
    let got = time_changed_average(&tc, &Observable::Trig(f), &flow, &[0.1, 0.2], 2000.0).unwrap();
    assert!((got - want).abs() <= 5e-3, "{got} vs {want}");
}

#[test]
fn random_speed_rotation_decays_at_known_rate() {
    let flow = RandomSpeedRotation { kappa: 0.5, d: 1 };
    let alpha = Observable::custom(|x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).cos());
    let grid: Vec<f64> = (0..10).map(|i| 10f64.powf(0.3 + i as f64 * 0.15)).collect();
    let fit = correlation_decay_fit(&alpha, &flow, &grid, 100_000, 9).unwrap();
    assert_eq!(fit.verdict, DecayVerdict::Decaying);
    let sigma = fit.sigma_fit.unwrap();
    assert!((sigma - flow.known_rate()).abs() <= 0.1, "rate {sigma}");
    for (t, c) in &fit.points {
        assert!((c - flow.exact_correlation(*t).abs()).abs() <= 0.01, "t={t}");
    }
}

#[test]
fn quasi_periodic_and_constant_observables_do_not_decay() {
    let flow = torus();
    let a = Observable::Trig(TrigPoly { constant: 0.0, terms: vec![TrigTerm { amp: 1.0, k: vec![1, 0], phase: 0.0 }] });
    let grid: Vec<f64> = (0..10).map(|i| 10f64.powf(0.3 + i as f64 * 0.15)).collect();
    assert_eq!(correlation_decay_fit(&a, &flow, &grid, 20_000, 1).unwrap().verdict, DecayVerdict::NoDecay);
    let c = Observable::Trig(TrigPoly::constant(3.0));
    assert_eq!(correlation_decay_fit(&c, &flow, &grid, 1000, 1).unwrap().verdict, DecayVerdict::Constant);
}

#[test]
fn equiboundedness_verdicts() {
    let flow = torus();
    let grid: Vec<f64> = (0..6).map(|i| 10f64.powf(1.0 + i as f64 * 0.5)).collect();
    let f = transfer();
    let cob = Observable::Trig(f.derivative_along(&flow.alpha));
    let r = gh_equibounded_test(&cob, &flow, 48, &grid, Some(2.0 * 2.0 * f.l2_norm()), 3).unwrap();
    assert_eq!(r.verdict, GhVerdict::CoboundaryConsistent);
    let lin = Observable::Trig(TrigPoly { constant: 0.3, terms: transfer().terms });
    assert_eq!(gh_equibounded_test(&lin, &flow, 16, &grid, None, 3).unwrap().verdict, GhVerdict::LinearGrowth);
    let (sd_flow, g) = small_divisor_observable(8);
    let r = gh_equibounded_test(&Observable::Trig(g), &sd_flow, 48, &grid, None, 3).unwrap();
    assert_eq!(r.verdict, GhVerdict::Inconclusive, "exponent {:?}", r.growth_exponent);
}
