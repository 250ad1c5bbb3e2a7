use lorentz_lab::renorm::*;
use lorentz_lab::renorm::Strategy;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_iteration(a in prop::collection::vec(-0.8f64..0.8, 4), x0 in prop::collection::vec(-1.0f64..1.0, 2), r in prop::collection::vec(-1.0f64..1.0, 60)) {
        let a = DMatrix::from_row_slice(2, 2, &a);
        let rs: Vec<DVector<f64>> = r.chunks(2).map(DVector::from_column_slice).collect();
        let sol = solve_linear_recurrence(&a, &DVector::from_vec(x0), &rs).unwrap();
        prop_assert!(sol.max_discrepancy <= 1e-12, "{}", sol.max_discrepancy);
    }

    #[test]
    fn majorant_dominates_every_strategy(nu in 0.01f64..0.49, sigma in 1.0f64..2.0, t in 0.1f64..100.0, c in 0.0f64..5.0, seed in any::<u64>()) {
        let p = CascadeParams::new(nu, sigma, t, c).unwrap();
        let rep = majorant_domination(&p, 1.0, 30, 240, seed).unwrap();
        prop_assert_eq!(rep.violations, 0, "worst {}", rep.worst_ratio);
    }

    #[test]
    fn lower_bound_persists_above_threshold(nu in 0.01f64..0.49, sigma in 1.0f64..2.0, c in 0.01f64..5.0, factor in 1.0001f64..10.0, seed in any::<u64>()) {
        let p = CascadeParams::new(nu, sigma, 1.0, c).unwrap();
        let rep = lower_bound_persistence(&p, 1.0, factor, 30, 240, seed).unwrap();
        prop_assert_eq!(rep.violations, 0, "min ratio {}", rep.min_ratio);
    }

    #[test]
    fn expansion_variant_has_its_own_majorant(nu in 0.01f64..0.49, sigma in 1.0f64..2.0, seed in any::<u64>()) {
        let p = CascadeParams::new(nu, sigma, 3.0, 1.0).unwrap().with_convention(Convention::Expansion);
        prop_assert!(p.multiplier(Branch::Plus) > 1.0);
        let rep = majorant_domination(&p, 1.0, 20, 120, seed).unwrap();
        prop_assert_eq!(rep.violations, 0);
    }
}

#[test]
fn saturating_exponents_recovered() {
    for nu in [0.1, 0.25, 0.4] {
        for sigma in [1.0, 1.5, 2.0] {
            let p = CascadeParams::new(nu, sigma, 10.0, 1.0).unwrap();
            let d = continuous_time_exponents(&p, 1.0, Strategy::Saturating, 40, 0).unwrap();
            assert!((d.fitted_plus - d.exponent_plus).abs() <= 0.05, "nu={nu} σ={sigma}: {}", d.fitted_plus);
            assert!((d.fitted_minus - d.exponent_minus).abs() <= 0.05);
        }
    }
}

#[test]
fn exponents_stable_under_refinement_and_step() {
    for nu in [0.1, 0.25, 0.4] {
        let fit = |sigma: f64, steps: usize| {
            let p = CascadeParams::new(nu, sigma, 10.0, 1.0).unwrap();
            continuous_time_exponents(&p, 1.0, Strategy::Alternating, steps, 0).unwrap()
        };
        let base = fit(1.5, 40);
        let fine = fit(1.5, 80);
        assert!((base.fitted_plus - fine.fitted_plus).abs() <= 0.02);
        assert!((base.fitted_minus - fine.fitted_minus).abs() <= 0.02);
        let sweep: Vec<f64> = [1.0, 1.5, 2.0].iter().map(|&s| fit(s, 40).fitted_plus).collect();
        let spread = sweep.iter().cloned().fold(f64::MIN, f64::max) - sweep.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 0.02, "nu={nu}: {sweep:?}");
    }
}

#[test]
fn small_nu_limit() {
    let p = CascadeParams::new(1e-4, 1.5, 10.0, 0.0).unwrap();
    let d = continuous_time_exponents(&p, 1.0, Strategy::Zero, 40, 0).unwrap();
    assert!((d.fitted_plus - 0.5).abs() <= 1e-3 && (d.fitted_minus - 0.5).abs() <= 1e-3);
}

#[test]
fn narrow_grid_rejected() {
    let p = CascadeParams::new(0.25, 1.0, 10.0, 1.0).unwrap();
    assert!(continuous_time_exponents(&p, 1.0, Strategy::Zero, 8, 0).is_err());
}

#[test]
fn alternating_cascade_stays_within_majorant() {
    let p = CascadeParams::new(0.25, 1.5, 10.0, 1.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let traj = simulate_cascade(&p, 0.7, -0.7, Strategy::Alternating, 40, &mut rng).unwrap();
    for s in &traj {
        assert!(s.c_plus.abs() <= coefficient_upper_bound(&p, Branch::Plus, 0.7, s.l).unwrap() * (1.0 + 1e-12));
        assert!(s.c_minus.abs() <= coefficient_upper_bound(&p, Branch::Minus, 0.7, s.l).unwrap() * (1.0 + 1e-12));
        assert!(s.remainder_bound >= 0.0);
    }
}

#[test]
fn lower_bound_formula_holds_on_opposing_cascades() {
    let p = CascadeParams::new(0.25, 1.5, 50.0, 1.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let traj = simulate_cascade(&p, 1.0, 1.0, Strategy::Opposing, 40, &mut rng).unwrap();
    for s in &traj {
        assert!(s.c_plus.abs() >= coefficient_lower_bound(&p, Branch::Plus, 1.0, s.l).unwrap() * (1.0 - 1e-12));
        assert!(s.c_minus.abs() >= coefficient_lower_bound(&p, Branch::Minus, 1.0, s.l).unwrap() * (1.0 - 1e-12));
    }
}

#[test]
fn ensemble_shape() {
    let p = CascadeParams::new(0.25, 1.5, 50.0, 1.0).unwrap();
    // initial L²-mass bounded below: half the ensemble at size ≥ 1
    let c0s: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { 1.0 + (i % 7) as f64 * 0.1 } else { 0.05 }).collect();
    let fin = ensemble_final(&p, &c0s, Strategy::Uniform, 30, 4).unwrap();
    let r = averaged_distribution_shape(&fin, 3.0, 0.4, 0.5).unwrap();
    assert!(r.bounded && r.floor_ok, "{r:?}");
    // a sparse spike ensemble fails the mass floor
    let mut spike = vec![0.0; 1000];
    spike[0] = 1.0;
    assert!(!averaged_distribution_shape(&spike, 1e3, 0.4, 0.5).unwrap().floor_ok);
}

#[test]
fn strategies_parse() {
    for s in Strategy::ALL {
        assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
    }
    assert!("bogus".parse::<Strategy>().is_err());
}
