use lorentz_lab::liealg::GroupElement;
use lorentz_lab::shearing::*;
use proptest::prelude::*;
use rand::SeedableRng;

fn assert_ordered_disjoint(f: &IntervalFamily) -> Result<(), TestCaseError> {
    for &(a, b) in &f.intervals {
        prop_assert!(a <= b);
    }
    for w in f.intervals.windows(2) {
        prop_assert!(w[0].1 < w[1].0, "overlap {:?}", w);
    }
    Ok(())
}

fn coeff() -> impl Strategy<Value = f64> {
    (-8.0f64..3.0, any::<bool>()).prop_map(|(e, s)| if s { 10f64.powf(e) } else { -(10f64.powf(e)) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sublevel_sets_are_stable_and_correct(v0 in -0.01f64..0.01, v1 in coeff(), v2 in coeff()) {
        let p = [v0, v1, v2];
        let (eps, eta, c) = (0.01, 0.5, 1.0);
        let f = power_sublevel_intervals_with_density(&p, eps, eta, c, 400).unwrap();
        let g = power_sublevel_intervals_with_density(&p, eps, eta, c, 800).unwrap();
        assert_ordered_disjoint(&f)?;
        prop_assert_eq!(f.len(), g.len());
        for (a, b) in f.intervals.iter().zip(&g.intervals) {
            for (x, y) in [(a.0, b.0), (a.1, b.1)] {
                if x.is_finite() || y.is_finite() {
                    prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "drift {} vs {}", x, y);
                }
            }
        }
        // trajectory oracle: membership at sample points away from endpoints
        let inside = |t: f64| (v0 + v1 * t + v2 * t * t).abs() <= c * eps.max(t.powf(1.0 - eta));
        for i in 0..400 {
            let t = 10f64.powf(-6.0 + 14.0 * i as f64 / 400.0);
            let near = f.intervals.iter().any(|&(a, b)| (t - a).abs() <= 1e-9 * t.max(1.0) || (t - b).abs() <= 1e-9 * t.max(1.0));
            if !near && t <= f.intervals.last().map_or(f64::INFINITY, |iv| if iv.1.is_finite() { 1e300 } else { f64::INFINITY }) {
                prop_assert_eq!(f.contains(t), inside(t), "t = {}", t);
            }
        }
    }

    #[test]
    fn random_partitions_satisfy_hypotheses_and_never_refute(seed in any::<u64>(), log_lambda in 0.5f64..6.0) {
        let lambda = 10f64.powf(log_lambda);
        let rho = 0.1;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (good, bad) = random_partition(lambda, rho, &mut rng);
        for &(a, b) in &bad.intervals {
            prop_assert!(b - a >= 1.0 - 1e-9);
        }
        for &(a, b) in &good.intervals {
            prop_assert!(b - a <= 0.75 * lambda);
        }
        for (i, gi) in good.intervals.iter().enumerate() {
            for gj in &good.intervals[i + 1..] {
                prop_assert!(effective_gap(*gi, *gj, rho).unwrap());
            }
        }
        let out = large_interval_search(&good, &bad, lambda, rho).unwrap();
        let is_counterexample = matches!(out, SearchOutcome::Counterexample { .. });
        prop_assert!(!is_counterexample);
    }

    #[test]
    fn effective_gap_is_symmetric(a in 0.0f64..100.0, la in 0.0f64..10.0, d in 0.0f64..50.0, lb in 0.0f64..10.0) {
        let i = (a, a + la);
        let j = (a + la + d, a + la + d + lb);
        prop_assert_eq!(effective_gap(i, j, 0.2).unwrap(), effective_gap(j, i, 0.2).unwrap());
    }

    #[test]
    fn merge_is_idempotent(cuts in prop::collection::vec(0.1f64..20.0, 2..30)) {
        let params = ShearingParams::new(0.5, 0.1, 0.01, 2.0).unwrap();
        let mut t = 0.0;
        let mut blocks = Vec::new();
        for (i, c) in cuts.iter().enumerate() {
            let start = t;
            t += c;
            if i % 2 == 0 {
                blocks.push(EpsilonBlock {
                    s_start: start,
                    s_end: t,
                    gx: GroupElement::identity(3),
                    gy: GroupElement::identity(3),
                    time_map: vec![(start, start), (t, t)],
                });
            }
        }
        let once = merge_blocks(&blocks, &params).unwrap();
        let twice = merge_blocks(&once, &params).unwrap();
        let a: Vec<_> = once.iter().map(|b| b.interval()).collect();
        let b: Vec<_> = twice.iter().map(|b| b.interval()).collect();
        prop_assert_eq!(a, b);
        for w in once.windows(2) {
            prop_assert!(effective_gap(w[0].interval(), w[1].interval(), params.gap_exponent).unwrap());
        }
    }
}

#[test]
fn vandermonde_certificate_holds() {
    let r = vandermonde_certificate(2000, 2, 0.5, 0.01, 1.0, 11).unwrap();
    assert!(r.checked > 1000);
    assert_eq!(r.violations, 0, "worst ratio {}", r.worst_ratio);
}

#[test]
fn cantor_partition_is_silent_not_refuting() {
    let (good, bad) = cantor_adversarial(1e4, 0.1);
    let out = large_interval_search(&good, &bad, 1e4, 0.1).unwrap();
    assert!(matches!(out, SearchOutcome::BadMeasureLarge { .. }), "{out:?}");
}

#[test]
fn holder_time_map_passes_its_own_check() {
    let tm = TimeMap::Holder { alpha: 0.5, eta: 0.5 };
    let s: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
    let t: Vec<f64> = s.iter().map(|&x| tm.eval(x)).collect();
    assert!(holder_violation(&s, &t, 0.5, 1.0).is_none());
}

#[test]
fn shearing_experiment_meets_predicted_exponents() {
    let lambdas: Vec<f64> = (0..5).map(|i| 10f64.powf(3.0 + 0.5 * i as f64)).collect();
    let params = ShearingParams::new(0.5, 0.1, 0.01, 2.0).unwrap();
    for dir in [Direction::AMinusD, Direction::V0] {
        let r = shearing_experiment(3, dir, 1e-8, &lambdas, &TimeMap::Identity, &params).unwrap();
        assert_eq!(r.rows.len(), lambdas.len());
        assert_eq!(r.fits.len(), 1);
        assert!(r.fits[0].pass, "{:?}", r.fits[0]);
        // block ends sit past (3/4)λ, displacements shrink with λ
        for w in r.rows.windows(2) {
            assert!(w[1].delta < w[0].delta);
        }
        assert!(r.rows.iter().all(|row| row.s_lambda > 0.75 * row.lambda));
    }
    assert!(shearing_experiment(2, Direction::V0, 1e-8, &lambdas, &TimeMap::Identity, &params).is_err());
    assert!(shearing_experiment(3, Direction::B, 1e-8, &lambdas[..1], &TimeMap::Identity, &params).is_err());
}
