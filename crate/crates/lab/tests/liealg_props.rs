use lorentz_lab::liealg::*;
use nalgebra::DVector;
use proptest::prelude::*;

fn element(n: usize, c: &[f64]) -> AlgebraElement {
    AlgebraElement::from_coords(n, &DVector::from_column_slice(&c[..dim(n)]))
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim(n))
}

proptest! {
    #[test]
    fn combinations_stay_in_algebra(n in 2usize..=6, seed in prop::collection::vec(-3.0f64..3.0, 21)) {
        let a = element(n, &seed);
        prop_assert!(algebra_residual(n, &a.mat) <= 1e-12);
    }

    #[test]
    fn jacobi_identity(a in coords(4), b in coords(4), c in coords(4)) {
        let (a, b, c) = (element(4, &a), element(4, &b), element(4, &c));
        let t1 = bracket(&bracket(&a, &b).unwrap(), &c).unwrap();
        let t2 = bracket(&bracket(&b, &c).unwrap(), &a).unwrap();
        let t3 = bracket(&bracket(&c, &a).unwrap(), &b).unwrap();
        prop_assert!(t1.add(&t2).add(&t3).norm() <= 1e-10);
    }

    #[test]
    fn exp_log_round_trip(v in coords(3), r in 0.001f64..0.1) {
        let a = element(3, &v);
        let a = a.scale(r / a.norm().max(1e-300));
        let back = log_principal(&exp_matrix(&a)).unwrap();
        prop_assert!(back.sub(&a).norm() <= 1e-9 * a.norm());
    }

    #[test]
    fn iwasawa_reconstructs_large_elements(v in coords(3), t in -7.0f64..7.0, s in -40.0f64..40.0) {
        // a compact rotation composed with a^t and u^s, restricted to ‖g‖ ≤ 1e6
        let k = exp_matrix(&element(3, &v).scale(0.5));
        let g = k.mul(&a_t(3, t)).mul(&u_t(3, s));
        prop_assume!(g.mat.norm() <= 1e6);
        let iw = iwasawa(&g).unwrap();
        prop_assert!(iw.residual <= 1e-10, "residual {}", iw.residual);
    }
}

#[test]
fn weight_strings_are_exact() {
    for n in 2..=6 {
        let wd = sl2_weight_decompose(n).unwrap();
        assert_eq!(wd.vperp_dim() + 3, dim(n));
        let (uu, yy) = (u(n), y_n(n));
        for comp in &wd.vperp_components {
            let vs = comp.varsigma;
            // ad(U)^{ς+1} v_0 = 0
            let mut v = comp.basis[0].clone();
            for _ in 0..=vs {
                v = bracket(&uu, &v).unwrap();
            }
            assert!(v.norm() <= 1e-10);
            // ad(Y_n) v_i = (ς/2 − i) v_i
            for (i, vi) in comp.basis.iter().enumerate() {
                let want = vs as f64 / 2.0 - i as f64;
                let got = bracket(&yy, vi).unwrap();
                assert!(got.sub(&vi.scale(want)).norm() <= 1e-10, "n={n} i={i}");
            }
        }
    }
}

#[test]
fn centralizer_matches_brute_force() {
    for n in 2..=6 {
        let basis = centralizer_basis(n).unwrap();
        assert_eq!(basis.len(), centralizer_dim_predicted(n));
        for z in &basis {
            assert!(bracket(&u(n), z).unwrap().norm() <= 1e-10);
        }
    }
}

#[test]
fn geodesic_renormalization_identity() {
    // a^t u^s a^{−t} = u^{s e^{−t}}
    for n in 2..=5 {
        for (t, s) in [(0.7, 2.0), (-1.3, 0.4), (3.0, -5.0)] {
            let lhs = a_t(n, t).mul(&u_t(n, s)).mul(&a_t(n, -t));
            let rhs = u_t(n, s * (-t as f64).exp());
            assert!((lhs.mat - rhs.mat).norm() <= 1e-10);
        }
    }
}
