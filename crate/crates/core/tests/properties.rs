//! Randomized algebraic properties of the sequence algebra and solvers.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use voltasym::matseq::{convolve, inf_norm, spectral_radius, ztransform};
use voltasym::volterra::{
    neumann_representation, solve_forced, solve_resolvent, variation_of_constants,
    VolterraProblem,
};
use voltasym::MatSeq;

fn matseq_strategy(d: usize, len: usize, lo: f64, hi: f64) -> impl Strategy<Value = MatSeq> {
    prop::collection::vec(lo..hi, d * d * len).prop_map(move |vals| {
        let mut u = MatSeq::zeros(d, d, len);
        for n in 0..len {
            for i in 0..d {
                for j in 0..d {
                    u.set(n, i, j, vals[n * d * d + i * d + j]);
                }
            }
        }
        u
    })
}

fn max_diff(a: &MatSeq, b: &MatSeq) -> f64 {
    assert_eq!(a.len(), b.len());
    (0..a.len())
        .map(|n| (a.term_owned(n) - b.term_owned(n)).abs().max())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_is_associative(
        u in matseq_strategy(2, 8, -1.0, 1.0),
        v in matseq_strategy(2, 8, -1.0, 1.0),
        w in matseq_strategy(2, 8, -1.0, 1.0),
    ) {
        let lhs = convolve(&convolve(&u, &v).unwrap(), &w).unwrap();
        let rhs = convolve(&u, &convolve(&v, &w).unwrap()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn convolution_distributes_over_addition(
        u in matseq_strategy(2, 8, -1.0, 1.0),
        v in matseq_strategy(2, 8, -1.0, 1.0),
        w in matseq_strategy(2, 8, -1.0, 1.0),
    ) {
        let lhs = convolve(&u, &v.add(&w).unwrap()).unwrap();
        let rhs = convolve(&u, &v).unwrap().add(&convolve(&u, &w).unwrap()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn ztransform_is_linear(
        u in matseq_strategy(2, 8, -1.0, 1.0),
        v in matseq_strategy(2, 8, -1.0, 1.0),
        z in 0.5f64..2.0,
        a in -2.0f64..2.0,
    ) {
        let (tu, _) = ztransform(&u, z).unwrap();
        let (tv, _) = ztransform(&v, z).unwrap();
        let (tsum, _) = ztransform(&u.scale(a).add(&v).unwrap(), z).unwrap();
        prop_assert!(inf_norm(&(tu * a + tv - tsum)) < 1e-9);
    }

    #[test]
    fn inf_norm_is_submultiplicative(
        a in prop::collection::vec(-2.0f64..2.0, 9),
        b in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let a = DMatrix::from_column_slice(3, 3, &a);
        let b = DMatrix::from_column_slice(3, 3, &b);
        prop_assert!(inf_norm(&(&a * &b)) <= inf_norm(&a) * inf_norm(&b) + 1e-12);
    }

    #[test]
    fn spectral_radius_bounded_by_norm_and_scales(
        a in prop::collection::vec(-1.0f64..1.0, 9),
        k in 0.1f64..3.0,
    ) {
        let a = DMatrix::from_column_slice(3, 3, &a);
        let rho = spectral_radius(&a, 1e-10).unwrap();
        prop_assert!(rho <= inf_norm(&a) + 1e-8);
        let rho_scaled = spectral_radius(&(&a * k), 1e-10).unwrap();
        prop_assert!((rho_scaled - k * rho).abs() <= 1e-6 * (1.0 + k * rho));
    }

    #[test]
    fn nonnegative_kernel_gives_nonnegative_resolvent(
        u in matseq_strategy(2, 10, 0.0, 0.5),
    ) {
        let z = solve_resolvent(&u, 10).unwrap();
        prop_assert!(z.is_nonneg());
    }

    #[test]
    fn resolvent_commutes_with_kernel(
        u in matseq_strategy(2, 12, -0.6, 0.6),
    ) {
        // (U*Z)(n) = Z(n+1) = (Z*U)(n)
        let z = solve_resolvent(&u, 12).unwrap();
        let uz = convolve(&u, &z).unwrap();
        let zu = convolve(&z, &u).unwrap();
        for n in 0..11 {
            let znext = z.term_owned(n + 1);
            prop_assert!((uz.term_owned(n) - &znext).abs().max() < 1e-9);
            prop_assert!((zu.term_owned(n) - &znext).abs().max() < 1e-9);
        }
    }

    #[test]
    fn neumann_series_matches_resolvent(
        u in matseq_strategy(2, 10, -0.6, 0.6),
    ) {
        let z = solve_resolvent(&u, 10).unwrap();
        let zn = neumann_representation(&u, 10).unwrap();
        prop_assert!(max_diff(&z, &zn) < 1e-9);
    }

    #[test]
    fn forced_solution_matches_variation_of_constants(
        u in matseq_strategy(2, 10, -0.6, 0.6),
        f in matseq_strategy(2, 11, -1.0, 1.0),
        x0 in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        // forcing as a 2x1 sequence extracted from the first column
        let mut fv = MatSeq::zeros(2, 1, 11);
        for n in 0..11 {
            for i in 0..2 {
                fv.set(n, i, 0, f.get(n, i, 0));
            }
        }
        let x0 = DVector::from_column_slice(&x0);
        let p = VolterraProblem::new(u.clone(), fv.clone(), x0.clone()).unwrap();
        let x = solve_forced(&p, 10).unwrap();
        let z = solve_resolvent(&u, 10).unwrap();
        let y = variation_of_constants(&z, &fv, &x0).unwrap();
        prop_assert!(max_diff(&x, &y) < 1e-9);
    }
}
