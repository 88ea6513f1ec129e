//! Property-based invariants spanning modules.

use proptest::prelude::*;

use ucplab::domain::BoundaryCondition::{self, Dirichlet, Periodic};
use ucplab::domain::{CoefficientField, Domain, Grid, ScalarField};
use ucplab::geometry::{
    indicator, integrate_sq, make_arrangement, ArrangementMode, Weight,
};
use ucplab::observability::{klein_gamma, ratio, sfuc_bound, BoundParams};
use ucplab::operator::{build_elliptic, build_schrodinger};
use ucplab::shannon::{reconstruct, SamplingProblem};

fn bc_from(flag: bool) -> BoundaryCondition {
    if flag {
        Dirichlet
    } else {
        Periodic
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schrodinger_operator_is_symmetric(
        d in 1usize..=2,
        n in 4usize..=10,
        dirichlet in any::<bool>(),
        seed in 0u64..1000,
    ) {
        let domain = Domain::new(d, 2.0, bc_from(dirichlet)).unwrap();
        let grid = Grid::new(domain, n).unwrap();
        let v = ScalarField::random_uniform(grid, seed, 2.0).unwrap();
        let op = build_schrodinger(domain, n, &v).unwrap();
        let u = ScalarField::random_uniform(grid, seed + 1, 1.0).unwrap();
        let w = ScalarField::random_uniform(grid, seed + 2, 1.0).unwrap();
        let mu_w = op.apply(&u).unwrap().inner(&w).unwrap();
        let u_mw = op.apply(&w).unwrap().inner(&u).unwrap();
        let scale = mu_w.abs().max(u_mw.abs()).max(1.0);
        prop_assert!((mu_w - u_mw).abs() <= 1e-10 * scale);
    }

    #[test]
    fn elliptic_operator_is_symmetric(
        n in 4usize..=9,
        dirichlet in any::<bool>(),
        seed in 0u64..1000,
        off in -0.2f64..0.2,
    ) {
        let domain = Domain::new(2, 2.0, bc_from(dirichlet)).unwrap();
        let grid = Grid::new(domain, n).unwrap();
        let a = CoefficientField::from_fn(grid, |x| {
            let wobble = 0.2 * (3.0 * x[0]).sin() * (2.0 * x[1]).cos();
            vec![1.5 + wobble, off, off, 1.5 - wobble]
        }).unwrap();
        let v = ScalarField::random_uniform(grid, seed, 1.0).unwrap();
        let op = build_elliptic(domain, n, &a, &v).unwrap();
        prop_assert!(op.matrix().asymmetry() <= 1e-11);
        let u = ScalarField::random_uniform(grid, seed + 1, 1.0).unwrap();
        let w = ScalarField::random_uniform(grid, seed + 2, 1.0).unwrap();
        let mu_w = op.apply(&u).unwrap().inner(&w).unwrap();
        let u_mw = op.apply(&w).unwrap().inner(&u).unwrap();
        let scale = mu_w.abs().max(u_mw.abs()).max(1.0);
        prop_assert!((mu_w - u_mw).abs() <= 1e-10 * scale);
    }

    #[test]
    fn arrangements_always_satisfy_containment(
        delta in 0.05f64..0.45,
        amp_fraction in 0.0f64..1.0,
        seed in 0u64..500,
        l in 1.0f64..7.0,
    ) {
        let domain = Domain::new(1, l, Dirichlet).unwrap();
        let amplitude = amp_fraction * (0.5 - delta);
        let arr = make_arrangement(
            domain,
            delta,
            ArrangementMode::Jitter { seed, amplitude },
        ).unwrap();
        prop_assert!(arr.validate().is_ok());
    }

    #[test]
    fn masked_integral_monotone_in_radius(
        seed in 0u64..200,
        small in 0.05f64..0.2,
        grow in 0.01f64..0.25,
    ) {
        let domain = Domain::new(1, 3.0, Periodic).unwrap();
        let grid = Grid::new(domain, 120).unwrap();
        let f = ScalarField::random_uniform(grid, seed, 1.0).unwrap();
        let big = (small + grow).min(0.49);
        let arr_small = make_arrangement(domain, small, ArrangementMode::Periodic).unwrap();
        let arr_big = make_arrangement(domain, big, ArrangementMode::Periodic).unwrap();
        let ind_small = indicator(&arr_small, &grid).unwrap();
        let ind_big = indicator(&arr_big, &grid).unwrap();
        let lo = integrate_sq(&f, Weight::Masked(&ind_small)).unwrap();
        let hi = integrate_sq(&f, Weight::Masked(&ind_big)).unwrap();
        let whole = integrate_sq(&f, Weight::Whole).unwrap();
        prop_assert!(lo <= hi + 1e-12);
        prop_assert!(hi <= whole + 1e-12);
    }

    #[test]
    fn ratio_stays_in_unit_interval(
        seed in 0u64..300,
        delta in 0.05f64..0.45,
    ) {
        let domain = Domain::new(1, 3.0, Dirichlet).unwrap();
        let grid = Grid::new(domain, 90).unwrap();
        let f = ScalarField::random_uniform(grid, seed + 7, 1.0).unwrap();
        let arr = make_arrangement(domain, delta, ArrangementMode::Periodic).unwrap();
        let r = ratio(&f, &arr).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
    }

    #[test]
    fn s_case_is_odd(e in -40.0f64..40.0, y in -3.0f64..3.0) {
        let plus = ucplab::extension::s_case(e, y);
        let minus = ucplab::extension::s_case(e, -y);
        prop_assert!((plus + minus).abs() <= 1e-13 * plus.abs().max(1.0));
    }

    #[test]
    fn sampling_series_interpolates_nodes(
        j in -20i64..=20,
        k_band in 0.5f64..4.0,
        shift in -1.0f64..1.0,
    ) {
        let f = move |x: f64| (-(x - shift) * (x - shift)).exp();
        let problem = SamplingProblem::from_function(f, k_band, 40, None).unwrap();
        let x = j as f64 / k_band;
        let err = (reconstruct(&problem, x) - f(x)).abs();
        prop_assert!(err <= 1e-11, "node interpolation error {err}");
    }

    #[test]
    fn bound_formulas_monotone_in_delta(
        d1 in 0.02f64..0.45,
        shrink in 0.1f64..0.9,
        k in 0.0f64..2.0,
        e in 0.0f64..5.0,
    ) {
        let d2 = d1 * shrink;
        let params = BoundParams {
            potential_bound: k,
            energy: e,
            ..BoundParams::default()
        };
        prop_assert!(sfuc_bound(d2, &params).unwrap() < sfuc_bound(d1, &params).unwrap());
        prop_assert!(
            klein_gamma(d2, &params).unwrap().gamma < klein_gamma(d1, &params).unwrap().gamma
        );
    }

    #[test]
    fn exponent_fit_recovers_power_law(
        slope in -4.0f64..4.0,
        scale in 0.1f64..10.0,
    ) {
        let samples: Vec<(f64, f64)> = [0.1, 0.17, 0.26, 0.38, 0.45]
            .iter()
            .map(|&d: &f64| (d, scale * d.powf(slope)))
            .collect();
        let fit = ucplab::observability::fit_exponent(&samples).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-9);
        prop_assert!(fit.r2 > 1.0 - 1e-9);
    }
}
