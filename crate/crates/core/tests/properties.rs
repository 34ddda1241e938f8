use nalgebra::DVector;
use proptest::prelude::*;

use robinv_core::constraints::{ConsumptionBand, ExposureSet};
use robinv_core::detsolve::{solve_curves, TimeGrid};
use robinv_core::market::AmbiguityProfile;
use robinv_core::scenarios::reference_problem;
use robinv_core::strategy::{no_short_sale_strategy, optimal_distortion, optimal_exposure};

fn vector(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-10.0..10.0f64, dim).prop_map(DVector::from_vec)
}

fn scale(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(1.0..6.0f64, dim).prop_map(DVector::from_vec)
}

proptest! {
    #[test]
    fn cones_are_scale_invariant(d in scale(4)) {
        for set in [ExposureSet::FullSpace, ExposureSet::NonnegativeOrthant] {
            prop_assert_eq!(set.scale(&d).unwrap(), set);
        }
    }

    #[test]
    fn scaled_box_membership(v in vector(3), d in scale(3)) {
        let set = ExposureSet::boxed(vec![-1.0, 0.0, 0.5], vec![1.0, 2.0, 0.75]);
        let scaled = set.scale(&d).unwrap();
        let image = v.component_mul(&d.map(f64::sqrt));
        prop_assert_eq!(set.contains(&v, 0.0), scaled.contains(&image, 1e-12));
    }

    #[test]
    fn distance_matches_residual(v in vector(5)) {
        for set in [ExposureSet::FullSpace, ExposureSet::NonnegativeOrthant] {
            let p = set.project(&v);
            prop_assert!((set.distance_sq(&v) - (&v - &p).norm_squared()).abs() <= 1e-12);
            prop_assert!(set.contains(&p, 0.0));
        }
    }

    #[test]
    fn band_clamps_into_range(lower in 0.0..1.0f64, width in 0.01..5.0f64, raw in -5.0..20.0f64, y in 0.01..50.0f64) {
        let band = ConsumptionBand::new(lower, Some(lower + width));
        let c = band.clamp(raw);
        prop_assert!(c >= lower && c <= lower + width);
        prop_assert!((band.consumption_ratio(y) - band.clamp(1.0 / y) * y).abs() <= 1e-12 * y.max(1.0));
    }

    #[test]
    fn orthant_strategy_has_closed_form(eta in prop::collection::vec(0.0..8.0f64, 3), gamma in prop_oneof![1.5..8.0f64, 0.2..0.95f64]) {
        let p = reference_problem(gamma, ExposureSet::NonnegativeOrthant, ConsumptionBand::UNCONSTRAINED)
            .unwrap()
            .with_ambiguity(AmbiguityProfile::new(eta))
            .unwrap();
        let theta = p.theta(0.0);
        let z = DVector::zeros(3);
        let (p_ref, phi_ref) = no_short_sale_strategy(&theta, p.eta(), gamma);
        let p_star = optimal_exposure(&theta, p.eta(), gamma, p.scaled_set(), 1.0, &z);
        let phi_star = optimal_distortion(&theta, p.eta(), gamma, p.scaled_set(), 1.0, &z);
        prop_assert!((p_star - p_ref).amax() <= 1e-12);
        prop_assert!((phi_star - phi_ref).amax() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loss_stays_in_unit_interval(eta in prop::collection::vec(0.0..6.0f64, 3), gamma in prop_oneof![2.0..6.0f64, 0.5..0.95f64], full in any::<bool>()) {
        let set = if full { ExposureSet::FullSpace } else { ExposureSet::NonnegativeOrthant };
        let p = reference_problem(gamma, set, ConsumptionBand::UNCONSTRAINED)
            .unwrap()
            .with_ambiguity(AmbiguityProfile::new(eta))
            .unwrap();
        let c = solve_curves(&p, &TimeGrid::new(3.0, 300).unwrap()).unwrap();
        for k in 0..c.y.len() {
            let l = 1.0 - (c.ytilde[k] / c.y[k]).powf(gamma / (1.0 - gamma));
            prop_assert!((-1e-8..=1.0).contains(&l), "L = {} at node {}", l, k);
        }
    }
}
