//! Property tests over randomized states, sizes and parameters.

use proptest::prelude::*;

use fput_core::chaos::sali_value;
use fput_core::experiments::{fit_quadratic, sample_disorder};
use fput_core::lattice::{
    initial_condition_mode1, rhs_disordered, rhs_homogeneous, total_energy, DisorderProfile,
    LatticeModel, PhaseState, Variant,
};
use fput_core::modes::{from_modes, to_modes, ModeBasis};
use fput_core::two_mode::wrap_theta;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip_is_identity(
        n in 1usize..32,
        seed in any::<u64>(),
    ) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let basis = ModeBasis::new(n);
        let state = PhaseState::new(
            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
            0.0,
        ).unwrap();
        let back = from_modes(&to_modes(&state, &basis).unwrap(), &basis).unwrap();
        for j in 0..n {
            prop_assert!((back.x[j] - state.x[j]).abs() < 1e-12);
            prop_assert!((back.p[j] - state.p[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_disorder_rhs_is_bitwise_homogeneous(
        n in 1usize..24,
        seed in any::<u64>(),
        alpha in 0.0f64..2.0,
    ) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let hom = LatticeModel::homogeneous(n, alpha).unwrap();
        let dis = LatticeModel::new(
            n, alpha, DisorderProfile::unit(n), Variant::DisorderedNonlinear).unwrap();
        let state = PhaseState::new(
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            vec![0.0; n],
            0.0,
        ).unwrap();
        let a = rhs_homogeneous(&state, &hom).unwrap();
        let b = rhs_disordered(&state, &dis).unwrap();
        for j in 0..n {
            prop_assert_eq!(a[j].to_bits(), b[j].to_bits());
        }
    }

    #[test]
    fn sali_stays_within_bounds(
        dim in 2usize..64,
        s1 in any::<u64>(),
        s2 in any::<u64>(),
    ) {
        let w1 = fput_core::chaos::random_unit_deviation(dim, s1);
        let w2 = fput_core::chaos::random_unit_deviation(dim, s2);
        let s = sali_value(&w1, &w2);
        prop_assert!(s >= 0.0);
        prop_assert!(s <= 2f64.sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn mode1_energy_matches_closed_form(n in 1usize..200, alpha in 0.0f64..1.0) {
        let model = LatticeModel::homogeneous(n, alpha).unwrap();
        let e = total_energy(&initial_condition_mode1(n), &model).unwrap();
        let w1 = 2.0 * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
        let closed = w1 * w1 * (n as f64 + 1.0) / 4.0;
        prop_assert!((e - closed).abs() <= 1e-12 * closed.max(1.0));
    }

    #[test]
    fn sampled_disorder_respects_interval(
        tau in 0.0f64..30.0,
        n in 1usize..64,
        seed in any::<u64>(),
    ) {
        let p = sample_disorder(tau, n, seed);
        prop_assert_eq!(p.values().len(), n + 2);
        prop_assert_eq!(p.values()[0], 1.0);
        prop_assert_eq!(p.values()[n + 1], 1.0);
        let half = 0.01 * tau;
        for &v in p.values() {
            prop_assert!((v - 1.0).abs() <= half + 1e-15);
        }
    }

    #[test]
    fn theta_wraps_into_half_period(theta in -50.0f64..50.0) {
        let w = wrap_theta(theta);
        prop_assert!((0.0..std::f64::consts::PI).contains(&w));
        // representative of the same class mod π
        let diff = (theta - w) / std::f64::consts::PI;
        prop_assert!((diff - diff.round()).abs() < 1e-9);
    }

    #[test]
    fn quadratic_fit_recovers_exact_data(
        c2 in -1.0f64..1.0,
        c1 in -1.0f64..1.0,
        c0 in -1.0f64..1.0,
    ) {
        let taus: Vec<f64> = (0..=10).map(|t| t as f64).collect();
        let ys: Vec<f64> = taus.iter().map(|t| c2*t*t + c1*t + c0).collect();
        let ((f2, f1, f0), sse) = fit_quadratic(&taus, &ys).unwrap();
        prop_assert!((f2 - c2).abs() < 1e-9);
        prop_assert!((f1 - c1).abs() < 1e-9);
        prop_assert!((f0 - c0).abs() < 1e-9);
        prop_assert!(sse < 1e-12);
    }
}
