//! Randomized structural invariants.

use proptest::prelude::*;
use spde_lab::noise::{sample_path, NoiseSpec};
use spde_lab::spectral::{CoeffVector, EigenBasis};
use spde_lab::weights::{
    check_admissible, weighted_inner, weighted_norm, Quadrature, WeightFunction, WeightKind,
};

fn quad() -> Quadrature {
    Quadrature::gauss_full(1, 24).unwrap()
}

fn rho() -> WeightFunction {
    WeightFunction::new(WeightKind::Gaussian, 1, false).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz(
        u in prop::collection::vec(-10.0f64..10.0, 24),
        v in prop::collection::vec(-10.0f64..10.0, 24),
    ) {
        let (q, rho) = (quad(), rho());
        let inner = weighted_inner(&u, &v, &rho, &q).unwrap();
        let nu = weighted_norm(&u, &rho, &q).unwrap();
        let nv = weighted_norm(&v, &rho, &q).unwrap();
        prop_assert!(inner.abs() <= nu * nv + 1e-12 * (1.0 + nu * nv));
    }

    #[test]
    fn norm_scales_linearly(
        u in prop::collection::vec(-10.0f64..10.0, 24),
        c in -5.0f64..5.0,
    ) {
        let (q, rho) = (quad(), rho());
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        let lhs = weighted_norm(&scaled, &rho, &q).unwrap();
        let rhs = c.abs() * weighted_norm(&u, &rho, &q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn semigroup_never_expands(
        coeffs in prop::collection::vec(-1.0f64..1.0, 8),
        t in 0.0f64..3.0,
    ) {
        let basis = EigenBasis::new(1, 8, 32).unwrap();
        let mut c = CoeffVector::zeros(&basis);
        c.coeffs.copy_from_slice(&coeffs);
        let out = basis.apply_semigroup(&c, t).unwrap();
        prop_assert!(out.h_norm() <= c.h_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn short_time_admissibility_ratio_near_one(gamma in 0.5f64..2.0) {
        // As t -> 0 the convolution is the identity, so the sampled
        // constant over a vanishing window approaches 1.
        let rho = WeightFunction::new(WeightKind::ExpDecay { gamma }, 1, false).unwrap();
        let xs: Vec<Vec<f64>> = (-8..=8).map(|i| vec![i as f64 * 0.25]).collect();
        let report = check_admissible(&rho, 1e-6, &xs, 4, 32).unwrap();
        prop_assert!((report.c_hat - 1.0).abs() < 1e-2);
    }

    #[test]
    fn noise_paths_are_deterministic(seed in any::<u64>(), traj in 0u64..64) {
        let spec = NoiseSpec::geometric(3, 1, seed).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let a = sample_path(&spec, &grid, traj).unwrap();
        let b = sample_path(&spec, &grid, traj).unwrap();
        prop_assert_eq!(&a.increments, &b.increments);
        // A different trajectory label yields a different realization.
        let c = sample_path(&spec, &grid, traj + 1).unwrap();
        prop_assert_ne!(&a.increments, &c.increments);
    }
}
