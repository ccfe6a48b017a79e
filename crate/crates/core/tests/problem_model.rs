use acls_core::problem::LeastSquaresProblem;
use acls_core::{rng_from_seed, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn empirical_second_moment(p: &LeastSquaresProblem, n: usize, seed: u64) -> DMatrix<f64> {
    let d = p.dimension();
    let mut rng = rng_from_seed(seed);
    let mut acc = DMatrix::zeros(d, d);
    for _ in 0..n {
        let s = p.sample(&mut rng);
        acc.ger(1.0, &s.features, &s.features, 1.0);
    }
    acc / n as f64
}

#[test]
fn one_hot_empirical_covariance() {
    let p = LeastSquaresProblem::one_hot_uniform(3, &DVector::zeros(3)).unwrap();
    let c = empirical_second_moment(&p, 1_000_000, 1);
    let target = DMatrix::<f64>::identity(3, 3) / 3.0;
    assert!((c - target).amax() <= 5e-3);
}

#[test]
fn gaussian_empirical_covariance() {
    let n = 100_000;
    for (d, seed) in [(3, 0), (6, 4)] {
        let p = LeastSquaresProblem::gaussian(d, 2.0, 1.0, 0.1, seed).unwrap();
        let c = empirical_second_moment(&p, n, seed + 10);
        let tol = 10.0 * d as f64 / (n as f64).sqrt();
        assert!((c - p.covariance()).norm() <= tol);
    }
}

#[test]
fn gaussian_response_second_moment() {
    let sigma = 0.5;
    let opt = DVector::from_vec(vec![0.6, -0.8]);
    let p = LeastSquaresProblem::gaussian_with_covariance(DMatrix::identity(2, 2), opt.clone(), sigma).unwrap();
    let mut rng = rng_from_seed(3);
    let n = 400_000;
    let mean: f64 = (0..n).map(|_| p.sample(&mut rng).response.powi(2)).sum::<f64>() / n as f64;
    let expected = opt.norm_squared() + sigma * sigma;
    assert!((mean - expected).abs() < 0.02, "{mean} vs {expected}");
}

/// Wick: E[‖a‖² aaᵀ] = tr(H) H + 2H² for a ~ N(0, H), so the smallest R²
/// with E[‖a‖² aaᵀ] ⪯ R² H is tr H + 2L.
#[test]
fn gaussian_fourth_moment_matches_wick() {
    let p = LeastSquaresProblem::gaussian(3, 1.0, 1.0, 0.0, 8).unwrap();
    let h = p.covariance();
    let mut rng = rng_from_seed(9);
    let n = 400_000;
    let mut acc = DMatrix::zeros(3, 3);
    for _ in 0..n {
        let a = p.sample(&mut rng).features;
        acc.ger(a.norm_squared(), &a, &a, 1.0);
    }
    acc /= n as f64;
    let wick = h * h.trace() + h * h * 2.0;
    assert!((&acc - &wick).amax() < 0.05 * wick.amax(), "{acc} vs {wick}");

    let c = p.constants();
    let slack = h * c.r_squared - &wick;
    assert!(acls_core::linalg::min_sym_eigenvalue(&slack) > -1e-12);
    assert!(acls_core::linalg::min_sym_eigenvalue(&(h * (c.r_squared - 1e-3) - &wick)) < 0.0);
}

#[test]
fn identity_covariance_r_squared() {
    let p = LeastSquaresProblem::gaussian(5, 0.0, 1.0, 0.0, 0).unwrap();
    assert!((p.constants().r_squared - 7.0).abs() < 1e-12);
}

#[test]
fn uniform_one_hot_constants() {
    for d in [1usize, 4, 50] {
        let p = LeastSquaresProblem::one_hot_uniform(d, &DVector::zeros(d)).unwrap();
        let c = p.constants();
        assert_eq!(c.r_squared, 1.0);
        assert!((c.stat_condition - d as f64).abs() < 1e-9);
        assert!((c.kurtosis - d as f64).abs() < 1e-9);
        assert!((c.l_smooth - 1.0 / d as f64).abs() < 1e-15);
    }
}

#[test]
fn risk_dimension_mismatch() {
    let p = LeastSquaresProblem::one_hot_uniform(2, &DVector::zeros(2)).unwrap();
    assert_eq!(
        p.excess_risk(&DVector::zeros(5)).unwrap_err(),
        Error::DimensionMismatch { expected: 2, got: 5 }
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn risk_is_convex(
        seed in 0u64..1000,
        d in 1usize..6,
        t in 0.0f64..1.0,
        xs in prop::collection::vec(-3.0f64..3.0, 12),
    ) {
        let p = LeastSquaresProblem::gaussian(d, 1.5, 2.0, 0.0, seed).unwrap();
        let x1 = DVector::from_column_slice(&xs[..d]);
        let x2 = DVector::from_column_slice(&xs[6..6 + d]);
        let mix = &x1 * t + &x2 * (1.0 - t);
        let lhs = p.excess_risk(&mix).unwrap();
        let rhs = t * p.excess_risk(&x1).unwrap() + (1.0 - t) * p.excess_risk(&x2).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
        prop_assert!(lhs >= 0.0);
    }

    #[test]
    fn constants_dominate_dimension_and_smoothness(
        seed in 0u64..1000,
        d in 1usize..8,
        decay in 0.0f64..5.0,
        weights in prop::collection::vec(0.05f64..1.0, 8),
    ) {
        let g = LeastSquaresProblem::gaussian(d, decay, 1.0, 0.0, seed).unwrap().constants();
        prop_assert!(g.stat_condition >= d as f64);
        prop_assert!(g.r_squared >= g.l_smooth);

        let total: f64 = weights[..d].iter().sum();
        let probs: Vec<f64> = weights[..d].iter().map(|w| w / total).collect();
        let o = LeastSquaresProblem::one_hot(&probs, &DVector::zeros(d));
        // Renormalised weights can miss the sum-to-one tolerance by an ulp or two.
        if let Ok(o) = o {
            let c = o.constants();
            prop_assert!(c.stat_condition >= d as f64 - 1e-9);
            prop_assert!(c.r_squared >= c.l_smooth);
            prop_assert_eq!(o.covariance(), &DMatrix::from_diagonal(&DVector::from_vec(probs)));
        }
    }

    #[test]
    fn unit_distance_from_start(d in 1usize..20, shift in -5.0f64..5.0) {
        let start = DVector::from_element(d, shift);
        let p = LeastSquaresProblem::one_hot_uniform(d, &start).unwrap();
        prop_assert!(((p.optimum() - &start).norm_squared() - 1.0).abs() < 1e-12);
        prop_assert!((p.excess_risk(&start).unwrap() - 0.5 / d as f64).abs() < 1e-12);
    }
}
