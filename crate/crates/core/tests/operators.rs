use acls_core::algorithms::StepSizes;
use acls_core::linalg::{haar_orthogonal, min_sym_eigenvalue};
use acls_core::operators::*;
use acls_core::problem::LeastSquaresProblem;
use acls_core::rng_from_seed;
use nalgebra::{DMatrix, DVector, Matrix2};
use proptest::prelude::*;

/// Independent brute force: power the 2×2 matrix explicitly, entry by entry.
fn brute_noise_series(a: f64, b: f64, terms: usize) -> [[f64; 2]; 2] {
    let g = [[1.0 - b, 1.0 - b], [-a, 1.0 - a]];
    let mut p = [[1.0, 0.0], [0.0, 1.0]];
    let mut acc = [[0.0; 2]; 2];
    for _ in 0..terms {
        let v = [p[0][0] * b + p[0][1] * a, p[1][0] * b + p[1][1] * a];
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += v[i] * v[j];
            }
        }
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = g[i][0] * p[0][j] + g[i][1] * p[1][j];
            }
        }
        p = next;
    }
    acc
}

/// Brute force of `Σ ν(t)` through the recursion `s_{t+1} = Γᵀ s_t` on the
/// row vector `𝟙ᵀΓᵗ`.
fn brute_bias_series(a: f64, b: f64, terms: usize) -> f64 {
    let mut row = [1.0, 1.0];
    let mut acc = 0.0;
    for _ in 0..terms {
        let s = row[0] * b + row[1] * a;
        acc += s * s;
        row = [row[0] * (1.0 - b) - row[1] * a, row[0] * (1.0 - b) + row[1] * (1.0 - a)];
    }
    acc
}

fn random_psd(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let q = haar_orthogonal(n, &mut rng);
    let l = DVector::from_fn(n, |i, _| if i % 3 == 0 { 0.0 } else { 1.0 / (i as f64 + 1.0) });
    &q * DMatrix::from_diagonal(&l) * q.transpose()
}

fn uniform(d: usize) -> LeastSquaresProblem {
    LeastSquaresProblem::one_hot_uniform(d, &DVector::zeros(d)).unwrap()
}

#[test]
fn closed_forms_on_example_points() {
    let m = geometric_series_closed_form(0.1, 0.3).unwrap();
    let b = brute_noise_series(0.1, 0.3, 2001);
    for i in 0..2 {
        for j in 0..2 {
            assert!((m[(i, j)] - b[i][j]).abs() <= 1e-10);
        }
    }
    let c = geometric_series_bias_coefficient(0.2, 0.4).unwrap();
    assert!((c - brute_bias_series(0.2, 0.4, 2001)).abs() <= 1e-10);
    // complex pair
    let sys = ScalarPairSystem::new(0.5, 0.5);
    assert!(sys.is_complex());
    let s = bias_coefficient_spectral(0.5, 0.5).unwrap();
    assert!((s - brute_bias_series(0.5, 0.5, 2001)).abs() <= 1e-12);
}

#[test]
fn bias_coefficient_is_continuous_at_small_a() {
    let b = 0.4;
    let limit = 2.0 * b / (4.0 - 2.0 * b);
    let mut prev = f64::INFINITY;
    for k in 4..12 {
        let a = 10f64.powi(-k);
        let v = geometric_series_bias_coefficient(a, b).unwrap();
        let gap = (v - limit).abs();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-10);
}

#[test]
fn library_truncations_agree_with_brute_force() {
    for (a, b) in [(0.3, 0.6), (0.7, 0.2)] {
        let lib = geometric_series_truncated(a, b, 500);
        let ind = brute_noise_series(a, b, 500);
        for i in 0..2 {
            for j in 0..2 {
                assert!((lib[(i, j)] - ind[i][j]).abs() < 1e-13);
            }
        }
        assert!((bias_coefficient_truncated(a, b, 500) - brute_bias_series(a, b, 500)).abs() < 1e-13);
    }
}

#[test]
fn a_spectrum_is_union_of_pair_spectra() {
    let d = 4;
    let mut rng = rng_from_seed(0);
    let q = haar_orthogonal(d, &mut rng);
    let lambdas = [1.0, 0.5, 0.2, 0.05];
    let h = &q * DMatrix::from_diagonal(&DVector::from_row_slice(&lambdas)) * q.transpose();
    let steps = StepSizes::new(0.3, 0.6).unwrap();
    let a = build_a(&h, &steps).unwrap();
    let mut got: Vec<(f64, f64)> = a
        .dense()
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im.abs()))
        .collect();
    let mut want: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| {
            let s = ScalarPairSystem::new(0.3 * l, 0.6 * l);
            [(s.rho_plus.re, s.rho_plus.im.abs()), (s.rho_minus.re, s.rho_minus.im.abs())]
        })
        .collect();
    let key = |p: &(f64, f64)| (p.0 * 1e6).round() as i64 * 10_000_000 + (p.1 * 1e6).round() as i64;
    got.sort_by_key(key);
    want.sort_by_key(key);
    for (g, w) in got.iter().zip(&want) {
        assert!((g.0 - w.0).abs() < 1e-8 && (g.1 - w.1).abs() < 1e-6, "{g:?} vs {w:?}");
    }
    let radius = got.iter().map(|p| (p.0 * p.0 + p.1 * p.1).sqrt()).fold(0.0, f64::max);
    assert!(radius < 1.0);
}

#[test]
fn positivity_of_t_tilde_and_m() {
    let p = LeastSquaresProblem::one_hot(&[0.1, 0.2, 0.3, 0.4], &DVector::zeros(4)).unwrap();
    let steps = StepSizes::new(0.05, 0.3).unwrap();
    let a = build_a(p.covariance(), &steps).unwrap();
    for seed in 0..20 {
        let theta = BlockMatrix2d::from_dense(random_psd(8, seed)).unwrap();
        assert!(apply_t_tilde(&a, &theta).unwrap().min_eigenvalue() >= -1e-10);
        assert!(apply_m_exact(&p, &steps, &theta).unwrap().min_eigenvalue() >= -1e-10);
        assert!(apply_t_exact(&p, &steps, &theta).unwrap().min_eigenvalue() >= -1e-10);
    }
}

/// `E[JΘJᵀ]` by explicit enumeration of the atoms, built here without the
/// library's block helpers.
#[test]
fn t_equals_t_tilde_plus_m_against_enumeration() {
    let probs = [0.25, 0.5, 0.25];
    let d = probs.len();
    let p = LeastSquaresProblem::one_hot(&probs, &DVector::zeros(d)).unwrap();
    let (alpha, beta) = (0.1, 0.4);
    let steps = StepSizes::new(alpha, beta).unwrap();
    let theta = random_psd(2 * d, 3);
    let mut expected = DMatrix::zeros(2 * d, 2 * d);
    for (i, &pi) in probs.iter().enumerate() {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        let aat = &e * e.transpose();
        let id = DMatrix::<f64>::identity(d, d);
        let mut j = DMatrix::zeros(2 * d, 2 * d);
        j.view_mut((0, 0), (d, d)).copy_from(&(&id - &aat * beta));
        j.view_mut((0, d), (d, d)).copy_from(&(&id - &aat * beta));
        j.view_mut((d, 0), (d, d)).copy_from(&(&aat * -alpha));
        j.view_mut((d, d), (d, d)).copy_from(&(&id - &aat * alpha));
        expected += (&j * &theta * j.transpose()) * pi;
    }
    let th = BlockMatrix2d::from_dense(theta).unwrap();
    let a = build_a(p.covariance(), &steps).unwrap();
    let split = &apply_t_tilde(&a, &th).unwrap() + &apply_m_exact(&p, &steps, &th).unwrap();
    assert!((split.dense() - &expected).amax() <= 1e-12);
}

#[test]
fn noise_inverse_fixed_point_and_bound() {
    for d in [1usize, 3, 8] {
        let p = uniform(d);
        let steps = StepSizes::averaged_default(&p.constants());
        let h = p.covariance();
        let inv = inv_one_minus_t_tilde_noise(h, &steps).unwrap();
        let a = build_a(h, &steps).unwrap();
        let resid = &(&inv.exact - &apply_t_tilde(&a, &inv.exact).unwrap()) - &noise_matrix(h, &steps);
        assert!(resid.frobenius() <= 1e-9);
        assert!(inv.bound_applies);
        assert!(inv.bound_margin >= -1e-10);
    }
}

#[test]
fn variance_bound_matrix_is_three_times_the_bound() {
    let p = uniform(3);
    let steps = StepSizes::averaged_default(&p.constants());
    let (alpha, beta) = (steps.alpha, steps.beta);
    let m = variance_bound_matrix(p.covariance(), &steps).unwrap();
    // H = I/3 ⇒ (βH)⁻¹ = 3/β.
    let tl = 2.0 * alpha * 3.0 / beta + 2.0 * beta - 3.0 * alpha;
    let off = alpha / beta * (2.0 * beta - alpha);
    let br = 2.0 * alpha * alpha / beta;
    let want = BlockMatrix2d::kron(&Matrix2::new(tl, off, off, br), &DMatrix::identity(3, 3));
    assert!(m.max_abs_diff(&want) < 1e-14);
}

#[test]
fn almost_eigenvector_inequalities_hold() {
    for d in [2usize, 4, 8] {
        let p = uniform(d);
        let r = verify_almost_eigenvector(&p, &StepSizes::averaged_default(&p.constants())).unwrap();
        assert!(r.conditions_hold);
        assert!(r.noise_margin >= -1e-10 && r.coefficient_margin >= -1e-10, "d = {d}: {r:?}");
    }
}

#[test]
fn bias_variance_decomposition_small() {
    let p = uniform(3).with_noise(0.1).unwrap();
    let steps = StepSizes::averaged_default(&p.constants());
    let r = simulate_bias_variance(&p, &steps, &DVector::zeros(3), 100, 300, 1).unwrap();
    assert!(r.identity_holds(1e-10));
    assert!(r.gap_passes());
    assert!(r.full.is_symmetric(1e-9));
}

#[test]
fn variance_covariance_bound_d2() {
    let p = uniform(2).with_noise(0.1).unwrap();
    let steps = StepSizes::averaged_default(&p.constants());
    let r = variance_covariance_bound_check(&p, &steps, 50, 10_000, 0).unwrap();
    assert!(r.passes(), "{} ± {} / exact {}", r.empirical_margin, r.empirical_se, r.exact_margin);
    // Monte-Carlo agrees with the exact recursion.
    let scale = r.exact.dense().amax();
    assert!((r.empirical.dense() - r.exact.dense()).amax() < 0.1 * scale);
}

#[test]
fn operator_cap() {
    let p = uniform(17);
    let steps = StepSizes::averaged_default(&p.constants());
    assert!(verify_almost_eigenvector(&p, &steps).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn vieta_identities(a in 1e-4f64..0.9999, b in 1e-4f64..0.9999) {
        let s = ScalarPairSystem::new(a, b);
        let (p, q) = s.vieta_residuals();
        prop_assert!(p <= 1e-12 && q <= 1e-12);
        prop_assert!(s.spectral_radius() < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_forms_match_spectral_routes(a in 0.02f64..0.95, b in 0.02f64..0.95) {
        let s = ScalarPairSystem::new(a, b);
        prop_assume!(s.delta().norm() > 1e-2);
        let c = geometric_series_closed_form(a, b).unwrap();
        let sp = geometric_series_spectral(a, b).unwrap();
        prop_assert!((c - sp).amax() <= 1e-9 * (1.0 + c.amax()));
        let cb = geometric_series_bias_coefficient(a, b).unwrap();
        let sb = bias_coefficient_spectral(a, b).unwrap();
        prop_assert!((cb - sb).abs() <= 1e-9 * (1.0 + cb));
    }

    #[test]
    fn inverse_of_random_psd_solves_fixed_point(seed in 0u64..1000, beta in 0.05f64..0.9, frac in 0.05f64..1.0) {
        let d = 3;
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.4, 0.1]));
        let steps = StepSizes::new(beta * frac, beta).unwrap();
        let theta = BlockMatrix2d::from_dense(random_psd(2 * d, seed)).unwrap();
        let x = inv_one_minus_t_tilde(&h, &steps, &theta).unwrap();
        let a = build_a(&h, &steps).unwrap();
        let back = &x - &apply_t_tilde(&a, &x).unwrap();
        prop_assert!(back.max_abs_diff(&theta) <= 1e-9 * (1.0 + x.dense().amax()));
        prop_assert!(min_sym_eigenvalue(x.dense()) >= -1e-9 * (1.0 + x.dense().amax()));
    }
}
