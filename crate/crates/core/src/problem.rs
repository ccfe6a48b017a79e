//! Synthetic least-squares problems.
//!
//! A problem is a distribution over pairs `(a, b)` with `b = ⟨a, x*⟩ + σ·η`,
//! `η ~ N(0, 1)` independent of `a`. Two feature families are supported, both
//! with closed-form moment constants:
//!
//! * Gaussian features `a ~ N(0, H)`;
//! * one-hot features `a = eᵢ` with probability `pᵢ`, so `H = diag(p)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::haar_orthogonal;

/// Tolerance on `Σ pᵢ = 1` for one-hot probabilities.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureDistribution {
    Gaussian,
    /// Standard basis vectors with the given (strictly positive) probabilities.
    OneHot { probabilities: Vec<f64> },
}

/// One streamed observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: DVector<f64>,
    pub response: f64,
}

impl Sample {
    pub fn new(features: DVector<f64>, response: f64) -> Self {
        Self { features, response }
    }

    pub fn zeros(d: usize) -> Self {
        Self::new(DVector::zeros(d), 0.0)
    }

    /// `η = b − ⟨a, x*⟩`
    pub fn noise(&self, optimum: &DVector<f64>) -> f64 {
        self.response - self.features.dot(optimum)
    }
}

/// Distribution-dependent constants of the moment assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// `E[‖a‖² a aᵀ] ⪯ R² H`
    pub r_squared: f64,
    /// Statistical condition number: `E[‖a‖²_{H⁻¹} a aᵀ] ⪯ κ̃ H`.
    pub stat_condition: f64,
    /// Uniform kurtosis: `E[⟨a, M a⟩ a aᵀ] ⪯ κ tr(MH) H`.
    pub kurtosis: f64,
    /// Largest eigenvalue of `H`.
    pub l_smooth: f64,
    pub trace_h: f64,
    pub noise_var: f64,
    pub dimension: usize,
}

#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    covariance: DMatrix<f64>,
    optimum: DVector<f64>,
    noise_std: f64,
    distribution: FeatureDistribution,
    /// Descending eigenvalues of `H`.
    eigenvalues: DVector<f64>,
    /// Matching orthonormal eigenvectors, one per column.
    eigenvectors: DMatrix<f64>,
    /// `E diag(√λ)`; Gaussian features are `sampler · g`.
    sampler: DMatrix<f64>,
    /// Cumulative one-hot probabilities.
    cumulative: Vec<f64>,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeNoise(sigma))
    }
}

impl LeastSquaresProblem {
    /// Gaussian problem with spectrum `λᵢ = scale / i^decay`, a Haar-random
    /// eigenbasis drawn from `seed`, and `x*` projecting equally on every
    /// eigenvector with `‖x*‖ = 1`.
    pub fn gaussian(d: usize, decay: f64, scale: f64, sigma: f64, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(decay.is_finite() && decay >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "decay_exponent",
                reason: "must be finite and nonnegative",
            });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: "must be finite and positive",
            });
        }
        check_sigma(sigma)?;

        let mut rng = crate::rng_from_seed(seed);
        let basis = haar_orthogonal(d, &mut rng);
        let eigenvalues =
            DVector::from_fn(d, |i, _| scale / libm::pow((i + 1) as f64, decay));
        let optimum = &basis * DVector::from_element(d, 1.0 / libm::sqrt(d as f64));
        Ok(Self::from_eigen(basis, eigenvalues, optimum, sigma))
    }

    /// Gaussian problem with an explicit covariance `H` (symmetric positive
    /// definite) and optimum.
    pub fn gaussian_with_covariance(
        covariance: DMatrix<f64>,
        optimum: DVector<f64>,
        sigma: f64,
    ) -> Result<Self> {
        let d = covariance.nrows();
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        check_dim(d, covariance.ncols())?;
        check_dim(d, optimum.len())?;
        check_sigma(sigma)?;
        let sym = (&covariance + covariance.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        if eig.eigenvalues[order[d - 1]] <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "covariance",
                reason: "must be positive definite",
            });
        }
        let eigenvalues = DVector::from_fn(d, |k, _| eig.eigenvalues[order[k]]);
        let basis = DMatrix::from_fn(d, d, |i, k| eig.eigenvectors[(i, order[k])]);
        Ok(Self::from_eigen(basis, eigenvalues, optimum, sigma))
    }

    fn from_eigen(
        basis: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        optimum: DVector<f64>,
        sigma: f64,
    ) -> Self {
        let d = eigenvalues.len();
        let mut sampler = basis.clone();
        for (k, mut col) in sampler.column_iter_mut().enumerate() {
            col *= libm::sqrt(eigenvalues[k]);
        }
        let covariance = &basis * DMatrix::from_diagonal(&eigenvalues) * basis.transpose();
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        debug_assert_eq!(sampler.nrows(), d);
        Self {
            covariance,
            optimum,
            noise_std: sigma,
            distribution: FeatureDistribution::Gaussian,
            eigenvalues,
            eigenvectors: basis,
            sampler,
            cumulative: Vec::new(),
        }
    }

    /// One-hot problem: `a = eᵢ` with probability `pᵢ`, optimum
    /// `start + (1/√d)·Σ eᵢ` (unit distance from `start`), noiseless.
    pub fn one_hot(probabilities: &[f64], start: &DVector<f64>) -> Result<Self> {
        let d = probabilities.len();
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        check_dim(d, start.len())?;
        let sum: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|&p| !(p > 0.0 && p.is_finite()))
            || libm::fabs(sum - 1.0) > PROBABILITY_SUM_TOL
        {
            return Err(Error::InvalidProbabilities);
        }
        let p = DVector::from_column_slice(probabilities);
        let optimum = start.add_scalar(1.0 / libm::sqrt(d as f64));

        // Basis vectors sorted by decreasing probability so eigenvalues stay
        // in descending order.
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| probabilities[j].total_cmp(&probabilities[i]));
        let eigenvalues = DVector::from_fn(d, |k, _| probabilities[order[k]]);
        let eigenvectors = DMatrix::from_fn(d, d, |i, k| if i == order[k] { 1.0 } else { 0.0 });

        let mut cumulative = Vec::with_capacity(d);
        let mut acc = 0.0;
        for &pi in probabilities {
            acc += pi;
            cumulative.push(acc);
        }
        Ok(Self {
            covariance: DMatrix::from_diagonal(&p),
            optimum,
            noise_std: 0.0,
            distribution: FeatureDistribution::OneHot {
                probabilities: probabilities.to_vec(),
            },
            eigenvalues,
            eigenvectors,
            sampler: DMatrix::zeros(0, 0),
            cumulative,
        })
    }

    /// Uniform one-hot problem in dimension `d`.
    pub fn one_hot_uniform(d: usize, start: &DVector<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let p = alloc::vec![1.0 / d as f64; d];
        Self::one_hot(&p, start)
    }

    /// Same distribution of features and optimum, different noise level.
    pub fn with_noise(mut self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        self.noise_std = sigma;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.optimum.len()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn optimum(&self) -> &DVector<f64> {
        &self.optimum
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn distribution(&self) -> &FeatureDistribution {
        &self.distribution
    }

    pub fn is_one_hot(&self) -> bool {
        matches!(self.distribution, FeatureDistribution::OneHot { .. })
    }

    /// Eigenvalues of `H` in descending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors of `H` (columns), matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.sum()
    }

    pub fn l_smooth(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Draws one sample.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let mut s = Sample::zeros(self.dimension());
        self.sample_into(rng, &mut s);
        s
    }

    /// Draws one sample into `out` without allocating. Exactly one noise
    /// variate is consumed whatever `σ` is, so problems differing only in
    /// noise level see identical feature streams.
    pub fn sample_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut Sample) {
        let d = self.dimension();
        debug_assert_eq!(out.features.len(), d);
        match &self.distribution {
            FeatureDistribution::Gaussian => {
                // a = E diag(√λ) g, accumulated column by column.
                out.features.fill(0.0);
                for k in 0..d {
                    let g: f64 = rng.sample(StandardNormal);
                    out.features.axpy(g, &self.sampler.column(k), 1.0);
                }
            }
            FeatureDistribution::OneHot { .. } => {
                let u: f64 = rng.random();
                let idx = self
                    .cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(d - 1);
                out.features.fill(0.0);
                out.features[idx] = 1.0;
            }
        }
        let eta: f64 = rng.sample(StandardNormal);
        out.response = out.features.dot(&self.optimum) + self.noise_std * eta;
    }

    /// `½ (x − x*)ᵀ H (x − x*)`
    pub fn excess_risk(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        Ok(self.excess_risk_unchecked(x))
    }

    pub(crate) fn excess_risk_unchecked(&self, x: &DVector<f64>) -> f64 {
        let e = x - &self.optimum;
        0.5 * crate::linalg::quad_form(&self.covariance, &e).max(0.0)
    }

    /// Closed-form moment constants for the supported feature families.
    pub fn constants(&self) -> ProblemConstants {
        let d = self.dimension();
        let trace_h = self.trace();
        let l_smooth = self.l_smooth();
        let (r_squared, stat_condition, kurtosis) = match &self.distribution {
            // E[aaᵀMaaᵀ] = HMH + HMᵀH + tr(MH)H for Gaussian a.
            FeatureDistribution::Gaussian => (trace_h + 2.0 * l_smooth, d as f64 + 2.0, 3.0),
            FeatureDistribution::OneHot { probabilities } => {
                let p_min = probabilities.iter().copied().fold(f64::INFINITY, f64::min);
                (1.0, 1.0 / p_min, 1.0 / p_min)
            }
        };
        ProblemConstants {
            r_squared,
            stat_condition,
            kurtosis,
            l_smooth,
            trace_h,
            noise_var: self.noise_std * self.noise_std,
            dimension: d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn zeros(d: usize) -> DVector<f64> {
        DVector::zeros(d)
    }

    #[test]
    fn gaussian_benchmark_setting() {
        let p = LeastSquaresProblem::gaussian(50, 4.0, 1.0, 0.02, 7).unwrap();
        for i in 0..50 {
            let expected = 1.0 / ((i + 1) as f64).powi(4);
            assert!((p.eigenvalues()[i] - expected).abs() < 1e-15);
        }
        assert!((p.optimum().norm() - 1.0).abs() < 1e-12);
        // H reconstructs its own spectrum.
        let mut eig: Vec<f64> = p.covariance().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        assert!((eig[0] - 1.0).abs() < 1e-12);
        // x* projects equally on every eigenvector.
        let proj = p.eigenvectors().transpose() * p.optimum();
        for v in proj.iter() {
            assert!((v - 1.0 / 50f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_one_dimensional_identity() {
        let p = LeastSquaresProblem::gaussian(1, 0.0, 1.0, 0.0, 0).unwrap();
        assert!((p.covariance()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((p.optimum()[0].abs() - 1.0).abs() < 1e-15);
        // sign of the 1x1 Haar "rotation" is +1 after sign correction
        assert!(p.optimum()[0] > 0.0);
    }

    #[test]
    fn gaussian_trace_three() {
        let p = LeastSquaresProblem::gaussian(3, 4.0, 1.0, 0.0, 1).unwrap();
        let expected = 1.0 + 1.0 / 16.0 + 1.0 / 81.0;
        assert!((p.trace() - expected).abs() < 1e-14);
        assert!((p.covariance().trace() - expected).abs() < 1e-12);
    }

    #[test]
    fn gaussian_rejects_bad_input() {
        assert_eq!(
            LeastSquaresProblem::gaussian(0, 4.0, 1.0, 0.0, 0).unwrap_err(),
            Error::ZeroDimension
        );
        assert_eq!(
            LeastSquaresProblem::gaussian(3, 4.0, 1.0, -0.1, 0).unwrap_err(),
            Error::NegativeNoise(-0.1)
        );
    }

    #[test]
    fn one_hot_uniform_construction() {
        let p = LeastSquaresProblem::one_hot_uniform(4, &zeros(4)).unwrap();
        assert_eq!(p.covariance(), &(DMatrix::identity(4, 4) * 0.25));
        for v in p.optimum().iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert!((p.optimum().norm_squared() - 1.0).abs() < 1e-15);
        assert_eq!(p.noise_std(), 0.0);
    }

    #[test]
    fn one_hot_single_atom() {
        let p = LeastSquaresProblem::one_hot(&[1.0], &zeros(1)).unwrap();
        assert_eq!(p.covariance()[(0, 0)], 1.0);
        assert_eq!(p.optimum()[0], 1.0);
    }

    #[test]
    fn one_hot_condition_number() {
        let p = LeastSquaresProblem::one_hot(&[0.9, 0.1], &zeros(2)).unwrap();
        let c = p.constants();
        assert!((c.stat_condition - 10.0).abs() < 1e-12);
        assert!((c.kurtosis - 10.0).abs() < 1e-12);
        assert_eq!(c.r_squared, 1.0);
    }

    #[test]
    fn one_hot_rejects_bad_probabilities() {
        for p in [vec![0.5, 0.4], vec![1.0, 0.0], vec![1.2, -0.2]] {
            assert_eq!(
                LeastSquaresProblem::one_hot(&p, &zeros(2)).unwrap_err(),
                Error::InvalidProbabilities
            );
        }
    }

    #[test]
    fn one_hot_start_offset() {
        let start = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let p = LeastSquaresProblem::one_hot_uniform(3, &start).unwrap();
        assert!(((p.optimum() - &start).norm_squared() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn noiseless_samples_interpolate() {
        let p = LeastSquaresProblem::gaussian(5, 2.0, 1.0, 0.0, 4).unwrap();
        let mut rng = crate::rng_from_seed(1);
        for _ in 0..100 {
            let s = p.sample(&mut rng);
            assert_eq!(s.response, s.features.dot(p.optimum()));
        }
    }

    #[test]
    fn excess_risk_examples() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 / 16.0]));
        let p = LeastSquaresProblem::gaussian_with_covariance(h, zeros(2), 0.0).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert!((p.excess_risk(&x).unwrap() - 0.53125).abs() < 1e-15);
        assert_eq!(p.excess_risk(&zeros(2)).unwrap(), 0.0);
        assert_eq!(
            p.excess_risk(&zeros(3)).unwrap_err(),
            Error::DimensionMismatch { expected: 2, got: 3 }
        );

        let q = LeastSquaresProblem::one_hot_uniform(4, &zeros(4)).unwrap();
        assert!((q.excess_risk(&zeros(4)).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn gaussian_constants() {
        let p = LeastSquaresProblem::gaussian(6, 0.0, 1.0, 0.3, 2).unwrap();
        let c = p.constants();
        assert!((c.r_squared - 8.0).abs() < 1e-12);
        assert_eq!(c.stat_condition, 8.0);
        assert_eq!(c.kurtosis, 3.0);
        assert!((c.noise_var - 0.09).abs() < 1e-15);
    }

    #[test]
    fn one_hot_fourth_moment_is_exactly_h() {
        // E[‖a‖² a aᵀ] as a finite sum over the atoms.
        let probs = [0.5, 0.3, 0.2];
        let p = LeastSquaresProblem::one_hot(&probs, &zeros(3)).unwrap();
        let mut m = DMatrix::<f64>::zeros(3, 3);
        for (i, &pi) in probs.iter().enumerate() {
            let mut e = zeros(3);
            e[i] = 1.0;
            m += (&e * e.transpose()) * (pi * e.norm_squared());
        }
        assert_eq!(&m, p.covariance());
    }
}
