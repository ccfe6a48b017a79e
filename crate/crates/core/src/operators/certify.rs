//! Numerical certificates for the covariance-operator inequalities.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::block::{coefficient_matrix, noise_matrix, BlockMatrix2d};
use super::expectation::{apply_m_exact, apply_m_transpose_exact, apply_t_exact};
use super::inverse::{check_operator_dim, inv_one_minus_t_tilde_noise, inv_one_minus_t_tilde_transpose, variance_bound_matrix};
use crate::algorithms::{AcsgdState, StepSizes};
use crate::error::{check_dim, Error, Result};
use crate::linalg::min_sym_eigenpair;
use crate::oracles::sgd_gradient_into;
use crate::problem::{LeastSquaresProblem, Sample};

/// Absolute floor under which a negative eigenvalue counts as rounding.
pub const PSD_FLOOR: f64 = 1e-10;

/// Slack, in standard errors, granted to Monte-Carlo PSD checks.
pub const MC_SLACK_SE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmostEigenReport {
    /// Smallest eigenvalue of `(2/3)Σ_noise − M ∘ (1 − T̃)⁻¹ ∘ Σ_noise`.
    pub noise_margin: f64,
    /// Smallest eigenvalue of `(2/3)Υ − Mᵀ ∘ (1 − T̃ᵀ)⁻¹ ∘ Υ`.
    pub coefficient_margin: f64,
    /// `(α + 2β)R² ≤ 1` and `α ≤ β/(2κ̃)`; margins are only guaranteed then.
    pub conditions_hold: bool,
}

impl AlmostEigenReport {
    pub fn passes(&self) -> bool {
        self.noise_margin >= -PSD_FLOOR && self.coefficient_margin >= -PSD_FLOOR
    }
}

/// Evaluates both almost-eigenvector inequalities exactly for a one-hot
/// problem. Nothing is asserted here; see [`AlmostEigenReport::passes`].
pub fn verify_almost_eigenvector(problem: &LeastSquaresProblem, steps: &StepSizes) -> Result<AlmostEigenReport> {
    if !problem.is_one_hot() {
        return Err(Error::UnsupportedDistribution);
    }
    check_operator_dim(problem.dimension())?;
    let h = problem.covariance();
    let sigma = noise_matrix(h, steps);
    let inv = inv_one_minus_t_tilde_noise(h, steps)?.exact;
    let lhs = apply_m_exact(problem, steps, &inv)?;
    let noise_margin = (&(&sigma * (2.0 / 3.0)) - &lhs).min_eigenvalue();

    let ups = coefficient_matrix(h);
    let inv_t = inv_one_minus_t_tilde_transpose(h, steps, &ups)?;
    let lhs_t = apply_m_transpose_exact(problem, steps, &inv_t)?;
    let coefficient_margin = (&(&ups * (2.0 / 3.0)) - &lhs_t).min_eigenvalue();

    Ok(AlmostEigenReport {
        noise_margin,
        coefficient_margin,
        conditions_hold: steps.averaged_regime(&problem.constants()),
    })
}

/// Standard error of the mean by the leave-one-out jackknife.
pub fn jackknife_se(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = values.iter().sum();
    let loo: Vec<f64> = values.iter().map(|v| (total - v) / (n - 1) as f64).collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let ss: f64 = loo.iter().map(|m| (m - mean) * (m - mean)).sum();
    libm::sqrt(ss * (n - 1) as f64 / n as f64)
}

/// `θ = (t(y − x*), z − x*)`
fn theta(state: &AcsgdState, optimum: &DVector<f64>) -> DVector<f64> {
    let (_, v, w) = state.rescaled(optimum);
    let d = v.len();
    DVector::from_fn(2 * d, |i, _| if i < d { v[i] } else { w[i - d] })
}

fn outer_mean(vs: &[DVector<f64>]) -> DMatrix<f64> {
    let n = vs[0].len();
    let mut acc = DMatrix::zeros(n, n);
    for v in vs {
        acc.ger(1.0, v, v, 1.0);
    }
    acc / vs.len() as f64
}

#[derive(Debug, Clone)]
pub struct BiasVarianceReport {
    pub seeds: usize,
    pub iterations: u64,
    /// Largest `‖θ − θᵇ − θᵛ‖ / (1 + ‖θ‖)` over all seeds and steps.
    pub max_identity_residual: f64,
    /// Second moments of the summed iterates `Σ_{t≤T} θ_t`.
    pub full: BlockMatrix2d,
    pub bias: BlockMatrix2d,
    pub variance: BlockMatrix2d,
    /// Smallest eigenvalue of `2(Cᵇ + Cᵛ) − C`.
    pub gap_min_eigenvalue: f64,
    /// Jackknife standard error of the gap projected on its bottom eigenvector.
    pub gap_se: f64,
}

impl BiasVarianceReport {
    pub fn identity_holds(&self, tol: f64) -> bool {
        self.max_identity_residual <= tol
    }

    pub fn gap_passes(&self) -> bool {
        self.gap_min_eigenvalue >= -(MC_SLACK_SE * self.gap_se + PSD_FLOOR * (1.0 + self.full.frobenius()))
    }
}

/// Runs, per seed and on one shared sample stream, the full process (from
/// `start`, noisy), the bias process (from `start`, noiseless responses) and
/// the variance process (from `x*`, noisy), all in rescaled coordinates.
pub fn simulate_bias_variance(
    problem: &LeastSquaresProblem,
    steps: &StepSizes,
    start: &DVector<f64>,
    iterations: u64,
    seeds: usize,
    base_seed: u64,
) -> Result<BiasVarianceReport> {
    let d = problem.dimension();
    check_dim(d, start.len())?;
    if seeds == 0 {
        return Err(Error::InvalidParameter {
            name: "seeds",
            reason: "must be at least 1",
        });
    }
    let opt = problem.optimum();
    let mut sums_full = Vec::with_capacity(seeds);
    let mut sums_bias = Vec::with_capacity(seeds);
    let mut sums_var = Vec::with_capacity(seeds);
    let mut max_resid: f64 = 0.0;
    let mut sample = Sample::zeros(d);
    let mut clean = Sample::zeros(d);
    let mut g = DVector::zeros(d);

    for s in 0..seeds {
        let mut rng = crate::rng_from_seed(base_seed.wrapping_add(s as u64));
        let mut full = AcsgdState::new(start.clone());
        let mut bias = AcsgdState::new(start.clone());
        let mut var = AcsgdState::new(opt.clone());
        let mut acc = [DVector::zeros(2 * d), DVector::zeros(2 * d), DVector::zeros(2 * d)];
        for t in 0..=iterations {
            let th = [theta(&full, opt), theta(&bias, opt), theta(&var, opt)];
            let resid = (&th[0] - &th[1] - &th[2]).norm() / (1.0 + th[0].norm());
            max_resid = max_resid.max(resid);
            for k in 0..3 {
                acc[k] += &th[k];
            }
            if t == iterations {
                break;
            }
            problem.sample_into(&mut rng, &mut sample);
            clean.features.copy_from(&sample.features);
            clean.response = sample.features.dot(opt);
            sgd_gradient_into(&sample, &full.x, &mut g);
            full.step(&g, steps);
            sgd_gradient_into(&clean, &bias.x, &mut g);
            bias.step(&g, steps);
            sgd_gradient_into(&sample, &var.x, &mut g);
            var.step(&g, steps);
        }
        let [a, b, c] = acc;
        sums_full.push(a);
        sums_bias.push(b);
        sums_var.push(c);
    }

    let cf = outer_mean(&sums_full);
    let cb = outer_mean(&sums_bias);
    let cv = outer_mean(&sums_var);
    let gap = (&cb + &cv) * 2.0 - &cf;
    let (gap_min_eigenvalue, dir) = min_sym_eigenpair(&gap);
    let projected: Vec<f64> = (0..seeds)
        .map(|s| {
            let pb = dir.dot(&sums_bias[s]);
            let pv = dir.dot(&sums_var[s]);
            let pf = dir.dot(&sums_full[s]);
            2.0 * (pb * pb + pv * pv) - pf * pf
        })
        .collect();

    Ok(BiasVarianceReport {
        seeds,
        iterations,
        max_identity_residual: max_resid,
        full: BlockMatrix2d::from_dense(cf)?,
        bias: BlockMatrix2d::from_dense(cb)?,
        variance: BlockMatrix2d::from_dense(cv)?,
        gap_min_eigenvalue,
        gap_se: jackknife_se(&projected),
    })
}

/// `E[θᵛ_t ⊗ θᵛ_t]` exactly, from `C_{k+1} = T ∘ C_k + (k+1)²σ² Σ_noise`.
pub fn exact_variance_covariance(problem: &LeastSquaresProblem, steps: &StepSizes, t: u64) -> Result<BlockMatrix2d> {
    let d = problem.dimension();
    check_operator_dim(d)?;
    let sigma = &noise_matrix(problem.covariance(), steps) * (problem.noise_std() * problem.noise_std());
    let mut c = BlockMatrix2d::zeros(d);
    for k in 0..t {
        let kk = (k + 1) as f64;
        c = &apply_t_exact(problem, steps, &c)? + &(&sigma * (kk * kk));
    }
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct VarianceBoundReport {
    pub t: u64,
    pub seeds: usize,
    pub empirical: BlockMatrix2d,
    pub exact: BlockMatrix2d,
    /// `t²σ²` times [`variance_bound_matrix`].
    pub bound: BlockMatrix2d,
    /// Smallest eigenvalue of `bound − empirical`.
    pub empirical_margin: f64,
    /// Jackknife standard error of the projected empirical gap.
    pub empirical_se: f64,
    /// Smallest eigenvalue of `bound − exact`.
    pub exact_margin: f64,
}

impl VarianceBoundReport {
    pub fn passes(&self) -> bool {
        let floor = PSD_FLOOR * (1.0 + self.bound.frobenius());
        self.empirical_margin >= -(MC_SLACK_SE * self.empirical_se + floor) && self.exact_margin >= -floor
    }
}

/// Compares the covariance of the noise-driven process after `t` steps, both
/// by Monte-Carlo and exactly, with `t²σ²` times the explicit bound matrix.
pub fn variance_covariance_bound_check(
    problem: &LeastSquaresProblem,
    steps: &StepSizes,
    t: u64,
    seeds: usize,
    base_seed: u64,
) -> Result<VarianceBoundReport> {
    if !problem.is_one_hot() {
        return Err(Error::UnsupportedDistribution);
    }
    if seeds == 0 {
        return Err(Error::InvalidParameter {
            name: "seeds",
            reason: "must be at least 1",
        });
    }
    let d = problem.dimension();
    let opt = problem.optimum();
    let tf = t as f64;
    let bound = &variance_bound_matrix(problem.covariance(), steps)? * (tf * tf * problem.noise_std() * problem.noise_std());
    let exact = exact_variance_covariance(problem, steps, t)?;

    let mut sample = Sample::zeros(d);
    let mut g = DVector::zeros(d);
    let mut finals = Vec::with_capacity(seeds);
    for s in 0..seeds {
        let mut rng = crate::rng_from_seed(base_seed.wrapping_add(s as u64));
        let mut var = AcsgdState::new(opt.clone());
        for _ in 0..t {
            problem.sample_into(&mut rng, &mut sample);
            sgd_gradient_into(&sample, &var.x, &mut g);
            var.step(&g, steps);
        }
        finals.push(theta(&var, opt));
    }
    let empirical = BlockMatrix2d::from_dense(outer_mean(&finals))?;
    let gap = &bound - &empirical;
    let (empirical_margin, dir) = min_sym_eigenpair(gap.dense());
    let bq = crate::linalg::quad_form(bound.dense(), &dir);
    let projected: Vec<f64> = finals
        .iter()
        .map(|th| {
            let p = dir.dot(th);
            bq - p * p
        })
        .collect();
    let exact_margin = (&bound - &exact).min_eigenvalue();
    Ok(VarianceBoundReport {
        t,
        seeds,
        empirical,
        exact,
        bound,
        empirical_margin,
        empirical_se: jackknife_se(&projected),
        exact_margin,
    })
}
