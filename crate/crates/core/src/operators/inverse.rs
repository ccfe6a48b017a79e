//! Exact `(1 − T̃)⁻¹` and `(1 − T̃ᵀ)⁻¹`.
//!
//! In the eigenbasis of `H` the operator `A` is block diagonal with 2×2
//! blocks `Γ(αλᵢ, βλᵢ)`, so `X − A X Aᵀ = Θ` splits into `d²` independent
//! 4×4 systems `Xᵢⱼ − Γᵢ Xᵢⱼ Γⱼᵀ = Θᵢⱼ`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};

use super::block::BlockMatrix2d;
use super::scalar::{gamma, geometric_series_closed_form};
use crate::algorithms::StepSizes;
use crate::error::{check_dim, Error, Result};

/// Largest block size accepted by the dense operator routines.
pub const MAX_OPERATOR_DIM: usize = 16;

pub(crate) fn check_operator_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::ZeroDimension)
    } else if d > MAX_OPERATOR_DIM {
        Err(Error::InvalidParameter {
            name: "dimension",
            reason: "operator routines are capped at d = 16",
        })
    } else {
        Ok(())
    }
}

/// Eigen-decomposition of a symmetric positive-definite `H`, descending.
#[derive(Debug, Clone)]
pub struct Eigenframe {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigenframe {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        let d = h.nrows();
        check_dim(d, h.ncols())?;
        let eig = ((h + h.transpose()) * 0.5).symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values = DVector::from_fn(d, |k, _| eig.eigenvalues[order[k]]);
        if d > 0 && values[d - 1] <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "covariance",
                reason: "must be positive definite",
            });
        }
        let vectors = DMatrix::from_fn(d, d, |i, k| eig.eigenvectors[(i, order[k])]);
        Ok(Self { values, vectors })
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    /// `diag(E, E)ᵀ Θ diag(E, E)`
    fn to_eigen(&self, theta: &BlockMatrix2d) -> DMatrix<f64> {
        let p = self.doubled();
        p.transpose() * theta.dense() * &p
    }

    fn from_eigen(&self, x: DMatrix<f64>) -> BlockMatrix2d {
        let p = self.doubled();
        BlockMatrix2d::from_dense(&p * x * p.transpose()).expect("even side")
    }

    fn doubled(&self) -> DMatrix<f64> {
        let d = self.values.len();
        let mut p = DMatrix::zeros(2 * d, 2 * d);
        p.view_mut((0, 0), (d, d)).copy_from(&self.vectors);
        p.view_mut((d, d), (d, d)).copy_from(&self.vectors);
        p
    }
}

/// `0 < α, β < 1/L`, which keeps every `|ρ±| < 1`.
fn check_steps(frame: &Eigenframe, steps: &StepSizes) -> Result<()> {
    let inv_l = 1.0 / frame.largest();
    if !(steps.alpha > 0.0 && steps.alpha < inv_l) {
        return Err(Error::StepDomain("need 0 < alpha < 1/L"));
    }
    if !(steps.beta > 0.0 && steps.beta < inv_l) {
        return Err(Error::StepDomain("need 0 < beta < 1/L"));
    }
    Ok(())
}

/// `vec(G X Kᵀ) = (K ⊗ G) vec(X)` for 2×2 matrices, column-major `vec`.
fn kron2(k: &Matrix2<f64>, g: &Matrix2<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| k[(r / 2, c / 2)] * g[(r % 2, c % 2)])
}

fn solve_pairs(frame: &Eigenframe, steps: &StepSizes, theta: &BlockMatrix2d, transpose: bool) -> Result<BlockMatrix2d> {
    check_dim(frame.values.len(), theta.dim())?;
    check_steps(frame, steps)?;
    let d = frame.values.len();
    let gammas: Vec<Matrix2<f64>> = frame
        .values
        .iter()
        .map(|&l| {
            let g = gamma(steps.alpha * l, steps.beta * l);
            if transpose {
                g.transpose()
            } else {
                g
            }
        })
        .collect();
    let rhs = frame.to_eigen(theta);
    let mut x = DMatrix::zeros(2 * d, 2 * d);
    let idx = |i: usize, k: usize| i + k * d;
    for i in 0..d {
        for j in 0..d {
            let sys = Matrix4::identity() - kron2(&gammas[j], &gammas[i]);
            let b = Vector4::new(
                rhs[(idx(i, 0), idx(j, 0))],
                rhs[(idx(i, 1), idx(j, 0))],
                rhs[(idx(i, 0), idx(j, 1))],
                rhs[(idx(i, 1), idx(j, 1))],
            );
            let sol = sys.lu().solve(&b).ok_or(Error::DegenerateSpectrum)?;
            x[(idx(i, 0), idx(j, 0))] = sol[0];
            x[(idx(i, 1), idx(j, 0))] = sol[1];
            x[(idx(i, 0), idx(j, 1))] = sol[2];
            x[(idx(i, 1), idx(j, 1))] = sol[3];
        }
    }
    Ok(frame.from_eigen(x))
}

/// `X = (1 − T̃)⁻¹ ∘ Θ = Σ_t Aᵗ Θ (Aᵗ)ᵀ`, the solution of `X − A X Aᵀ = Θ`.
pub fn inv_one_minus_t_tilde(h: &DMatrix<f64>, steps: &StepSizes, theta: &BlockMatrix2d) -> Result<BlockMatrix2d> {
    check_operator_dim(h.nrows())?;
    solve_pairs(&Eigenframe::new(h)?, steps, theta, false)
}

/// `X = (1 − T̃ᵀ)⁻¹ ∘ Θ`, the solution of `X − Aᵀ X A = Θ`.
pub fn inv_one_minus_t_tilde_transpose(
    h: &DMatrix<f64>,
    steps: &StepSizes,
    theta: &BlockMatrix2d,
) -> Result<BlockMatrix2d> {
    check_operator_dim(h.nrows())?;
    solve_pairs(&Eigenframe::new(h)?, steps, theta, true)
}

/// `(1 − T̃)⁻¹ ∘ Σ_noise` and its explicit upper bound.
#[derive(Debug, Clone)]
pub struct NoiseInverse {
    /// Exact value, assembled eigenvalue by eigenvalue from the closed-form
    /// series of `Γ`.
    pub exact: BlockMatrix2d,
    /// `(1/3)[[2α(βH)⁻¹ + (2β−3α)I, α/β(2β−α)I], [α/β(2β−α)I, 2α²/β I]]`
    pub bound: BlockMatrix2d,
    /// Smallest eigenvalue of `bound − exact`.
    pub bound_margin: f64,
    /// `(α + 2β) L ≤ 1`, under which the bound is guaranteed.
    pub bound_applies: bool,
}

impl NoiseInverse {
    pub fn bound_holds(&self, tol: f64) -> bool {
        !self.bound_applies || self.bound_margin >= -tol
    }
}

/// Exact `(1 − T̃)⁻¹ ∘ Σ_noise`: on eigenvalue `λ` the 2×2 block is
/// `S(αλ, βλ)/λ` with `S` the closed-form series of `Γ`.
pub fn inv_one_minus_t_tilde_noise(h: &DMatrix<f64>, steps: &StepSizes) -> Result<NoiseInverse> {
    check_operator_dim(h.nrows())?;
    let frame = Eigenframe::new(h)?;
    check_steps(&frame, steps)?;
    let d = frame.values.len();
    let (alpha, beta) = (steps.alpha, steps.beta);
    let mut x = DMatrix::zeros(2 * d, 2 * d);
    let mut bound = DMatrix::zeros(2 * d, 2 * d);
    let off = alpha / beta * (2.0 * beta - alpha);
    for (i, &l) in frame.values.iter().enumerate() {
        let s = geometric_series_closed_form(alpha * l, beta * l)? / l;
        x[(i, i)] = s[(0, 0)];
        x[(i, i + d)] = s[(0, 1)];
        x[(i + d, i)] = s[(1, 0)];
        x[(i + d, i + d)] = s[(1, 1)];
        bound[(i, i)] = (2.0 * alpha / (beta * l) + 2.0 * beta - 3.0 * alpha) / 3.0;
        bound[(i, i + d)] = off / 3.0;
        bound[(i + d, i)] = off / 3.0;
        bound[(i + d, i + d)] = 2.0 * alpha * alpha / beta / 3.0;
    }
    let exact = frame.from_eigen(x);
    let bound = frame.from_eigen(bound);
    let bound_margin = (&bound - &exact).min_eigenvalue();
    Ok(NoiseInverse {
        exact,
        bound,
        bound_margin,
        bound_applies: (alpha + 2.0 * beta) * frame.largest() <= 1.0,
    })
}

/// `[[2α(βH)⁻¹ + (2β−3α)I, α/β(2β−α)I], [α/β(2β−α)I, 2α²/β I]]`, three
/// times the bound of [`NoiseInverse`]; `t²σ²` times this dominates the
/// covariance of the noise-driven process.
pub fn variance_bound_matrix(h: &DMatrix<f64>, steps: &StepSizes) -> Result<BlockMatrix2d> {
    Ok(&inv_one_minus_t_tilde_noise(h, steps)?.bound * 3.0)
}
