//! Exact expectations over one-hot features.
//!
//! With `a = eᵢ` drawn with probability `pᵢ`, every expectation over the
//! random iteration matrix
//! `J = [[I − βaaᵀ, I − βaaᵀ], [−αaaᵀ, I − αaaᵀ]]` is a finite weighted sum.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix2};

use super::block::{build_a, BlockMatrix2d};
use super::inverse::check_operator_dim;
use crate::algorithms::StepSizes;
use crate::error::{check_dim, Error, Result};
use crate::problem::{FeatureDistribution, LeastSquaresProblem};

fn atoms(problem: &LeastSquaresProblem) -> Result<&[f64]> {
    match problem.distribution() {
        FeatureDistribution::OneHot { probabilities } => {
            check_operator_dim(probabilities.len())?;
            Ok(probabilities)
        }
        FeatureDistribution::Gaussian => Err(Error::UnsupportedDistribution),
    }
}

/// `J` for `a = eᵢ`, as a dense `2d×2d` matrix.
fn j_atom(d: usize, i: usize, steps: &StepSizes) -> DMatrix<f64> {
    let mut j = DMatrix::identity(2 * d, 2 * d);
    for c in 0..d {
        j[(c, d + c)] = 1.0;
    }
    j[(i, i)] -= steps.beta;
    j[(i, d + i)] -= steps.beta;
    j[(d + i, i)] -= steps.alpha;
    j[(d + i, d + i)] -= steps.alpha;
    j
}

fn per_atom<F>(problem: &LeastSquaresProblem, theta: &BlockMatrix2d, mut f: F) -> Result<BlockMatrix2d>
where
    F: FnMut(usize) -> DMatrix<f64>,
{
    let probs = atoms(problem)?;
    let d = probs.len();
    check_dim(d, theta.dim())?;
    let mut acc = DMatrix::zeros(2 * d, 2 * d);
    for (i, &p) in probs.iter().enumerate() {
        acc += f(i) * p;
    }
    BlockMatrix2d::from_dense(acc)
}

/// `M ∘ Θ = E[(J − A) Θ (J − A)ᵀ]`
pub fn apply_m_exact(problem: &LeastSquaresProblem, steps: &StepSizes, theta: &BlockMatrix2d) -> Result<BlockMatrix2d> {
    let d = problem.dimension();
    let a = build_a(problem.covariance(), steps)?.into_dense();
    let diffs: Vec<DMatrix<f64>> = (0..d).map(|i| j_atom(d, i, steps) - &a).collect();
    per_atom(problem, theta, |i| &diffs[i] * theta.dense() * diffs[i].transpose())
}

/// `Mᵀ ∘ Θ = E[(J − A)ᵀ Θ (J − A)]`
pub fn apply_m_transpose_exact(
    problem: &LeastSquaresProblem,
    steps: &StepSizes,
    theta: &BlockMatrix2d,
) -> Result<BlockMatrix2d> {
    let d = problem.dimension();
    let a = build_a(problem.covariance(), steps)?.into_dense();
    let diffs: Vec<DMatrix<f64>> = (0..d).map(|i| j_atom(d, i, steps) - &a).collect();
    per_atom(problem, theta, |i| diffs[i].transpose() * theta.dense() * &diffs[i])
}

/// `T ∘ Θ = E[J Θ Jᵀ]`
pub fn apply_t_exact(problem: &LeastSquaresProblem, steps: &StepSizes, theta: &BlockMatrix2d) -> Result<BlockMatrix2d> {
    let d = problem.dimension();
    per_atom(problem, theta, |i| {
        let j = j_atom(d, i, steps);
        &j * theta.dense() * j.transpose()
    })
}

/// `E[(H − aaᵀ) K (H − aaᵀ)]`
fn centred_sandwich(problem: &LeastSquaresProblem, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let probs = atoms(problem)?;
    let h = problem.covariance();
    let mut acc = DMatrix::zeros(probs.len(), probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let mut c = h.clone();
        c[(i, i)] -= 1.0;
        acc += &c * k * &c * p;
    }
    Ok(acc)
}

/// `M ∘ [[P, Q], [R, S]] = [[β², αβ], [αβ, α²]] ⊗ E[(H − aaᵀ)(P+Q+R+S)(H − aaᵀ)]`
pub fn apply_m_factorized(
    problem: &LeastSquaresProblem,
    steps: &StepSizes,
    theta: &BlockMatrix2d,
) -> Result<BlockMatrix2d> {
    check_dim(problem.dimension(), theta.dim())?;
    let inner = centred_sandwich(problem, &theta.block_sum())?;
    let (a, b) = (steps.alpha, steps.beta);
    Ok(BlockMatrix2d::kron(&Matrix2::new(b * b, a * b, a * b, a * a), &inner))
}

/// `Mᵀ ∘ [[P, Q], [R, S]] = 𝟙𝟙ᵀ ⊗ E[(H − aaᵀ)(β²P + αβ(Q+R) + α²S)(H − aaᵀ)]`
pub fn apply_m_transpose_factorized(
    problem: &LeastSquaresProblem,
    steps: &StepSizes,
    theta: &BlockMatrix2d,
) -> Result<BlockMatrix2d> {
    check_dim(problem.dimension(), theta.dim())?;
    let (a, b) = (steps.alpha, steps.beta);
    let k = theta.block(0, 0) * (b * b)
        + (theta.block(0, 1) + theta.block(1, 0)) * (a * b)
        + theta.block(1, 1) * (a * a);
    let inner = centred_sandwich(problem, &k)?;
    Ok(BlockMatrix2d::kron(&Matrix2::repeat(1.0), &inner))
}

#[cfg(test)]
mod tests {
    use super::super::block::{apply_t_tilde, coefficient_matrix};
    use super::*;
    use nalgebra::DVector;

    fn random_psd(d: usize, seed: u64) -> BlockMatrix2d {
        let mut rng = crate::rng_from_seed(seed);
        let g = crate::linalg::haar_orthogonal(2 * d, &mut rng);
        let l = DVector::from_fn(2 * d, |i, _| (i as f64 + 1.0) / (2 * d) as f64);
        BlockMatrix2d::from_dense(&g * DMatrix::from_diagonal(&l) * g.transpose()).unwrap()
    }

    fn uniform(d: usize) -> LeastSquaresProblem {
        LeastSquaresProblem::one_hot_uniform(d, &DVector::zeros(d)).unwrap()
    }

    #[test]
    fn single_atom_has_no_multiplicative_noise() {
        let p = uniform(1);
        let steps = StepSizes::new(0.1, 0.3).unwrap();
        let m = apply_m_exact(&p, &steps, &random_psd(1, 0)).unwrap();
        assert!(m.dense().amax() < 1e-16);
    }

    #[test]
    fn t_splits_into_t_tilde_plus_m() {
        let p = LeastSquaresProblem::one_hot(&[0.5, 0.2, 0.3], &DVector::zeros(3)).unwrap();
        let steps = StepSizes::new(0.05, 0.3).unwrap();
        let theta = random_psd(3, 1);
        let a = build_a(p.covariance(), &steps).unwrap();
        let lhs = apply_t_exact(&p, &steps, &theta).unwrap();
        let rhs = &apply_t_tilde(&a, &theta).unwrap() + &apply_m_exact(&p, &steps, &theta).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn factorized_forms_agree() {
        let p = uniform(4);
        let steps = StepSizes::new(1.0 / 48.0, 1.0 / 3.0).unwrap();
        for theta in [coefficient_matrix(p.covariance()), random_psd(4, 5)] {
            let m = apply_m_exact(&p, &steps, &theta).unwrap();
            let f = apply_m_factorized(&p, &steps, &theta).unwrap();
            assert!(m.max_abs_diff(&f) < 1e-12);
            let mt = apply_m_transpose_exact(&p, &steps, &theta).unwrap();
            let ft = apply_m_transpose_factorized(&p, &steps, &theta).unwrap();
            assert!(mt.max_abs_diff(&ft) < 1e-12);
        }
    }

    #[test]
    fn gaussian_is_unsupported() {
        let p = LeastSquaresProblem::gaussian(2, 1.0, 1.0, 0.0, 0).unwrap();
        let steps = StepSizes::new(0.1, 0.1).unwrap();
        assert_eq!(
            apply_m_exact(&p, &steps, &BlockMatrix2d::zeros(2)).unwrap_err(),
            Error::UnsupportedDistribution
        );
    }
}
