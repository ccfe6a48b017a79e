//! Covariance-operator algebra on `2d×2d` matrices.
//!
//! Writing `θ_t = (t(y_t − x*), z_t − x*)`, one step of the accelerated
//! recursion reads `θ_{t+1} = J_t θ_t + (t+1) η_t [βa; αa]` with
//! `J = [[I − βaaᵀ, I − βaaᵀ], [−αaaᵀ, I − αaaᵀ]]` and `A = E[J]`.
//! Second moments then evolve under `T ∘ Θ = E[J Θ Jᵀ]`, which splits as
//! `T̃ ∘ Θ = A Θ Aᵀ` plus `M ∘ Θ = E[(J − A) Θ (J − A)ᵀ]`.
//!
//! Everything here is dense and meant for small `d` (at most
//! [`MAX_OPERATOR_DIM`]).

mod block;
mod certify;
mod expectation;
mod inverse;
mod scalar;

pub use block::{apply_t_tilde, apply_t_tilde_transpose, build_a, coefficient_matrix, noise_matrix, BlockMatrix2d};
pub use certify::{
    exact_variance_covariance, jackknife_se, simulate_bias_variance, variance_covariance_bound_check,
    verify_almost_eigenvector, AlmostEigenReport, BiasVarianceReport, VarianceBoundReport, MC_SLACK_SE, PSD_FLOOR,
};
pub use expectation::{
    apply_m_exact, apply_m_factorized, apply_m_transpose_exact, apply_m_transpose_factorized, apply_t_exact,
};
pub use inverse::{
    inv_one_minus_t_tilde, inv_one_minus_t_tilde_noise, inv_one_minus_t_tilde_transpose, variance_bound_matrix,
    Eigenframe, NoiseInverse, MAX_OPERATOR_DIM,
};
pub use scalar::{
    aleph, bias_coefficient_spectral, bias_coefficient_truncated, gamma, geometric_series_bias_coefficient,
    geometric_series_closed_form, geometric_series_spectral, geometric_series_truncated, ScalarPairSystem,
    DEGENERATE_GAP, IMAGINARY_TOL,
};
