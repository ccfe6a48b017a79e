//! 2×2 block matrices over `d×d` blocks, acting on `θ = (v, w)`.

use core::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DMatrixView, Matrix2};

use crate::algorithms::StepSizes;
use crate::error::{check_dim, Result};
use crate::linalg;

/// `[[TL, TR], [BL, BR]]`, stored densely as a `2d×2d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix2d {
    d: usize,
    dense: DMatrix<f64>,
}

impl BlockMatrix2d {
    pub fn from_blocks(tl: &DMatrix<f64>, tr: &DMatrix<f64>, bl: &DMatrix<f64>, br: &DMatrix<f64>) -> Result<Self> {
        let d = tl.nrows();
        for m in [tl, tr, bl, br] {
            check_dim(d, m.nrows())?;
            check_dim(d, m.ncols())?;
        }
        let mut dense = DMatrix::zeros(2 * d, 2 * d);
        dense.view_mut((0, 0), (d, d)).copy_from(tl);
        dense.view_mut((0, d), (d, d)).copy_from(tr);
        dense.view_mut((d, 0), (d, d)).copy_from(bl);
        dense.view_mut((d, d), (d, d)).copy_from(br);
        Ok(Self { d, dense })
    }

    /// `s ⊗ m`, i.e. blocks `s_ij · m`.
    pub fn kron(s: &Matrix2<f64>, m: &DMatrix<f64>) -> Self {
        let d = m.nrows();
        let dense = DMatrix::from_fn(2 * d, 2 * d, |i, j| s[(i / d, j / d)] * m[(i % d, j % d)]);
        Self { d, dense }
    }

    pub fn from_dense(dense: DMatrix<f64>) -> Result<Self> {
        let n = dense.nrows();
        check_dim(n, dense.ncols())?;
        if n % 2 != 0 {
            return Err(crate::Error::InvalidParameter {
                name: "block matrix",
                reason: "side length must be even",
            });
        }
        Ok(Self { d: n / 2, dense })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            dense: DMatrix::zeros(2 * d, 2 * d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            dense: DMatrix::identity(2 * d, 2 * d),
        }
    }

    /// Block size `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn into_dense(self) -> DMatrix<f64> {
        self.dense
    }

    /// Block `(i, j)` with `i, j ∈ {0, 1}`.
    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        assert!(i < 2 && j < 2, "block index out of range");
        self.dense.view((i * self.d, j * self.d), (self.d, self.d))
    }

    pub fn transpose(&self) -> Self {
        Self {
            d: self.d,
            dense: self.dense.transpose(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        linalg::max_abs_diff(&self.dense, &self.dense.transpose()) <= tol
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_sym_eigenvalue(&self.dense)
    }

    pub fn frobenius(&self) -> f64 {
        self.dense.norm()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.dense, &other.dense)
    }

    /// Sum of the four blocks, `P + Q + R + S`.
    pub fn block_sum(&self) -> DMatrix<f64> {
        let d = self.d;
        DMatrix::from_fn(d, d, |i, j| {
            self.dense[(i, j)] + self.dense[(i, j + d)] + self.dense[(i + d, j)] + self.dense[(i + d, j + d)]
        })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        check_dim(self.d, other.d)
    }
}

impl Add for &BlockMatrix2d {
    type Output = BlockMatrix2d;
    fn add(self, rhs: Self) -> BlockMatrix2d {
        BlockMatrix2d {
            d: self.d,
            dense: &self.dense + &rhs.dense,
        }
    }
}

impl Sub for &BlockMatrix2d {
    type Output = BlockMatrix2d;
    fn sub(self, rhs: Self) -> BlockMatrix2d {
        BlockMatrix2d {
            d: self.d,
            dense: &self.dense - &rhs.dense,
        }
    }
}

impl Mul<f64> for &BlockMatrix2d {
    type Output = BlockMatrix2d;
    fn mul(self, rhs: f64) -> BlockMatrix2d {
        BlockMatrix2d {
            d: self.d,
            dense: &self.dense * rhs,
        }
    }
}

/// `A = [[I − βH, I − βH], [−αH, I − αH]]`, the mean of the random iteration
/// matrix.
pub fn build_a(h: &DMatrix<f64>, steps: &StepSizes) -> Result<BlockMatrix2d> {
    let d = h.nrows();
    check_dim(d, h.ncols())?;
    let id = DMatrix::identity(d, d);
    let top = &id - h * steps.beta;
    BlockMatrix2d::from_blocks(&top, &top, &(h * -steps.alpha), &(&id - h * steps.alpha))
}

/// `Σ_noise = [[β²H, αβH], [αβH, α²H]]`
pub fn noise_matrix(h: &DMatrix<f64>, steps: &StepSizes) -> BlockMatrix2d {
    let (a, b) = (steps.alpha, steps.beta);
    BlockMatrix2d::kron(&Matrix2::new(b * b, a * b, a * b, a * a), h)
}

/// `Υ = [[H, H], [H, H]]`, so that `⟨Υ, θθᵀ⟩ = (v+w)ᵀH(v+w)`.
pub fn coefficient_matrix(h: &DMatrix<f64>) -> BlockMatrix2d {
    BlockMatrix2d::kron(&Matrix2::repeat(1.0), h)
}

/// `T̃ ∘ Θ = A Θ Aᵀ`
pub fn apply_t_tilde(a: &BlockMatrix2d, theta: &BlockMatrix2d) -> Result<BlockMatrix2d> {
    a.check_same(theta)?;
    Ok(BlockMatrix2d {
        d: a.d,
        dense: &a.dense * &theta.dense * a.dense.transpose(),
    })
}

/// `T̃ᵀ ∘ Θ = Aᵀ Θ A`
pub fn apply_t_tilde_transpose(a: &BlockMatrix2d, theta: &BlockMatrix2d) -> Result<BlockMatrix2d> {
    a.check_same(theta)?;
    Ok(BlockMatrix2d {
        d: a.d,
        dense: a.dense.transpose() * &theta.dense * &a.dense,
    })
}
