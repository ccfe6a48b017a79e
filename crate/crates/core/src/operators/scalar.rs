//! The 2×2 iteration matrix `Γ(a, b) = [[1−b, 1−b], [−a, 1−a]]` that the
//! block operator `A` reduces to on each eigenvector of `H` (with `a = αλ`,
//! `b = βλ`), and closed forms of its geometric series.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest tolerated imaginary part when a real quantity is evaluated through
/// complex eigenvalues.
pub const IMAGINARY_TOL: f64 = 1e-12;

/// Below this `|ρ₊ − ρ₋|` the spectral routes refuse to run: their error
/// grows like `ε/δ²`.
pub const DEGENERATE_GAP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPairSystem {
    pub a: f64,
    pub b: f64,
    pub gamma: Matrix2<f64>,
    pub rho_plus: Complex64,
    pub rho_minus: Complex64,
}

impl ScalarPairSystem {
    /// `ρ± = 1 − (a+b)/2 ± √(((a+b)/2)² − a)`, using a complex root when the
    /// discriminant is negative.
    pub fn new(a: f64, b: f64) -> Self {
        let m = 0.5 * (a + b);
        let root = Complex64::new(m * m - a, 0.0).sqrt();
        let centre = Complex64::new(1.0 - m, 0.0);
        Self {
            a,
            b,
            gamma: gamma(a, b),
            rho_plus: centre + root,
            rho_minus: centre - root,
        }
    }

    /// Whether the two eigenvalues are a complex-conjugate pair.
    pub fn is_complex(&self) -> bool {
        let m = 0.5 * (self.a + self.b);
        m * m - self.a < 0.0
    }

    pub fn delta(&self) -> Complex64 {
        self.rho_plus - self.rho_minus
    }

    /// `(|ρ₊ρ₋ − (1−b)|, |ρ₊+ρ₋ − (2−(a+b))|)`
    pub fn vieta_residuals(&self) -> (f64, f64) {
        let prod = self.rho_plus * self.rho_minus - Complex64::new(1.0 - self.b, 0.0);
        let sum = self.rho_plus + self.rho_minus - Complex64::new(2.0 - (self.a + self.b), 0.0);
        (prod.norm(), sum.norm())
    }

    pub fn spectral_radius(&self) -> f64 {
        self.rho_plus.norm().max(self.rho_minus.norm())
    }
}

pub fn gamma(a: f64, b: f64) -> Matrix2<f64> {
    Matrix2::new(1.0 - b, 1.0 - b, -a, 1.0 - a)
}

/// `ℵ = [b; a][b, a]`
pub fn aleph(a: f64, b: f64) -> Matrix2<f64> {
    Matrix2::new(b * b, a * b, a * b, a * a)
}

fn check_pair(a: f64, b: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0 {
        Ok(())
    } else {
        Err(Error::PairDomain { a, b })
    }
}

/// `Σ_{t≥0} Γᵗ ℵ (Γᵗ)ᵀ` in closed form:
/// `1/(b(4−(a+2b))) [[2a + b(2b−3a), a(2b−a)], [a(2b−a), 2a²]]`.
pub fn geometric_series_closed_form(a: f64, b: f64) -> Result<Matrix2<f64>> {
    check_pair(a, b)?;
    let s = 1.0 / (b * (4.0 - (a + 2.0 * b)));
    let off = a * (2.0 * b - a);
    Ok(Matrix2::new(2.0 * a + b * (2.0 * b - 3.0 * a), off, off, 2.0 * a * a) * s)
}

/// `Σ_{t≥0} (𝟙ᵀ Γᵗ [b; a])² = 2a/(b(4−(a+2b))) + (a+2b)/(4−(a+2b))`.
pub fn geometric_series_bias_coefficient(a: f64, b: f64) -> Result<f64> {
    check_pair(a, b)?;
    let q = 4.0 - (a + 2.0 * b);
    Ok(2.0 * a / (b * q) + (a + 2.0 * b) / q)
}

/// `Σ_{t≥0} (p ρ₊ᵗ + q ρ₋ᵗ)(r ρ₊ᵗ + s ρ₋ᵗ)`
fn paired_sum(sys: &ScalarPairSystem, p: Complex64, q: Complex64, r: Complex64, s: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let (rp, rm) = (sys.rho_plus, sys.rho_minus);
    p * r / (one - rp * rp) + (p * s + q * r) / (one - rp * rm) + q * s / (one - rm * rm)
}

fn real_part(z: Complex64) -> Result<f64> {
    let scale = z.re.abs().max(1.0);
    if z.im.abs() > IMAGINARY_TOL * scale {
        Err(Error::ImaginaryResidue(z.im.abs()))
    } else {
        Ok(z.re)
    }
}

fn spectral_system(a: f64, b: f64) -> Result<ScalarPairSystem> {
    check_pair(a, b)?;
    let sys = ScalarPairSystem::new(a, b);
    if sys.delta().norm() < DEGENERATE_GAP {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(sys)
}

/// Same series as [`geometric_series_closed_form`], summed through the
/// eigenvalues of `Γ`. With `δ = ρ₊ − ρ₋`,
///
/// ```text
/// δ Γᵗ[b; a] ∝ [ρ₋(1−ρ₊)²ρ₊ᵗ − ρ₊(1−ρ₋)²ρ₋ᵗ,  a((1−ρ₊)ρ₊ᵗ − (1−ρ₋)ρ₋ᵗ)]
/// ```
///
/// and each entry of the series is a sum of three geometric series.
pub fn geometric_series_spectral(a: f64, b: f64) -> Result<Matrix2<f64>> {
    let sys = spectral_system(a, b)?;
    let one = Complex64::new(1.0, 0.0);
    let (rp, rm, d) = (sys.rho_plus, sys.rho_minus, sys.delta());
    let f_p = rm * (one - rp) * (one - rp) / d;
    let f_m = -rp * (one - rm) * (one - rm) / d;
    let g_p = a * (one - rp) / d;
    let g_m = -a * (one - rm) / d;
    let n11 = real_part(paired_sum(&sys, f_p, f_m, f_p, f_m))?;
    let n12 = real_part(paired_sum(&sys, f_p, f_m, g_p, g_m))?;
    let n22 = real_part(paired_sum(&sys, g_p, g_m, g_p, g_m))?;
    Ok(Matrix2::new(n11, n12, n12, n22))
}

/// Same value as [`geometric_series_bias_coefficient`], as the sum of
/// `ν(t) = [((1−ρ₊)²ρ₊ᵗ − (1−ρ₋)²ρ₋ᵗ)/δ]²` through complex eigenvalues.
pub fn bias_coefficient_spectral(a: f64, b: f64) -> Result<f64> {
    let sys = spectral_system(a, b)?;
    let one = Complex64::new(1.0, 0.0);
    let (rp, rm, d) = (sys.rho_plus, sys.rho_minus, sys.delta());
    let h_p = (one - rp) * (one - rp) / d;
    let h_m = -(one - rm) * (one - rm) / d;
    real_part(paired_sum(&sys, h_p, h_m, h_p, h_m))
}

/// First `terms` terms of `Σ Γᵗ ℵ (Γᵗ)ᵀ` by repeated multiplication.
pub fn geometric_series_truncated(a: f64, b: f64, terms: usize) -> Matrix2<f64> {
    let g = gamma(a, b);
    let mut term = aleph(a, b);
    let mut acc = Matrix2::zeros();
    for _ in 0..terms {
        acc += term;
        term = g * term * g.transpose();
    }
    acc
}

/// First `terms` terms of `Σ (𝟙ᵀ Γᵗ [b; a])²`.
pub fn bias_coefficient_truncated(a: f64, b: f64, terms: usize) -> f64 {
    let g = gamma(a, b);
    let mut v = nalgebra::Vector2::new(b, a);
    let mut acc = 0.0;
    for _ in 0..terms {
        let s = v[0] + v[1];
        acc += s * s;
        v = g * v;
    }
    acc
}
