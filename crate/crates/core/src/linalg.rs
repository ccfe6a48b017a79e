//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;

/// Draws a Haar-distributed orthogonal matrix: QR of a standard Gaussian
/// matrix with the signs of `R`'s diagonal folded back into `Q`.
pub fn haar_orthogonal<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Smallest eigenvalue of the symmetric part `(m + mᵀ)/2`, with its unit
/// eigenvector.
pub fn min_sym_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("matrix is non-empty");
    (val, eig.eigenvectors.column(idx).into_owned())
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    min_sym_eigenpair(m).0
}

/// `vᵀ M v`
pub fn quad_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        let mut col = 0.0;
        for i in 0..m.nrows() {
            col += m[(i, j)] * v[i];
        }
        acc += col * v[j];
    }
    acc
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| f64::max(m, libm::fabs(x - y)))
}
