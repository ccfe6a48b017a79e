//! Gradient oracles for the least-squares risk.

use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::problem::{LeastSquaresProblem, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKind {
    /// Rank-one estimate from one sample.
    Sgd,
    /// Mean of `b` rank-one estimates.
    MiniBatch(usize),
    /// Noiseless population gradient `H(x − x*)`.
    Exact,
    /// `H(x − x*)` plus isotropic Gaussian noise with the given std.
    ExactAdditive(f64),
    /// Mean of the rank-one estimates over every sample seen so far,
    /// all evaluated at the current point.
    RunningAverage,
}

impl OracleKind {
    /// Samples consumed per call.
    pub fn samples_per_step(&self) -> usize {
        match self {
            OracleKind::MiniBatch(b) => *b,
            OracleKind::Exact | OracleKind::ExactAdditive(_) => 0,
            OracleKind::Sgd | OracleKind::RunningAverage => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OracleKind::Sgd => "sgd",
            OracleKind::MiniBatch(_) => "minibatch",
            OracleKind::Exact => "exact",
            OracleKind::ExactAdditive(_) => "exact_additive",
            OracleKind::RunningAverage => "running_average",
        }
    }
}

/// `a(⟨a, x⟩ − b)`
pub fn sgd_gradient(s: &Sample, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(s.features.len(), x.len())?;
    let mut out = DVector::zeros(x.len());
    sgd_gradient_into(s, x, &mut out);
    Ok(out)
}

/// Allocation-free [`sgd_gradient`]; dimensions are the caller's problem.
pub fn sgd_gradient_into(s: &Sample, x: &DVector<f64>, out: &mut DVector<f64>) {
    let r = s.features.dot(x) - s.response;
    out.copy_from(&s.features);
    *out *= r;
}

/// Arithmetic mean of the per-sample rank-one estimates.
pub fn minibatch_gradient(samples: &[Sample], x: &DVector<f64>) -> Result<DVector<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for s in samples {
        check_dim(x.len(), s.features.len())?;
    }
    let mut out = DVector::zeros(x.len());
    minibatch_gradient_into(samples, x, &mut out);
    Ok(out)
}

pub(crate) fn minibatch_gradient_into(samples: &[Sample], x: &DVector<f64>, out: &mut DVector<f64>) {
    // A batch of one goes through the single-sample path so the two agree bit for bit.
    if let [s] = samples {
        sgd_gradient_into(s, x, out);
        return;
    }
    out.fill(0.0);
    for s in samples {
        let r = s.features.dot(x) - s.response;
        out.axpy(r, &s.features, 1.0);
    }
    *out /= samples.len() as f64;
}

/// `H(x − x*) + ζ` with `ζ ~ N(0, noise_std² I)`. No variates are drawn when
/// `noise_std` is zero.
pub fn exact_gradient<R: rand::Rng + ?Sized>(
    problem: &LeastSquaresProblem,
    x: &DVector<f64>,
    noise_std: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    check_dim(problem.dimension(), x.len())?;
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::NegativeNoise(noise_std));
    }
    let mut out = DVector::zeros(x.len());
    let mut diff = DVector::zeros(x.len());
    exact_gradient_into(problem, x, noise_std, rng, &mut diff, &mut out);
    Ok(out)
}

pub(crate) fn exact_gradient_into<R: rand::Rng + ?Sized>(
    problem: &LeastSquaresProblem,
    x: &DVector<f64>,
    noise_std: f64,
    rng: &mut R,
    scratch: &mut DVector<f64>,
    out: &mut DVector<f64>,
) {
    scratch.copy_from(x);
    *scratch -= problem.optimum();
    out.gemv(1.0, problem.covariance(), scratch, 0.0);
    if noise_std > 0.0 {
        for v in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += noise_std * z;
        }
    }
}

/// Sufficient statistics `S = Σ aᵢaᵢᵀ` and `g = Σ bᵢaᵢ` of every sample seen,
/// so the running-average gradient costs `O(d²)` per call whatever `t` is.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverage {
    second_moment: DMatrix<f64>,
    cross_moment: DVector<f64>,
    count: usize,
}

impl RunningAverage {
    pub fn new(d: usize) -> Self {
        Self {
            second_moment: DMatrix::zeros(d, d),
            cross_moment: DVector::zeros(d),
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn ingest(&mut self, s: &Sample) -> Result<()> {
        check_dim(self.cross_moment.len(), s.features.len())?;
        self.ingest_unchecked(s);
        Ok(())
    }

    pub(crate) fn ingest_unchecked(&mut self, s: &Sample) {
        self.second_moment
            .ger(1.0, &s.features, &s.features, 1.0);
        self.cross_moment.axpy(s.response, &s.features, 1.0);
        self.count += 1;
    }

    /// `(S x − g) / t` over the `t` samples ingested so far.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cross_moment.len(), x.len())?;
        let mut out = DVector::zeros(x.len());
        self.gradient_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        if self.count == 0 {
            out.fill(0.0);
            return;
        }
        out.copy_from(&self.cross_moment);
        out.gemv(1.0, &self.second_moment, x, -1.0);
        *out /= self.count as f64;
    }

    /// Ingests `s`, then returns the average over every sample including it.
    pub fn ingest_and_gradient(&mut self, s: &Sample, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.ingest(s)?;
        self.gradient(x)
    }
}
