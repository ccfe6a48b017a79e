//! The accelerated recursion, the SGD baseline, iterate averaging and the
//! seeded run loop.
//!
//! Accelerated SGD keeps three sequences started from a common point:
//!
//! ```text
//! y_{t+1} = x_t − β g_t
//! z_{t+1} = z_t − α (t+1) g_t
//! (t+2) x_{t+1} = (t+1) y_{t+1} + z_{t+1}
//! ```
//!
//! `α = 0` is averaged gradient descent, `β = 0` is a heavy-ball method and
//! `α = β` with exact gradients is Nesterov's accelerated gradient.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::oracles::{self, OracleKind, RunningAverage};
use crate::problem::{LeastSquaresProblem, ProblemConstants, Sample};

/// Risk above which a run counts as diverged.
pub const DIVERGENCE_RISK: f64 = 1e12;

/// Relative slack on the step-size inequalities so that rules hitting a
/// boundary exactly are not rejected by rounding.
const REGIME_SLACK: f64 = 1e-12;

fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + REGIME_SLACK)
}

/// The pair `(α, β)`. SGD reads its step `γ` from `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub beta: f64,
}

impl StepSizes {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::StepDomain("alpha must be finite and nonnegative"));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::StepDomain("beta must be finite and nonnegative"));
        }
        Ok(Self { alpha, beta })
    }

    /// Rule for the weighted average: `β = 1/(3R²)`, `α = 1/(6κ̃R²)`.
    pub fn averaged_default(c: &ProblemConstants) -> Self {
        Self {
            alpha: 1.0 / (6.0 * c.stat_condition * c.r_squared),
            beta: 1.0 / (3.0 * c.r_squared),
        }
    }

    /// Rule for the last iterate: `β = 1/(3κ tr H)`, `α = 1/(6dκ² tr H)`.
    pub fn last_iterate_default(c: &ProblemConstants) -> Self {
        let d = c.dimension as f64;
        Self {
            alpha: 1.0 / (6.0 * d * c.kurtosis * c.kurtosis * c.trace_h),
            beta: 1.0 / (3.0 * c.kurtosis * c.trace_h),
        }
    }

    /// Steps used in the benchmark experiments: `β = 1/(3 tr H)`,
    /// `α = 1/(3d tr H)`.
    pub fn experiment_default(c: &ProblemConstants) -> Self {
        let d = c.dimension as f64;
        Self {
            alpha: 1.0 / (3.0 * d * c.trace_h),
            beta: 1.0 / (3.0 * c.trace_h),
        }
    }

    /// SGD baseline: `γ = 1/(3 tr H)` for Gaussian features, `1/(3R²)`
    /// otherwise. Returned with `α = 0`.
    pub fn sgd_default(problem: &LeastSquaresProblem) -> Self {
        let c = problem.constants();
        let gamma = if problem.is_one_hot() {
            1.0 / (3.0 * c.r_squared)
        } else {
            1.0 / (3.0 * c.trace_h)
        };
        Self { alpha: 0.0, beta: gamma }
    }

    /// `(α + 2β) R² ≤ 1` and `α ≤ β/(2κ̃)`.
    pub fn averaged_regime(&self, c: &ProblemConstants) -> bool {
        le((self.alpha + 2.0 * self.beta) * c.r_squared, 1.0)
            && le(self.alpha, self.beta / (2.0 * c.stat_condition))
    }

    /// `κ(α + 2β) tr H ≤ 1` and `α ≤ β/(2κd)`.
    pub fn last_iterate_regime(&self, c: &ProblemConstants) -> bool {
        let d = c.dimension as f64;
        le(c.kurtosis * (self.alpha + 2.0 * self.beta) * c.trace_h, 1.0)
            && le(self.alpha, self.beta / (2.0 * c.kurtosis * d))
    }

    /// Mini-batch of size `b`: `(α + 2β)R² ≤ b`, `α ≤ bβ/(2κ̃)`, `α, β ≤ 1/L`.
    pub fn minibatch_regime(&self, c: &ProblemConstants, b: usize) -> bool {
        let b = b as f64;
        le((self.alpha + 2.0 * self.beta) * c.r_squared, b)
            && le(self.alpha, b * self.beta / (2.0 * c.stat_condition))
            && le(self.alpha, 1.0 / c.l_smooth)
            && le(self.beta, 1.0 / c.l_smooth)
    }

    /// Upper bound on the expected risk of the weighted average after `t`
    /// steps in the averaged regime:
    /// `min{12/(αt²), 48/(βt)} ‖x₀ − x*‖² + 72σ²d/t`.
    pub fn averaged_bound(&self, t: u64, dist_sq: f64, c: &ProblemConstants) -> f64 {
        if t == 0 {
            return f64::INFINITY;
        }
        let t = t as f64;
        let bias = f64::min(12.0 / (self.alpha * t * t), 48.0 / (self.beta * t));
        bias * dist_sq + 72.0 * c.noise_var * c.dimension as f64 / t
    }
}

/// The three sequences plus the running weighted average
/// `Σ (τ+1) x_τ / Σ (τ+1)`, in which `x₀` has weight 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AcsgdState {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub t: u64,
    pub weighted_sum: DVector<f64>,
    pub weight_total: f64,
}

impl AcsgdState {
    pub fn new(x0: DVector<f64>) -> Self {
        Self {
            y: x0.clone(),
            z: x0.clone(),
            weighted_sum: x0.clone(),
            weight_total: 1.0,
            x: x0,
            t: 0,
        }
    }

    /// One update with the gradient `g` evaluated at the current `x`.
    pub fn step(&mut self, g: &DVector<f64>, steps: &StepSizes) {
        let tp1 = (self.t + 1) as f64;
        let tp2 = (self.t + 2) as f64;
        self.y.copy_from(&self.x);
        self.y.axpy(-steps.beta, g, 1.0);
        self.z.axpy(-steps.alpha * tp1, g, 1.0);
        self.x.copy_from(&self.z);
        self.x.axpy(tp1, &self.y, 1.0);
        self.x /= tp2;
        self.weighted_sum.axpy(tp2, &self.x, 1.0);
        self.weight_total += tp2;
        self.t += 1;
    }

    pub fn weighted_average(&self) -> DVector<f64> {
        &self.weighted_sum / self.weight_total
    }

    /// `‖(t+1) x_t − t y_t − z_t‖`, which is zero in exact arithmetic.
    pub fn coupling_residual(&self) -> f64 {
        let t = self.t as f64;
        (&self.x * (t + 1.0) - &self.y * t - &self.z).norm()
    }

    /// Time-rescaled errors `u = (t+1)(x − x*)`, `v = t(y − x*)`,
    /// `w = z − x*`, which satisfy `u = v + w`.
    pub fn rescaled(&self, optimum: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let t = self.t as f64;
        let u = (&self.x - optimum) * (t + 1.0);
        let v = (&self.y - optimum) * t;
        let w = &self.z - optimum;
        (u, v, w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    AcSgd,
    /// `x_{t+1} = x_t − γ g_t` with `γ = β`.
    Sgd,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::AcSgd => "acsgd",
            Algorithm::Sgd => "sgd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Averaging {
    LastIterate,
    /// Weights `t+1` on `x_t`.
    Weighted,
    /// Uniform mean of every iterate.
    Polyak,
    /// Uniform mean of the last `⌈f T⌉` iterates. Before the tail starts the
    /// "averaged" risk is the last-iterate risk.
    Tail(f64),
}

impl Averaging {
    pub fn name(&self) -> &'static str {
        match self {
            Averaging::LastIterate => "last",
            Averaging::Weighted => "weighted",
            Averaging::Polyak => "polyak",
            Averaging::Tail(_) => "tail",
        }
    }

    /// Weight of iterate `t` in a run of `total` steps (zero: not averaged).
    fn weight(&self, t: u64, total: u64) -> f64 {
        match *self {
            Averaging::LastIterate => 0.0,
            Averaging::Weighted => (t + 1) as f64,
            Averaging::Polyak => 1.0,
            Averaging::Tail(f) => {
                if t >= tail_start(f, total) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// First index of the tail average over `x_0..x_T`.
fn tail_start(fraction: f64, total: u64) -> u64 {
    let len = libm::ceil(fraction * total as f64) as u64;
    (total + 1).saturating_sub(len.max(1))
}

/// Iterations at which the risk is logged: `0`, `T` and a geometric grid in
/// between.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogSchedule {
    points: Vec<u64>,
}

impl LogSchedule {
    pub const DEFAULT_PER_DECADE: u32 = 50;

    pub fn geometric(total: u64, per_decade: u32) -> Self {
        let mut points = alloc::vec![0];
        if total > 0 {
            let mut k = 0u32;
            loop {
                let t = libm::round(libm::pow(10.0, k as f64 / per_decade.max(1) as f64)) as u64;
                if t >= total {
                    break;
                }
                if *points.last().unwrap() != t {
                    points.push(t);
                }
                k += 1;
            }
            points.push(total);
        }
        Self { points }
    }

    pub fn every(total: u64) -> Self {
        Self {
            points: (0..=total).collect(),
        }
    }

    /// Sorted, deduplicated, clipped to `[0, total]`.
    pub fn from_points(mut points: Vec<u64>, total: u64) -> Self {
        points.retain(|&t| t <= total);
        points.sort_unstable();
        points.dedup();
        Self { points }
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub oracle: OracleKind,
    pub steps: StepSizes,
    pub iterations: u64,
    pub averaging: Averaging,
    pub schedule: LogSchedule,
    pub seed: u64,
    /// Starting point; the origin when `None`.
    pub start: Option<DVector<f64>>,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, oracle: OracleKind, steps: StepSizes, iterations: u64) -> Self {
        Self {
            algorithm,
            oracle,
            steps,
            iterations,
            averaging: Averaging::Weighted,
            schedule: LogSchedule::geometric(iterations, LogSchedule::DEFAULT_PER_DECADE),
            seed: 0,
            start: None,
        }
    }

    pub fn averaging(mut self, averaging: Averaging) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn schedule(mut self, schedule: LogSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn start(mut self, start: DVector<f64>) -> Self {
        self.start = Some(start);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPoint {
    pub t: u64,
    /// Samples drawn so far.
    pub samples: u64,
    pub last_risk: f64,
    pub averaged_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub algorithm: Algorithm,
    pub oracle: OracleKind,
    pub averaging: Averaging,
    pub steps: StepSizes,
    pub seed: u64,
    pub dimension: usize,
    pub noise_std: f64,
    pub one_hot: bool,
    pub warnings: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub points: Vec<LogPoint>,
    pub diverged: bool,
    pub meta: RunMeta,
}

impl RunRecord {
    pub fn last(&self) -> Option<&LogPoint> {
        self.points.last()
    }
}

enum Iterate {
    Accelerated(AcsgdState),
    Plain { x: DVector<f64>, t: u64 },
}

/// Step-by-step driver behind [`run`]. Useful when a caller needs to inspect
/// every iterate, e.g. to check which directions the updates span.
pub struct Runner<'a> {
    problem: &'a LeastSquaresProblem,
    config: &'a RunConfig,
    rng: crate::Rng,
    iterate: Iterate,
    batch: Vec<Sample>,
    running: Option<RunningAverage>,
    grad: DVector<f64>,
    scratch: DVector<f64>,
    avg_sum: DVector<f64>,
    avg_weight: f64,
    samples: u64,
}

impl<'a> Runner<'a> {
    pub fn new(problem: &'a LeastSquaresProblem, config: &'a RunConfig) -> Result<Self> {
        let d = problem.dimension();
        let x0 = match &config.start {
            Some(s) => {
                check_dim(d, s.len())?;
                s.clone()
            }
            None => DVector::zeros(d),
        };
        if let OracleKind::MiniBatch(0) = config.oracle {
            return Err(Error::EmptyBatch);
        }
        if let OracleKind::ExactAdditive(s) = config.oracle {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::NegativeNoise(s));
            }
        }
        if let Averaging::Tail(f) = config.averaging {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "tail fraction",
                    reason: "must lie in (0, 1]",
                });
            }
        }
        let batch_len = config.oracle.samples_per_step();
        let w0 = config.averaging.weight(0, config.iterations);
        let iterate = match config.algorithm {
            Algorithm::AcSgd => Iterate::Accelerated(AcsgdState::new(x0.clone())),
            Algorithm::Sgd => Iterate::Plain { x: x0.clone(), t: 0 },
        };
        Ok(Self {
            problem,
            config,
            rng: crate::rng_from_seed(config.seed),
            iterate,
            batch: (0..batch_len).map(|_| Sample::zeros(d)).collect(),
            running: matches!(config.oracle, OracleKind::RunningAverage).then(|| RunningAverage::new(d)),
            grad: DVector::zeros(d),
            scratch: DVector::zeros(d),
            avg_sum: x0 * w0,
            avg_weight: w0,
            samples: 0,
        })
    }

    pub fn t(&self) -> u64 {
        match &self.iterate {
            Iterate::Accelerated(s) => s.t,
            Iterate::Plain { t, .. } => *t,
        }
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Current iterate `x_t`.
    pub fn x(&self) -> &DVector<f64> {
        match &self.iterate {
            Iterate::Accelerated(s) => &s.x,
            Iterate::Plain { x, .. } => x,
        }
    }

    /// Full state of the accelerated recursion, `None` for SGD.
    pub fn accelerated(&self) -> Option<&AcsgdState> {
        match &self.iterate {
            Iterate::Accelerated(s) => Some(s),
            Iterate::Plain { .. } => None,
        }
    }

    /// Samples drawn by the most recent step.
    pub fn last_batch(&self) -> &[Sample] {
        &self.batch
    }

    /// Gradient used by the most recent step.
    pub fn last_gradient(&self) -> &DVector<f64> {
        &self.grad
    }

    /// Averaged iterate under the configured scheme. Falls back to the last
    /// iterate while nothing has been averaged yet.
    pub fn averaged(&self) -> DVector<f64> {
        if self.avg_weight > 0.0 {
            &self.avg_sum / self.avg_weight
        } else {
            self.x().clone()
        }
    }

    /// Advances one iteration.
    pub fn step(&mut self) {
        let x = match &self.iterate {
            Iterate::Accelerated(s) => &s.x,
            Iterate::Plain { x, .. } => x,
        };
        match self.config.oracle {
            OracleKind::Sgd => {
                self.problem.sample_into(&mut self.rng, &mut self.batch[0]);
                oracles::sgd_gradient_into(&self.batch[0], x, &mut self.grad);
            }
            OracleKind::MiniBatch(_) => {
                for s in self.batch.iter_mut() {
                    self.problem.sample_into(&mut self.rng, s);
                }
                oracles::minibatch_gradient_into(&self.batch, x, &mut self.grad);
            }
            OracleKind::Exact => {
                oracles::exact_gradient_into(self.problem, x, 0.0, &mut self.rng, &mut self.scratch, &mut self.grad);
            }
            OracleKind::ExactAdditive(s) => {
                oracles::exact_gradient_into(self.problem, x, s, &mut self.rng, &mut self.scratch, &mut self.grad);
            }
            OracleKind::RunningAverage => {
                self.problem.sample_into(&mut self.rng, &mut self.batch[0]);
                let ra = self.running.as_mut().expect("allocated for this oracle");
                ra.ingest_unchecked(&self.batch[0]);
                ra.gradient_into(x, &mut self.grad);
            }
        }
        self.samples += self.batch.len() as u64;

        let t_new = match &mut self.iterate {
            Iterate::Accelerated(s) => {
                s.step(&self.grad, &self.config.steps);
                s.t
            }
            Iterate::Plain { x, t } => {
                x.axpy(-self.config.steps.beta, &self.grad, 1.0);
                *t += 1;
                *t
            }
        };
        let w = self.config.averaging.weight(t_new, self.config.iterations);
        if w > 0.0 {
            let x = match &self.iterate {
                Iterate::Accelerated(s) => &s.x,
                Iterate::Plain { x, .. } => x,
            };
            self.avg_sum.axpy(w, x, 1.0);
            self.avg_weight += w;
        }
    }

    fn log_point(&self) -> LogPoint {
        let last_risk = self.problem.excess_risk_unchecked(self.x());
        let averaged_risk = match self.config.averaging {
            Averaging::LastIterate => last_risk,
            _ if self.avg_weight == 0.0 => last_risk,
            _ => self.problem.excess_risk_unchecked(&self.averaged()),
        };
        LogPoint {
            t: self.t(),
            samples: self.samples,
            last_risk,
            averaged_risk,
        }
    }
}

fn regime_warnings(problem: &LeastSquaresProblem, config: &RunConfig) -> Vec<&'static str> {
    let c = problem.constants();
    let s = &config.steps;
    let mut w = Vec::new();
    match config.algorithm {
        Algorithm::AcSgd => {
            let ok = match config.oracle {
                OracleKind::MiniBatch(b) => s.minibatch_regime(&c, b),
                _ => s.averaged_regime(&c) || s.last_iterate_regime(&c),
            };
            if !ok {
                w.push("step sizes satisfy neither the averaged nor the last-iterate conditions");
            }
        }
        Algorithm::Sgd => {
            if s.beta * c.r_squared > 1.0 {
                w.push("SGD step exceeds 1/R²");
            }
        }
    }
    w
}

/// Runs one seeded trajectory of `config.iterations` steps and logs the risk
/// of the last and averaged iterates on the schedule. A non-finite iterate or
/// a risk above [`DIVERGENCE_RISK`] stops the run and sets `diverged`.
pub fn run(problem: &LeastSquaresProblem, config: &RunConfig) -> Result<RunRecord> {
    let mut runner = Runner::new(problem, config)?;
    let meta = RunMeta {
        algorithm: config.algorithm,
        oracle: config.oracle,
        averaging: config.averaging,
        steps: config.steps,
        seed: config.seed,
        dimension: problem.dimension(),
        noise_std: problem.noise_std(),
        one_hot: problem.is_one_hot(),
        warnings: regime_warnings(problem, config),
    };
    let schedule = config.schedule.points();
    let mut points = Vec::with_capacity(schedule.len());
    let mut next = 0;
    let mut diverged = false;
    loop {
        let t = runner.t();
        if next < schedule.len() && schedule[next] == t {
            let p = runner.log_point();
            if !(p.last_risk.is_finite() && p.averaged_risk.is_finite())
                || p.last_risk > DIVERGENCE_RISK
                || p.averaged_risk > DIVERGENCE_RISK
            {
                diverged = true;
                break;
            }
            points.push(p);
            next += 1;
        }
        if t >= config.iterations {
            break;
        }
        runner.step();
        if !runner.x().iter().all(|v| v.is_finite()) {
            diverged = true;
            break;
        }
    }
    Ok(RunRecord {
        points,
        diverged,
        meta,
    })
}

/// [`run`] with a mini-batch oracle of size `batch`.
pub fn run_minibatch(problem: &LeastSquaresProblem, batch: usize, config: &RunConfig) -> Result<RunRecord> {
    if batch == 0 {
        return Err(Error::EmptyBatch);
    }
    let mut config = config.clone();
    config.oracle = OracleKind::MiniBatch(batch);
    run(problem, &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn uniform(d: usize) -> LeastSquaresProblem {
        LeastSquaresProblem::one_hot_uniform(d, &DVector::zeros(d)).unwrap()
    }

    #[test]
    fn averaged_rule_examples() {
        let p = uniform(50);
        let s = StepSizes::averaged_default(&p.constants());
        assert!((s.beta - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.alpha - 1.0 / 300.0).abs() < 1e-15);
        assert!(s.averaged_regime(&p.constants()));

        let q = uniform(1);
        let s = StepSizes::averaged_default(&q.constants());
        assert!((s.alpha - 1.0 / 6.0).abs() < 1e-15);
        assert!(((s.alpha + 2.0 * s.beta) - 5.0 / 6.0).abs() < 1e-15);

        let g = LeastSquaresProblem::gaussian(3, 4.0, 1.0, 0.0, 1).unwrap();
        let c = g.constants();
        let r2 = 1.0 + 1.0 / 16.0 + 1.0 / 81.0 + 2.0;
        assert!((c.r_squared - r2).abs() < 1e-12);
        assert!((StepSizes::averaged_default(&c).beta - 1.0 / (3.0 * r2)).abs() < 1e-15);
    }

    #[test]
    fn last_iterate_rule_examples() {
        let mut c = LeastSquaresProblem::gaussian(50, 0.0, 1.0, 0.0, 0).unwrap().constants();
        c.trace_h = 1.0;
        let s = StepSizes::last_iterate_default(&c);
        assert!((s.beta - 1.0 / 9.0).abs() < 1e-15);
        assert!((s.alpha - 1.0 / 2700.0).abs() < 1e-15);
        assert!(s.last_iterate_regime(&c));

        let e = StepSizes::experiment_default(&c);
        assert!((e.beta - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.alpha - 1.0 / 150.0).abs() < 1e-15);

        let one = uniform(1).constants();
        let s = StepSizes::last_iterate_default(&one);
        assert!((s.beta - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.alpha - 1.0 / 6.0).abs() < 1e-15);
        assert!(s.last_iterate_regime(&one));
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let x0 = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let mut s = AcsgdState::new(x0.clone());
        let steps = StepSizes::new(0.1, 0.3).unwrap();
        let g = DVector::zeros(3);
        for _ in 0..10 {
            s.step(&g, &steps);
            assert_eq!(s.x, x0);
        }
        assert!((s.weighted_average() - &x0).amax() < 1e-15);
    }

    #[test]
    fn weight_total_is_triangular() {
        let mut s = AcsgdState::new(DVector::zeros(2));
        let steps = StepSizes::new(0.01, 0.1).unwrap();
        let g = DVector::from_vec(vec![1.0, -1.0]);
        for t in 1..=30u64 {
            s.step(&g, &steps);
            assert_eq!(s.weight_total, ((t + 1) * (t + 2) / 2) as f64);
            assert!(s.coupling_residual() <= 1e-10 * (1.0 + s.x.norm()));
        }
    }

    #[test]
    fn schedule_shape() {
        let s = LogSchedule::geometric(10, 50);
        assert_eq!(s.points(), &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let s = LogSchedule::geometric(1_000_000, 50);
        assert_eq!(*s.points().last().unwrap(), 1_000_000);
        assert!(s.points().windows(2).all(|w| w[0] < w[1]));
        // ~50 per decade over six decades, minus duplicates near t = 1.
        assert!(s.points().len() > 200 && s.points().len() < 310);
        assert_eq!(LogSchedule::geometric(0, 50).points(), &[0]);
    }

    #[test]
    fn single_step_logs_initial_risk() {
        let p = uniform(4);
        let steps = StepSizes::averaged_default(&p.constants());
        let cfg = RunConfig::new(Algorithm::AcSgd, OracleKind::Sgd, steps, 1);
        let r = run(&p, &cfg).unwrap();
        assert_eq!(r.points[0].t, 0);
        assert!((r.points[0].last_risk - 0.125).abs() < 1e-15);
        assert_eq!(r.points.len(), 2);
    }

    #[test]
    fn runs_are_deterministic() {
        let p = LeastSquaresProblem::gaussian(5, 2.0, 1.0, 0.1, 3).unwrap();
        let steps = StepSizes::experiment_default(&p.constants());
        let cfg = RunConfig::new(Algorithm::AcSgd, OracleKind::Sgd, steps, 500).seed(11);
        assert_eq!(run(&p, &cfg).unwrap(), run(&p, &cfg).unwrap());
    }

    #[test]
    fn divergence_is_flagged() {
        let p = uniform(4);
        let steps = StepSizes::new(0.0, 5.0).unwrap();
        let cfg = RunConfig::new(Algorithm::Sgd, OracleKind::Sgd, steps, 10_000);
        let r = run(&p, &cfg).unwrap();
        assert!(r.diverged);
        assert!(!r.meta.warnings.is_empty());
        assert!(r.points.iter().all(|p| p.last_risk <= DIVERGENCE_RISK));
    }

    #[test]
    fn tail_average_covers_final_iterates() {
        assert_eq!(tail_start(0.5, 10), 6);
        assert_eq!(tail_start(1.0, 10), 1);
        assert_eq!(tail_start(0.01, 10), 10);
    }

    #[test]
    fn rejects_bad_configs() {
        let p = uniform(3);
        let steps = StepSizes::new(0.1, 0.1).unwrap();
        let cfg = RunConfig::new(Algorithm::AcSgd, OracleKind::Sgd, steps, 5).start(DVector::zeros(2));
        assert!(matches!(run(&p, &cfg), Err(Error::DimensionMismatch { .. })));
        let cfg = RunConfig::new(Algorithm::AcSgd, OracleKind::Sgd, steps, 5).averaging(Averaging::Tail(0.0));
        assert!(run(&p, &cfg).is_err());
        assert_eq!(run_minibatch(&p, 0, &cfg).unwrap_err(), Error::EmptyBatch);
        assert!(StepSizes::new(-1.0, 0.1).is_err());
    }
}
