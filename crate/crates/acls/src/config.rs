//! JSON experiment configuration.
//!
//! A config names an experiment and may override any of its defaults. Unknown
//! keys are rejected. [`ExperimentConfig::resolve`] fills the defaults,
//! validates everything and computes concrete step sizes.

use std::path::{Path, PathBuf};

use acls_core::algorithms::{Algorithm, Averaging, StepSizes};
use acls_core::oracles::OracleKind;
use acls_core::problem::LeastSquaresProblem;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LastIterateNoiseless,
    AveragedNoisy,
    MemoryTradeoff,
    LowerBound,
    OperatorVerify,
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::LastIterateNoiseless => "last_iterate_noiseless",
            ExperimentKind::AveragedNoisy => "averaged_noisy",
            ExperimentKind::MemoryTradeoff => "memory_tradeoff",
            ExperimentKind::LowerBound => "lower_bound",
            ExperimentKind::OperatorVerify => "operator_verify",
            ExperimentKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Gaussian,
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Acsgd,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleName {
    Sgd,
    Minibatch,
    Exact,
    ExactAdditive,
    RunningAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingName {
    Last,
    Weighted,
    Polyak,
    Tail,
}

/// Named step-size rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `β = 1/(3 tr H)`, `α = 1/(3d tr H)`.
    Experiment,
    /// `α = β = 1/(3 tr H)`, for the running-average oracle.
    FullMemory,
    /// `β = 1/(3R²)`, `α = 1/(6κ̃R²)`.
    Averaged,
    /// `β = 1/(3κ tr H)`, `α = 1/(6dκ² tr H)`.
    LastIterate,
    /// SGD baseline step, `α = 0`.
    Sgd,
}

/// Step sizes for the operator checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSteps {
    Cor1,
    Thm2,
}

impl OperatorSteps {
    pub fn rule(&self) -> StepRule {
        match self {
            OperatorSteps::Cor1 => StepRule::Averaged,
            OperatorSteps::Thm2 => StepRule::LastIterate,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: Option<ProblemKind>,
    pub d: Option<usize>,
    pub decay: Option<f64>,
    pub scale: Option<f64>,
    pub sigma: Option<f64>,
    /// Seed of the random eigenbasis.
    pub seed: Option<u64>,
    pub probabilities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub algorithm: AlgorithmName,
    pub label: Option<String>,
    pub oracle: Option<OracleName>,
    pub batch: Option<usize>,
    pub noise_std: Option<f64>,
    pub averaging: Option<AveragingName>,
    pub tail_fraction: Option<f64>,
    pub steps: Option<StepRule>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl AlgorithmSpec {
    fn preset(algorithm: AlgorithmName, oracle: OracleName, averaging: AveragingName, steps: StepRule) -> Self {
        Self {
            algorithm,
            label: None,
            oracle: Some(oracle),
            batch: None,
            noise_std: None,
            averaging: Some(averaging),
            tail_fraction: None,
            steps: Some(steps),
            alpha: None,
            beta: None,
        }
    }
}

/// Config as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub problem: ProblemSpec,
    pub algorithms: Option<Vec<AlgorithmSpec>>,
    pub iterations: Option<u64>,
    pub repetitions: Option<usize>,
    pub base_seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub per_decade: Option<u32>,
    pub slope_window: Option<(f64, f64)>,
    /// Checkpoint whose risk the memory trade-off compares against.
    pub reference_t: Option<u64>,
    pub operator_steps: Option<OperatorSteps>,
    pub operator_dims: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedProblem {
    pub kind: ProblemKind,
    pub d: usize,
    pub decay: Option<f64>,
    pub scale: Option<f64>,
    pub sigma: f64,
    pub seed: Option<u64>,
    pub probabilities: Option<Vec<f64>>,
}

impl ResolvedProblem {
    /// Builds the problem, started from the origin.
    pub fn build(&self) -> Result<LeastSquaresProblem> {
        Ok(match self.kind {
            ProblemKind::Gaussian => LeastSquaresProblem::gaussian(
                self.d,
                self.decay.unwrap_or(4.0),
                self.scale.unwrap_or(1.0),
                self.sigma,
                self.seed.unwrap_or(0),
            )?,
            ProblemKind::OneHot => {
                let start = DVector::zeros(self.d);
                let p = match &self.probabilities {
                    Some(p) => LeastSquaresProblem::one_hot(p, &start)?,
                    None => LeastSquaresProblem::one_hot_uniform(self.d, &start)?,
                };
                p.with_noise(self.sigma)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedAlgorithm {
    /// Value of the CSV `algorithm` column.
    pub label: String,
    pub algorithm: AlgorithmName,
    pub oracle: OracleName,
    pub batch: Option<usize>,
    pub noise_std: Option<f64>,
    pub averaging: AveragingName,
    pub tail_fraction: Option<f64>,
    pub steps: Option<StepRule>,
    pub alpha: f64,
    pub beta: f64,
}

impl ResolvedAlgorithm {
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm.into()
    }

    pub fn oracle(&self) -> OracleKind {
        match self.oracle {
            OracleName::Sgd => OracleKind::Sgd,
            OracleName::Minibatch => OracleKind::MiniBatch(self.batch.unwrap_or(1)),
            OracleName::Exact => OracleKind::Exact,
            OracleName::ExactAdditive => OracleKind::ExactAdditive(self.noise_std.unwrap_or(0.0)),
            OracleName::RunningAverage => OracleKind::RunningAverage,
        }
    }

    pub fn averaging(&self) -> Averaging {
        match self.averaging {
            AveragingName::Last => Averaging::LastIterate,
            AveragingName::Weighted => Averaging::Weighted,
            AveragingName::Polyak => Averaging::Polyak,
            AveragingName::Tail => Averaging::Tail(self.tail_fraction.unwrap_or(0.5)),
        }
    }

    pub fn step_sizes(&self) -> StepSizes {
        StepSizes {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSettings {
    pub steps: OperatorSteps,
    pub dims: Vec<usize>,
}

/// Fully specified config; this is what the summary records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub problem: ResolvedProblem,
    pub algorithms: Vec<ResolvedAlgorithm>,
    pub iterations: u64,
    pub repetitions: usize,
    pub base_seed: u64,
    pub output: PathBuf,
    pub per_decade: u32,
    pub slope_window: Option<(f64, f64)>,
    pub reference_t: Option<u64>,
    pub operator: Option<OperatorSettings>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            problem: ProblemSpec::default(),
            algorithms: None,
            iterations: None,
            repetitions: None,
            base_seed: None,
            output: None,
            per_decade: None,
            slope_window: None,
            reference_t: None,
            operator_steps: None,
            operator_dims: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        use ExperimentKind::*;
        let kind = self.experiment;
        let problem = self.resolve_problem()?;
        let built = problem.build()?;
        let d = problem.d;

        let iterations = match self.iterations {
            Some(0) => return Err(Error::field("iterations", "must be at least 1")),
            Some(t) => t,
            None => match kind {
                LowerBound => (d / 2).max(1) as u64,
                Custom => 10_000,
                OperatorVerify => 1,
                _ => 1_000_000,
            },
        };
        let repetitions = match self.repetitions {
            Some(0) => return Err(Error::field("repetitions", "must be at least 1")),
            Some(r) => r,
            None if kind == LowerBound => 20,
            None => 10,
        };
        let per_decade = match self.per_decade {
            Some(0) => return Err(Error::field("per_decade", "must be at least 1")),
            Some(p) => p,
            None => acls_core::algorithms::LogSchedule::DEFAULT_PER_DECADE,
        };

        let slope_window = match (self.slope_window, kind) {
            (Some((lo, hi)), _) => {
                if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                    return Err(Error::field("slope_window", "need 0 < lo < hi"));
                }
                Some((lo, hi))
            }
            (None, AveragedNoisy) => Some((iterations as f64 / 10.0, iterations as f64)),
            (None, LowerBound | OperatorVerify) => None,
            (None, _) => Some((10.0 * d as f64, 100.0 * d as f64)),
        };
        let reference_t = match (self.reference_t, kind) {
            (Some(0), _) => return Err(Error::field("reference_t", "must be at least 1")),
            (Some(t), MemoryTradeoff) => Some(t),
            (Some(_), _) => return Err(Error::field("reference_t", "only used by memory_tradeoff")),
            (None, MemoryTradeoff) => Some(100 * d as u64),
            (None, _) => None,
        };

        let operator = match kind {
            OperatorVerify => {
                let dims = match (&self.operator_dims, self.problem.d) {
                    (Some(_), Some(_)) => {
                        return Err(Error::field("operator_dims", "give either operator_dims or problem.d"))
                    }
                    (Some(v), None) => v.clone(),
                    (None, Some(d)) => vec![d],
                    (None, None) => vec![2, 4, 8],
                };
                if dims.is_empty() {
                    return Err(Error::field("operator_dims", "must not be empty"));
                }
                for &d in &dims {
                    if d == 0 || d > acls_core::operators::MAX_OPERATOR_DIM {
                        return Err(Error::field(
                            "operator_dims",
                            format!("{d} outside 1..={}", acls_core::operators::MAX_OPERATOR_DIM),
                        ));
                    }
                }
                Some(OperatorSettings {
                    steps: self.operator_steps.unwrap_or(OperatorSteps::Cor1),
                    dims,
                })
            }
            _ => {
                if self.operator_steps.is_some() {
                    return Err(Error::field("operator_steps", "only used by operator_verify"));
                }
                if self.operator_dims.is_some() {
                    return Err(Error::field("operator_dims", "only used by operator_verify"));
                }
                None
            }
        };

        let specs = match (&self.algorithms, kind) {
            (Some(_), OperatorVerify) => {
                return Err(Error::field("algorithms", "operator_verify runs no algorithms"))
            }
            (Some(v), _) if v.is_empty() => return Err(Error::field("algorithms", "must not be empty")),
            (Some(v), _) => v.clone(),
            (None, Custom) => return Err(Error::field("algorithms", "required for custom experiments")),
            (None, _) => default_algorithms(kind),
        };
        let mut algorithms = Vec::with_capacity(specs.len());
        for spec in &specs {
            algorithms.push(resolve_algorithm(spec, &built)?);
        }
        for (i, a) in algorithms.iter().enumerate() {
            for b in &algorithms[..i] {
                if a.label == b.label && a.oracle == b.oracle && a.averaging == b.averaging {
                    return Err(Error::field(
                        "algorithms",
                        format!("two entries share label `{}`, oracle and averaging; set `label`", a.label),
                    ));
                }
            }
        }
        if kind == LowerBound {
            if d % 2 != 0 {
                return Err(Error::field("problem.d", "lower_bound needs an even dimension"));
            }
            if iterations < (d / 2) as u64 {
                return Err(Error::field("iterations", "lower_bound needs at least d/2 iterations"));
            }
            if algorithms
                .iter()
                .any(|a| matches!(a.oracle, OracleName::Exact | OracleName::ExactAdditive))
            {
                return Err(Error::field("algorithms", "lower_bound needs sample-based oracles"));
            }
        }

        let output = self
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from("acls-out").join(kind.name()));

        Ok(ResolvedConfig {
            experiment: kind,
            problem,
            algorithms,
            iterations,
            repetitions,
            base_seed: self.base_seed.unwrap_or(0),
            output,
            per_decade,
            slope_window,
            reference_t,
            operator,
        })
    }

    fn resolve_problem(&self) -> Result<ResolvedProblem> {
        use ExperimentKind::*;
        let p = &self.problem;
        if self.experiment == OperatorVerify {
            if p.kind == Some(ProblemKind::Gaussian) {
                return Err(Error::field("problem.kind", "operator checks need a one_hot problem"));
            }
            if p.probabilities.is_some() || p.decay.is_some() || p.scale.is_some() || p.seed.is_some() {
                return Err(Error::field("problem", "operator_verify only reads problem.d and problem.sigma"));
            }
        }
        let default_kind = match self.experiment {
            LowerBound | OperatorVerify => ProblemKind::OneHot,
            _ => ProblemKind::Gaussian,
        };
        let kind = p.kind.unwrap_or(default_kind);
        if self.experiment == LowerBound && kind != ProblemKind::OneHot {
            return Err(Error::field("problem.kind", "lower_bound needs a one_hot problem"));
        }
        let sigma = p.sigma.unwrap_or(match self.experiment {
            AveragedNoisy => 0.02,
            _ => 0.0,
        });
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::field("problem.sigma", "must be finite and nonnegative"));
        }
        let default_d = match self.experiment {
            OperatorVerify => 8,
            _ => 50,
        };
        match kind {
            ProblemKind::Gaussian => {
                if p.probabilities.is_some() {
                    return Err(Error::field("problem.probabilities", "only valid for one_hot problems"));
                }
                let d = p.d.unwrap_or(default_d);
                if d == 0 {
                    return Err(Error::field("problem.d", "must be at least 1"));
                }
                let decay = p.decay.unwrap_or(4.0);
                if !(decay.is_finite() && decay >= 0.0) {
                    return Err(Error::field("problem.decay", "must be finite and nonnegative"));
                }
                let scale = p.scale.unwrap_or(1.0);
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::field("problem.scale", "must be finite and positive"));
                }
                Ok(ResolvedProblem {
                    kind,
                    d,
                    decay: Some(decay),
                    scale: Some(scale),
                    sigma,
                    seed: Some(p.seed.unwrap_or(0)),
                    probabilities: None,
                })
            }
            ProblemKind::OneHot => {
                if p.decay.is_some() || p.scale.is_some() || p.seed.is_some() {
                    return Err(Error::field(
                        "problem",
                        "decay, scale and seed only apply to gaussian problems",
                    ));
                }
                let d = match (&p.probabilities, p.d) {
                    (Some(pr), Some(d)) if pr.len() != d => {
                        return Err(Error::field("problem.probabilities", format!("expected {d} entries")))
                    }
                    (Some(pr), _) => pr.len(),
                    (None, d) => d.unwrap_or(default_d),
                };
                if d == 0 {
                    return Err(Error::field("problem.d", "must be at least 1"));
                }
                if let Some(pr) = &p.probabilities {
                    let sum: f64 = pr.iter().sum();
                    if pr.iter().any(|&x| !(x > 0.0 && x.is_finite()))
                        || (sum - 1.0).abs() > acls_core::problem::PROBABILITY_SUM_TOL
                    {
                        return Err(Error::field("problem.probabilities", "must be positive and sum to 1"));
                    }
                }
                Ok(ResolvedProblem {
                    kind,
                    d,
                    decay: None,
                    scale: None,
                    sigma,
                    seed: None,
                    probabilities: p.probabilities.clone(),
                })
            }
        }
    }
}

fn default_algorithms(kind: ExperimentKind) -> Vec<AlgorithmSpec> {
    use AlgorithmName as A;
    use AveragingName as V;
    use ExperimentKind::*;
    use OracleName as O;
    match kind {
        LastIterateNoiseless => vec![
            AlgorithmSpec::preset(A::Acsgd, O::Sgd, V::Last, StepRule::Experiment),
            AlgorithmSpec::preset(A::Sgd, O::Sgd, V::Last, StepRule::Sgd),
        ],
        AveragedNoisy => vec![
            AlgorithmSpec::preset(A::Acsgd, O::Sgd, V::Weighted, StepRule::Experiment),
            AlgorithmSpec::preset(A::Sgd, O::Sgd, V::Polyak, StepRule::Sgd),
        ],
        MemoryTradeoff => vec![
            AlgorithmSpec::preset(A::Acsgd, O::Sgd, V::Last, StepRule::Experiment),
            AlgorithmSpec::preset(A::Acsgd, O::RunningAverage, V::Last, StepRule::FullMemory),
        ],
        LowerBound => vec![
            AlgorithmSpec::preset(A::Acsgd, O::Sgd, V::Last, StepRule::Averaged),
            AlgorithmSpec::preset(A::Sgd, O::Sgd, V::Last, StepRule::Sgd),
        ],
        OperatorVerify | Custom => Vec::new(),
    }
}

pub fn rule_steps(rule: StepRule, problem: &LeastSquaresProblem) -> StepSizes {
    let c = problem.constants();
    match rule {
        StepRule::Experiment => StepSizes::experiment_default(&c),
        StepRule::FullMemory => {
            let s = 1.0 / (3.0 * c.trace_h);
            StepSizes { alpha: s, beta: s }
        }
        StepRule::Averaged => StepSizes::averaged_default(&c),
        StepRule::LastIterate => StepSizes::last_iterate_default(&c),
        StepRule::Sgd => StepSizes::sgd_default(problem),
    }
}

fn resolve_algorithm(spec: &AlgorithmSpec, problem: &LeastSquaresProblem) -> Result<ResolvedAlgorithm> {
    let oracle = spec.oracle.unwrap_or(OracleName::Sgd);
    match (oracle, spec.batch) {
        (OracleName::Minibatch, None) => return Err(Error::field("batch", "required by the minibatch oracle")),
        (OracleName::Minibatch, Some(0)) => return Err(Error::field("batch", "must be at least 1")),
        (OracleName::Minibatch, Some(_)) | (_, None) => {}
        (_, Some(_)) => return Err(Error::field("batch", "only used by the minibatch oracle")),
    }
    match (oracle, spec.noise_std) {
        (OracleName::ExactAdditive, None) => {
            return Err(Error::field("noise_std", "required by the exact_additive oracle"))
        }
        (OracleName::ExactAdditive, Some(s)) if !(s.is_finite() && s >= 0.0) => {
            return Err(Error::field("noise_std", "must be finite and nonnegative"))
        }
        (OracleName::ExactAdditive, Some(_)) | (_, None) => {}
        (_, Some(_)) => return Err(Error::field("noise_std", "only used by the exact_additive oracle")),
    }
    let averaging = spec.averaging.unwrap_or(match spec.algorithm {
        AlgorithmName::Acsgd => AveragingName::Weighted,
        AlgorithmName::Sgd => AveragingName::Polyak,
    });
    match (averaging, spec.tail_fraction) {
        (AveragingName::Tail, Some(f)) if !(f > 0.0 && f <= 1.0) => {
            return Err(Error::field("tail_fraction", "must lie in (0, 1]"))
        }
        (AveragingName::Tail, _) | (_, None) => {}
        (_, Some(_)) => return Err(Error::field("tail_fraction", "only used with tail averaging")),
    }

    let default_rule = match spec.algorithm {
        AlgorithmName::Acsgd if oracle == OracleName::RunningAverage => StepRule::FullMemory,
        AlgorithmName::Acsgd => StepRule::Experiment,
        AlgorithmName::Sgd => StepRule::Sgd,
    };
    let explicit = spec.alpha.is_some() || spec.beta.is_some();
    let rule = match (spec.steps, explicit) {
        (Some(r), _) => Some(r),
        (None, true) => None,
        (None, false) => Some(default_rule),
    };
    let base = rule_steps(rule.unwrap_or(default_rule), problem);
    let alpha = match (spec.algorithm, spec.alpha) {
        (AlgorithmName::Sgd, Some(a)) if a != 0.0 => return Err(Error::field("alpha", "SGD has no α step")),
        (AlgorithmName::Sgd, _) => 0.0,
        (_, Some(a)) => a,
        (_, None) => base.alpha,
    };
    let beta = spec.beta.unwrap_or(base.beta);
    for (key, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::field(key, "must be finite and nonnegative"));
        }
    }
    let label = match &spec.label {
        Some(l) if l.is_empty() || l.contains([',', '"', '\n', '\r']) => {
            return Err(Error::field("label", "must be non-empty plain text"))
        }
        Some(l) => l.clone(),
        None => Algorithm::from(spec.algorithm).name().to_string(),
    };
    Ok(ResolvedAlgorithm {
        label,
        algorithm: spec.algorithm,
        oracle,
        batch: spec.batch,
        noise_std: spec.noise_std,
        averaging,
        tail_fraction: match averaging {
            AveragingName::Tail => Some(spec.tail_fraction.unwrap_or(0.5)),
            _ => None,
        },
        steps: rule,
        alpha,
        beta,
    })
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Acsgd => Algorithm::AcSgd,
            AlgorithmName::Sgd => Algorithm::Sgd,
        }
    }
}

/// Reads `ACLS_SEED`, if set.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var("ACLS_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| Error::SeedVar(s)),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(s)) => Err(Error::SeedVar(s.to_string_lossy().into_owned())),
    }
}
