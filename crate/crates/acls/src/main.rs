use std::path::PathBuf;
use std::process::ExitCode;

use acls::config::{seed_from_env, OperatorSteps};
use acls::experiments::Summary;
use acls::output::{group_rows, read_csv, write_outputs};
use acls::{fit_slope, run_experiment, ExperimentConfig, ExperimentKind};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "acls", version, about = "Accelerated SGD experiments for streaming least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepsArg {
    Cor1,
    Thm2,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Check the covariance-operator identities and inequalities on one-hot problems.
    VerifyOperators {
        /// Dimension; 2, 4 and 8 when omitted.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_enum, default_value = "cor1")]
        steps: StepsArg,
    },
    /// Risk at t = d/2 on the uniform one-hot problem.
    LowerBound {
        #[arg(long, default_value_t = 50)]
        d: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
    /// Fit log-log slopes to every curve in a CSV.
    Slope {
        curve: PathBuf,
        #[arg(long = "from")]
        from: f64,
        #[arg(long = "to")]
        to: f64,
    },
}

enum Failure {
    Usage(String),
    Rejected,
}

impl From<acls::Error> for Failure {
    fn from(e: acls::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn report(summary: &Summary) -> Result<(), Failure> {
    for v in &summary.verdicts {
        let value = v.value.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"));
        println!(
            "{} {}: {} ({})",
            if v.passed { "PASS" } else { "FAIL" },
            v.check,
            value,
            v.detail
        );
    }
    if summary.passed() {
        Ok(())
    } else {
        Err(Failure::Rejected)
    }
}

fn execute(cfg: ExperimentConfig, write: bool) -> Result<(), Failure> {
    let resolved = cfg.resolve()?;
    let outcome = run_experiment(&resolved)?;
    if write {
        let (csv, json) = write_outputs(&outcome, &resolved.output)?;
        println!("wrote {} and {}", csv.display(), json.display());
    }
    for s in &outcome.summary.slopes {
        match &s.estimate {
            Some(e) => println!(
                "slope {} {} {}: {:.4} (r2 {:.4}) over [{}, {}]",
                s.algorithm, s.oracle, s.averaging, e.slope, e.r_squared_fit, e.window.0, e.window.1
            ),
            None => println!(
                "slope {} {} {}: {}",
                s.algorithm,
                s.oracle,
                s.averaging,
                s.error.as_deref().unwrap_or("unavailable")
            ),
        }
    }
    report(&outcome.summary)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let seed = seed_from_env()?;
    match cli.command {
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if seed.is_some() {
                cfg.base_seed = seed;
            }
            execute(cfg, true)
        }
        Command::VerifyOperators { d, steps } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::OperatorVerify);
            cfg.problem.d = d;
            cfg.operator_steps = Some(match steps {
                StepsArg::Cor1 => OperatorSteps::Cor1,
                StepsArg::Thm2 => OperatorSteps::Thm2,
            });
            execute(cfg, false)
        }
        Command::LowerBound { d, reps } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::LowerBound);
            cfg.problem.d = Some(d);
            cfg.repetitions = Some(reps);
            cfg.base_seed = seed;
            execute(cfg, false)
        }
        Command::Slope { curve, from, to } => {
            let rows = read_csv(&curve)?;
            let mut fitted = 0;
            for ((alg, oracle, avg), group) in group_rows(&rows) {
                let t: Vec<f64> = group.iter().map(|r| r.t as f64).collect();
                let risk: Vec<f64> = group.iter().map(|r| r.mean_excess_risk).collect();
                match fit_slope(&t, &risk, from, to) {
                    Ok(s) => {
                        fitted += 1;
                        println!(
                            "{alg},{oracle},{avg}: slope {:.6} intercept {:.6} r2 {:.6}",
                            s.slope, s.intercept, s.r_squared_fit
                        );
                    }
                    Err(e) => println!("{alg},{oracle},{avg}: {e}"),
                }
            }
            if fitted == 0 {
                return Err(Failure::Usage(format!("no curve in {} could be fitted", curve.display())));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
