mod artifacts;
mod config;
mod verbs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::artifacts::Artifacts;
use crate::config::{LoadedConfig, Overrides};
use crate::verbs::{Outcome, RunError, Status};

/// Experiment driver: kernel and DtN checks, hypothesis sampling, min-max
/// solves and the continuation to m = 0.
#[derive(Debug, Parser)]
#[command(name = "fracperiodic", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides `output.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cerami tolerance of the solver (overrides `solver.cerami_tol`).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Verb {
    /// kappa_s three ways, profile table, finite-element cylinder study.
    VerifyKernel,
    /// Trace inequality, DtN map and strip inequality on random traces.
    VerifyDtn,
    /// Sampled structural hypotheses of the nonlinearity.
    CheckHypotheses,
    /// Linking geometry and min-max critical point.
    Solve,
    /// Solutions along the mass schedule and the m -> 0 limit.
    Continue,
    /// Every verb in turn.
    All,
    /// Print the derived constants without solving.
    Describe,
}

type VerbFn = fn(&LoadedConfig, &mut Artifacts) -> Result<Outcome, RunError>;

const ALL: [VerbFn; 5] = [
    verbs::verify_kernel,
    verbs::verify_dtn,
    verbs::check_hypotheses_verb,
    verbs::solve,
    verbs::continue_verb,
];

fn report(o: &Outcome) {
    println!("{}: {:?}", o.verb, o.status);
    for line in &o.lines {
        println!("  {line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    let overrides = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        tol: cli.tol,
    };
    let cfg = match config::load(path, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let selected: Vec<VerbFn> = match cli.verb {
        Verb::Describe => {
            print!("{}", verbs::describe(&cfg));
            return ExitCode::SUCCESS;
        }
        Verb::VerifyKernel => vec![ALL[0]],
        Verb::VerifyDtn => vec![ALL[1]],
        Verb::CheckHypotheses => vec![ALL[2]],
        Verb::Solve => vec![ALL[3]],
        Verb::Continue => vec![ALL[4]],
        Verb::All => ALL.to_vec(),
    };
    let mut art = match Artifacts::new(&cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", cfg.config.output.dir.display());
            return ExitCode::FAILURE;
        }
    };
    let mut worst = Status::Ok;
    for run in selected {
        match run(&cfg, &mut art) {
            Ok(o) => {
                report(&o);
                worst = worst.max(o.status);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    println!("artifacts in {} ({} files)", art.dir().display(), art.written().len());
    ExitCode::from(worst.exit_code())
}
