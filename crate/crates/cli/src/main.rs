use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use plapwave_cli::experiments::default_suite_config;
use plapwave_cli::{
    emit_report, load_config, run_experiment, CliError, RunConfig, RunReport, Validation,
};
use plapwave_core::RegimeReport;

const EXIT_AUDIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Numerical experiments for the strongly damped p-Laplacian wave equation.
#[derive(Parser)]
#[command(name = "plapwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments described by a JSON configuration.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `validation`.
        #[arg(long, value_enum)]
        validation: Option<ValidationArg>,
    },
    /// Run the randomized property suite with default parameters.
    Suite {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of mesh elements.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value = "plapwave-suite")]
        out: PathBuf,
    },
    /// Classify an exponent pair against the standing hypotheses.
    CheckParams {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        r: f64,
        /// Also require the global regime `r <= p/2`.
        #[arg(long)]
        global: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ValidationArg {
    Strict,
    Permissive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            validation,
        } => {
            let loaded = load_config(&config).and_then(|mut cfg| {
                if let Some(out) = out {
                    cfg.output_dir = out;
                }
                if let Some(seed) = seed {
                    cfg.seed = seed;
                }
                if let Some(v) = validation {
                    cfg.validation = match v {
                        ValidationArg::Strict => Validation::Strict,
                        ValidationArg::Permissive => Validation::Permissive,
                    };
                }
                cfg.validate()?;
                Ok(cfg)
            });
            match loaded {
                Ok(cfg) => execute(&cfg),
                Err(e) => config_failure(&e),
            }
        }
        Command::Suite { seed, n, out } => {
            let mut cfg = default_suite_config(seed, n);
            cfg.output_dir = out;
            match cfg.validate() {
                Ok(()) => execute(&cfg),
                Err(e) => config_failure(&e),
            }
        }
        Command::CheckParams { p, r, global } => {
            let regime = RegimeReport::classify(p, r);
            println!("{}", regime.summary());
            let violations = regime.violations(global);
            for v in &violations {
                println!("  [{}] {}", v.anchor, v.message);
            }
            if violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_AUDIT_FAILED)
            }
        }
    }
}

fn config_failure(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn execute(cfg: &RunConfig) -> ExitCode {
    let report = run_experiment(cfg);
    print_summary(&report);
    match emit_report(&report, &cfg.output_dir) {
        Ok(manifest) => {
            println!(
                "wrote {} files to {}",
                manifest.files.len(),
                cfg.output_dir.display()
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    if report.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_AUDIT_FAILED)
    }
}

fn print_summary(report: &RunReport) {
    println!("{}", report.regime_summary);
    for v in &report.regime_violations {
        println!("warning: [{}] {}", v.anchor, v.message);
    }
    for exp in &report.experiments {
        println!("{}", exp.experiment.slug());
        for a in &exp.audits {
            let mark = if a.pass { "PASS" } else { "FAIL" };
            println!(
                "  {mark} {} [{}] value {:.6e} ({}, tolerance {:.3e})",
                a.name, a.anchor, a.value, a.criterion, a.tolerance
            );
        }
        for e in &exp.errors {
            println!("  ERROR {e}");
        }
    }
}
