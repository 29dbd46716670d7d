//! `radius`: command-line driver for scenario runs, calibration and
//! post-processing of stored traces.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage error, 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radius_core::analyticity::{radius_sample, verify_bootstrap, CalibratedConstants, FitOptions, LambdaRule};
use radius_core::experiments::{export_plotdata, run_scenario, ScenarioConfig, ScenarioKind, ScenarioReport};
use radius_core::integrator::read_trace;
use radius_core::{Error, Result};

#[derive(Parser)]
#[command(name = "radius", version, about = "Analyticity-radius laboratory for semi-linear parabolic systems")]
struct Cli {
    /// Worker threads for ensemble members (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides the base seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the constants of a config and write constants.json.
    Calibrate(ScenarioArgs),
    /// Run a scenario and write its report, norm series and trace.
    Run(ScenarioArgs),
    /// Fit the analyticity radius of every snapshot of a stored trace.
    Estimate {
        /// Trace stem (without .json / .bin).
        #[arg(long)]
        trace: PathBuf,
        /// CSV destination; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check the bootstrap inequalities on a stored trace.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        /// constants.json from a calibration.
        #[arg(long)]
        constants: PathBuf,
        /// Horizons to test (snapshot times); default every snapshot.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<f64>,
        /// JSON destination; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write plot CSVs from a report.json.
    Export {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
}

fn load(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn summarize(report: &ScenarioReport) -> ExitCode {
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    println!("{:?} on {}: {}", report.scenario, report.system, if report.passed { "passed" } else { "failed" });
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Calibrate(args) => {
            let mut config = load(&args)?;
            if config.calibration.file.is_some() {
                return Err(Error::Config("calibrate computes the constants; remove calibration.file".into()));
            }
            config.scenario = ScenarioKind::LemmaCheck;
            let report = run_scenario(&config, args.output.as_deref())?;
            if args.output.is_none() && config.output.is_none() {
                if let Some(c) = &report.constants {
                    println!("{}", serde_json::to_string_pretty(c)?);
                }
            }
            Ok(summarize(&report))
        }
        Command::Run(args) => {
            let config = load(&args)?;
            let report = run_scenario(&config, args.output.as_deref())?;
            Ok(summarize(&report))
        }
        Command::Estimate { trace, output } => {
            let trace = read_trace(&trace)?;
            let fit = FitOptions::default();
            let mut csv = String::from("t,delta_fit,ratio,shells,floor_flag\n");
            for (&t, u) in trace.times.iter().zip(&trace.snapshots).filter(|(t, _)| **t > 0.0) {
                let r = radius_sample(u, t, &fit);
                let cell = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
                csv.push_str(&format!(
                    "{t:e},{},{},{},{}\n",
                    cell(r.delta_fit),
                    cell(r.ratio),
                    r.shells,
                    r.floor_flag
                ));
            }
            emit(&csv, output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            trace,
            constants,
            horizons,
            output,
        } => {
            let trace = read_trace(&trace)?;
            let constants: CalibratedConstants = serde_json::from_str(&std::fs::read_to_string(&constants)?)?;
            let horizons = if horizons.is_empty() {
                trace.times.iter().cloned().filter(|&t| t > 0.0).collect()
            } else {
                horizons
            };
            let report = verify_bootstrap(
                &trace,
                constants.eps,
                constants.p,
                &constants,
                LambdaRule::Critical,
                &horizons,
            )?;
            emit(&serde_json::to_string_pretty(&report)?, output.as_deref())?;
            eprintln!(
                "{} horizons, {} unresolved, first violation {:?}",
                report.rows.len(),
                report.unresolved,
                report.first_violation
            );
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Export { report, output } => {
            let report: ScenarioReport = serde_json::from_str(&std::fs::read_to_string(&report)?)?;
            for path in export_plotdata(&report, &output)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
