mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chrono::Utc;
use clap::{Parser, Subcommand};
use extlab_core::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use extlab_core::verify::{run_suite, Goldens, Suite};

use manifest::{artifact_dir, config_hash, RunManifest};

const DEFAULT_OUT: &str = "results";

#[derive(Parser, Debug)]
#[command(name = "extlab", version, about = "Numerical experiments for Fourier extension estimates")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Artifact root.
    #[arg(long, global = true, env = "EXTLAB_OUT", default_value = DEFAULT_OUT)]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(required_unless_present = "list")]
        config: Option<PathBuf>,
        /// Print the experiment names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(value_parser = ["fast", "full"])]
        suite: String,
        /// Thresholds and reference values; defaults to the built-in copy.
        #[arg(long, env = "EXTLAB_GOLDENS")]
        goldens: Option<PathBuf>,
    },
    /// List experiments with a one-line summary.
    List,
    /// Describe one experiment.
    Describe { experiment: String },
}

/// How a command ended, mapped onto the process exit code.
enum Outcome {
    Passed,
    ChecksFailed,
}

fn main() -> ExitCode {
    // usage errors exit 1; 2 is reserved for failed checks
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("sizing the worker pool")?;
    }
    match cli.command {
        Command::Run { list: true, .. } => {
            for kind in ExperimentKind::ALL {
                println!("{kind}");
            }
            Ok(Outcome::Passed)
        }
        Command::Run { config: Some(path), .. } => run(&path, &cli.out),
        Command::Run { config: None, .. } => bail!("missing config file"),
        Command::Verify { suite, goldens } => verify(suite.parse()?, goldens.as_deref(), &cli.out),
        Command::List => {
            for kind in ExperimentKind::ALL {
                let first = kind.describe().split(';').next().unwrap_or_default();
                println!("{:<20} {first}", kind.name());
            }
            Ok(Outcome::Passed)
        }
        Command::Describe { experiment } => {
            let kind: ExperimentKind = experiment.parse()?;
            println!("{kind}\n\n{}", kind.describe());
            Ok(Outcome::Passed)
        }
    }
}

fn run(path: &Path, out: &Path) -> anyhow::Result<Outcome> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = ExperimentConfig::from_toml(&src).with_context(|| path.display().to_string())?;
    let document: toml::Value = toml::from_str(&src)?;
    let hash = config_hash(&serde_json::to_value(document)?);

    let started = Utc::now();
    let report = run_experiment(&cfg)?;
    let dir = artifact_dir(out, cfg.experiment.name(), started)?;
    report.write_to(&dir)?;
    RunManifest::new(hash, cfg.seed_list(), started).finish(&dir)?;

    for check in &report.checks {
        println!("{} {} = {:.6e}", if check.passed { "ok  " } else { "FAIL" }, check.name, check.value);
    }
    println!("artifacts: {}", dir.display());
    Ok(if report.passed() { Outcome::Passed } else { Outcome::ChecksFailed })
}

fn verify(suite: Suite, goldens: Option<&Path>, out: &Path) -> anyhow::Result<Outcome> {
    let goldens = match goldens {
        Some(path) => Goldens::from_path(path)?,
        None => Goldens::embedded(),
    };
    let hash = config_hash(&serde_json::to_value(&goldens)?);

    let started = Utc::now();
    let report = run_suite(suite, &goldens, |o| println!("{}", o.line()))?;
    let dir = artifact_dir(out, &format!("verify_{suite}"), started)?;
    report.write_to(&dir)?;
    RunManifest::new(hash, Vec::new(), started).finish(&dir)?;

    let failed: Vec<&str> = report.outcomes.iter().filter(|o| !o.passed()).map(|o| o.name).collect();
    println!("artifacts: {}", dir.display());
    if failed.is_empty() {
        println!("verify {suite}: all {} criteria passed", report.outcomes.len());
        Ok(Outcome::Passed)
    } else {
        println!("verify {suite}: failed criteria: {}", failed.join(", "));
        Ok(Outcome::ChecksFailed)
    }
}
