//! Command-line front door: parse configs, orchestrate the library, emit
//! artifacts, and manage seeds.
//!
//! Every run reads one TOML config, applies any flag overrides, executes one
//! command, writes its artifacts plus a provenance manifest into the output
//! directory, and exits 0 only if every check passed. Exit codes: 0 all
//! checks pass, 1 some check failed (the manifest lists which), 2 the run
//! could not execute at all.

mod commands;
mod config;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use qclt::report::{sha256_hex, toml_document};
use qclt::{Error, Result};

use commands::{
    cmd_conditions, cmd_martingale, cmd_periodogram, cmd_quenched, cmd_simulate, CommandOutcome,
};
use config::{FrequencySpec, RunConfig};
use manifest::{OutputRecord, RunManifest, ARTIFACT_VERSION};

#[derive(Parser)]
#[command(
    name = "qclt",
    version,
    about = "Laboratory for quenched limit behaviour of Fourier sums of stationary processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one trajectory and write it as CSV.
    Simulate(CommonArgs),
    /// Fourier statistics of one trajectory over a frequency grid, with the
    /// analytic density overlay where one exists.
    Periodogram(CommonArgs),
    /// Replicated futures from one frozen past, graded against the limit law.
    Quenched(CommonArgs),
    /// Evaluate every sufficient condition that applies to the model.
    Conditions(CommonArgs),
    /// Martingale approximation gap curves and telescoping residuals.
    Martingale(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Periodogram(_) => "periodogram",
            Command::Quenched(_) => "quenched",
            Command::Conditions(_) => "conditions",
            Command::Martingale(_) => "martingale",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Simulate(args)
            | Command::Periodogram(args)
            | Command::Quenched(args)
            | Command::Conditions(args)
            | Command::Martingale(args) => args,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving artifacts and the manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Bound global parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the frequency selection: LIST | random:K | fourier:N.
    #[arg(long)]
    frequencies: Option<String>,
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|err| io_error(path, err))?;
    toml::from_str(&text)
        .map_err(|err| Error::Parse(format!("{}: {err}", path.display())))
}

fn run(command: &Command) -> Result<Vec<String>> {
    let args = command.args();
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|err| Error::invalid(format!("cannot size the thread pool: {err}")))?;
    }
    let start = Instant::now();
    let mut config = load_config(&args.config)?;

    let mut overrides = Vec::new();
    if let Some(seed) = args.seed {
        config.seed = seed;
        overrides.push(format!("seed={seed}"));
    }
    if let Some(text) = &args.frequencies {
        let selection = FrequencySpec::parse_flag(text)?;
        config.override_frequencies(&selection)?;
        overrides.push(format!("frequencies={}", selection.describe()));
    }
    if let Some(threads) = args.threads {
        overrides.push(format!("threads={threads}"));
    }

    let outcome: CommandOutcome = match command {
        Command::Simulate(_) => cmd_simulate(&config)?,
        Command::Periodogram(_) => cmd_periodogram(&config)?,
        Command::Quenched(_) => cmd_quenched(&config)?,
        Command::Conditions(_) => cmd_conditions(&config)?,
        Command::Martingale(_) => cmd_martingale(&config)?,
    };

    fs::create_dir_all(&args.out).map_err(|err| io_error(&args.out, err))?;
    let mut outputs = Vec::with_capacity(outcome.artifacts.len());
    for (name, contents) in &outcome.artifacts {
        let path = args.out.join(name);
        fs::write(&path, contents).map_err(|err| io_error(&path, err))?;
        outputs.push(OutputRecord {
            path: name.clone(),
            sha256: sha256_hex(contents.as_bytes()),
        });
    }
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION,
        command: command.name().to_string(),
        config_path: args.config.display().to_string(),
        resolved_seed: config.seed,
        overrides,
        outputs,
        failures: outcome.failures.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let manifest_path = args.out.join("manifest.toml");
    fs::write(&manifest_path, toml_document(&manifest)?)
        .map_err(|err| io_error(&manifest_path, err))?;

    print!("{}", outcome.summary);
    Ok(outcome.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for failure in &failures {
                eprintln!("FAIL: {failure}");
            }
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
