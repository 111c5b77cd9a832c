//! Command-line front end: one subcommand per pipeline stage, all driven by
//! a shared INI configuration. Outputs land in `<out>/<run-id>/<stage>/`.

pub mod commands;
pub mod config;
pub mod error;
mod transport;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Overrides, RunConfig};
pub use error::{CliError, Kind};

#[derive(Debug, Parser)]
#[command(
    name = "eraprobe",
    version,
    about = "Decade-stratified bias probing pipeline"
)]
pub struct Cli {
    /// Run configuration (INI).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output root; the run id subfolder is created inside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Route every model and judge call to the bundled in-process mock.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Worker threads for probing, classification and other parallel loops.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Override any config value, e.g. `--set run.m=10`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Clean, segment and export per-decade fine-tuning data.
    Prepare,
    /// Entity-overlap validation of fine-tuned models.
    Validate {
        /// Only this profile name.
        #[arg(long)]
        model: Option<String>,
    },
    /// Sample completions for every role prompt and model.
    Probe,
    /// Label stored completions.
    Classify,
    /// Frequency tables, significance, dispersion, trends and deltas.
    Analyze,
    /// GloVe association-bias baseline.
    Glove {
        #[arg(long, value_delimiter = ',')]
        windows: Vec<usize>,
    },
    /// Summarise every finished stage into report.md.
    Report,
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub run_dir: PathBuf,
    pub written: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Parses arguments and runs one command.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::new(Kind::Validation, "config", "--config is required"))?;
    let ov = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        parallelism: cli.parallelism,
        mock: cli.mock,
        set: cli.set.clone(),
    };
    let cfg = RunConfig::load(path, &ov)?;
    let ctx = commands::Context::new(cfg)?;
    match &cli.command {
        Command::Prepare => commands::prepare::run(&ctx),
        Command::Validate { model } => commands::validate::run(&ctx, model.as_deref()),
        Command::Probe => commands::probe::run(&ctx),
        Command::Classify => commands::probe::classify(&ctx),
        Command::Analyze => commands::analyze::run(&ctx),
        Command::Glove { windows } => commands::glove::run(&ctx, windows),
        Command::Report => commands::analyze::report(&ctx),
    }
}

/// Entry point shared by the binary and tests. Returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for p in &out.written {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
