//! Command-line front end: curvature sweeps, profiles, sections, flow
//! traces, and the invariant suite, driven by a TOML config.
//!
//! Exit codes: 0 on success, 1 when a check (or the admissibility gate)
//! fails, 2 on configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use minksurf::config::{parse_config, Command, OutputFormat};
use minksurf::error::GeomError;
use minksurf::run;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliCommand {
    /// Sweep the curvature field over the configured grid.
    Curvatures,
    /// Normal-curvature profile over tangent directions at a point.
    NormalProfile,
    /// Trace plane sections at a point.
    Sections,
    /// Integrate curvature lines and asymptotic curves from a point.
    Lines,
    /// Run the invariant suite.
    Check,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Command {
        match c {
            CliCommand::Curvatures => Command::Curvatures,
            CliCommand::NormalProfile => Command::NormalProfile,
            CliCommand::Sections => Command::Sections,
            CliCommand::Lines => Command::Lines,
            CliCommand::Check => Command::Check,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliFormat {
    Csv,
    Json,
}

/// Curvature of surfaces immersed in three-dimensional normed spaces.
#[derive(Debug, Parser)]
#[command(name = "minksurf", version, about)]
struct Cli {
    /// What to compute; overrides the `command` key in the config.
    #[arg(value_enum)]
    command: CliCommand,
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: CliFormat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    config.command = cli.command.into();
    let format = match cli.format {
        CliFormat::Csv => OutputFormat::Csv,
        CliFormat::Json => OutputFormat::Json,
    };

    let outcome = execute(&config, format);
    let (payload, failed) = match outcome {
        Ok(pair) => pair,
        Err(e @ GeomError::InadmissibleNorm { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, payload) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{payload}"),
    }

    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

/// Runs the selected command; returns the serialized payload and whether any
/// check failed.
fn execute(
    config: &minksurf::config::RunConfig,
    format: OutputFormat,
) -> Result<(String, bool), GeomError> {
    match config.command {
        Command::Curvatures => {
            let records = run::run_curvature_field(config)?;
            Ok((serialize(&records, format, run::field_csv), false))
        }
        Command::NormalProfile => {
            let records = run::run_normal_profile(config)?;
            Ok((serialize(&records, format, run::profile_csv), false))
        }
        Command::Sections => {
            let records = run::run_sections(config)?;
            Ok((serialize(&records, format, run::section_csv), false))
        }
        Command::Lines => {
            let records = run::run_lines(config)?;
            Ok((serialize(&records, format, run::line_csv), false))
        }
        Command::Check => {
            let records = run::run_check(config)?;
            let failed = records.iter().any(|r| !r.pass);
            for r in &records {
                eprintln!(
                    "{} {:<34} witnesses {:>5}  worst {:>12.4e}  threshold {:>9.1e}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.witnesses,
                    r.worst,
                    r.threshold
                );
            }
            Ok((serialize(&records, format, run::check_csv), failed))
        }
    }
}

fn serialize<T: serde::Serialize>(
    records: &[T],
    format: OutputFormat,
    csv: impl Fn(&[T]) -> String,
) -> String {
    match format {
        OutputFormat::Csv => csv(records),
        OutputFormat::Json => run::to_json(records),
    }
}
