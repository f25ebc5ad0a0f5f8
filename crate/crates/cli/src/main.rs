use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;
use ssusy_cli::config::{read_document, Format};
use ssusy_cli::{execute, resolve, CliError, Command};

/// Spectra, identity checks, closed-form audits and convergence studies for
/// generalized Swanson models and their second-derivative SUSY structure.
///
/// Exit status: 0 success (audits and measured checks never fail a run),
/// 1 a thresholded check failed, 2 configuration or input error.
#[derive(Debug, Parser)]
#[command(name = "ssusy", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin model name (cprs, isotonic); replaces the config's model.
    #[arg(long)]
    model: Option<String>,
    /// Override `dotted.path=value`; the value is JSON or a bare string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn run(args: Args) -> Result<u8, CliError> {
    let doc = match &args.config {
        Some(path) => read_document(path)?,
        None => Value::Null,
    };
    let cfg = resolve(doc, args.model.as_deref(), &args.sets)?;
    let report = execute(args.command, &cfg)?;
    let format = args.format.unwrap_or(cfg.output.format);
    let text = match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv()?,
    };
    match args.output.or_else(|| cfg.output.path.as_ref().map(PathBuf::from)) {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ssusy: {e}");
            ExitCode::from(2)
        }
    }
}
