use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kinetic_cli::{check_stability, describe, keys_help, parse_config, run, CliError, Config};

#[derive(Parser)]
#[command(name = "kinsim", version, about = "Kinetic turbulence model simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the resolved configuration and derived grid quantities
    Describe(Common),
    /// Evaluate the Richardson convergence bound; exit 1 if it fails
    CheckStability(Common),
    /// Run the configured scenario and write CSV outputs
    Run(Common),
}

#[derive(Args)]
#[command(after_help = keys_help())]
struct Common {
    /// Configuration file; defaults are used for missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output`
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (0 = all available), overrides `threads`
    #[arg(long)]
    threads: Option<usize>,
}

fn load(common: &Common) -> Result<Config, CliError> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading {}", path.display()),
            source,
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = &common.output {
        cfg.output = dir.clone();
    }
    if let Some(n) = common.threads {
        cfg.threads = n;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let io = |source| CliError::Io {
        context: "writing to stdout".into(),
        source,
    };
    match cli.command {
        Command::Describe(c) => describe(&load(&c)?, &mut out).map_err(io),
        Command::CheckStability(c) => {
            let report = check_stability(&load(&c)?, &mut out).map_err(io)?;
            if report.is_stable() {
                Ok(())
            } else {
                Err(CliError::Stability(kinetic_core::Error::Stability {
                    nor: report.nor,
                    worst: report.worst,
                }))
            }
        }
        Command::Run(c) => {
            let cfg = load(&c)?;
            drop(out);
            let summary = run(&cfg, &mut io::stdout())?;
            let mut out = io::stdout();
            writeln!(
                out,
                "wrote {} files to {}",
                summary.files.len() + 1,
                cfg.output.display()
            )
            .map_err(io)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
