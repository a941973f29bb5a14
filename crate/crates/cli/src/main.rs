use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaussgme::{run_scenario, validate_config, OutputFormat, RunOptions, EXIT_CONFIG, EXIT_OK};

#[derive(Parser)]
#[command(name = "gaussgme", version, about = "Gaussian generalized master equation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory, overriding output.directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Table format, overriding output.format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for grid points.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its table and manifest.
    Run { config: PathBuf },
    /// Check a scenario without computing anything.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run { config } => {
            let opts = RunOptions {
                output: cli.output.clone(),
                format: cli.format.map(|f| match f {
                    Format::Csv => OutputFormat::Csv,
                    Format::Json => OutputFormat::Json,
                }),
                jobs: cli.jobs,
            };
            match run_scenario(config, &opts) {
                Ok(report) => {
                    for f in &report.output.failures {
                        eprintln!("{} = {}: {}", f.grid, f.value, f.message);
                    }
                    println!("{}", report.table_path.display());
                    report.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Validate { config } => match validate_config(config) {
            Ok(d) if d.is_empty() => {
                println!("{}: ok", config.display());
                EXIT_OK
            }
            Ok(d) => {
                for diag in &d {
                    eprintln!("{}: {diag}", diag.path);
                }
                EXIT_CONFIG
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
