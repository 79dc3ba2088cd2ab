//! `charkin`: configure, run, validate, sweep and export
//! characteristic-function dynamics.

mod commands;
mod config;
mod failure;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ConvertTarget, Outcome};
use config::{Format, RunConfig};
use failure::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "charkin",
    version,
    about = "Characteristic-function phase-space dynamics"
)]
struct Cli {
    /// Worker threads for the numerical kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory (CHARKIN_OUT, then the config's output.dir, otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the configured state and write snapshots, monitors and a manifest.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Distances between two runs at matching snapshot times.
    Compare { run_a: PathBuf, run_b: PathBuf },
    /// Symmetric-versus-classical defect of the initial RHS as ħ varies.
    HbarScan {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated ħ values; defaults to scan.hbars.
        #[arg(long, value_delimiter = ',')]
        hbar: Vec<f64>,
    },
    /// RHS of each enabled method against the Fock-space oracle.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-express a dump in another ordering, as a Wigner function, or as CSV.
    Convert {
        input: PathBuf,
        /// normal | symmetric | antinormal | wigner | same
        #[arg(long, default_value = "same")]
        to: ConvertTarget,
        #[arg(long, value_enum, default_value = "bin")]
        format: FormatArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum FormatArg {
    Bin,
    Csv,
}

fn out_dir(flag: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("CHARKIN_OUT").filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.and_then(|c| c.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("charkin_out"))
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    }
    let flag = cli.out.as_deref();
    match cli.command {
        Command::Evolve { config } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_evolve(&cfg, &out_dir(flag, Some(&cfg)))
        }
        Command::Compare { run_a, run_b } => {
            let dir = flag.map(Path::to_path_buf).or_else(|| {
                std::env::var_os("CHARKIN_OUT")
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            });
            let (rows, outcome) = commands::cmd_compare(&run_a, &run_b, dir.as_deref())?;
            commands::write_distances(std::io::stdout().lock(), &rows)?;
            eprintln!("{}", outcome.summary);
            Ok(Outcome {
                summary: serde_json::Value::Null,
            })
        }
        Command::HbarScan { config, hbar } => {
            let cfg = RunConfig::load(&config)?;
            let hbars = if hbar.is_empty() {
                cfg.scan.hbars.clone()
            } else {
                hbar
            };
            commands::cmd_hbar_scan(&cfg, &hbars, &out_dir(flag, Some(&cfg)))
        }
        Command::OracleCheck { config } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_oracle_check(&cfg, &out_dir(flag, Some(&cfg)))
        }
        Command::Convert {
            input,
            to,
            format,
            output,
        } => {
            let format = match format {
                FormatArg::Bin => Format::Bin,
                FormatArg::Csv => Format::Csv,
            };
            commands::cmd_convert(&input, to, format, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            if !outcome.summary.is_null() {
                println!("{}", outcome.summary);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
