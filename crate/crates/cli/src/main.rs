use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsum_cli::error::CliError;
use qsum_cli::{metrics_files, run_scenario, run_sweep, transpile_files, Overrides};
use qsum_core::OracleMode;

#[derive(Parser)]
#[command(
    name = "qsum",
    version,
    about = "Quantum multiparty summation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_p: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    oracle_mode: Option<OracleMode>,
    /// Write the histogram (run) or the table (sweep) as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            shots: self.shots,
            seed: self.seed,
            noise_p: self.noise_p,
            oracle_mode: self.oracle_mode,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and print the result document.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Enumerate secret tuples over ranges and compare with plain arithmetic.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Rewrite a circuit onto a coupling map.
    Transpile {
        circuit: PathBuf,
        map: PathBuf,
        /// Write the rewritten circuit here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fidelity and deviations between two density-matrix files.
    Metrics { rho_t: PathBuf, rho_e: PathBuf },
}

fn parse_mode(s: &str) -> Result<OracleMode, String> {
    s.parse().map_err(|e: qsum_core::Error| e.to_string())
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => qsum_cli::error::write(p, text),
        None => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { scenario, flags } => {
            let doc = run_scenario(&scenario, &flags.overrides())?;
            println!("{}", doc.to_json());
            write_out(&flags.out, &doc.histogram_csv())?;
            if doc.aborted() {
                eprintln!("verification failed: ancilla read {}", doc.ancilla);
                return Ok(ExitCode::from(qsum_cli::EXIT_ABORTED as u8));
            }
        }
        Command::Sweep { config, flags } => {
            let table = run_sweep(&config, &flags.overrides())?;
            println!("{}", table.to_json());
            eprintln!("{}", table.summary());
            write_out(&flags.out, &table.to_csv())?;
        }
        Command::Transpile { circuit, map, out } => {
            let doc = transpile_files(&circuit, &map)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("plain data serializes")
            );
            write_out(&out, &doc.circuit)?;
        }
        Command::Metrics { rho_t, rho_e } => {
            let report = metrics_files(&rho_t, &rho_e)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("plain data serializes")
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(qsum_cli::EXIT_INPUT as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(qsum_cli::EXIT_INPUT as u8)
        }
    }
}
