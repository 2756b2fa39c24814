use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use abelgas_core::config::Route;
use abelgas_core::harness::{run, RunFlags, DEFAULT_TOL_CROSS, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "abelgas", version, about = "Anaerobic digestion substrate bounds via Abel equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSVs, a plot script and a report into OUTDIR.
    Run {
        /// Scenario JSON file; also looked up in $ABELGAS_SEED_DIR.
        scenario: PathBuf,
        outdir: PathBuf,
        /// Comma-separated routes, overriding the scenario's list.
        #[arg(long, value_delimiter = ',')]
        routes: Option<Vec<String>>,
        /// Compare all upper-substrate routes on a common grid.
        #[arg(long)]
        compare: bool,
        /// Max-abs tolerance for numeric route pairs (closed-form pairs get 10x).
        #[arg(long, default_value_t = DEFAULT_TOL_CROSS)]
        tol_cross: f64,
        /// Use the closed forms with the literal (unaudited) sign convention.
        #[arg(long)]
        paper_literal_signs: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INVALID as u8),
            };
        }
    };
    let Command::Run {
        scenario,
        outdir,
        routes,
        compare,
        tol_cross,
        paper_literal_signs,
    } = cli.command;

    let routes = match routes
        .map(|rs| rs.iter().map(|r| r.trim().parse::<Route>()).collect::<Result<Vec<_>, _>>())
        .transpose()
    {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID as u8);
        }
    };
    let flags = RunFlags {
        routes,
        compare,
        tol_cross,
        paper_literal_signs,
    };
    let outcome = run(&scenario, &outdir, &flags);
    if outcome.exit_code == 0 {
        println!("{}", outcome.message);
    } else if outcome.report.is_some() {
        println!("{}", outcome.message);
        if let Some(r) = &outcome.report {
            for c in r.failed_checks() {
                eprintln!("FAIL {}: {:.6e} (tolerance {:.1e})", c.name, c.value, c.tolerance);
            }
            for rt in r.routes.iter().filter(|r| !r.ok) {
                eprintln!("route {} failed: {}", rt.route, rt.error.as_deref().unwrap_or(""));
            }
        }
    } else {
        eprintln!("error: {}", outcome.message);
    }
    ExitCode::from(outcome.exit_code as u8)
}
