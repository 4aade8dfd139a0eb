use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torusflow::commands::{cmd_check, cmd_mms, cmd_run};
use torusflow::config::parse_config_file;

#[derive(Parser)]
#[command(name = "torusflow", version, about = "Free-boundary mean curvature flow of disks in a torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow and write diagnostics and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: output.dir from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant battery and print a PASS/FAIL table.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Manufactured-solution convergence study.
    Mms {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        levels: usize,
    },
}

const EXIT_USAGE: u8 = 2;

fn threads() -> Result<usize, String> {
    match std::env::var("TORUSFLOW_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("TORUSFLOW_THREADS: expected a positive integer, got '{v}'")),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let n = match threads() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let parallel = n > 1;
    let path = match &cli.command {
        Command::Run { config, .. } | Command::Check { config } | Command::Mms { config, .. } => config,
    };
    let cfg = match parse_config_file(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr());
    let res = match &cli.command {
        Command::Run { out: dir, .. } => cmd_run(&cfg, dir.as_deref(), parallel, &mut out, &mut err),
        Command::Check { .. } => cmd_check(&cfg, parallel, &mut out),
        Command::Mms { levels, .. } => {
            if *levels < 3 {
                eprintln!("error: levels ≥ 3");
                return ExitCode::from(EXIT_USAGE);
            }
            cmd_mms(&cfg, *levels, None, &mut out, &mut err)
        }
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
