use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fblab_cli::{init_threads, run, ExperimentConfig, Kind, RunOptions};

#[derive(Parser)]
#[command(name = "fblab", version, about = "Obstacle-problem free-boundary laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (falls back to FBLAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Also dump nodal fields as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single obstacle solve.
    Solve(RunArgs),
    /// Monotone family u^t for boundary data g + t.
    Family(RunArgs),
    /// Quasi-static Hele-Shaw flow and its singular times.
    Heleshaw(RunArgs),
    /// Singular-point detection, strata, monotonicity and cleaning.
    Analyze(RunArgs),
    /// Signorini catalog identities.
    Signorini(RunArgs),
    /// Dimension estimates for a point cloud.
    Dimension(RunArgs),
    /// Runs the config's `kind` (full-pipeline runs every configured stage).
    Run(RunArgs),
    /// Summarizes a run directory or a directory of runs.
    Report { dir: PathBuf },
}

fn execute(kind: Option<Kind>, args: &RunArgs) -> ExitCode {
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error at {e}");
            return ExitCode::from(2);
        }
    };
    let Some(kind) = kind.or(cfg.kind) else {
        eprintln!("config error at kind: `run` needs a kind in the config");
        return ExitCode::from(2);
    };
    match run(&cfg, kind, &args.out, &RunOptions { csv: args.csv }) {
        Ok(out) => {
            println!("{}", out.dir.display());
            for s in &out.summary.suites {
                println!("{} {}", if s.passed { "PASS" } else { "FAIL" }, s.name);
            }
            if out.summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("config error at {e}");
        return ExitCode::from(2);
    }
    match &cli.command {
        Command::Solve(a) => execute(Some(Kind::Solve), a),
        Command::Family(a) => execute(Some(Kind::Family), a),
        Command::Heleshaw(a) => execute(Some(Kind::Heleshaw), a),
        Command::Analyze(a) => execute(Some(Kind::Analyze), a),
        Command::Signorini(a) => execute(Some(Kind::Signorini), a),
        Command::Dimension(a) => execute(Some(Kind::Dimension), a),
        Command::Run(a) => execute(None, a),
        Command::Report { dir } => match fblab_cli::report::report(dir) {
            Ok(r) => {
                print!("{}", r.text);
                if dir.is_dir() {
                    let mut s = serde_json::to_string_pretty(&r.json).expect("report serializes");
                    s.push('\n');
                    if let Err(e) = std::fs::write(dir.join("report.json"), s) {
                        eprintln!("cannot write report.json: {e}");
                        return ExitCode::from(1);
                    }
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(1)
            }
        },
    }
}
