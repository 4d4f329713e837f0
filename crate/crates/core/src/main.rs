use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use induced_contraction::experiments::parse_config;
use induced_contraction::{par, verify};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(version, about = "Design and check contraction-inducing inputs")]
struct Cli {
    /// Directory for reports and traces.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps (0 keeps the default pool).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run { config: PathBuf },
    /// Run the acceptance checks.
    Verify {
        /// Only run criteria whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn write_outputs(dir: &Path, name: &str, config: &serde_json::Value, outcome: &induced_contraction::experiments::Outcome) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = |v: &serde_json::Value| serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n";
    std::fs::write(dir.join(format!("{name}_config.json")), json(config))?;
    std::fs::write(dir.join(format!("{name}_report.json")), json(&outcome.report))?;
    for (file, body) in &outcome.files {
        std::fs::write(dir.join(file), body)?;
    }
    Ok(())
}

fn run(path: &Path, out: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            for e in errors {
                eprintln!("{e}");
            }
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match cfg.run() {
        Ok(outcome) => match write_outputs(out, cfg.name(), &cfg.to_json(), &outcome) {
            Ok(()) => {
                println!("{}", serde_json::to_string_pretty(&outcome.report).expect("JSON values serialize"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e:#}");
                ExitCode::FAILURE
            }
        },
        Err(e) => {
            eprintln!("{}: {e}", cfg.name());
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    par::with_jobs(cli.jobs, || match &cli.command {
        Command::Run { config } => run(config, &cli.out),
        Command::Verify { filter } => {
            let summary = verify::run_suite(filter.as_deref());
            print!("{}", summary.table());
            if summary.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    })
}
