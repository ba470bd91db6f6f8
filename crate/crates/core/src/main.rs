use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tdph::runner::{
    demo_scenarios, parse_scenario, parse_tolerance_override, run_scenario, verify, CheckRecord, ScenarioConfig,
};
use tdph::{Error, Result};

/// Lewis–Riesenfeld solutions of the time-dependent Swanson oscillator,
/// checked against independent oracles.
#[derive(Parser)]
#[command(name = "tdph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write series.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// NAME=VALUE, repeatable.
        #[arg(long = "tolerance")]
        tolerances: Vec<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Re-check series.csv and report.json in --out.
    Verify {
        #[arg(long)]
        out: PathBuf,
        /// Config the report must have been produced from.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "tolerance")]
        tolerances: Vec<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Write and run the built-in scenarios under --out/<name>/.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn overrides(list: &[String]) -> Result<BTreeMap<String, f64>> {
    list.iter().map(|s| parse_tolerance_override(s)).collect()
}

fn print_checks(checks: &[CheckRecord], quiet: bool) {
    if quiet {
        return;
    }
    for c in checks {
        let max = c.max_residual.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "n/a".into());
        let t = c.t_worst.map(|t| format!("{t:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{} {:<18} max={max} tol={:.1e} t={t}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.tolerance
        );
    }
}

fn run_one(cfg: &ScenarioConfig, out: &Path, quiet: bool) -> Result<bool> {
    fs::create_dir_all(out)?;
    let result = run_scenario(cfg)?;
    write(&out.join("series.csv"), &result.csv)?;
    write(&out.join("report.json"), &result.report.to_json())?;
    print_checks(&result.report.checks, quiet);
    Ok(result.report.overall_pass)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out, tolerances, quiet } => {
            let mut cfg = parse_scenario(&read(&config)?)?;
            for (name, value) in overrides(&tolerances)? {
                cfg.tolerances.set(&name, value)?;
            }
            Ok(if run_one(&cfg, &out, quiet)? { 0 } else { 1 })
        }
        Command::Verify { out, config, tolerances, quiet } => {
            let csv = read(&out.join("series.csv"))?;
            let report = read(&out.join("report.json"))?;
            let cfg = config.map(|p| read(&p).and_then(|t| parse_scenario(&t))).transpose()?;
            let outcome = verify(&csv, &report, &overrides(&tolerances)?, cfg.as_ref())?;
            print_checks(&outcome.checks, quiet);
            Ok(if outcome.overall_pass { 0 } else { 1 })
        }
        Command::Demo { out, quiet } => {
            let mut status = 0;
            for (name, cfg) in demo_scenarios() {
                let dir = out.join(name);
                fs::create_dir_all(&dir)?;
                write(&dir.join("config.json"), &(serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n"))?;
                if !quiet {
                    println!("== {name}");
                }
                if !run_one(&cfg, &dir, quiet)? {
                    status = 1;
                }
            }
            Ok(status)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        Command::Run { quiet, .. } | Command::Verify { quiet, .. } | Command::Demo { quiet, .. } => *quiet,
    };
    env_logger::Builder::new()
        .filter_level(if quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn })
        .init();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
