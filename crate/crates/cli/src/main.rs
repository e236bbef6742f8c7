use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use calibra_core::expr::Expr;
use calibra_core::field::from_expr;
use calibra_core::scenarios::{describe_scenario, run_scenario, Report, ScenarioConfig, SCENARIO_IDS};
use clap::{Parser, Subcommand};
use serde_json::json;

/// Exit status for configuration and usage errors.
const CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "calibra",
    version,
    about = "Convexity and plurisubharmonicity checks on Riemannian submersions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks described by a JSON config.
    Run {
        config: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Catalog scenarios.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
    /// Run checks on a catalog scenario.
    Check {
        scenario: String,
        /// Comma-separated check names; the scenario defaults when omitted.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Tolerance applied to every non-hypothesis record.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expression utilities.
    Expr {
        #[command(subcommand)]
        command: ExprCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// List scenario ids with a one-line description.
    List,
}

#[derive(Subcommand)]
enum ExprCommand {
    /// Evaluate an expression and optionally its derivatives.
    Eval {
        expr: String,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// 0 for the value, 1 adds the gradient, 2 adds the Hessian.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
        jet: u8,
    },
}

fn emit(report: &Report, out: Option<&PathBuf>) -> Result<ExitCode, String> {
    let text = report.to_json();
    match out {
        Some(path) => {
            fs::write(path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            for c in &report.checks {
                println!(
                    "{} {} residual={:e} tolerance={:e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.residual,
                    c.tolerance
                );
            }
        }
        None => println!("{text}"),
    }
    Ok(ExitCode::from(report.outcome().exit_code() as u8))
}

fn run(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Run { config, out } => {
            let text = fs::read_to_string(&config).map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let cfg = ScenarioConfig::from_json(&text).map_err(|e| e.to_string())?;
            let report = run_scenario(&cfg).map_err(|e| e.to_string())?;
            emit(&report, out.as_ref())
        }
        Command::Scenario {
            command: ScenarioCommand::List,
        } => {
            for id in SCENARIO_IDS {
                println!("{id:<14} {}", describe_scenario(id).unwrap_or(""));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            scenario,
            checks,
            tol,
            grid,
            seed,
            out,
        } => {
            let mut cfg = ScenarioConfig::for_scenario(&scenario);
            cfg.checks = checks.into_iter().filter(|c| !c.is_empty()).collect();
            cfg.tolerance = tol;
            cfg.seed = seed;
            if let Some(g) = grid {
                cfg.grid = g;
            }
            let report = run_scenario(&cfg).map_err(|e| e.to_string())?;
            emit(&report, out.as_ref())
        }
        Command::Expr {
            command: ExprCommand::Eval { expr, at, jet },
        } => {
            let e = Expr::parse(&expr).map_err(|e| e.to_string())?;
            let arity = e.required_arity();
            if at.len() < arity {
                return Err(format!("expression needs {arity} coordinates, got {}", at.len()));
            }
            let field = from_expr(e, at.len()).map_err(|e| e.to_string())?;
            let j = field.jet(&at);
            let n = at.len();
            let mut doc = json!({ "value": j.value });
            if jet >= 1 {
                doc["gradient"] = json!(j.grad);
            }
            if jet >= 2 {
                let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|k| j.h(i, k)).collect()).collect();
                doc["hessian"] = json!(rows);
            }
            println!("{}", serde_json::to_string_pretty(&doc).expect("finite json"));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}
