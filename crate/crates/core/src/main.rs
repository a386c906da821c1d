//! Command-line interface: solve single equilibria, run the investment
//! search, cluster representative weeks, verify solutions, and reformat
//! reports.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 verification
//! failure.

use clap::{Args, Parser, Subcommand};
use equigrid::equilibrium::{compute_welfare, merchant_profit, solve_market};
use equigrid::invest::{optimize_investment, Regime};
use equigrid::io::{
    compare_to_baseline, load_scenario, RegimeReport, RunManifest, RunReport,
};
use equigrid::model::{InvestmentDecision, ScenarioModel};
use equigrid::solver::SolverSettings;
use equigrid::verify::verify_equilibrium;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_SOLVER_FAILURE: u8 = 3;
const EXIT_VERIFICATION_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "equigrid", version, about = "Power-market equilibria with storage investment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Absolute convergence tolerance.
    #[arg(long, default_value_t = 1e-8)]
    eps_abs: f64,
    /// Relative convergence tolerance.
    #[arg(long, default_value_t = 1e-8)]
    eps_rel: f64,
    /// Iteration cap for the QP solver.
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    /// Disable active-set polishing.
    #[arg(long)]
    no_polish: bool,
    /// RNG seed recorded in the manifest.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the investment search (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        SolverSettings {
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
            polish: !self.no_polish,
            seed: self.seed,
            ..SolverSettings::default()
        }
    }

    fn init_threads(&self) {
        if self.workers > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build_global();
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one market equilibrium for a fixed investment decision.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// Regime label: CP, SW-PC, M-PC, SW-CO, M-CO.
        #[arg(long, default_value = "SW-PC")]
        regime: String,
        /// Comma-separated size indices per candidate (default all zero).
        #[arg(long)]
        decision: Option<String>,
        /// Write the JSON result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Exhaustive bi-level investment search over one or all regimes.
    Invest {
        #[arg(long)]
        scenario: PathBuf,
        /// Regime label; omit to run all five.
        #[arg(long)]
        regime: Option<String>,
        /// Output directory for report.json / report.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the catalog's weekly investment cost (EUR/MWh).
        #[arg(long)]
        cost: Option<f64>,
        /// Comma-separated list of weekly costs to sweep.
        #[arg(long)]
        cost_sweep: Option<String>,
        /// Previous report.json to diff against.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Verify the optimal equilibrium of every regime.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Reduce hourly CSV data to representative weeks.
    Cluster {
        /// Hourly CSV: timestamp,region,demand_mw,wind_availability,solar_availability
        #[arg(long)]
        input: PathBuf,
        /// Number of representative weeks.
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and run all verification certificates.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "SW-PC")]
        regime: String,
        #[arg(long)]
        decision: Option<String>,
        /// Verification tolerance on the worst violation, scaled by
        /// 1 + |objective|.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Reformat an existing report (CSV, baseline diff).
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Emit the summary CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID_INPUT)
        }
    }
}

fn parse_regime(label: &str) -> Result<Regime, String> {
    Regime::parse(label).ok_or_else(|| {
        format!("unknown regime {label:?}; expected one of CP, SW-PC, M-PC, SW-CO, M-CO")
    })
}

fn parse_decision(
    scenario: &ScenarioModel,
    text: Option<&str>,
) -> Result<InvestmentDecision, String> {
    let Some(text) = text else {
        return Ok(InvestmentDecision::all_zero(&scenario.investment));
    };
    let size_index = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let z = InvestmentDecision { size_index };
    if !z.is_valid_for(&scenario.investment) {
        return Err(format!(
            "decision must have {} entries below {}",
            scenario.investment.candidates.len(),
            scenario.investment.sizes_mwh.len()
        ));
    }
    Ok(z)
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| e.to_string()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve {
            scenario,
            regime,
            decision,
            out,
            solver,
        } => {
            solver.init_threads();
            let model = load_scenario(&scenario).map_err(|e| e.to_string())?;
            let regime = parse_regime(&regime)?;
            let z = parse_decision(&model, decision.as_deref())?;
            let eq = match solve_market(&model, regime.mode(), &z, &solver.settings(), None) {
                Ok(eq) => eq,
                Err(e) => {
                    eprintln!("solver failure: {e}");
                    return Ok(ExitCode::from(EXIT_SOLVER_FAILURE));
                }
            };
            let welfare = compute_welfare(&model, &eq);
            let result = serde_json::json!({
                "regime": regime.label(),
                "decision": z.size_index,
                "objective": eq.objective,
                "welfare": welfare,
                "merchant_profit": merchant_profit(&model, &eq),
                "prices": eq.prices,
                "iterations": eq.solution.iterations,
                "polished": eq.solution.polished,
            });
            write_or_print(out.as_ref(), &serde_json::to_string_pretty(&result).unwrap())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Invest {
            scenario,
            regime,
            out,
            cost,
            cost_sweep,
            baseline,
            verify,
            solver,
        } => {
            solver.init_threads();
            let bytes =
                std::fs::read(&scenario).map_err(|e| format!("{}: {e}", scenario.display()))?;
            let base_model = load_scenario(&scenario).map_err(|e| e.to_string())?;
            let regimes: Vec<Regime> = match regime {
                Some(label) => vec![parse_regime(&label)?],
                None => Regime::ALL.to_vec(),
            };
            let costs: Vec<f64> = match (&cost, &cost_sweep) {
                (Some(_), Some(_)) => {
                    return Err("pass either --cost or --cost-sweep, not both".into())
                }
                (Some(c), None) => vec![*c],
                (None, Some(sweep)) => sweep
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?,
                (None, None) => vec![base_model.investment.weekly_cost],
            };
            let settings = solver.settings();
            let mut all_reports: Vec<RunReport> = Vec::new();
            for &weekly_cost in &costs {
                let mut model = base_model.clone();
                model.investment.weekly_cost = weekly_cost;
                let mut regime_reports = Vec::new();
                for &r in &regimes {
                    let outcome = match optimize_investment(&model, r, &settings) {
                        Ok(o) => o,
                        Err(e) => {
                            eprintln!("solver failure ({}): {e}", r.label());
                            return Ok(ExitCode::from(EXIT_SOLVER_FAILURE));
                        }
                    };
                    let verification = if verify {
                        Some(verify_equilibrium(&model, &outcome.best))
                    } else {
                        None
                    };
                    regime_reports.push(RegimeReport::from_parts(
                        &model,
                        r,
                        &outcome.best_welfare,
                        &outcome.best.decision,
                        verification,
                    ));
                }
                all_reports.push(RunReport {
                    manifest: RunManifest::new(&model.name, &bytes, &settings),
                    regimes: regime_reports,
                });
            }
            // single-cost runs emit one report; sweeps concatenate regimes
            let report = if all_reports.len() == 1 {
                all_reports.pop().unwrap()
            } else {
                let manifest = all_reports[0].manifest.clone();
                let mut regimes = Vec::new();
                for (run, &c) in all_reports.into_iter().zip(&costs) {
                    for mut r in run.regimes {
                        r.model = format!("{}@{c}", r.model);
                        regimes.push(r);
                    }
                }
                RunReport { manifest, regimes }
            };
            let json = report.to_json().map_err(|e| e.to_string())?;
            let csv = report.to_csv().map_err(|e| e.to_string())?;
            match &out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                    std::fs::write(dir.join("report.json"), &json).map_err(|e| e.to_string())?;
                    std::fs::write(dir.join("report.csv"), &csv).map_err(|e| e.to_string())?;
                }
                None => {
                    println!("{csv}");
                }
            }
            if let Some(path) = baseline {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                let base = RunReport::from_json(&text).map_err(|e| e.to_string())?;
                let deltas = compare_to_baseline(&report, &base);
                println!("{}", serde_json::to_string_pretty(&deltas).unwrap());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Cluster { input, k, out } => {
            let file =
                std::fs::File::open(&input).map_err(|e| format!("{}: {e}", input.display()))?;
            let weeks = equigrid::cluster::read_weeks_csv(file).map_err(|e| e.to_string())?;
            let clustering =
                equigrid::cluster::cluster_weeks(&weeks, k).map_err(|e| e.to_string())?;
            let labels: Vec<&str> = clustering
                .medoids
                .iter()
                .map(|&w| weeks[w].label.as_str())
                .collect();
            let result = serde_json::json!({
                "weeks": weeks.len(),
                "clusters": k,
                "weights": clustering.weights,
                "sizes": clustering.sizes,
                "medoids": clustering.medoids,
                "medoid_labels": labels,
                "assignments": clustering.assignments,
            });
            write_or_print(out.as_ref(), &serde_json::to_string_pretty(&result).unwrap())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            scenario,
            regime,
            decision,
            tol,
            solver,
        } => {
            solver.init_threads();
            let model = load_scenario(&scenario).map_err(|e| e.to_string())?;
            let regime = parse_regime(&regime)?;
            let z = parse_decision(&model, decision.as_deref())?;
            let eq = match solve_market(&model, regime.mode(), &z, &solver.settings(), None) {
                Ok(eq) => eq,
                Err(e) => {
                    eprintln!("solver failure: {e}");
                    return Ok(ExitCode::from(EXIT_SOLVER_FAILURE));
                }
            };
            let report = verify_equilibrium(&model, &eq);
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            let scaled_tol = tol * (1.0 + eq.objective.abs());
            if report.max_violation() > scaled_tol {
                eprintln!(
                    "verification failed: worst violation {:.3e} exceeds {scaled_tol:.3e}",
                    report.max_violation()
                );
                return Ok(ExitCode::from(EXIT_VERIFICATION_FAILURE));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report {
            input,
            baseline,
            csv,
        } => {
            let text =
                std::fs::read_to_string(&input).map_err(|e| format!("{}: {e}", input.display()))?;
            let report = RunReport::from_json(&text).map_err(|e| e.to_string())?;
            if let Some(path) = baseline {
                let base_text = std::fs::read_to_string(&path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                let base = RunReport::from_json(&base_text).map_err(|e| e.to_string())?;
                let deltas = compare_to_baseline(&report, &base);
                println!("{}", serde_json::to_string_pretty(&deltas).unwrap());
            } else if csv {
                println!("{}", report.to_csv().map_err(|e| e.to_string())?);
            } else {
                println!("{}", report.to_json().map_err(|e| e.to_string())?);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
