use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lisfc::config::{Config, ScenarioKind, WeightsFile};
use lisfc::drift::{graph_drift, DriftWeights};
use lisfc::graph::parse_graph;
use lisfc::harness::{scenario_convergence, scenario_drift_transfer, scenario_load_sweep, write_output};
use lisfc::lifelong::estimate_distance_from_traces;

#[derive(Parser)]
#[command(name = "lisfc", about = "SFC placement simulator and lifelong MCTS planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file and write CSV/curve outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Shift every run seed by this offset.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Compute the drift report between two graph files and print it as one
    /// CSV row: delta_spec,delta_cap,delta_bw,delta_edit,delta_g,bound.
    Drift {
        graph_a: PathBuf,
        graph_b: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Estimate the MDP distance between two trace files (lines of
    /// `state_key action_sig next_key reward`).
    Estimate {
        trace_a: PathBuf,
        trace_b: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed_offset,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let config = Config::from_str(&text).map_err(|e| e.to_string())?;
            let setup = config.resolve(seed_offset).map_err(|e| e.to_string())?;
            let output = match config.scenario_kind().map_err(|e| e.to_string())? {
                ScenarioKind::LoadSweep => scenario_load_sweep(&setup),
                ScenarioKind::DriftTransfer => scenario_drift_transfer(&setup),
                ScenarioKind::Convergence => scenario_convergence(&setup),
            }
            .map_err(|e| e.to_string())?;
            write_output(&output, &out).map_err(|e| e.to_string())?;
            println!(
                "wrote {} decision rows, {} aggregate rows, {} curve files to {}",
                output.decisions.len(),
                output.aggregates.len(),
                output.curves.len(),
                out.display()
            );
            Ok(())
        }
        Command::Drift {
            graph_a,
            graph_b,
            weights,
        } => {
            let read = |p: &PathBuf| {
                std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read {}: {e}", p.display()))
            };
            let a = parse_graph(&read(&graph_a)?).map_err(|e| e.to_string())?;
            let b = parse_graph(&read(&graph_b)?).map_err(|e| e.to_string())?;
            let mut w = DriftWeights::defaults_for(&a);
            if let Some(path) = weights {
                let file: WeightsFile =
                    toml::from_str(&read(&path)?).map_err(|e| e.to_string())?;
                let s = file.weights;
                if let Some(v) = s.w_spec {
                    w.w_spec = v;
                }
                if let Some(v) = s.w_cap {
                    w.w_cap = v;
                }
                if let Some(v) = s.w_bw {
                    w.w_bw = v;
                }
                if let Some(v) = s.w_edit {
                    w.w_edit = v;
                }
                if let Some(v) = s.rho_spec {
                    w.rho_spec = v;
                }
                if let Some(v) = s.rho_cap {
                    w.rho_cap = v;
                }
                if let Some(v) = s.rho_bw {
                    w.rho_bw = v;
                }
                if let Some(v) = s.rho_edit {
                    w.rho_edit = v;
                }
                if let Some(v) = s.lipschitz_c {
                    w.lipschitz_c = v;
                }
            }
            w.validate().map_err(|e| e.to_string())?;
            println!("{}", graph_drift(&a, &b, &w).csv_row());
            Ok(())
        }
        Command::Estimate {
            trace_a,
            trace_b,
            kappa,
        } => {
            let read = |p: &PathBuf| {
                std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read {}: {e}", p.display()))
            };
            let d = estimate_distance_from_traces(&read(&trace_a)?, &read(&trace_b)?, kappa)
                .map_err(|e| e.to_string())?;
            println!("{d}");
            Ok(())
        }
    }
}
