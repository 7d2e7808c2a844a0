use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use aoi_routing::bounds::recursion_bound;
use aoi_routing::experiments::{list_experiments, run_named};
use aoi_routing::game::{default_alpha, finite_n_equilibrium, mean_field_routing, mean_field_solve, DEFAULT_FINITE_ALPHA};
use aoi_routing::sim::trace;
use aoi_routing::{closed_form_pi, exact_aoi, simulate, upper_bound, BoundInput, Config, Error, Result};

#[derive(Parser)]
#[command(name = "aoi-routing", version, about = "Age of Information of parallel queues with probabilistic routing")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact average AoI of the configured network.
    Solve,
    /// Simulate the configured network.
    Simulate {
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Print the first N events instead of estimating the AoI.
        #[arg(long, value_name = "N")]
        trace: Option<usize>,
    },
    /// Closed-form upper bound of the configured network.
    Bound,
    /// Solve the routing game on the configured sources and servers.
    Game {
        /// Solve the large-population limit instead.
        #[arg(long)]
        mean_field: bool,
    },
    /// Run or list parameter sweeps.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run a named experiment and write its CSV.
    Run {
        name: String,
        /// Output file (defaults to stdout).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// List available experiments.
    List {
        #[arg(long)]
        json: bool,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn require_config(path: &Option<PathBuf>) -> Result<Config> {
    if path.is_none() {
        return Err(Error::Config("this command needs --config".into()));
    }
    load_config(path)
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve => {
            let cfg = require_config(&cli.config)?;
            let spec = cfg.network()?;
            let kind = cfg.model_kind()?;
            let sol = exact_aoi(kind, &spec)?;
            let bound = BoundInput::from_spec(&spec).ok().map(|b| upper_bound(&b));
            print_json(&json!({
                "kind": kind.name(),
                "average_aoi": sol.average_aoi,
                "pi": sol.pi,
                "closed_form_pi": closed_form_pi(kind, &spec)?,
                "monitor_terms": sol.monitor_terms(),
                "residual": sol.residual,
                "upper_bound": bound,
            }))
        }
        Command::Simulate {
            horizon,
            replications,
            trace: trace_len,
        } => {
            let file_cfg = require_config(&cli.config)?;
            let mut cfg = file_cfg.sim_config(cli.seed)?;
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Some(n) = trace_len {
                let mut out = BufWriter::new(io::stdout().lock());
                for e in trace(&cfg, n)? {
                    writeln!(out, "{e}")?;
                }
                out.flush()?;
                return Ok(());
            }
            let report = simulate(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&json!({
                "mean_aoi": report.mean_aoi,
                "ci95_halfwidth": report.ci95_halfwidth,
                "seed": report.seed,
                "replications": report.estimates(),
                "excluded": report.excluded,
                "counts": report.counts,
            }))
        }
        Command::Bound => {
            let cfg = require_config(&cli.config)?;
            let input = BoundInput::from_spec(&cfg.network()?)?;
            print_json(&json!({
                "upper_bound": upper_bound(&input),
                "recursion": recursion_bound(&input),
            }))
        }
        Command::Game { mean_field } => {
            let cfg = require_config(&cli.config)?;
            let game = cfg.game_instance()?;
            if mean_field {
                let ratios = game.mean_field_ratios();
                let settings = cfg.iteration_settings(default_alpha(&ratios));
                let sol = mean_field_solve(&ratios, None, settings)?;
                print_json(&json!({
                    "ratios": ratios,
                    "alpha": settings.alpha,
                    "y": sol.state.y,
                    "m": sol.state.m,
                    "routing": mean_field_routing(&sol.state),
                    "iterations": sol.iterations,
                    "residual": sol.residual(),
                    "converged": sol.converged,
                }))
            } else {
                let settings = cfg.iteration_settings(DEFAULT_FINITE_ALPHA);
                let eq = finite_n_equilibrium(&game, None, settings)?;
                print_json(&json!({
                    "alpha": settings.alpha,
                    "routing": eq.routing.rows,
                    "iterations": eq.iterations,
                    "residual": eq.residual(),
                    "converged": eq.converged,
                }))
            }
        }
        Command::Experiment { action } => match action {
            ExperimentAction::List { json } => {
                let list = list_experiments();
                if json {
                    print_json(&serde_json::to_value(&list).map_err(|e| Error::Io(e.to_string()))?)
                } else {
                    for e in list {
                        println!("{:<18}{}", e.name, e.description);
                    }
                    Ok(())
                }
            }
            ExperimentAction::Run { name, output } => {
                let cfg = load_config(&cli.config)?;
                let out = run_named(&name, &cfg, cli.seed)?;
                match output {
                    Some(path) => {
                        let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                        out.write_csv(BufWriter::new(file))?;
                    }
                    None => out.write_csv(io::stdout().lock())?,
                }
                eprintln!("{}: {}", out.name, out.summary);
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut body = json!({ "error": e.kind(), "message": e.to_string() });
            if let Error::UnknownExperiment { valid, .. } = &e {
                body["valid"] = json!(valid);
            }
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
