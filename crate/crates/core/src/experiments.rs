//! Named parameter sweeps that emit CSV tables.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{upper_bound, BoundInput};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::game::{
    default_alpha, finite_n_equilibrium, mean_field_solve, GameInstance, IterationSettings, DEFAULT_FINITE_ALPHA,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::models::{exact_aoi, ComparisonSystems, ModelKind, QueueNetworkSpec, Server};
use crate::sim::{simulate, SimConfig};

pub const DEFAULT_POINTS: usize = 25;
pub const DEFAULT_LAMBDA_MIN: f64 = 0.1;
pub const DEFAULT_LAMBDA_MAX: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CompareNobuffer,
    CompareBuffer,
    BoundTightness,
    SimValidate,
    GameConverge,
    MeanField,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::CompareNobuffer,
        ExperimentKind::CompareBuffer,
        ExperimentKind::BoundTightness,
        ExperimentKind::SimValidate,
        ExperimentKind::GameConverge,
        ExperimentKind::MeanField,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CompareNobuffer => "compare-nobuffer",
            ExperimentKind::CompareBuffer => "compare-buffer",
            ExperimentKind::BoundTightness => "bound-tightness",
            ExperimentKind::SimValidate => "sim-validate",
            ExperimentKind::GameConverge => "game-converge",
            ExperimentKind::MeanField => "mean-field",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::CompareNobuffer => {
                "two parallel M/M/1/1 queues against one queue with half arrivals and losses or double service"
            }
            ExperimentKind::CompareBuffer => {
                "two parallel M/M/1/2* queues against one M/M/1/3* queue with half arrivals and losses or double service"
            }
            ExperimentKind::BoundTightness => "exact AoI against the closed-form upper bound over the lambda1 sweep",
            ExperimentKind::SimValidate => "simulated AoI with 95% confidence interval against the exact value",
            ExperimentKind::GameConverge => "damped best-response iteration of the routing game",
            ExperimentKind::MeanField => "projected Mann iteration of the mean-field routing equations",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownExperiment {
                name: name.to_string(),
                valid: Self::ALL.iter().map(|k| k.name().to_string()).collect(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
}

/// Registered experiments in a stable order.
pub fn list_experiments() -> Vec<ExperimentInfo> {
    ExperimentKind::ALL
        .iter()
        .map(|k| ExperimentInfo {
            name: k.name(),
            description: k.description(),
        })
        .collect()
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub grid: Vec<f64>,
    pub mu: f64,
    pub theta: f64,
    pub lambda_rest: f64,
    pub servers: usize,
    pub buffer: usize,
    pub replications: usize,
    pub events: f64,
    pub seed: u64,
    pub game: GameInstance,
    pub ratios: Vec<f64>,
    /// Step size; each iteration picks its own default when unset.
    pub alpha: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

/// The six-source, ten-server game instance.
pub fn reference_game() -> GameInstance {
    GameInstance::new(
        vec![100.0, 20.0, 50.0, 10.0, 10.0, 1000.0],
        vec![1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 1000.0],
        0,
    )
    .expect("valid instance")
}

impl ExperimentSpec {
    pub fn defaults(kind: ExperimentKind, seed: u64) -> Self {
        let (theta, lambda_rest, servers, buffer) = match kind {
            ExperimentKind::CompareNobuffer | ExperimentKind::CompareBuffer => (10.0, 10.0, 2, 0),
            ExperimentKind::BoundTightness => (0.0, 10.0, 1, 2),
            _ => (0.0, 0.0, 1, 0),
        };
        let game = reference_game();
        Self {
            kind,
            grid: log_grid(DEFAULT_LAMBDA_MIN, DEFAULT_LAMBDA_MAX, DEFAULT_POINTS),
            mu: 1.0,
            theta,
            lambda_rest,
            servers,
            buffer,
            replications: 20,
            events: 2e5,
            seed,
            ratios: game.mean_field_ratios(),
            game,
            alpha: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    /// Defaults overridden by the `[experiment]` and `[game]` sections; a
    /// configured network replaces the reference game instance.
    pub fn from_config(kind: ExperimentKind, config: &Config, seed: u64) -> Result<Self> {
        let mut s = Self::defaults(kind, seed);
        let e = &config.experiment;
        let lo = e.lambda1_min.unwrap_or(DEFAULT_LAMBDA_MIN);
        let hi = e.lambda1_max.unwrap_or(DEFAULT_LAMBDA_MAX);
        let n = e.points.unwrap_or(DEFAULT_POINTS);
        if n == 0 || !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config("the lambda1 grid must be nonempty with 0 < min <= max".into()));
        }
        s.grid = log_grid(lo, hi, n);
        s.mu = e.mu.unwrap_or(s.mu);
        s.theta = e.theta.unwrap_or(s.theta);
        s.lambda_rest = e.lambda_rest.unwrap_or(s.lambda_rest);
        s.servers = e.servers.unwrap_or(s.servers);
        s.buffer = e.buffer.unwrap_or(s.buffer);
        s.replications = e.replications.unwrap_or(s.replications);
        s.events = e.events.unwrap_or(s.events);
        if config.has_network() {
            s.game = config.game_instance()?;
            s.ratios = s.game.mean_field_ratios();
        }
        if let Some(r) = &e.ratios {
            s.ratios = r.clone();
        }
        s.alpha = config.game.alpha;
        s.tol = config.game.tol.unwrap_or(s.tol);
        s.max_iter = config.game.max_iter.unwrap_or(s.max_iter);
        Ok(s)
    }

    fn settings(&self, default_alpha: f64) -> IterationSettings {
        IterationSettings {
            alpha: self.alpha.unwrap_or(default_alpha),
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    fn single_kind(&self) -> Result<ModelKind> {
        let probe = QueueNetworkSpec::symmetric(1.0, 0.0, Server::new(1.0, 0.0, self.buffer), self.servers)?;
        ModelKind::infer(&probe)
    }

    /// The network used at `lambda1` by the bound and simulation sweeps.
    pub fn network_at(&self, lambda1: f64) -> Result<QueueNetworkSpec> {
        QueueNetworkSpec::symmetric(lambda1, self.lambda_rest, Server::new(self.mu, self.theta, self.buffer), self.servers)
    }
}

/// CSV table plus a one-line summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub name: &'static str,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: String,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Column `name` parsed as numbers; empty cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].parse().unwrap_or(f64::NAN)).collect())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn error_row(lambda1: f64, width: usize, e: &Error) -> Vec<String> {
    let mut row = vec![num(lambda1)];
    row.extend(std::iter::repeat_n(String::new(), width - 2));
    row.push(e.to_string());
    row
}

fn sweep<F>(grid: &[f64], width: usize, f: F) -> Vec<Vec<String>>
where
    F: Fn(usize, f64) -> Result<Vec<String>> + Sync,
{
    grid.par_iter()
        .enumerate()
        .map(|(i, &l)| f(i, l).unwrap_or_else(|e| error_row(l, width, &e)))
        .collect()
}

fn max_finite(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().filter(|v| v.is_finite()).fold(f64::NAN, f64::max)
}

fn compare(spec: &ExperimentSpec, buffered: bool) -> ExperimentOutput {
    let headers = ["lambda1", "aoi_routing", "aoi_half", "aoi_double", "note"];
    let rows = sweep(&spec.grid, headers.len(), |_, l| {
        let (r, h, d) = ComparisonSystems::new(l, spec.lambda_rest, spec.mu, spec.theta, buffered)?.evaluate()?;
        Ok(vec![num(l), num(r), num(h), num(d), String::new()])
    });
    let mut out = ExperimentOutput {
        name: if buffered { "compare-buffer" } else { "compare-nobuffer" },
        headers: headers.map(String::from).to_vec(),
        rows,
        summary: String::new(),
    };
    let (r, d) = (out.column("aoi_routing").unwrap(), out.column("aoi_double").unwrap());
    let gap = max_finite(r.iter().zip(&d).map(|(a, b)| (a - b).abs() / b));
    out.summary = format!("max |routing - double| / double = {:.4}%", 100.0 * gap);
    out
}

fn bound_tightness(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let kind = spec.single_kind()?;
    let headers = ["lambda1", "exact", "bound", "rel_gap", "note"];
    let rows = sweep(&spec.grid, headers.len(), |_, l| {
        let net = spec.network_at(l)?;
        let exact = exact_aoi(kind, &net)?.average_aoi;
        let bound = upper_bound(&BoundInput::from_spec(&net)?).as_f64();
        Ok(vec![num(l), num(exact), num(bound), num((bound - exact) / exact), String::new()])
    });
    let mut out = ExperimentOutput {
        name: "bound-tightness",
        headers: headers.map(String::from).to_vec(),
        rows,
        summary: String::new(),
    };
    let gap = max_finite(out.column("rel_gap").unwrap());
    out.summary = format!("{} with K={} N={}: max relative gap {:.4}%", kind.name(), spec.servers, spec.buffer, 100.0 * gap);
    Ok(out)
}

/// Horizon giving about `events` events per replication.
pub fn horizon_for(net: &QueueNetworkSpec, events: f64) -> f64 {
    let rate = net.total_rate() + net.servers.iter().map(|s| s.mu + s.theta).sum::<f64>();
    events / rate
}

/// Seed of grid point `i`.
pub fn point_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn sim_validate(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let kind = spec.single_kind()?;
    let headers = ["lambda1", "shs", "sim_mean", "ci95", "within_ci", "note"];
    let rows = sweep(&spec.grid, headers.len(), |i, l| {
        let net = spec.network_at(l)?;
        let exact = exact_aoi(kind, &net)?.average_aoi;
        let cfg = SimConfig::new(net.clone(), horizon_for(&net, spec.events), point_seed(spec.seed, i))
            .with_replications(spec.replications);
        let rep = simulate(&cfg)?;
        Ok(vec![
            num(l),
            num(exact),
            num(rep.mean_aoi),
            num(rep.ci95_halfwidth),
            rep.contains(exact).to_string(),
            rep.warnings.join("; "),
        ])
    });
    let inside = rows.iter().filter(|r| r[4] == "true").count();
    Ok(ExperimentOutput {
        name: "sim-validate",
        summary: format!("{}: {inside}/{} points inside the 95% CI", kind.name(), rows.len()),
        headers: headers.map(String::from).to_vec(),
        rows,
    })
}

fn game_converge(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let settings = spec.settings(DEFAULT_FINITE_ALPHA);
    let eq = finite_n_equilibrium(&spec.game, None, settings)?;
    let k = spec.game.num_servers();
    let mut headers = vec!["iter".to_string(), "residual".to_string()];
    headers.extend((1..=k).map(|j| format!("p_1_{j}")));
    let rows = eq
        .residuals
        .iter()
        .zip(&eq.trajectory)
        .enumerate()
        .map(|(it, (r, p))| {
            let mut row = vec![it.to_string(), num(*r)];
            row.extend(p.iter().map(|v| num(*v)));
            row
        })
        .collect();
    Ok(ExperimentOutput {
        name: "game-converge",
        headers,
        rows,
        summary: format!(
            "{} after {} iterations, residual {:e}",
            if eq.converged { "converged" } else { "not converged" },
            eq.iterations,
            eq.residual()
        ),
    })
}

fn mean_field(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let settings = spec.settings(default_alpha(&spec.ratios));
    let sol = mean_field_solve(&spec.ratios, None, settings)?;
    let k = spec.ratios.len();
    let mut headers = vec!["iter".to_string(), "residual".to_string()];
    headers.extend((1..=k).map(|j| format!("y_{j}")));
    let rows = sol
        .residuals
        .iter()
        .zip(&sol.history)
        .enumerate()
        .map(|(it, (r, y))| {
            let mut row = vec![it.to_string(), num(*r)];
            row.extend(y.iter().map(|v| num(*v)));
            row
        })
        .collect();
    Ok(ExperimentOutput {
        name: "mean-field",
        headers,
        rows,
        summary: format!(
            "{} after {} iterations (alpha {}), residual {:e}",
            if sol.converged { "converged" } else { "not converged" },
            sol.iterations,
            settings.alpha,
            sol.residual()
        ),
    })
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    match spec.kind {
        ExperimentKind::CompareNobuffer => Ok(compare(spec, false)),
        ExperimentKind::CompareBuffer => Ok(compare(spec, true)),
        ExperimentKind::BoundTightness => bound_tightness(spec),
        ExperimentKind::SimValidate => sim_validate(spec),
        ExperimentKind::GameConverge => game_converge(spec),
        ExperimentKind::MeanField => mean_field(spec),
    }
}

/// Looks up `name` and runs it with defaults overridden by `config`.
pub fn run_named(name: &str, config: &Config, seed: u64) -> Result<ExperimentOutput> {
    let kind = ExperimentKind::from_name(name)?;
    run(&ExperimentSpec::from_config(kind, config, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::defaults(kind, 42);
        s.grid = log_grid(0.1, 10.0, 3);
        s.replications = 4;
        s.events = 2e4;
        s
    }

    #[test]
    fn registry_is_stable() {
        let names: Vec<_> = list_experiments().iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            ["compare-nobuffer", "compare-buffer", "bound-tightness", "sim-validate", "game-converge", "mean-field"]
        );
    }

    #[test]
    fn unknown_experiment_lists_valid_names() {
        match run_named("nope", &Config::default(), 42) {
            Err(Error::UnknownExperiment { name, valid }) => {
                assert_eq!(name, "nope");
                assert_eq!(valid.len(), 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(0.1, 1000.0, 25);
        assert_eq!(g.len(), 25);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[24] - 1000.0).abs() < 1e-9);
        assert_eq!((g[0], g[6], g[12], g[24]), (0.1, 1.0, 10.0, 1000.0));
    }

    #[test]
    fn golden_headers() {
        let header = |k| {
            let out = run(&small(k)).unwrap();
            out.to_csv_string().unwrap().lines().next().unwrap().to_string()
        };
        assert_eq!(header(ExperimentKind::CompareNobuffer), "lambda1,aoi_routing,aoi_half,aoi_double,note");
        assert_eq!(header(ExperimentKind::CompareBuffer), "lambda1,aoi_routing,aoi_half,aoi_double,note");
        assert_eq!(header(ExperimentKind::BoundTightness), "lambda1,exact,bound,rel_gap,note");
        assert_eq!(header(ExperimentKind::SimValidate), "lambda1,shs,sim_mean,ci95,within_ci,note");
        let p: Vec<String> = (1..=10).map(|j| format!("p_1_{j}")).collect();
        assert_eq!(header(ExperimentKind::GameConverge), format!("iter,residual,{}", p.join(",")));
        let y: Vec<String> = (1..=10).map(|j| format!("y_{j}")).collect();
        assert_eq!(header(ExperimentKind::MeanField), format!("iter,residual,{}", y.join(",")));
    }

    #[test]
    fn solver_errors_become_notes() {
        let mut s = small(ExperimentKind::BoundTightness);
        s.theta = 1.0;
        let out = run(&s).unwrap();
        assert!(out.rows.iter().all(|r| r[4].starts_with("domain error") && r[1].is_empty()));
    }
}
