//! TOML configuration.
//!
//! ```toml
//! sources = [2.0, 10.0]            # source 1 first
//! routing = [[0.5, 0.5], [0.5, 0.5]]
//! kind = "two-parallel-buffer1"    # optional, inferred from the servers
//!
//! [[servers]]
//! mu = 1.0
//! theta = 0.0
//! buffer = 1
//!
//! [[servers]]
//! mu = 1.0
//! buffer = 1
//!
//! [game]
//! alpha = 0.5
//! tol = 1e-10
//! max_iter = 100000
//!
//! [sim]
//! horizon = 1e5
//! warmup = 0.1
//! replications = 20
//!
//! [experiment]
//! lambda1_min = 0.1
//! lambda1_max = 1000.0
//! points = 25
//! mu = 1.0
//! theta = 10.0
//! lambda_rest = 10.0
//! ```
//!
//! When `routing` is omitted every source splits uniformly over the servers.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::game::{GameInstance, IterationSettings};
use crate::models::{ModelKind, QueueNetworkSpec, Server};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: Option<f64>,
    pub warmup: Option<f64>,
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub lambda1_min: Option<f64>,
    pub lambda1_max: Option<f64>,
    pub points: Option<usize>,
    pub mu: Option<f64>,
    pub theta: Option<f64>,
    pub lambda_rest: Option<f64>,
    pub servers: Option<usize>,
    pub buffer: Option<usize>,
    pub replications: Option<usize>,
    /// Expected number of events per simulated replication.
    pub events: Option<f64>,
    /// Mean-field ratios `mu_bar_j / lambda_bar`.
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub sources: Option<Vec<f64>>,
    pub servers: Option<Vec<Server>>,
    pub routing: Option<Vec<Vec<f64>>>,
    pub kind: Option<String>,
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn has_network(&self) -> bool {
        self.sources.is_some() || self.servers.is_some()
    }

    pub fn network(&self) -> Result<QueueNetworkSpec> {
        let sources = self
            .sources
            .clone()
            .ok_or_else(|| Error::Config("missing `sources`".into()))?;
        let servers = self
            .servers
            .clone()
            .ok_or_else(|| Error::Config("missing `servers`".into()))?;
        let routing = match &self.routing {
            Some(r) => r.clone(),
            None => vec![vec![1.0 / servers.len().max(1) as f64; servers.len()]; sources.len()],
        };
        QueueNetworkSpec::new(sources, servers, routing)
    }

    /// Explicit `kind`, or the one inferred from the servers.
    pub fn model_kind(&self) -> Result<ModelKind> {
        match &self.kind {
            Some(name) => ModelKind::from_name(name),
            None => ModelKind::infer(&self.network()?),
        }
    }

    /// Game on the configured sources and servers; every server must share
    /// one buffer size.
    pub fn game_instance(&self) -> Result<GameInstance> {
        let spec = self.network()?;
        let buffer = spec.servers[0].buffer;
        if spec.servers.iter().any(|s| s.buffer != buffer) {
            return Err(Error::Config("the game needs one buffer size for all servers".into()));
        }
        GameInstance::new(spec.sources.clone(), spec.servers.iter().map(|s| s.mu).collect(), buffer)
    }

    /// `[game]` settings on top of `default_alpha`.
    pub fn iteration_settings(&self, default_alpha: f64) -> IterationSettings {
        let mut s = IterationSettings::new(self.game.alpha.unwrap_or(default_alpha));
        if let Some(t) = self.game.tol {
            s.tol = t;
        }
        if let Some(m) = self.game.max_iter {
            s.max_iter = m;
        }
        s
    }

    /// `[sim]` settings applied to the configured network.
    pub fn sim_config(&self, seed: u64) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(self.network()?, self.sim.horizon.unwrap_or(1e4), seed);
        if let Some(w) = self.sim.warmup {
            cfg.warmup = w;
        }
        if let Some(r) = self.sim.replications {
            cfg.replications = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
sources = [2.0, 10.0]
routing = [[0.5, 0.5], [0.5, 0.5]]

[[servers]]
mu = 1.0
theta = 0.0
buffer = 1

[[servers]]
mu = 1.0
buffer = 1

[game]
alpha = 0.3

[sim]
horizon = 500.0
replications = 3
"#;

    #[test]
    fn parses_full_config() {
        let c = Config::parse(FULL).unwrap();
        let spec = c.network().unwrap();
        assert_eq!(spec.num_servers(), 2);
        assert_eq!(spec.servers[1].theta, 0.0);
        assert_eq!(c.model_kind().unwrap(), ModelKind::TwoParallelBuffer1);
        assert_eq!(c.iteration_settings(0.5).alpha, 0.3);
        let sim = c.sim_config(9).unwrap();
        assert_eq!((sim.horizon, sim.replications, sim.seed), (500.0, 3, 9));
        assert_eq!(c.game_instance().unwrap().buffer, 1);
    }

    #[test]
    fn routing_defaults_to_uniform() {
        let c = Config::parse("sources = [1.0]\n[[servers]]\nmu = 2.0\n[[servers]]\nmu = 3.0\n").unwrap();
        assert_eq!(c.network().unwrap().routing, vec![vec![0.5, 0.5]]);
    }

    #[test]
    fn errors_are_config_errors() {
        assert!(matches!(Config::parse("sources = ["), Err(Error::Config(_))));
        assert!(matches!(Config::parse("colour = 3"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("").unwrap().network(), Err(Error::Config(_))));
        let c = Config::parse("kind = \"nope\"\nsources = [1.0]\n[[servers]]\nmu = 1.0\n").unwrap();
        assert!(matches!(c.model_kind(), Err(Error::Config(_))));
        assert!(matches!(Config::load("/nonexistent/file.toml"), Err(Error::Io(_))));
    }
}
