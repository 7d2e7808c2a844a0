//! Queue networks and their SHS models.
//!
//! Four systems have exact models: a single M/M/1/1 queue, two parallel
//! M/M/1/1 queues, a single M/M/1/3* queue (buffer of two waiting slots) and
//! two parallel M/M/1/2* queues (one waiting slot each). All sources other
//! than source 1 are merged into one Poisson stream per queue.
//!
//! Age vector layout: coordinate 0 is the monitor, then for every queue `j`
//! the `N_j + 1` positions (in service first, then the waiting slots).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shs::{self, AoiSolution, ResetMap, ShsModel, ShsTransition, Source};

const ROUTING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Server {
    /// Service rate.
    pub mu: f64,
    /// Loss rate of the packet in service.
    #[serde(default)]
    pub theta: f64,
    /// Number of waiting slots (0 = preemptive, no buffer).
    #[serde(default)]
    pub buffer: usize,
}

impl Server {
    pub fn new(mu: f64, theta: f64, buffer: usize) -> Self {
        Self { mu, theta, buffer }
    }
}

/// `n` Poisson sources routed over `K` parallel servers. Source 0 of the
/// vector is the source of interest ("source 1").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueNetworkSpec {
    pub sources: Vec<f64>,
    pub servers: Vec<Server>,
    /// `routing[i][j]` = probability that a packet of source `i` joins queue `j`.
    pub routing: Vec<Vec<f64>>,
}

impl QueueNetworkSpec {
    pub fn new(sources: Vec<f64>, servers: Vec<Server>, routing: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self {
            sources,
            servers,
            routing,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() || self.servers.is_empty() {
            return Err(Error::Structural("need at least one source and one server".into()));
        }
        if self.sources.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Domain("arrival rates must be finite and >= 0".into()));
        }
        if !(self.sources[0] > 0.0) {
            return Err(Error::Domain("source 1 must have a positive rate".into()));
        }
        for (j, s) in self.servers.iter().enumerate() {
            if !(s.mu.is_finite() && s.mu >= 0.0 && s.theta.is_finite() && s.theta >= 0.0) {
                return Err(Error::Domain(format!("server {j} has invalid rates")));
            }
        }
        if self.routing.len() != self.sources.len() {
            return Err(Error::Structural(format!(
                "routing has {} rows for {} sources",
                self.routing.len(),
                self.sources.len()
            )));
        }
        for (i, row) in self.routing.iter().enumerate() {
            if row.len() != self.servers.len() {
                return Err(Error::Structural(format!(
                    "routing row {i} has {} entries for {} servers",
                    row.len(),
                    self.servers.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Domain(format!("routing row {i} has entries outside [0,1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROUTING_TOL {
                return Err(Error::Domain(format!("routing row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// One queue fed by source 1 and, if `lambda_rest > 0`, one merged
    /// stream of other sources.
    pub fn single(lambda1: f64, lambda_rest: f64, server: Server) -> Result<Self> {
        let mut sources = vec![lambda1];
        if lambda_rest > 0.0 {
            sources.push(lambda_rest);
        }
        let routing = vec![vec![1.0]; sources.len()];
        Self::new(sources, vec![server], routing)
    }

    /// `k` identical servers with every source splitting uniformly.
    pub fn symmetric(lambda1: f64, lambda_rest: f64, server: Server, k: usize) -> Result<Self> {
        let mut sources = vec![lambda1];
        if lambda_rest > 0.0 {
            sources.push(lambda_rest);
        }
        let routing = vec![vec![1.0 / k as f64; k]; sources.len()];
        Self::new(sources, vec![server; k], routing)
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn lambda1(&self) -> f64 {
        self.sources[0]
    }

    /// Total rate of all sources.
    pub fn total_rate(&self) -> f64 {
        self.sources.iter().sum()
    }

    /// `lambda_1 p_1j`.
    pub fn source1_rate_to(&self, j: usize) -> f64 {
        self.sources[0] * self.routing[0][j]
    }

    /// `sum_{k>1} lambda_k p_kj`.
    pub fn other_rate_to(&self, j: usize) -> f64 {
        self.sources
            .iter()
            .zip(&self.routing)
            .skip(1)
            .map(|(l, row)| l * row[j])
            .sum()
    }

    /// `rho_j = (lambda_1 p_1j + sum_{k>1} lambda_k p_kj) / (mu_j + theta_j)`.
    pub fn load(&self, j: usize) -> Result<f64> {
        let s = &self.servers[j];
        let denom = s.mu + s.theta;
        if denom <= 0.0 {
            return Err(Error::Domain(format!("server {j} has mu + theta = 0")));
        }
        Ok((self.source1_rate_to(j) + self.other_rate_to(j)) / denom)
    }

    /// Multiplies every arrival rate by `c`.
    pub fn with_arrivals_scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.sources.iter_mut().for_each(|l| *l *= c);
        s
    }

    /// Multiplies every loss rate by `c`.
    pub fn with_losses_scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.servers.iter_mut().for_each(|v| v.theta *= c);
        s
    }

    /// Multiplies every service rate by `c`.
    pub fn with_service_scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.servers.iter_mut().for_each(|v| v.mu *= c);
        s
    }

    /// Multiplies every rate (arrivals, services, losses) by `c`.
    pub fn time_scaled(&self, c: f64) -> Self {
        self.with_arrivals_scaled(c)
            .with_service_scaled(c)
            .with_losses_scaled(c)
    }

    /// Swaps the labels of servers `a` and `b` along with the routing columns.
    pub fn with_servers_swapped(&self, a: usize, b: usize) -> Self {
        let mut s = self.clone();
        s.servers.swap(a, b);
        s.routing.iter_mut().for_each(|row| row.swap(a, b));
        s
    }
}

/// The four systems with an exact SHS model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// One M/M/1/1 queue with preemption.
    SingleNoBuffer,
    /// Two parallel M/M/1/1 queues.
    TwoParallelNoBuffer,
    /// One M/M/1/3* queue.
    SingleBuffer2,
    /// Two parallel M/M/1/2* queues.
    TwoParallelBuffer1,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::SingleNoBuffer,
        ModelKind::TwoParallelNoBuffer,
        ModelKind::SingleBuffer2,
        ModelKind::TwoParallelBuffer1,
    ];

    /// `(number of servers, waiting slots per server)`.
    pub fn shape(self) -> (usize, usize) {
        match self {
            ModelKind::SingleNoBuffer => (1, 0),
            ModelKind::TwoParallelNoBuffer => (2, 0),
            ModelKind::SingleBuffer2 => (1, 2),
            ModelKind::TwoParallelBuffer1 => (2, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SingleNoBuffer => "single-no-buffer",
            ModelKind::TwoParallelNoBuffer => "two-parallel-no-buffer",
            ModelKind::SingleBuffer2 => "single-buffer2",
            ModelKind::TwoParallelBuffer1 => "two-parallel-buffer1",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model kind `{name}`; expected one of: {}",
                    Self::ALL.map(|k| k.name()).join(", ")
                ))
            })
    }

    /// The kind whose shape matches `spec`, if any.
    pub fn infer(spec: &QueueNetworkSpec) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.check_shape(spec).is_ok())
            .ok_or_else(|| {
                Error::Structural(format!(
                    "no exact model for {} servers with buffers {:?}",
                    spec.num_servers(),
                    spec.servers.iter().map(|s| s.buffer).collect::<Vec<_>>()
                ))
            })
    }

    pub fn check_shape(self, spec: &QueueNetworkSpec) -> Result<()> {
        let (k, n) = self.shape();
        if spec.num_servers() != k || spec.servers.iter().any(|s| s.buffer != n) {
            return Err(Error::Structural(format!(
                "{} needs {k} server(s) with buffer {n}",
                self.name()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct QueueRates {
    fresh: f64,
    other: f64,
    mu: f64,
    theta: f64,
}

/// Builds the SHS model of `K` parallel queues with `buffer` waiting slots
/// each, from first principles of the queue dynamics:
///
/// * source-1 arrival: fresh packet (age 0) enters service if idle, preempts
///   the packet in service when there is no buffer, is appended otherwise, and
///   replaces the last waiting packet when the queue is full;
/// * other-source arrival: same placement, but its age copies that of the
///   packet ahead of it (or the monitor if none), so its delivery carries no
///   newer information about source 1;
/// * delivery: monitor takes the age of the packet in service, the queue
///   shifts forward;
/// * loss: the queue shifts forward, the monitor is untouched.
///
/// Coordinates of empty positions are reset to zero. States are occupancy
/// vectors ordered with queue 1 varying fastest.
fn parallel_queue_model(queues: &[QueueRates], buffer: usize) -> Result<ShsModel> {
    let k = queues.len();
    let cap = buffer + 1;
    let base = cap + 1;
    let num_states = base.pow(k as u32);
    let dim = 1 + k * cap;
    let slot = |j: usize, pos: usize| 1 + j * cap + pos;

    let decode = |mut s: usize| {
        let mut occ = vec![0usize; k];
        for o in occ.iter_mut() {
            *o = s % base;
            s /= base;
        }
        occ
    };
    let encode = |occ: &[usize]| occ.iter().rev().fold(0, |acc, o| acc * base + o);

    let reset_for = |target: &[usize], special: &[(usize, Source)]| {
        let mut src: Vec<Source> = (0..dim).map(Source::CopyFrom).collect();
        for &(c, s) in special {
            src[c] = s;
        }
        for (j, &n) in target.iter().enumerate() {
            for pos in n..cap {
                src[slot(j, pos)] = Source::Zero;
            }
        }
        ResetMap::new(src)
    };

    let mut transitions = Vec::new();
    let mut growth = Vec::with_capacity(num_states);
    let mut labels = Vec::with_capacity(num_states);

    for s in 0..num_states {
        let occ = decode(s);
        let mut b = vec![false; dim];
        b[0] = true;
        for (j, &n) in occ.iter().enumerate() {
            for pos in 0..n {
                b[slot(j, pos)] = true;
            }
        }
        growth.push(b);
        labels.push(occ.iter().map(|o| o.to_string()).collect::<String>());

        for (j, q) in queues.iter().enumerate() {
            let n = occ[j];
            let mut up = occ.clone();
            if n < cap {
                up[j] += 1;
            }
            // position taken by the arriving packet, and the one ahead of it
            let (pos, ahead) = if n == cap {
                (buffer, buffer.checked_sub(1).map(|p| slot(j, p)))
            } else {
                (n, n.checked_sub(1).map(|p| slot(j, p)))
            };
            let ahead = if buffer == 0 { None } else { ahead };
            let to = encode(&up);

            transitions.push(ShsTransition {
                from: s,
                to,
                rate: q.fresh,
                reset: reset_for(&up, &[(slot(j, pos), Source::Zero)]),
            });
            let tag = Source::CopyFrom(ahead.unwrap_or(0));
            transitions.push(ShsTransition {
                from: s,
                to,
                rate: q.other,
                reset: reset_for(&up, &[(slot(j, pos), tag)]),
            });

            if n > 0 {
                let mut down = occ.clone();
                down[j] -= 1;
                let to = encode(&down);
                let shift: Vec<(usize, Source)> = (0..n - 1)
                    .map(|p| (slot(j, p), Source::CopyFrom(slot(j, p + 1))))
                    .collect();
                let mut deliver = vec![(0, Source::CopyFrom(slot(j, 0)))];
                deliver.extend_from_slice(&shift);
                transitions.push(ShsTransition {
                    from: s,
                    to,
                    rate: q.mu,
                    reset: reset_for(&down, &deliver),
                });
                transitions.push(ShsTransition {
                    from: s,
                    to,
                    rate: q.theta,
                    reset: reset_for(&down, &shift),
                });
            }
        }
    }
    ShsModel::with_labels(num_states, dim, transitions, growth, labels)
}

/// Builds the exact SHS model of `kind` parameterised by `spec`.
pub fn build_model(kind: ModelKind, spec: &QueueNetworkSpec) -> Result<ShsModel> {
    spec.validate()?;
    kind.check_shape(spec)?;
    let (_, buffer) = kind.shape();
    let queues: Vec<QueueRates> = spec
        .servers
        .iter()
        .enumerate()
        .map(|(j, s)| QueueRates {
            fresh: spec.source1_rate_to(j),
            other: spec.other_rate_to(j),
            mu: s.mu,
            theta: s.theta,
        })
        .collect();
    parallel_queue_model(&queues, buffer)
}

/// Exact average AoI of source 1.
pub fn exact_aoi(kind: ModelKind, spec: &QueueNetworkSpec) -> Result<AoiSolution> {
    shs::average_aoi(&build_model(kind, spec)?)
}

/// Closed-form stationary distribution in the state order of [`build_model`].
pub fn closed_form_pi(kind: ModelKind, spec: &QueueNetworkSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    kind.check_shape(spec)?;
    match kind {
        ModelKind::SingleNoBuffer => {
            let s = &spec.servers[0];
            let lambda = spec.source1_rate_to(0) + spec.other_rate_to(0);
            let denom = lambda + s.mu + s.theta;
            if s.mu + s.theta <= 0.0 {
                return Err(Error::Domain("mu + theta = 0".into()));
            }
            Ok(vec![(s.mu + s.theta) / denom, lambda / denom])
        }
        ModelKind::SingleBuffer2 => {
            let rho = spec.load(0)?;
            let z = 1.0 + rho + rho * rho + rho.powi(3);
            Ok((0..4).map(|j| rho.powi(j) / z).collect())
        }
        ModelKind::TwoParallelNoBuffer | ModelKind::TwoParallelBuffer1 => {
            let (_, buffer) = kind.shape();
            let (r1, r2) = (spec.load(0)?, spec.load(1)?);
            let z = |r: f64| (0..=buffer as i32 + 1).map(|e| r.powi(e)).sum::<f64>();
            let z = z(r1) * z(r2);
            let m = buffer as i32 + 2;
            let mut pi = Vec::with_capacity((m * m) as usize);
            for k2 in 0..m {
                for k1 in 0..m {
                    pi.push(r1.powi(k1) * r2.powi(k2) / z);
                }
            }
            Ok(pi)
        }
    }
}

/// Average AoI of source 1 in one M/M/1/1 queue with preemption and losses:
/// `1/lambda1 + theta/(lambda1 mu) + lambda/(lambda1 mu)`, `lambda = lambda1 + lambda_rest`.
pub fn proposition1_aoi(lambda1: f64, lambda_rest: f64, theta: f64, mu: f64) -> Result<f64> {
    if !(lambda1 > 0.0) || !(mu > 0.0) {
        return Err(Error::Domain("lambda1 and mu must be positive".into()));
    }
    if theta < 0.0 || lambda_rest < 0.0 {
        return Err(Error::Domain("theta and lambda_rest must be >= 0".into()));
    }
    let lambda = lambda1 + lambda_rest;
    Ok(1.0 / lambda1 + theta / (lambda1 * mu) + lambda / (lambda1 * mu))
}

/// The ROUTING / HALF / DOUBLE triple used in the comparison studies.
#[derive(Debug, Clone)]
pub struct ComparisonSystems {
    pub routing: (ModelKind, QueueNetworkSpec),
    pub half: (ModelKind, QueueNetworkSpec),
    pub double: (ModelKind, QueueNetworkSpec),
}

impl ComparisonSystems {
    /// `buffered = false` compares two parallel M/M/1/1 queues against one
    /// M/M/1/1 queue; `buffered = true` compares two M/M/1/2* against M/M/1/3*.
    ///
    /// The single queue with total traffic `lambda1 + lambda_rest`, loss
    /// `theta` and service `mu` is the reference; HALF halves arrivals and
    /// losses, DOUBLE doubles service, ROUTING splits it over two servers with
    /// loss `theta/2` each.
    pub fn new(lambda1: f64, lambda_rest: f64, mu: f64, theta: f64, buffered: bool) -> Result<Self> {
        let (single_kind, pair_kind, single_buf, pair_buf) = if buffered {
            (ModelKind::SingleBuffer2, ModelKind::TwoParallelBuffer1, 2, 1)
        } else {
            (ModelKind::SingleNoBuffer, ModelKind::TwoParallelNoBuffer, 0, 0)
        };
        let reference = QueueNetworkSpec::single(lambda1, lambda_rest, Server::new(mu, theta, single_buf))?;
        let half = reference.with_arrivals_scaled(0.5).with_losses_scaled(0.5);
        let double = reference.with_service_scaled(2.0);
        let routing =
            QueueNetworkSpec::symmetric(lambda1, lambda_rest, Server::new(mu, theta / 2.0, pair_buf), 2)?;
        Ok(Self {
            routing: (pair_kind, routing),
            half: (single_kind, half),
            double: (single_kind, double),
        })
    }

    /// `(routing, half, double)` exact AoI values.
    pub fn evaluate(&self) -> Result<(f64, f64, f64)> {
        let f = |(k, s): &(ModelKind, QueueNetworkSpec)| exact_aoi(*k, s).map(|x| x.average_aoi);
        Ok((f(&self.routing)?, f(&self.half)?, f(&self.double)?))
    }
}
