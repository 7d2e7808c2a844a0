//! Discrete-event simulation of the parallel-queue system.
//!
//! The event loop draws the next event from the competing exponential
//! clocks (arrivals per source class and queue, service and loss per busy
//! queue). Every packet carries a timestamp tag: a source-1 packet is tagged
//! with its generation time, a packet of another source with the tag of the
//! packet ahead of it, or the monitor's tag when nothing is ahead. A delivery
//! sets the monitor tag `U` to the packet's tag, so the age `t - U(t)` follows
//! exactly the dynamics of the SHS models.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::models::QueueNetworkSpec;

pub const DEFAULT_WARMUP: f64 = 0.1;
pub const DEFAULT_REPLICATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: QueueNetworkSpec,
    pub horizon: f64,
    /// Fraction of the horizon discarded before measuring.
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(spec: QueueNetworkSpec, horizon: f64, seed: u64) -> Self {
        Self {
            spec,
            horizon,
            warmup: DEFAULT_WARMUP,
            replications: DEFAULT_REPLICATIONS,
            seed,
        }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Domain("horizon must be positive".into()));
        }
        if !(0.0..=0.5).contains(&self.warmup) {
            return Err(Error::Domain("warmup must lie in [0, 0.5]".into()));
        }
        if self.replications == 0 {
            return Err(Error::Domain("need at least one replication".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    ArrivalSrc1,
    ArrivalOther,
    Delivery,
    Loss,
    Preempt,
    Replace,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ArrivalSrc1 => "arrival-src1",
            EventKind::ArrivalOther => "arrival-other",
            EventKind::Delivery => "delivery",
            EventKind::Loss => "loss",
            EventKind::Preempt => "preempt",
            EventKind::Replace => "replace",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEvent {
    pub time: f64,
    /// Zero-based queue index.
    pub queue: usize,
    pub kind: EventKind,
}

impl fmt::Display for TraceEvent {
    /// `time<TAB>queue<TAB>kind`, with a one-based queue number.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}\t{}\t{}", self.time, self.queue + 1, self.kind)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub arrivals: u64,
    pub deliveries: u64,
    pub losses: u64,
    pub preemptions: u64,
    pub replacements: u64,
    /// Packets still queued when the horizon is reached.
    pub in_flight: u64,
}

impl EventCounts {
    fn add(&mut self, other: &EventCounts) {
        self.arrivals += other.arrivals;
        self.deliveries += other.deliveries;
        self.losses += other.losses;
        self.preemptions += other.preemptions;
        self.replacements += other.replacements;
        self.in_flight += other.in_flight;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    /// Substream index of the replication.
    pub stream: u64,
    pub mean_aoi: f64,
    pub counts: EventCounts,
    /// Time-average number of packets in each queue.
    pub occupancy: Vec<f64>,
    /// Empirical arrival rate into each queue.
    pub arrival_rate: Vec<f64>,
    /// Deliveries of source-1 generated packets.
    pub fresh_deliveries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub mean_aoi: f64,
    pub ci95_halfwidth: f64,
    pub seed: u64,
    pub replications: Vec<ReplicationResult>,
    /// Streams dropped because no source-1 packet was delivered.
    pub excluded: Vec<u64>,
    pub warnings: Vec<String>,
    pub counts: EventCounts,
}

impl SimReport {
    pub fn estimates(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.mean_aoi).collect()
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean_aoi).abs() <= self.ci95_halfwidth
    }

    /// Mean and CI half-width of the time-average occupancy of queue `j`.
    pub fn occupancy(&self, j: usize) -> (f64, f64) {
        mean_ci95(&self.replications.iter().map(|r| r.occupancy[j]).collect::<Vec<_>>())
    }

    /// Mean and CI half-width of the arrival rate into queue `j`.
    pub fn arrival_rate(&self, j: usize) -> (f64, f64) {
        mean_ci95(&self.replications.iter().map(|r| r.arrival_rate[j]).collect::<Vec<_>>())
    }
}

/// Sample mean and 95% Student-t half-width. The half-width is infinite for
/// fewer than two values.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    tag: f64,
    fresh: bool,
}

struct Rates {
    /// Index `2j` is source 1 into queue `j`, `2j + 1` the other sources.
    arrivals: Vec<f64>,
    total_arrival: f64,
    service: Vec<f64>,
    mu: Vec<f64>,
    capacity: Vec<usize>,
}

impl Rates {
    fn new(spec: &QueueNetworkSpec) -> Self {
        let k = spec.num_servers();
        let mut arrivals = Vec::with_capacity(2 * k);
        for j in 0..k {
            arrivals.push(spec.source1_rate_to(j));
            arrivals.push(spec.other_rate_to(j));
        }
        Self {
            total_arrival: arrivals.iter().sum(),
            arrivals,
            service: spec.servers.iter().map(|s| s.mu + s.theta).collect(),
            mu: spec.servers.iter().map(|s| s.mu).collect(),
            capacity: spec.servers.iter().map(|s| s.buffer + 1).collect(),
        }
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Runs one replication; `on_event` may stop the run early by returning false.
fn run_replication(
    cfg: &SimConfig,
    stream: u64,
    mut on_event: impl FnMut(f64, usize, EventKind) -> bool,
) -> ReplicationResult {
    let rates = Rates::new(&cfg.spec);
    let k = rates.mu.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);

    let start = cfg.warmup * cfg.horizon;
    let window = cfg.horizon - start;
    let mut queues: Vec<VecDeque<Packet>> = rates.capacity.iter().map(|&c| VecDeque::with_capacity(c)).collect();
    let mut counts = EventCounts::default();
    let mut fresh_deliveries = 0;
    let mut arrivals_in_window = vec![0u64; k];
    let mut occupancy_area = vec![0.0; k];
    let mut age_area = 0.0;
    let mut monitor = 0.0;
    let mut now = 0.0;
    let mut busy_rate = 0.0;

    loop {
        let total = rates.total_arrival + busy_rate;
        let next = now + exp_sample(&mut rng, total);
        let until = next.min(cfg.horizon);
        if until > start {
            let a = now.max(start);
            age_area += ((until - monitor).powi(2) - (a - monitor).powi(2)) / 2.0;
            for (area, q) in occupancy_area.iter_mut().zip(&queues) {
                *area += q.len() as f64 * (until - a);
            }
        }
        if next >= cfg.horizon {
            break;
        }
        now = next;
        let measuring = now >= start;

        let mut pick = rng.random::<f64>() * total;
        let mut chosen = None;
        for (idx, &r) in rates.arrivals.iter().enumerate() {
            if pick < r {
                chosen = Some(idx);
                break;
            }
            pick -= r;
        }
        let keep_going = match chosen {
            Some(idx) => {
                let j = idx / 2;
                let fresh = idx % 2 == 0;
                counts.arrivals += 1;
                if measuring {
                    arrivals_in_window[j] += 1;
                }
                let kind = if fresh { EventKind::ArrivalSrc1 } else { EventKind::ArrivalOther };
                let mut go = on_event(now, j, kind);
                let q = &mut queues[j];
                let cap = rates.capacity[j];
                let n = q.len();
                let ahead = |q: &VecDeque<Packet>, pos: usize| {
                    if pos == 0 || cap == 1 {
                        monitor
                    } else {
                        q[pos - 1].tag
                    }
                };
                if n < cap {
                    let tag = if fresh { now } else { ahead(q, n) };
                    q.push_back(Packet { tag, fresh });
                    if n == 0 {
                        busy_rate += rates.service[j];
                    }
                } else {
                    let pos = cap - 1;
                    let tag = if fresh { now } else { ahead(q, pos) };
                    q[pos] = Packet { tag, fresh };
                    let kind = if cap == 1 {
                        counts.preemptions += 1;
                        EventKind::Preempt
                    } else {
                        counts.replacements += 1;
                        EventKind::Replace
                    };
                    go &= on_event(now, j, kind);
                }
                go
            }
            None => {
                let mut j = 0;
                for (idx, q) in queues.iter().enumerate() {
                    if q.is_empty() {
                        continue;
                    }
                    j = idx;
                    if pick < rates.service[idx] {
                        break;
                    }
                    pick -= rates.service[idx];
                }
                let packet = queues[j].pop_front().expect("a busy queue was chosen");
                if queues[j].is_empty() {
                    busy_rate -= rates.service[j];
                    if queues.iter().all(|q| q.is_empty()) {
                        busy_rate = 0.0;
                    }
                }
                if pick < rates.mu[j] {
                    counts.deliveries += 1;
                    if packet.fresh {
                        fresh_deliveries += 1;
                    }
                    monitor = packet.tag;
                    on_event(now, j, EventKind::Delivery)
                } else {
                    counts.losses += 1;
                    on_event(now, j, EventKind::Loss)
                }
            }
        };
        if !keep_going {
            break;
        }
    }

    counts.in_flight = queues.iter().map(|q| q.len() as u64).sum();
    ReplicationResult {
        stream,
        mean_aoi: age_area / window,
        counts,
        occupancy: occupancy_area.iter().map(|a| a / window).collect(),
        arrival_rate: arrivals_in_window.iter().map(|&a| a as f64 / window).collect(),
        fresh_deliveries,
    }
}

/// Runs the replications in parallel and aggregates them.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let runs: Vec<ReplicationResult> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|stream| run_replication(cfg, stream, |_, _, _| true))
        .collect();

    let mut counts = EventCounts::default();
    runs.iter().for_each(|r| counts.add(&r.counts));
    let (kept, dropped): (Vec<_>, Vec<_>) = runs.into_iter().partition(|r| r.fresh_deliveries > 0);
    let excluded: Vec<u64> = dropped.iter().map(|r| r.stream).collect();
    let warnings = excluded
        .iter()
        .map(|s| format!("replication {s} delivered no source-1 update and was excluded"))
        .collect();
    if kept.is_empty() {
        return Err(Error::Numerical(
            "no replication delivered a source-1 update; increase the horizon".into(),
        ));
    }
    let (mean_aoi, ci95_halfwidth) = mean_ci95(&kept.iter().map(|r| r.mean_aoi).collect::<Vec<_>>());
    Ok(SimReport {
        mean_aoi,
        ci95_halfwidth,
        seed: cfg.seed,
        replications: kept,
        excluded,
        warnings,
        counts,
    })
}

/// The first `max_events` events of replication 0.
pub fn trace(cfg: &SimConfig, max_events: usize) -> Result<Vec<TraceEvent>> {
    cfg.validate()?;
    let mut events = Vec::with_capacity(max_events.min(1 << 16));
    if max_events == 0 {
        return Ok(events);
    }
    run_replication(cfg, 0, |time, queue, kind| {
        events.push(TraceEvent { time, queue, kind });
        events.len() < max_events
    });
    events.truncate(max_events);
    Ok(events)
}
