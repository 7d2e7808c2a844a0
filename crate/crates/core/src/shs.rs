//! Stochastic hybrid system engine.
//!
//! A model is a finite continuous-time Markov chain whose transitions remap an
//! age vector `x` through 0/1 column-selector matrices. Each output coordinate
//! either copies one input coordinate or is reset to zero. In every discrete
//! state a subset of coordinates (the growth mask) increases at unit rate.
//!
//! The average age of the monitor (coordinate 0) is `sum_q v_q(0)` where the
//! `v_q` solve, for every state `q` and coordinate `i`,
//!
//! ```text
//! v_q(i) * sum_{l out of q} rate_l = b_q(i) * pi_q + sum_{l into q} rate_l * (v_{from(l)} A_l)(i)
//! ```
//!
//! Self-loops appear on both sides of that balance and are ignored when
//! computing the stationary distribution.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Dense;

/// Tolerance below which a `v` entry counts as negative.
pub const NONNEGATIVITY_TOL: f64 = 1e-9;
/// Maximum relative residual accepted for the `v` system.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Where one output coordinate of a reset takes its value from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Source {
    CopyFrom(usize),
    Zero,
}

/// Per-coordinate reset `x' = x A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ResetMap(Vec<Source>);

impl ResetMap {
    pub fn new(sources: Vec<Source>) -> Self {
        Self(sources)
    }

    /// Reset that leaves every coordinate untouched.
    pub fn identity(dim: usize) -> Self {
        Self((0..dim).map(Source::CopyFrom).collect())
    }

    pub fn sources(&self) -> &[Source] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Applies the map to a concrete age vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .map(|s| match s {
                Source::CopyFrom(i) => x[*i],
                Source::Zero => 0.0,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShsTransition {
    pub from: usize,
    pub to: usize,
    /// Events per unit time. Zero-rate links are kept so that a model built
    /// from a table has the table's shape, but they never fire.
    pub rate: f64,
    pub reset: ResetMap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShsModel {
    num_states: usize,
    age_dim: usize,
    transitions: Vec<ShsTransition>,
    growth: Vec<Vec<bool>>,
    labels: Vec<String>,
}

impl ShsModel {
    pub fn new(
        num_states: usize,
        age_dim: usize,
        transitions: Vec<ShsTransition>,
        growth: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let labels = (0..num_states).map(|q| q.to_string()).collect();
        Self::with_labels(num_states, age_dim, transitions, growth, labels)
    }

    pub fn with_labels(
        num_states: usize,
        age_dim: usize,
        transitions: Vec<ShsTransition>,
        growth: Vec<Vec<bool>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if num_states == 0 || age_dim == 0 {
            return Err(Error::Structural("model needs at least one state and one coordinate".into()));
        }
        if growth.len() != num_states || labels.len() != num_states {
            return Err(Error::Structural(format!(
                "expected {num_states} growth masks and labels, got {} and {}",
                growth.len(),
                labels.len()
            )));
        }
        for (q, b) in growth.iter().enumerate() {
            if b.len() != age_dim {
                return Err(Error::Structural(format!(
                    "growth mask of state {q} has length {}, expected {age_dim}",
                    b.len()
                )));
            }
            if !b[0] {
                return Err(Error::Structural(format!(
                    "monitor age must grow in every state (state {q})"
                )));
            }
        }
        for (l, t) in transitions.iter().enumerate() {
            if t.from >= num_states || t.to >= num_states {
                return Err(Error::Structural(format!(
                    "transition {l} references state outside 0..{num_states}"
                )));
            }
            if !(t.rate.is_finite() && t.rate >= 0.0) {
                return Err(Error::Structural(format!(
                    "transition {l} has invalid rate {}",
                    t.rate
                )));
            }
            if t.reset.dim() != age_dim {
                return Err(Error::Structural(format!(
                    "transition {l} reset has dimension {}, expected {age_dim}",
                    t.reset.dim()
                )));
            }
            if let Some(bad) = t.reset.sources().iter().find_map(|s| match s {
                Source::CopyFrom(i) if *i >= age_dim => Some(*i),
                _ => None,
            }) {
                return Err(Error::Structural(format!(
                    "transition {l} copies from coordinate {bad} >= {age_dim}"
                )));
            }
        }
        Ok(Self {
            num_states,
            age_dim,
            transitions,
            growth,
            labels,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn age_dim(&self) -> usize {
        self.age_dim
    }

    pub fn transitions(&self) -> &[ShsTransition] {
        &self.transitions
    }

    pub fn growth(&self) -> &[Vec<bool>] {
        &self.growth
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of `(state, coordinate)` unknowns whose coordinate actually
    /// grows in that state. The remaining unknowns are solved too but carry
    /// no information.
    pub fn relevant_unknowns(&self) -> usize {
        self.growth
            .iter()
            .map(|b| b.iter().filter(|g| **g).count())
            .sum()
    }

    /// Returns a copy with every rate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut m = self.clone();
        for t in &mut m.transitions {
            t.rate *= c;
        }
        m
    }

    fn live(&self) -> impl Iterator<Item = &ShsTransition> {
        self.transitions.iter().filter(|t| t.rate > 0.0)
    }

    /// States not mutually reachable with state 0 over positive-rate links.
    pub fn unreachable_states(&self) -> Vec<usize> {
        let n = self.num_states;
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for t in self.live().filter(|t| t.from != t.to) {
            fwd[t.from].push(t.to);
            bwd[t.to].push(t.from);
        }
        let reach = |adj: &[Vec<usize>]| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(q) = queue.pop_front() {
                for &r in &adj[q] {
                    if !seen[r] {
                        seen[r] = true;
                        queue.push_back(r);
                    }
                }
            }
            seen
        };
        let f = reach(&fwd);
        let b = reach(&bwd);
        (0..n).filter(|&q| !(f[q] && b[q])).collect()
    }
}

/// Stationary law, `v` table and average age of an SHS model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoiSolution {
    pub pi: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub average_aoi: f64,
    /// Relative residual of the `v` linear system.
    pub residual: f64,
}

impl AoiSolution {
    /// `v_q(0)` for every state.
    pub fn monitor_terms(&self) -> Vec<f64> {
        self.v.iter().map(|vq| vq[0]).collect()
    }
}

/// Stationary distribution of the discrete chain (self-loops ignored).
pub fn stationary_distribution(model: &ShsModel) -> Result<Vec<f64>> {
    let unreachable = model.unreachable_states();
    if !unreachable.is_empty() {
        return Err(Error::Reducible { unreachable });
    }
    let n = model.num_states();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    // Rows are the balance equations pi Q = 0 (transposed); the last one is
    // replaced by the normalisation.
    let mut a = Dense::zeros(n);
    for t in model.live().filter(|t| t.from != t.to) {
        a.add(t.to, t.from, t.rate);
        a.add(t.from, t.from, -t.rate);
    }
    for c in 0..n {
        a.set(n - 1, c, 1.0);
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut pi = a.solve(&rhs)?;
    for p in &mut pi {
        if *p < 0.0 && *p > -1e-14 {
            *p = 0.0;
        }
    }
    if pi.iter().any(|p| *p < 0.0) {
        return Err(Error::Numerical(format!("negative stationary probability: {pi:?}")));
    }
    Ok(pi)
}

/// Max-norm of `pi Q` under the model's generator.
pub fn balance_residual(model: &ShsModel, pi: &[f64]) -> f64 {
    let mut flow = vec![0.0; model.num_states()];
    for t in model.live().filter(|t| t.from != t.to) {
        flow[t.to] += pi[t.from] * t.rate;
        flow[t.from] -= pi[t.from] * t.rate;
    }
    flow.iter().map(|f| f.abs()).fold(0.0, f64::max)
}

fn v_system(model: &ShsModel, pi: &[f64]) -> (Dense, Vec<f64>) {
    let dim = model.age_dim();
    let n = model.num_states() * dim;
    let mut out_rate = vec![0.0; model.num_states()];
    for t in model.live() {
        out_rate[t.from] += t.rate;
    }
    let mut a = Dense::zeros(n);
    let mut rhs = vec![0.0; n];
    for q in 0..model.num_states() {
        for i in 0..dim {
            let row = q * dim + i;
            a.add(row, row, out_rate[q]);
            if model.growth()[q][i] {
                rhs[row] = pi[q];
            }
        }
    }
    for t in model.live() {
        for (i, s) in t.reset.sources().iter().enumerate() {
            if let Source::CopyFrom(src) = s {
                a.add(t.to * dim + i, t.from * dim + src, -t.rate);
            }
        }
    }
    (a, rhs)
}

/// Solves the `v` system as one dense system over all `(q, i)` unknowns.
pub fn solve_v_system(model: &ShsModel, pi: &[f64]) -> Result<(Vec<Vec<f64>>, f64)> {
    if pi.len() != model.num_states() {
        return Err(Error::Structural(format!(
            "pi has {} entries for {} states",
            pi.len(),
            model.num_states()
        )));
    }
    let (a, rhs) = v_system(model, pi);
    let x = a.solve(&rhs)?;
    let residual = a.relative_residual(&x, &rhs);
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "v system residual {residual:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    let dim = model.age_dim();
    for (k, v) in x.iter().enumerate() {
        if *v < -NONNEGATIVITY_TOL {
            return Err(Error::Negative {
                state: k / dim,
                coord: k % dim,
                value: *v,
            });
        }
    }
    let v = x.chunks_exact(dim).map(|c| c.to_vec()).collect();
    Ok((v, residual))
}

/// Stationary distribution, `v` table and `sum_q v_q(0)`.
pub fn average_aoi(model: &ShsModel) -> Result<AoiSolution> {
    let pi = stationary_distribution(model)?;
    let (v, residual) = solve_v_system(model, &pi)?;
    let average_aoi = v.iter().map(|vq| vq[0]).sum();
    Ok(AoiSolution {
        pi,
        v,
        average_aoi,
        residual,
    })
}
