//! Closed-form AoI upper bound for `K` parallel M/M/1/(N+1)* queues and the
//! reference formulas it is compared against.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::QueueNetworkSpec;
use crate::shs::{ResetMap, ShsModel, ShsTransition, Source};

/// Inputs of the bound, seen from source 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInput {
    /// Waiting slots per queue.
    pub buffer: usize,
    pub mu: Vec<f64>,
    pub lambda1: f64,
    /// Routing row of source 1.
    pub p1: Vec<f64>,
    /// `sum_{k>1} lambda_k p_kj` per queue.
    pub other_load: Vec<f64>,
}

impl BoundInput {
    pub fn new(buffer: usize, mu: Vec<f64>, lambda1: f64, p1: Vec<f64>, other_load: Vec<f64>) -> Result<Self> {
        let input = Self {
            buffer,
            mu,
            lambda1,
            p1,
            other_load,
        };
        input.validate()?;
        Ok(input)
    }

    /// `k` identical queues with every source splitting uniformly.
    pub fn symmetric(k: usize, buffer: usize, mu: f64, lambda1: f64, lambda_rest: f64) -> Result<Self> {
        let kf = k as f64;
        Self::new(
            buffer,
            vec![mu; k],
            lambda1,
            vec![1.0 / kf; k],
            vec![lambda_rest / kf; k],
        )
    }

    /// Extracts the bound inputs from a loss-free network with equal buffers.
    pub fn from_spec(spec: &QueueNetworkSpec) -> Result<Self> {
        spec.validate()?;
        if spec.servers.iter().any(|s| s.theta > 0.0) {
            return Err(Error::Domain("the bound does not cover losses (theta must be 0)".into()));
        }
        let buffer = spec.servers[0].buffer;
        if spec.servers.iter().any(|s| s.buffer != buffer) {
            return Err(Error::Structural("the bound needs the same buffer on every queue".into()));
        }
        let k = spec.num_servers();
        Self::new(
            buffer,
            spec.servers.iter().map(|s| s.mu).collect(),
            spec.lambda1(),
            spec.routing[0].clone(),
            (0..k).map(|j| spec.other_rate_to(j)).collect(),
        )
    }

    pub fn num_queues(&self) -> usize {
        self.mu.len()
    }

    fn validate(&self) -> Result<()> {
        let k = self.mu.len();
        if k == 0 {
            return Err(Error::Structural("need at least one queue".into()));
        }
        if self.p1.len() != k || self.other_load.len() != k {
            return Err(Error::Structural("mu, p1 and other_load must have the same length".into()));
        }
        if self.mu.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Domain("service rates must be positive".into()));
        }
        if !(self.lambda1.is_finite() && self.lambda1 > 0.0) {
            return Err(Error::Domain("lambda1 must be positive".into()));
        }
        if self.p1.iter().any(|p| !(0.0..=1.0).contains(p)) || (self.p1.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("p1 must be a probability vector".into()));
        }
        if self.other_load.iter().any(|o| !(o.is_finite() && *o >= 0.0)) {
            return Err(Error::Domain("other loads must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn fresh_rate(&self, j: usize) -> f64 {
        self.lambda1 * self.p1[j]
    }

    fn first_starved(&self) -> Option<usize> {
        (0..self.num_queues()).find(|&j| self.fresh_rate(j) <= 0.0)
    }
}

/// A bound that may be infinite when source 1 never uses some queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundValue {
    Finite { value: f64 },
    Infinite { queue: usize },
}

impl BoundValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            BoundValue::Finite { value } => Some(value),
            BoundValue::Infinite { .. } => None,
        }
    }

    /// The value, with `f64::INFINITY` for the infinite case.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// `(1/sum mu_j) (1 + K N + sum_j (o_j + mu_j) / (lambda1 p_1j))`.
pub fn upper_bound(input: &BoundInput) -> BoundValue {
    if let Some(queue) = input.first_starved() {
        return BoundValue::Infinite { queue };
    }
    let k = input.num_queues() as f64;
    let total_mu: f64 = input.mu.iter().sum();
    let sum: f64 = (0..input.num_queues())
        .map(|j| (input.other_load[j] + input.mu[j]) / input.fresh_rate(j))
        .sum();
    BoundValue::Finite {
        value: (1.0 + k * input.buffer as f64 + sum) / total_mu,
    }
}

/// The same bound computed through the per-queue recursion on the
/// fake-update chain: `mu v_N = 1 + (o + mu)/(lambda1 p)`, `mu v_1 = N - 1 + mu v_N`,
/// `v_0 sum mu = 1 + sum mu v_1`.
pub fn recursion_bound(input: &BoundInput) -> BoundValue {
    if let Some(queue) = input.first_starved() {
        return BoundValue::Infinite { queue };
    }
    let n = input.buffer as f64;
    let total_mu: f64 = input.mu.iter().sum();
    let mut acc = 1.0;
    for j in 0..input.num_queues() {
        let mu_v_last = 1.0 + (input.other_load[j] + input.mu[j]) / input.fresh_rate(j);
        let mu_v_first = (n - 1.0) + mu_v_last;
        acc += mu_v_first;
    }
    BoundValue::Finite {
        value: acc / total_mu,
    }
}

/// The single-state SHS that keeps every queue full with fake updates. Its
/// average AoI equals [`upper_bound`] when `N >= 1` or `K = 1`.
///
/// Coordinates: 0 is the monitor, then `M = N + 1` slots per queue, slot 1
/// being the packet in service.
pub fn fake_update_model(input: &BoundInput) -> Result<ShsModel> {
    input.validate()?;
    let k = input.num_queues();
    let m = input.buffer + 1;
    let dim = 1 + k * m;
    let slot = |j: usize, pos: usize| 1 + j * m + pos;
    let mut transitions = Vec::with_capacity(3 * k);
    for j in 0..k {
        let identity = || (0..dim).map(Source::CopyFrom).collect::<Vec<_>>();

        let mut fresh = identity();
        fresh[slot(j, m - 1)] = Source::Zero;
        transitions.push(ShsTransition {
            from: 0,
            to: 0,
            rate: input.fresh_rate(j),
            reset: ResetMap::new(fresh),
        });

        let mut other = identity();
        other[slot(j, m - 1)] = if m >= 2 {
            Source::CopyFrom(slot(j, m - 2))
        } else {
            Source::CopyFrom(0)
        };
        transitions.push(ShsTransition {
            from: 0,
            to: 0,
            rate: input.other_load[j],
            reset: ResetMap::new(other),
        });

        // delivery; the refilled last slot keeps its own age
        let mut deliver = identity();
        deliver[0] = Source::CopyFrom(slot(j, 0));
        for pos in 0..m - 1 {
            deliver[slot(j, pos)] = Source::CopyFrom(slot(j, pos + 1));
        }
        transitions.push(ShsTransition {
            from: 0,
            to: 0,
            rate: input.mu[j],
            reset: ResetMap::new(deliver),
        });
    }
    ShsModel::new(1, dim, transitions, vec![vec![true; dim]])
}

/// Average AoI of one M/M/1/1 queue that receives `1/K` of the traffic with
/// the same service rate: `K/lambda + 1/mu`.
pub fn scaled_single_queue_aoi(k: usize, lambda: f64, mu: f64) -> Result<f64> {
    if k == 0 || !(lambda > 0.0) || !(mu > 0.0) {
        return Err(Error::Domain("need K >= 1 and positive rates".into()));
    }
    Ok(k as f64 / lambda + 1.0 / mu)
}

/// Average AoI of `K` parallel preemptive servers fed by one Poisson stream
/// with load `rho = lambda/mu`:
///
/// `(1/mu) [ (1/K) prod_{i<K} rho/(i+rho) + 1/rho + (1/rho) sum_{l<K} prod_{i<=l} rho/(i+rho) ]`.
pub fn yates_reference_aoi(k: usize, rho: f64, mu: f64) -> Result<f64> {
    if k == 0 || !(rho > 0.0) || !(mu > 0.0) {
        return Err(Error::Domain("need K >= 1 and positive rho, mu".into()));
    }
    let factor = |i: usize| rho / (i as f64 + rho);
    let full: f64 = (1..k).map(factor).product();
    let mut prod = 1.0;
    let mut sum = 0.0;
    for l in 1..k {
        prod *= factor(l);
        sum += prod;
    }
    Ok((full / k as f64 + 1.0 / rho + sum / rho) / mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{exact_aoi, proposition1_aoi, ModelKind, Server};
    use crate::shs;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn bound_examples() {
        // (1/2)(1 + 2 + 2 * (0 + 1)/5)
        let two = BoundInput::symmetric(2, 1, 1.0, 10.0, 0.0).unwrap();
        assert!(close(upper_bound(&two).as_f64(), 1.7, 1e-15));
        let one = BoundInput::symmetric(1, 2, 1.0, 10.0, 10.0).unwrap();
        assert!(close(upper_bound(&one).as_f64(), 4.1, 1e-15));
        let four = BoundInput::symmetric(4, 0, 2.0, 1e12, 0.0).unwrap();
        assert!(close(upper_bound(&four).as_f64(), 0.125, 1e-9));
    }

    #[test]
    fn starved_queue_gives_infinite_bound() {
        let input = BoundInput::new(0, vec![1.0, 1.0], 1.0, vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(upper_bound(&input), BoundValue::Infinite { queue: 1 });
        assert_eq!(recursion_bound(&input), BoundValue::Infinite { queue: 1 });
        assert!(upper_bound(&input).as_f64().is_infinite());
    }

    #[test]
    fn recursion_matches_bound() {
        let two = BoundInput::symmetric(2, 1, 1.0, 10.0, 0.0).unwrap();
        assert!(close(recursion_bound(&two).as_f64(), 1.7, 1e-14));
        for n in 0..4 {
            let input = BoundInput::new(n, vec![1.0, 3.0, 0.5], 2.5, vec![0.2, 0.5, 0.3], vec![1.0, 0.0, 4.0]).unwrap();
            let a = upper_bound(&input).as_f64();
            let b = recursion_bound(&input).as_f64();
            assert!(close(a, b, 1e-14), "N={n}: {a} vs {b}");
        }
    }

    #[test]
    fn fake_update_chain_matches_bound() {
        for n in 1..4 {
            let input = BoundInput::new(n, vec![1.0, 2.0], 3.0, vec![0.4, 0.6], vec![0.5, 2.0]).unwrap();
            let sol = shs::average_aoi(&fake_update_model(&input).unwrap()).unwrap();
            let b = upper_bound(&input).as_f64();
            assert!(close(sol.average_aoi, b, 1e-10), "N={n}: {} vs {b}", sol.average_aoi);
        }
        let one = BoundInput::symmetric(1, 0, 1.5, 2.0, 3.0).unwrap();
        let sol = shs::average_aoi(&fake_update_model(&one).unwrap()).unwrap();
        assert!(close(sol.average_aoi, upper_bound(&one).as_f64(), 1e-10));
    }

    #[test]
    fn fake_update_chain_without_buffer_couples_queues() {
        // with N = 0 an other-source refill copies the monitor age, so the
        // chain sits below the closed form once K > 1
        let input = BoundInput::new(0, vec![1.0, 2.0], 3.0, vec![0.4, 0.6], vec![0.5, 2.0]).unwrap();
        let sol = shs::average_aoi(&fake_update_model(&input).unwrap()).unwrap();
        assert!(sol.average_aoi < upper_bound(&input).as_f64());
    }

    #[test]
    fn single_preemptive_queue_is_tight() {
        // one queue without buffer: bound and exact value coincide
        let (l1, lo, mu) = (2.0, 3.0, 1.5);
        let input = BoundInput::symmetric(1, 0, mu, l1, lo).unwrap();
        let exact = proposition1_aoi(l1, lo, 0.0, mu).unwrap();
        assert!(close(upper_bound(&input).as_f64(), exact, 1e-14));
    }

    #[test]
    fn from_spec_rejects_losses_and_mixed_buffers() {
        let lossy = QueueNetworkSpec::single(1.0, 0.0, Server::new(1.0, 0.5, 0)).unwrap();
        assert!(matches!(BoundInput::from_spec(&lossy), Err(Error::Domain(_))));
        let mixed = QueueNetworkSpec::new(
            vec![1.0],
            vec![Server::new(1.0, 0.0, 0), Server::new(1.0, 0.0, 1)],
            vec![vec![0.5, 0.5]],
        )
        .unwrap();
        assert!(matches!(BoundInput::from_spec(&mixed), Err(Error::Structural(_))));
    }

    #[test]
    fn bound_dominates_exact_on_symmetric_systems() {
        let spec = QueueNetworkSpec::symmetric(5.0, 10.0, Server::new(1.0, 0.0, 1), 2).unwrap();
        let exact = exact_aoi(ModelKind::TwoParallelBuffer1, &spec).unwrap().average_aoi;
        let bound = upper_bound(&BoundInput::from_spec(&spec).unwrap()).as_f64();
        assert!(bound >= exact);
    }

    #[test]
    fn scaled_single_queue_examples() {
        assert_eq!(scaled_single_queue_aoi(1, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(scaled_single_queue_aoi(2, 2.0, 1.0).unwrap(), 2.0);
        assert_eq!(scaled_single_queue_aoi(10, 10.0, 1.0).unwrap(), 2.0);
        assert!(scaled_single_queue_aoi(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn yates_examples() {
        let (rho, mu) = (0.7, 3.0);
        let one = yates_reference_aoi(1, rho, mu).unwrap();
        assert!(close(one, 1.0 / mu + 1.0 / (rho * mu), 1e-15));
        assert!(close(yates_reference_aoi(2, 1.0, 1.0).unwrap(), 1.75, 1e-15));
        assert!((yates_reference_aoi(3, 1e9, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-6);
        assert!(yates_reference_aoi(0, 1.0, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn input()(k in 1usize..6, n in 0usize..4)(
                n in Just(n),
                mu in prop::collection::vec(0.1f64..10.0, k),
                raw in prop::collection::vec(0.05f64..1.0, k),
                other in prop::collection::vec(0.0f64..10.0, k),
                lambda1 in 0.1f64..100.0,
            ) -> BoundInput {
                let s: f64 = raw.iter().sum();
                let mut p: Vec<f64> = raw.iter().map(|r| r / s).collect();
                let head: f64 = p[1..].iter().sum();
                p[0] = 1.0 - head;
                BoundInput::new(n, mu, lambda1, p, other).unwrap()
            }
        }

        proptest! {
            #[test]
            fn recursion_is_identical(input in input()) {
                let a = upper_bound(&input).as_f64();
                let b = recursion_bound(&input).as_f64();
                prop_assert!((a - b).abs() <= 1e-14 * a);
            }

            #[test]
            fn nonincreasing_in_lambda1(input in input(), c in 1.0f64..10.0) {
                let mut more = input.clone();
                more.lambda1 *= c;
                prop_assert!(upper_bound(&more).as_f64() <= upper_bound(&input).as_f64() * (1.0 + 1e-14));
            }

            #[test]
            fn nonincreasing_in_mu_with_equal_fresh_rates(
                k in 1usize..6, n in 0usize..4, mu in 0.1f64..10.0, l1 in 0.1f64..100.0,
                lo in 0.0f64..10.0, j in 0usize..6, c in 1.0f64..10.0,
            ) {
                let base = BoundInput::symmetric(k, n, mu, l1, lo).unwrap();
                let mut faster = base.clone();
                faster.mu[j % k] *= c;
                prop_assert!(upper_bound(&faster).as_f64() <= upper_bound(&base).as_f64() * (1.0 + 1e-14));
            }
        }
    }
}
