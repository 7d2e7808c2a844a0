//! Routing game on the AoI upper bound.
//!
//! Every source picks a routing row minimising its own bound given the rows
//! of the others. The finite game is solved by damped best-response
//! iteration; its large-population limit reduces to `K` scalar equations in
//! `y_j = sqrt(m_j + r_j)` solved by a projected Mann iteration.

use serde::{Deserialize, Serialize};

use crate::bounds::{upper_bound, BoundInput, BoundValue};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_FINITE_ALPHA: f64 = 0.5;
const SIMPLEX_TOL: f64 = 1e-12;

/// Sources, servers and buffer size of a routing game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(default)]
    pub buffer: usize,
}

impl GameInstance {
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>, buffer: usize) -> Result<Self> {
        let g = Self { lambda, mu, buffer };
        g.validate()?;
        Ok(g)
    }

    /// `n` identical sources of rate `lambda_bar` and servers `mu_j = n mu_bar_j`.
    pub fn symmetric_population(n: usize, lambda_bar: f64, mu_bar: &[f64]) -> Result<Self> {
        let nf = n as f64;
        Self::new(vec![lambda_bar; n], mu_bar.iter().map(|m| m * nf).collect(), 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_empty() || self.mu.is_empty() {
            return Err(Error::Structural("need at least one source and one server".into()));
        }
        if self.lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Domain("source rates must be positive".into()));
        }
        if self.mu.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Domain("service rates must be positive".into()));
        }
        Ok(())
    }

    pub fn num_sources(&self) -> usize {
        self.lambda.len()
    }

    pub fn num_servers(&self) -> usize {
        self.mu.len()
    }

    /// `(mu_j / n) / (sum lambda / n)` per server.
    pub fn mean_field_ratios(&self) -> Vec<f64> {
        let total: f64 = self.lambda.iter().sum();
        self.mu.iter().map(|m| m / total).collect()
    }
}

/// Routing probabilities, one row per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingMatrix {
    pub rows: Vec<Vec<f64>>,
}

impl RoutingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self { rows };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(sources: usize, servers: usize) -> Self {
        Self {
            rows: vec![vec![1.0 / servers as f64; servers]; sources],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.rows.first().map_or(0, Vec::len);
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != k || k == 0 {
                return Err(Error::Structural(format!("routing row {i} has the wrong length")));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Domain(format!("routing row {i} is not on the simplex")));
            }
        }
        Ok(())
    }

    fn check_against(&self, game: &GameInstance) -> Result<()> {
        self.validate()?;
        if self.rows.len() != game.num_sources() || self.rows[0].len() != game.num_servers() {
            return Err(Error::Structural("routing matrix does not match the game".into()));
        }
        Ok(())
    }

    /// Largest deviation of a row sum from 1.
    pub fn simplex_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn cross_traffic(i: usize, p: &RoutingMatrix, game: &GameInstance) -> Vec<f64> {
    (0..game.num_servers())
        .map(|j| {
            game.lambda
                .iter()
                .zip(&p.rows)
                .enumerate()
                .filter(|(l, _)| *l != i)
                .map(|(_, (lam, row))| lam * row[j])
                .sum()
        })
        .collect()
}

/// Cost of source `i`: its upper bound given every routing row.
pub fn game_cost(i: usize, p: &RoutingMatrix, game: &GameInstance) -> Result<BoundValue> {
    p.check_against(game)?;
    if i >= game.num_sources() {
        return Err(Error::Structural(format!("no source {i}")));
    }
    let input = BoundInput::new(
        game.buffer,
        game.mu.clone(),
        game.lambda[i],
        p.rows[i].clone(),
        cross_traffic(i, p, game),
    )?;
    Ok(upper_bound(&input))
}

/// Cost of source `i` playing `row` while the others keep their rows.
pub fn deviation_cost(i: usize, row: &[f64], p: &RoutingMatrix, game: &GameInstance) -> Result<BoundValue> {
    let mut q = p.clone();
    q.rows[i] = row.to_vec();
    game_cost(i, &q, game)
}

/// Minimiser of source `i`'s cost: `p_ij` proportional to
/// `sqrt(sum_{l != i} lambda_l p_lj + mu_j)`.
pub fn best_response(i: usize, p: &RoutingMatrix, game: &GameInstance) -> Result<Vec<f64>> {
    p.check_against(game)?;
    let omega: Vec<f64> = cross_traffic(i, p, game)
        .iter()
        .zip(&game.mu)
        .map(|(o, m)| (o + m).sqrt())
        .collect();
    let total: f64 = omega.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("best response is degenerate".into()));
    }
    Ok(omega.iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationSettings {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl IterationSettings {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Domain("alpha must lie in (0, 1]".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Domain("need tol > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

impl Default for IterationSettings {
    fn default() -> Self {
        Self::new(DEFAULT_FINITE_ALPHA)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub routing: RoutingMatrix,
    /// `max_ij |p_ij - BR_ij(p)|` before each update, then at the final point.
    pub residuals: Vec<f64>,
    /// Routing row of source 1 at each residual evaluation.
    pub trajectory: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl Equilibrium {
    pub fn residual(&self) -> f64 {
        *self.residuals.last().expect("at least one residual")
    }
}

fn br_all(p: &RoutingMatrix, game: &GameInstance) -> Result<Vec<Vec<f64>>> {
    (0..game.num_sources()).map(|i| best_response(i, p, game)).collect()
}

fn sup_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Synchronous damped best-response iteration from `start` (uniform if
/// `None`): `p <- (1 - alpha) p + alpha BR(p)`.
pub fn finite_n_equilibrium(
    game: &GameInstance,
    start: Option<RoutingMatrix>,
    settings: IterationSettings,
) -> Result<Equilibrium> {
    game.validate()?;
    settings.validate()?;
    let mut p = start.unwrap_or_else(|| RoutingMatrix::uniform(game.num_sources(), game.num_servers()));
    p.check_against(game)?;
    let a = settings.alpha;
    let mut residuals = Vec::new();
    let mut trajectory = Vec::new();
    for it in 0..settings.max_iter {
        let br = br_all(&p, game)?;
        let r = sup_distance(&p.rows, &br);
        residuals.push(r);
        trajectory.push(p.rows[0].clone());
        if r < settings.tol {
            return Ok(Equilibrium {
                routing: p,
                residuals,
                trajectory,
                iterations: it,
                converged: true,
            });
        }
        for (row, b) in p.rows.iter_mut().zip(&br) {
            for (x, y) in row.iter_mut().zip(b) {
                *x = (1.0 - a) * *x + a * y;
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    let r = sup_distance(&p.rows, &br_all(&p, game)?);
    residuals.push(r);
    trajectory.push(p.rows[0].clone());
    Ok(Equilibrium {
        routing: p,
        residuals,
        trajectory,
        iterations: settings.max_iter,
        converged: r < settings.tol,
    })
}

/// Solved large-population game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldState {
    /// `mu_bar_j / lambda_bar`.
    pub ratios: Vec<f64>,
    pub y: Vec<f64>,
    /// Mean load of each server, `y_j^2 - r_j`.
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    pub state: MeanFieldState,
    /// `max_j |y_j - f_j(y)|` before each update, then at the final point.
    pub residuals: Vec<f64>,
    /// Iterates of `y`, starting with the projected start.
    pub history: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl MeanFieldSolution {
    pub fn residual(&self) -> f64 {
        *self.residuals.last().expect("at least one residual")
    }
}

fn check_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return Err(Error::Structural("need at least one server".into()));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Domain("ratios must be finite and >= 0".into()));
    }
    Ok(())
}

/// Box `S = prod_j [sqrt(r_j), sqrt(1 + r_j)]`.
pub fn feasible_box(ratios: &[f64]) -> Vec<(f64, f64)> {
    ratios.iter().map(|r| (r.sqrt(), (1.0 + r).sqrt())).collect()
}

/// Coordinatewise clamp onto `S`.
pub fn project(y: &[f64], ratios: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(feasible_box(ratios))
        .map(|(v, (lo, hi))| v.clamp(lo, hi))
        .collect()
}

/// `f_j(y) = 1/sum(y) + r_j/y_j`, with `r_j/y_j = 0` when `r_j = 0`.
pub fn mean_field_map(y: &[f64], ratios: &[f64]) -> Vec<f64> {
    let inv: f64 = 1.0 / y.iter().sum::<f64>();
    y.iter()
        .zip(ratios)
        .map(|(v, r)| inv + if *r == 0.0 { 0.0 } else { r / v })
        .collect()
}

fn mf_residual(y: &[f64], ratios: &[f64]) -> f64 {
    y.iter()
        .zip(mean_field_map(y, ratios))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Sufficient step size `2 / (K^2 (1/sum_l sqrt(r_l))^2 + K + 1)`; needs every ratio > 0.
pub fn step_size_bound(ratios: &[f64]) -> Result<f64> {
    check_ratios(ratios)?;
    if ratios.iter().any(|r| *r <= 0.0) {
        return Err(Error::Domain("the step-size bound needs every ratio > 0".into()));
    }
    let k = ratios.len() as f64;
    let s: f64 = ratios.iter().map(|r| r.sqrt()).sum();
    Ok(2.0 / (k * k / (s * s) + k + 1.0))
}

/// `0.9 x` the step-size bound, or `1/(K^2 + K + 1)` if some ratio is zero.
pub fn default_alpha(ratios: &[f64]) -> f64 {
    match step_size_bound(ratios) {
        Ok(b) => 0.9 * b,
        Err(_) => {
            let k = ratios.len() as f64;
            1.0 / (k * k + k + 1.0)
        }
    }
}

/// Projected Mann iteration `y <- P_S((1 - alpha) y + alpha f(y))`.
///
/// `start` defaults to the uniform load `y_j = sqrt(1/K + r_j)`.
pub fn mean_field_solve(ratios: &[f64], start: Option<Vec<f64>>, settings: IterationSettings) -> Result<MeanFieldSolution> {
    check_ratios(ratios)?;
    settings.validate()?;
    let k = ratios.len();
    let start = start.unwrap_or_else(|| ratios.iter().map(|r| (1.0 / k as f64 + r).sqrt()).collect());
    if start.len() != k {
        return Err(Error::Structural("start has the wrong length".into()));
    }
    let mut y = project(&start, ratios);
    if !(y.iter().sum::<f64>() > 0.0) {
        return Err(Error::Domain("start must have a positive sum".into()));
    }
    let a = settings.alpha;
    let mut residuals = Vec::new();
    let mut history = vec![y.clone()];
    let mut iterations = settings.max_iter;
    let mut converged = false;
    for it in 0..settings.max_iter {
        let f = mean_field_map(&y, ratios);
        let r = y.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        residuals.push(r);
        if r < settings.tol {
            iterations = it;
            converged = true;
            break;
        }
        let step: Vec<f64> = y.iter().zip(&f).map(|(v, fv)| (1.0 - a) * v + a * fv).collect();
        y = project(&step, ratios);
        history.push(y.clone());
    }
    if !converged {
        let r = mf_residual(&y, ratios);
        residuals.push(r);
        converged = r < settings.tol;
    }
    let m = y.iter().zip(ratios).map(|(v, r)| v * v - r).collect();
    Ok(MeanFieldSolution {
        state: MeanFieldState {
            ratios: ratios.to_vec(),
            y,
            m,
        },
        residuals,
        history,
        iterations,
        converged,
    })
}

/// Routing row shared by every source: `p_j = y_j / sum y`.
pub fn mean_field_routing(state: &MeanFieldState) -> Vec<f64> {
    let s: f64 = state.y.iter().sum();
    state.y.iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_instance() -> GameInstance {
        GameInstance::new(
            vec![100.0, 20.0, 50.0, 10.0, 10.0, 1000.0],
            vec![1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 1000.0],
            0,
        )
        .unwrap()
    }

    fn random_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|r| r / s).collect()
    }

    #[test]
    fn cost_examples() {
        let g = GameInstance::new(vec![2.0], vec![1.0, 1.0], 0).unwrap();
        let p = RoutingMatrix::uniform(1, 2);
        assert!((game_cost(0, &p, &g).unwrap().as_f64() - 1.5).abs() < 1e-15);

        let g = GameInstance::new(vec![3.0, 3.0], vec![1.0, 2.0], 1).unwrap();
        let p = RoutingMatrix::uniform(2, 2);
        assert_eq!(game_cost(0, &p, &g).unwrap(), game_cost(1, &p, &g).unwrap());

        let g = GameInstance::new(vec![1.0], vec![1.0, 1.0], 0).unwrap();
        let p = RoutingMatrix::new(vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(game_cost(0, &p, &g).unwrap(), BoundValue::Infinite { queue: 0 });
    }

    #[test]
    fn best_response_examples() {
        let g = GameInstance::new(vec![1.0], vec![1.0, 4.0], 0).unwrap();
        let br = best_response(0, &RoutingMatrix::uniform(1, 2), &g).unwrap();
        assert!((br[0] - 1.0 / 3.0).abs() < 1e-15 && (br[1] - 2.0 / 3.0).abs() < 1e-15);
        let g = GameInstance::new(vec![1.0], vec![1.0; 4], 0).unwrap();
        assert_eq!(best_response(0, &RoutingMatrix::uniform(1, 4), &g).unwrap(), vec![0.25; 4]);
        let g = GameInstance::new(vec![1.0, 5.0, 5.0], vec![2.0; 3], 0).unwrap();
        let br = best_response(0, &RoutingMatrix::uniform(3, 3), &g).unwrap();
        assert!(br.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn best_response_beats_random_deviations() {
        let g = reference_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = RoutingMatrix::uniform(6, 10);
        p.rows = (0..6).map(|_| random_row(&mut rng, 10)).collect();
        for i in 0..g.num_sources() {
            let br = best_response(i, &p, &g).unwrap();
            let best = deviation_cost(i, &br, &p, &g).unwrap().as_f64();
            for _ in 0..100 {
                let q = random_row(&mut rng, 10);
                assert!(best <= deviation_cost(i, &q, &p, &g).unwrap().as_f64() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn reference_instance_converges() {
        let settings = IterationSettings {
            tol: 1e-8,
            max_iter: 10_000,
            ..Default::default()
        };
        let eq = finite_n_equilibrium(&reference_instance(), None, settings).unwrap();
        assert!(eq.converged, "residual {}", eq.residual());
        assert!(eq.routing.simplex_error() < 1e-12);
        assert!(eq.routing.rows.iter().flatten().all(|p| *p > 0.0));
    }

    #[test]
    fn symmetric_game_is_fixed_at_uniform() {
        let g = GameInstance::new(vec![2.0; 4], vec![3.0; 3], 1).unwrap();
        let eq = finite_n_equilibrium(&g, None, IterationSettings::default()).unwrap();
        assert!(eq.converged && eq.iterations <= 2);
        assert!(eq.routing.rows.iter().flatten().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn single_source_reaches_its_best_response() {
        let g = GameInstance::new(vec![5.0], vec![1.0, 4.0, 9.0], 0).unwrap();
        let eq = finite_n_equilibrium(&g, None, IterationSettings::default()).unwrap();
        assert!(eq.converged);
        let want = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0];
        for (p, w) in eq.routing.rows[0].iter().zip(want) {
            assert!((p - w).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_settings_are_rejected() {
        let g = reference_instance();
        let bad = IterationSettings { alpha: 0.0, ..Default::default() };
        assert!(finite_n_equilibrium(&g, None, bad).is_err());
        assert!(mean_field_solve(&[1.0], None, IterationSettings { alpha: 1.5, ..Default::default() }).is_err());
        assert!(RoutingMatrix::new(vec![vec![0.7, 0.2]]).is_err());
    }

    #[test]
    fn step_size_examples() {
        assert!((step_size_bound(&[1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((step_size_bound(&[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((step_size_bound(&[1e12; 3]).unwrap() - 0.5).abs() < 1e-9);
        assert!(step_size_bound(&[0.0, 3.0]).is_err());
        assert!((default_alpha(&[0.0, 3.0]) - 1.0 / 7.0).abs() < 1e-15);
    }

    /// Independent solution of the two-server system with ratios `[0, 3]`:
    /// `y1 = 1/s`, `y2 = (1/s + sqrt(1/s^2 + 12))/2`, bisection on `s = y1 + y2`.
    fn two_server_oracle() -> [f64; 2] {
        let g = |s: f64| 1.0 / s + (1.0 / s + (1.0 / (s * s) + 12.0).sqrt()) / 2.0 - s;
        let (mut lo, mut hi) = (0.5, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        [1.0 / s, (1.0 / s + (1.0 / (s * s) + 12.0).sqrt()) / 2.0]
    }

    #[test]
    fn mean_field_matches_oracle() {
        let ratios = [0.0, 3.0];
        let oracle = two_server_oracle();
        let sol = mean_field_solve(&ratios, None, IterationSettings::new(default_alpha(&ratios))).unwrap();
        assert!(sol.converged);
        for (y, w) in sol.state.y.iter().zip(oracle) {
            assert!((y - w).abs() < 1e-8, "{y} vs {w}");
        }
        let s: f64 = oracle.iter().sum();
        let p = mean_field_routing(&sol.state);
        assert!((p[0] - oracle[0] / s).abs() < 1e-8);
        for (pj, mj) in p.iter().zip(&sol.state.m) {
            assert!((pj - mj).abs() < 1e-8);
        }
    }

    #[test]
    fn mean_field_trivial_cases() {
        let sol = mean_field_solve(&[2.0; 5], None, IterationSettings::new(default_alpha(&[2.0; 5]))).unwrap();
        assert!(sol.state.m.iter().all(|m| (m - 0.2).abs() < 1e-10));
        assert!(mean_field_routing(&sol.state).iter().all(|p| (p - 0.2).abs() < 1e-10));
        let sol = mean_field_solve(&[1.5], None, IterationSettings::new(default_alpha(&[1.5]))).unwrap();
        assert!((sol.state.m[0] - 1.0).abs() < 1e-10);
        assert!((sol.state.y[0] - 2.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn mean_field_residual_decays_geometrically() {
        let ratios = [0.5, 1.0, 4.0, 0.1];
        let sol = mean_field_solve(&ratios, None, IterationSettings::new(default_alpha(&ratios))).unwrap();
        assert!(sol.converged);
        let r = &sol.residuals;
        assert!(r[10.min(r.len() - 1)..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) || w[1] < 1e-13));
        let n = r.len();
        let slope = (r[n - 1].ln() - r[0].ln()) / (n - 1) as f64;
        assert!(slope < 0.0);
    }

    #[test]
    fn finite_game_approaches_mean_field() {
        let mu_bar = [0.2, 0.5, 1.3];
        let lambda_bar = 1.0;
        let ratios: Vec<f64> = mu_bar.iter().map(|m| m / lambda_bar).collect();
        let mf = mean_field_solve(&ratios, None, IterationSettings::new(default_alpha(&ratios))).unwrap();
        let target = mean_field_routing(&mf.state);
        let dev: Vec<f64> = [4, 16, 64]
            .iter()
            .map(|&n| {
                let g = GameInstance::symmetric_population(n, lambda_bar, &mu_bar).unwrap();
                let eq = finite_n_equilibrium(&g, None, IterationSettings::default()).unwrap();
                assert!(eq.converged);
                eq.routing
                    .rows
                    .iter()
                    .flat_map(|row| row.iter().zip(&target).map(|(a, b)| (a - b).abs()))
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(dev[0] > dev[1] && dev[1] > dev[2], "{dev:?}");
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_clamp(
            ratios in prop::collection::vec(0.0f64..10.0, 1..8),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = ratios.iter().map(|_| rng.random::<f64>() * 6.0 - 1.0).collect();
            let p = project(&y, &ratios);
            prop_assert_eq!(project(&p, &ratios), p.clone());
            for ((v, pv), (lo, hi)) in y.iter().zip(&p).zip(feasible_box(&ratios)) {
                prop_assert!(*pv >= lo && *pv <= hi);
                if *v >= lo && *v <= hi {
                    prop_assert_eq!(v, pv);
                }
            }
        }

        #[test]
        fn mean_field_unique(
            ratios in prop::collection::vec(0.01f64..10.0, 2..6),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let settings = IterationSettings::new(default_alpha(&ratios));
            let base = mean_field_solve(&ratios, None, settings).unwrap();
            prop_assert!(base.converged);
            let sum_m: f64 = base.state.m.iter().sum();
            prop_assert!((sum_m - 1.0).abs() < 1e-8);
            for _ in 0..20 {
                let start: Vec<f64> = feasible_box(&ratios)
                    .iter()
                    .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect();
                let sol = mean_field_solve(&ratios, Some(start), settings).unwrap();
                prop_assert!(sol.converged);
                for (a, b) in sol.state.y.iter().zip(&base.state.y) {
                    prop_assert!((a - b).abs() < 1e-7);
                }
            }
        }

        #[test]
        fn finite_iterates_stay_on_simplex(
            lambda in prop::collection::vec(0.1f64..100.0, 1..5),
            mu in prop::collection::vec(0.1f64..100.0, 1..5),
            iters in 1usize..50,
        ) {
            let g = GameInstance::new(lambda, mu, 0).unwrap();
            let settings = IterationSettings { max_iter: iters, ..Default::default() };
            let eq = finite_n_equilibrium(&g, None, settings).unwrap();
            prop_assert!(eq.routing.simplex_error() < 1e-12);
            prop_assert!(eq.routing.rows.iter().flatten().all(|p| *p >= 0.0));
        }
    }
}
