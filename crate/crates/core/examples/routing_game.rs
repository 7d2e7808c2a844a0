//! Damped best-response iteration of the routing game on six sources and
//! ten servers.

use aoi_routing::experiments::reference_game;
use aoi_routing::game::{finite_n_equilibrium, game_cost};
use aoi_routing::IterationSettings;

pub fn main() -> aoi_routing::Result<()> {
    let game = reference_game();
    let eq = finite_n_equilibrium(&game, None, IterationSettings::new(0.5))?;
    println!("converged={} after {} iterations, residual {:.2e}", eq.converged, eq.iterations, eq.residual());
    for (i, row) in eq.routing.rows.iter().enumerate() {
        let cost = game_cost(i, &eq.routing, &game)?.as_f64();
        let shown: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
        println!("source {} (lambda={:>6}) cost {cost:.5}  [{}]", i + 1, game.lambda[i], shown.join(" "));
    }
    Ok(())
}
