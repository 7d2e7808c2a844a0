//! Large-population limit of the routing game solved by projected Mann
//! iteration.

use aoi_routing::game::{default_alpha, mean_field_routing, mean_field_solve, step_size_bound};
use aoi_routing::IterationSettings;

pub fn main() -> aoi_routing::Result<()> {
    let ratios = [0.2, 0.5, 1.0, 3.0];
    let alpha = default_alpha(&ratios);
    println!("step size bound {:.5}, using {alpha:.5}", step_size_bound(&ratios)?);
    let sol = mean_field_solve(&ratios, None, IterationSettings::new(alpha))?;
    println!("converged={} after {} iterations, residual {:.2e}", sol.converged, sol.iterations, sol.residual());
    let routing = mean_field_routing(&sol.state);
    for j in 0..ratios.len() {
        println!(
            "server {}: r={:<4} y={:.6} load m={:.6} routing {:.6}",
            j + 1,
            ratios[j],
            sol.state.y[j],
            sol.state.m[j],
            routing[j]
        );
    }
    // symmetric servers share the load evenly
    let sym = mean_field_solve(&[1.0; 5], None, IterationSettings::new(default_alpha(&[1.0; 5])))?;
    println!("symmetric loads {:?}", sym.state.m);
    Ok(())
}
