//! Loads a TOML configuration and uses it for the exact solver, the bound
//! and a simulation.

use aoi_routing::{exact_aoi, simulate, upper_bound, BoundInput, Config};

pub fn main() -> aoi_routing::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/two_buffered.toml");
    let config = Config::load(path)?;
    let spec = config.network()?;
    let kind = config.model_kind()?;
    let exact = exact_aoi(kind, &spec)?.average_aoi;
    let bound = upper_bound(&BoundInput::from_spec(&spec)?);
    let mut sim = config.sim_config(7)?;
    sim.horizon = sim.horizon.min(2_000.0);
    let report = simulate(&sim)?;
    println!("kind       {}", kind.name());
    println!("exact AoI  {exact:.5}");
    println!("bound      {:?}", bound);
    println!("simulated  {:.5} +- {:.5}", report.mean_aoi, report.ci95_halfwidth);
    Ok(())
}
