//! Lists the registered sweeps and runs one on a coarse grid.

use aoi_routing::experiments::{list_experiments, run, ExperimentKind, ExperimentSpec};
use aoi_routing::experiments::log_grid;

pub fn main() -> aoi_routing::Result<()> {
    for e in list_experiments() {
        println!("{:<18}{}", e.name, e.description);
    }
    let mut spec = ExperimentSpec::defaults(ExperimentKind::BoundTightness, 42);
    spec.grid = log_grid(0.1, 1000.0, 5);
    let out = run(&spec)?;
    print!("{}", out.to_csv_string()?);
    println!("{}", out.summary);
    Ok(())
}
