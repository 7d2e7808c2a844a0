//! Event-driven simulation of a network, checked against the exact value,
//! and a short event trace.

use aoi_routing::sim::trace;
use aoi_routing::{exact_aoi, simulate, ModelKind, QueueNetworkSpec, Server, SimConfig};

pub fn main() -> aoi_routing::Result<()> {
    let spec = QueueNetworkSpec::new(
        vec![1.0, 2.0],
        vec![Server::new(1.0, 0.2, 0), Server::new(2.0, 0.0, 0)],
        vec![vec![0.4, 0.6], vec![0.5, 0.5]],
    )?;
    let exact = exact_aoi(ModelKind::TwoParallelNoBuffer, &spec)?.average_aoi;
    let cfg = SimConfig::new(spec, 5_000.0, 42).with_replications(10);
    let report = simulate(&cfg)?;
    println!("exact     {exact:.5}");
    println!("simulated {:.5} +- {:.5} (inside: {})", report.mean_aoi, report.ci95_halfwidth, report.contains(exact));
    println!("counts    {:?}", report.counts);
    for j in 0..2 {
        let (occ, hw) = report.occupancy(j);
        println!("queue {} occupancy {occ:.4} +- {hw:.4}", j + 1);
    }
    println!("first events:");
    for e in trace(&cfg, 8)? {
        println!("  {e}");
    }
    Ok(())
}
