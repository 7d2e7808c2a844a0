//! Builds a two-state SHS by hand: one source feeding a preemptive M/M/1/1
//! queue. Coordinate 0 is the monitor age, coordinate 1 the age of the
//! packet in service.

use aoi_routing::{average_aoi, proposition1_aoi, ResetMap, ShsModel, ShsTransition, Source};

pub fn main() -> aoi_routing::Result<()> {
    let (lambda, mu) = (0.7, 1.3);
    let arrival = ResetMap::new(vec![Source::CopyFrom(0), Source::Zero]);
    let delivery = ResetMap::new(vec![Source::CopyFrom(1), Source::Zero]);
    let transitions = vec![
        ShsTransition { from: 0, to: 1, rate: lambda, reset: arrival.clone() },
        // preemption restarts the packet age but stays busy
        ShsTransition { from: 1, to: 1, rate: lambda, reset: arrival },
        ShsTransition { from: 1, to: 0, rate: mu, reset: delivery },
    ];
    let growth = vec![vec![true, false], vec![true, true]];
    let labels = vec!["idle".to_string(), "busy".to_string()];
    let model = ShsModel::with_labels(2, 2, transitions, growth, labels)?;

    let sol = average_aoi(&model)?;
    for (label, p) in model.labels().iter().zip(&sol.pi) {
        println!("pi[{label}] = {p:.6}");
    }
    println!("average AoI   = {:.10}", sol.average_aoi);
    println!("1/lambda+1/mu = {:.10}", 1.0 / lambda + 1.0 / mu);
    println!("closed form   = {:.10}", proposition1_aoi(lambda, 0.0, 0.0, mu)?);
    println!("residual      = {:.2e}", sol.residual);
    Ok(())
}
