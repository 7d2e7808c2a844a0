//! Closed-form bound against the exact AoI, the fake-update chain that
//! produces it, and its large-rate limit.

use aoi_routing::bounds::{fake_update_model, scaled_single_queue_aoi, yates_reference_aoi};
use aoi_routing::{average_aoi, exact_aoi, upper_bound, BoundInput, ModelKind, QueueNetworkSpec, Server};

pub fn main() -> aoi_routing::Result<()> {
    let mu = 1.0;
    println!("{:>8} {:>10} {:>10} {:>10}", "lambda1", "exact", "bound", "fake");
    for lambda1 in [0.1, 1.0, 10.0, 100.0] {
        let spec = QueueNetworkSpec::symmetric(lambda1, 10.0, Server::new(mu, 0.0, 1), 2)?;
        let exact = exact_aoi(ModelKind::TwoParallelBuffer1, &spec)?.average_aoi;
        let input = BoundInput::from_spec(&spec)?;
        let bound = upper_bound(&input).as_f64();
        let fake = average_aoi(&fake_update_model(&input)?)?.average_aoi;
        println!("{lambda1:>8} {exact:>10.4} {bound:>10.4} {fake:>10.4}");
    }

    // N = 0, one source, large rate: both formulas approach 1/(K mu)
    let lambda = 1e8;
    for k in [2, 3, 5] {
        let b = upper_bound(&BoundInput::symmetric(k, 0, mu, lambda, 0.0)?).as_f64();
        let y = yates_reference_aoi(k, lambda / mu, mu)?;
        let single = scaled_single_queue_aoi(k, lambda, mu)?;
        println!("K={k}: bound {b:.8} parallel {y:.8} single queue {single:.8} 1/(K mu) {:.8}", 1.0 / (k as f64 * mu));
    }
    Ok(())
}
