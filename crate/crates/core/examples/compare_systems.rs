//! Two parallel queues with routing against one queue with halved arrivals
//! and losses or doubled service.

use aoi_routing::models::ComparisonSystems;

pub fn main() -> aoi_routing::Result<()> {
    let (lambda_rest, mu, theta) = (10.0, 1.0, 10.0);
    for buffered in [false, true] {
        println!("{}", if buffered { "M/M/1/2* pair vs M/M/1/3*" } else { "M/M/1/1 pair vs M/M/1/1" });
        println!("{:>8} {:>10} {:>10} {:>10}", "lambda1", "routing", "half", "double");
        for lambda1 in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let (r, h, d) = ComparisonSystems::new(lambda1, lambda_rest, mu, theta, buffered)?.evaluate()?;
            println!("{lambda1:>8} {r:>10.4} {h:>10.4} {d:>10.4}");
        }
    }
    Ok(())
}
