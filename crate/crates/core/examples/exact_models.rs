//! Solves each of the four built-in queue models and prints the numeric
//! stationary law next to its closed form.

use aoi_routing::{build_model, closed_form_pi, exact_aoi, ModelKind, QueueNetworkSpec, Server};

pub fn main() -> aoi_routing::Result<()> {
    for kind in ModelKind::ALL {
        let (servers, buffer) = kind.shape();
        let spec = QueueNetworkSpec::symmetric(2.0, 3.0, Server::new(1.5, 0.5, buffer), servers)?;
        let model = build_model(kind, &spec)?;
        let sol = exact_aoi(kind, &spec)?;
        let closed = closed_form_pi(kind, &spec)?;
        println!(
            "{:<24} states={:<2} unknowns={:<3} AoI={:.6}",
            kind.name(),
            model.num_states(),
            model.relevant_unknowns(),
            sol.average_aoi
        );
        for ((label, p), c) in model.labels().iter().zip(&sol.pi).zip(&closed) {
            println!("    {label:>4}  numeric {p:.12}  closed {c:.12}");
        }
    }
    Ok(())
}
