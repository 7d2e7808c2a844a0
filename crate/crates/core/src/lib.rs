//! Exact and bounded Age of Information for parallel queues with
//! probabilistic routing.
//!
//! * [`shs`]: generic stochastic hybrid system solver.
//! * [`models`]: the four exactly solvable queue networks.
//! * [`bounds`]: closed-form upper bound and reference formulas.
//! * [`sim`]: discrete-event simulator.
//! * [`game`]: routing game and its mean-field limit.
//! * [`experiments`]: CSV parameter sweeps.

pub mod bounds;
pub mod config;
pub mod error;
pub mod experiments;
pub mod game;
mod linalg;
pub mod models;
pub mod shs;
pub mod sim;

pub use bounds::{upper_bound, BoundInput, BoundValue};
pub use config::Config;
pub use error::{Error, Result};
pub use game::{GameInstance, IterationSettings, MeanFieldState, RoutingMatrix};
pub use models::{build_model, closed_form_pi, exact_aoi, proposition1_aoi, ModelKind, QueueNetworkSpec, Server};
pub use shs::{average_aoi, stationary_distribution, AoiSolution, ResetMap, ShsModel, ShsTransition, Source};
pub use sim::{simulate, SimConfig, SimReport};
