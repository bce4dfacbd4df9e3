//! Deterministic discrete-event simulator for OLSR-based mobile ad hoc
//! networks, with plain hop-count OLSR and an energy-aware multi-metric
//! variant that prefers lightly loaded, well-charged, low-degree relays.

pub mod config;
pub mod metrics;
pub mod model;
pub mod olsr;
pub mod routing;
pub mod sim;

pub use config::{FlowSpec, Mobility, Protocol, RunLength, ScenarioConfig};
pub use metrics::MetricsReport;
pub use model::{NodeId, NodeWeight, Position, SimTime, WeightParams};
pub use sim::{run, SimResult, Simulation};
