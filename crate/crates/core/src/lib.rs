//! Deterministic opportunistic-network simulator.
//!
//! Mobile hosts walk a road graph loaded from WKT, meet within radio range,
//! and hand TTL-bounded messages along under Epidemic or PROPHET routing.
//! Shelter hosts are stationary sinks. Runs are reproducible from a seed and
//! reports aggregate across seeds.

pub mod batch;
pub mod config;
pub mod engine;
pub mod events;
pub mod map;
pub mod mobility;
pub mod radio;
pub mod report;
pub mod rng;
pub mod routing;
pub mod store;

/// Host index, assigned contiguously group by group.
pub type NodeId = usize;

pub use config::{load_config, ScenarioConfig};
pub use engine::{run, run_scenario, EngineError, Simulation};
pub use map::{load_map, RoadGraph};
pub use report::RunReport;
