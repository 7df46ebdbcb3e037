//! Topologies, candidate paths, routing vectors and link loads.

mod aggregation;
mod paths;
mod routing;
mod topology;

pub use aggregation::{
    aggregate_routing, disaggregate_routing, AggregationMaps, DisaggregationError,
    INFEASIBLE_RESIDUAL,
};
pub use paths::{k_shortest_paths, Demand, Path, PathSet};
pub use routing::{compute_link_loads, RoutingConfig, SIMPLEX_TOL};
pub use topology::{Edge, EdgeId, NodeId, Topology};

/// Number of candidate paths per demand used throughout the experiments.
pub const DEFAULT_PATHS_PER_DEMAND: usize = 4;
