//! Comparison controllers: the per-step oracle (OPT), constant routing
//! (CONST) and tomogravity-driven re-optimization (TG).

mod opt;
mod tomogravity;

pub use opt::{const_route, elephant_route, opt_route, optimize_routing, OptOutcome};
pub use tomogravity::{
    gravity_prior, node_marginals, tomogravity_estimate, TomogravityEstimate,
};

use crate::delay::DelayFunction;
use crate::error::Result;
use crate::net::{PathSet, RoutingConfig};
use crate::solver::SolveOptions;

/// TG: elephants re-optimized against a traffic estimate.
pub fn tg_route(
    estimate: &TomogravityEstimate,
    pathset: &PathSet,
    elephants: &[usize],
    delay: &DelayFunction,
    capacities: &[f64],
    opts: &SolveOptions,
) -> Result<RoutingConfig> {
    Ok(elephant_route(pathset, &estimate.estimate, elephants, delay, capacities, opts)?.routing)
}
