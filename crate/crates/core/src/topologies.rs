//! Topologies shipped with the crate.
//!
//! These are directed reconstructions with the node and link counts of the
//! pre-processed `france`, `geant` and `ta1` research topologies. Link
//! capacities are in Mbps.

use crate::error::{Error, Result};
use crate::net::Topology;

pub const GEANT: &str = include_str!("../../../topologies/geant.topo");
pub const FRANCE: &str = include_str!("../../../topologies/france.topo");
pub const TA1: &str = include_str!("../../../topologies/ta1.topo");

pub const NAMES: [&str; 3] = ["france", "geant", "ta1"];

/// Parses one of the bundled topologies by name.
pub fn builtin(name: &str) -> Result<Topology> {
    let text = match name {
        "geant" => GEANT,
        "france" => FRANCE,
        "ta1" => TA1,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown builtin topology `{other}` (expected one of {NAMES:?})"
            )))
        }
    };
    Topology::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_the_published_table() {
        let geant = builtin("geant").unwrap();
        assert_eq!((geant.node_count(), geant.edge_count()), (22, 36));
        let france = builtin("france").unwrap();
        assert_eq!((france.node_count(), france.edge_count()), (21, 41));
        let ta1 = builtin("ta1").unwrap();
        assert_eq!((ta1.node_count(), ta1.edge_count()), (24, 55));
        assert!(builtin("abilene").is_err());
    }

    #[test]
    fn bundled_topologies_are_strongly_connected() {
        for name in NAMES {
            let t = builtin(name).unwrap();
            for src in 0..t.node_count() {
                assert!(t.hop_distances(src).iter().all(Option::is_some), "{name}");
            }
        }
    }
}
