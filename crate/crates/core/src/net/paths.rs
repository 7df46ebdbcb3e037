//! Candidate path enumeration and per-demand path sets.

use std::collections::{BTreeSet, HashSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::topology::{EdgeId, NodeId, Topology};
use crate::error::{Error, Result};

/// An origin-destination pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Demand {
    pub src: NodeId,
    pub dst: NodeId,
}

impl Demand {
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Self { src, dst }
    }

    /// Every ordered pair of distinct nodes, source-major. Demand indices in
    /// the rest of the crate refer to this order.
    pub fn all_pairs(node_count: usize) -> Vec<Demand> {
        let mut out = Vec::with_capacity(node_count * node_count.saturating_sub(1));
        for src in 0..node_count {
            for dst in 0..node_count {
                if src != dst {
                    out.push(Demand { src, dst });
                }
            }
        }
        out
    }
}

impl std::fmt::Display for Demand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}>{}", self.src, self.dst)
    }
}

/// A simple path, stored both as a node sequence and as edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, edge: EdgeId) -> bool {
        self.edges.contains(&edge)
    }

    fn from_nodes(topo: &Topology, nodes: Vec<NodeId>) -> Path {
        let edges = nodes
            .windows(2)
            .map(|w| topo.edge_between(w[0], w[1]).expect("path follows existing edges"))
            .collect();
        Path { nodes, edges }
    }
}

/// Lexicographically smallest shortest (by hops) path from `src` to `dst`
/// avoiding the given nodes and edges.
fn lex_min_shortest(
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    banned_nodes: &HashSet<NodeId>,
    banned_edges: &HashSet<EdgeId>,
) -> Option<Vec<NodeId>> {
    // Reverse BFS gives the hop distance to `dst`; a greedy forward walk
    // over the smallest admissible successor then yields the lex-min path.
    let n = topo.node_count();
    let mut dist = vec![usize::MAX; n];
    dist[dst] = 0;
    let mut queue = VecDeque::from([dst]);
    while let Some(v) = queue.pop_front() {
        for &e in topo.in_edges(v) {
            if banned_edges.contains(&e) {
                continue;
            }
            let u = topo.edge(e).src;
            if banned_nodes.contains(&u) || dist[u] != usize::MAX {
                continue;
            }
            dist[u] = dist[v] + 1;
            queue.push_back(u);
        }
    }
    if dist[src] == usize::MAX {
        return None;
    }
    let mut nodes = vec![src];
    let mut u = src;
    while u != dst {
        let next = topo
            .out_edges(u)
            .iter()
            .filter(|e| !banned_edges.contains(e))
            .map(|&e| topo.edge(e).dst)
            .filter(|&v| dist[v] != usize::MAX && dist[v] + 1 == dist[u])
            .min()?;
        nodes.push(next);
        u = next;
    }
    Some(nodes)
}

/// Up to `k` loop-free paths from `demand.src` to `demand.dst`, ordered by hop
/// count and then by lexicographic node sequence (Yen's algorithm).
///
/// Returns an empty list when no path exists.
pub fn k_shortest_paths(topo: &Topology, demand: Demand, k: usize) -> Result<Vec<Path>> {
    let n = topo.node_count();
    if demand.src >= n || demand.dst >= n {
        return Err(Error::InvalidParameter(format!(
            "demand {demand} references a node outside 0..{n}"
        )));
    }
    if demand.src == demand.dst {
        return Err(Error::InvalidParameter(format!(
            "demand {demand} has identical endpoints"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let none_n = HashSet::new();
    let none_e = HashSet::new();
    let Some(first) = lex_min_shortest(topo, demand.src, demand.dst, &none_n, &none_e) else {
        return Ok(Vec::new());
    };
    let mut accepted: Vec<Vec<NodeId>> = vec![first];
    let mut candidates: BTreeSet<(usize, Vec<NodeId>)> = BTreeSet::new();

    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            let mut banned_edges = HashSet::new();
            for p in &accepted {
                if p.len() > i + 1 && &p[..=i] == root {
                    if let Some(e) = topo.edge_between(p[i], p[i + 1]) {
                        banned_edges.insert(e);
                    }
                }
            }
            let banned_nodes: HashSet<NodeId> = root[..i].iter().copied().collect();
            if let Some(spur_path) =
                lex_min_shortest(topo, spur, demand.dst, &banned_nodes, &banned_edges)
            {
                let mut full = root[..i].to_vec();
                full.extend(spur_path);
                if !accepted.contains(&full) {
                    candidates.insert((full.len() - 1, full));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, best)) => accepted.push(best),
            None => break,
        }
    }
    Ok(accepted
        .into_iter()
        .map(|nodes| Path::from_nodes(topo, nodes))
        .collect())
}

/// Candidate paths for a list of demands, with the flat layout used by
/// routing vectors: demand `d` owns entries `offset(d)..offset(d + 1)`.
#[derive(Debug, Clone)]
pub struct PathSet {
    demands: Vec<Demand>,
    /// Index of each demand in the full all-pairs demand list.
    demand_ids: Vec<usize>,
    paths: Vec<Vec<Path>>,
    offsets: Vec<usize>,
    edge_count: usize,
}

impl PathSet {
    /// Path set over all ordered node pairs with up to `k` paths each.
    pub fn build(topo: &Topology, k: usize) -> Result<Self> {
        let demands = Demand::all_pairs(topo.node_count());
        let mut paths = Vec::with_capacity(demands.len());
        for &d in &demands {
            paths.push(k_shortest_paths(topo, d, k)?);
        }
        let ids = (0..demands.len()).collect();
        Ok(Self::from_parts(demands, ids, paths, topo.edge_count()))
    }

    pub fn from_parts(
        demands: Vec<Demand>,
        demand_ids: Vec<usize>,
        paths: Vec<Vec<Path>>,
        edge_count: usize,
    ) -> Self {
        assert_eq!(demands.len(), paths.len());
        assert_eq!(demands.len(), demand_ids.len());
        let mut offsets = Vec::with_capacity(paths.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for p in &paths {
            acc += p.len();
            offsets.push(acc);
        }
        Self {
            demands,
            demand_ids,
            paths,
            offsets,
            edge_count,
        }
    }

    /// The path set restricted to the given positions (e.g. elephant flows),
    /// preserving their order.
    pub fn subset(&self, positions: &[usize]) -> PathSet {
        let demands = positions.iter().map(|&i| self.demands[i]).collect();
        let ids = positions.iter().map(|&i| self.demand_ids[i]).collect();
        let paths = positions.iter().map(|&i| self.paths[i].clone()).collect();
        PathSet::from_parts(demands, ids, paths, self.edge_count)
    }

    pub fn demand_count(&self) -> usize {
        self.demands.len()
    }

    /// Total number of candidate paths over all demands (`n_p`).
    pub fn path_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    pub fn demand(&self, d: usize) -> Demand {
        self.demands[d]
    }

    /// Position of demand `d` in the all-pairs order.
    pub fn demand_id(&self, d: usize) -> usize {
        self.demand_ids[d]
    }

    pub fn paths(&self, d: usize) -> &[Path] {
        &self.paths[d]
    }

    pub fn offset(&self, d: usize) -> usize {
        self.offsets[d]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Demands for which no candidate path exists.
    pub fn unroutable(&self) -> Vec<usize> {
        (0..self.demands.len())
            .filter(|&d| self.paths[d].is_empty())
            .collect()
    }

    /// Routing matrix `P_d`: `n_l x n_{p,d}`, entry 1 when the path uses the edge.
    pub fn incidence(&self, d: usize) -> DMatrix<f64> {
        let paths = &self.paths[d];
        let mut m = DMatrix::zeros(self.edge_count, paths.len());
        for (j, p) in paths.iter().enumerate() {
            for &e in &p.edges {
                m[(e, j)] = 1.0;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4() -> Topology {
        // Bidirectional 4-cycle 0-1-2-3-0.
        let mut text = String::from("nodes 4\n");
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            text.push_str(&format!("{a} {b} 10\n{b} {a} 10\n"));
        }
        Topology::parse(&text).unwrap()
    }

    #[test]
    fn opposite_corners_of_a_cycle() {
        let t = cycle4();
        let paths = k_shortest_paths(&t, Demand::new(0, 2), 2).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths.iter().all(|p| p.hops() == 2));
        assert_eq!(paths[0].nodes, vec![0, 1, 2]);
        assert_eq!(paths[1].nodes, vec![0, 3, 2]);
    }

    #[test]
    fn single_edge_has_one_path() {
        let t = Topology::parse("nodes 2\n0 1 10\n").unwrap();
        let paths = k_shortest_paths(&t, Demand::new(0, 1), 4).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].edges, vec![0]);
        assert!(k_shortest_paths(&t, Demand::new(1, 0), 4).unwrap().is_empty());
    }

    #[test]
    fn rejects_degenerate_demands() {
        let t = cycle4();
        assert!(k_shortest_paths(&t, Demand::new(1, 1), 2).is_err());
        assert!(k_shortest_paths(&t, Demand::new(0, 9), 2).is_err());
    }

    #[test]
    fn incidence_matches_paths() {
        let t = cycle4();
        let ps = PathSet::build(&t, 4).unwrap();
        for d in 0..ps.demand_count() {
            let m = ps.incidence(d);
            for (j, p) in ps.paths(d).iter().enumerate() {
                for e in 0..t.edge_count() {
                    assert_eq!(m[(e, j)] == 1.0, p.contains_edge(e));
                }
                assert_eq!(p.nodes.first(), Some(&ps.demand(d).src));
                assert_eq!(p.nodes.last(), Some(&ps.demand(d).dst));
            }
        }
        assert_eq!(ps.offset(ps.demand_count()), ps.path_count());
    }
}
