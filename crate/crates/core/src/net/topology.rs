//! Directed, capacitated network graphs and their text format.
//!
//! The on-disk format is line oriented:
//!
//! ```text
//! # comments and blank lines are ignored
//! nodes 3
//! 0 1 10000
//! 1 2 2500.5
//! ```
//!
//! The `nodes <n>` header must come before any edge record. Every edge record
//! is `src dst capacity`, with integer node ids in `0..n` and a strictly
//! positive capacity in Mbps. Edge indices follow record order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    /// Capacity in Mbps.
    pub capacity: f64,
}

/// A directed graph with dense, stable edge indices `0..n_l`.
#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    edges: Vec<Edge>,
    index: HashMap<(NodeId, NodeId), EdgeId>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl Topology {
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidTopology("topology has no nodes".into()));
        }
        let mut index = HashMap::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); node_count];
        let mut in_edges = vec![Vec::new(); node_count];
        for (id, e) in edges.iter().enumerate() {
            if e.src >= node_count || e.dst >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge {} -> {} references a node outside 0..{node_count}",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                return Err(Error::InvalidTopology(format!("self-loop at node {}", e.src)));
            }
            if !(e.capacity > 0.0 && e.capacity.is_finite()) {
                return Err(Error::NonPositiveCapacity {
                    src: e.src,
                    dst: e.dst,
                    capacity: e.capacity,
                });
            }
            if index.insert((e.src, e.dst), id).is_some() {
                return Err(Error::DuplicateEdge { src: e.src, dst: e.dst });
            }
            out_edges[e.src].push(id);
            in_edges[e.dst].push(id);
        }
        Ok(Self {
            node_count,
            edges,
            index,
            out_edges,
            in_edges,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut node_count: Option<usize> = None;
        let mut edges = Vec::new();
        let mut seen: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            if fields[0] == "nodes" {
                if node_count.is_some() {
                    return Err(parse_err("repeated `nodes` header".into()));
                }
                if fields.len() != 2 {
                    return Err(parse_err("expected `nodes <n>`".into()));
                }
                let n = fields[1]
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("bad node count `{}`: {e}", fields[1])))?;
                node_count = Some(n);
                continue;
            }
            let Some(n) = node_count else {
                return Err(parse_err("edge record before `nodes <n>` header".into()));
            };
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected `src dst capacity`, found {} fields",
                    fields.len()
                )));
            }
            let node = |s: &str| -> Result<NodeId> {
                let v = s
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("bad node id `{s}`: {e}")))?;
                if v >= n {
                    return Err(parse_err(format!("node id {v} out of range 0..{n}")));
                }
                Ok(v)
            };
            let src = node(fields[0])?;
            let dst = node(fields[1])?;
            let capacity = fields[2]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("bad capacity `{}`: {e}", fields[2])))?;
            if src == dst {
                return Err(parse_err(format!("self-loop at node {src}")));
            }
            if !(capacity > 0.0 && capacity.is_finite()) {
                return Err(Error::NonPositiveCapacity { src, dst, capacity });
            }
            if let Some(prev) = seen.insert((src, dst), line_no) {
                return Err(parse_err(format!(
                    "duplicate edge {src} -> {dst} (first defined on line {prev})"
                )));
            }
            edges.push(Edge { src, dst, capacity });
        }
        let n = node_count.ok_or(Error::Parse {
            line: text.lines().count().max(1),
            msg: "missing `nodes <n>` header".into(),
        })?;
        Self::new(n, edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.src, e.dst, e.capacity);
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of links, `n_l`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edge_between(&self, src: NodeId, dst: NodeId) -> Option<EdgeId> {
        self.index.get(&(src, dst)).copied()
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node]
    }

    /// Total (in + out) degree.
    pub fn degree(&self, node: NodeId) -> usize {
        self.out_edges[node].len() + self.in_edges[node].len()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    /// Hop distances from `src` to every node (`None` if unreachable).
    pub fn hop_distances(&self, src: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = std::collections::VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &e in &self.out_edges[u] {
                let v = self.edges[e].dst;
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let t = Topology::parse("nodes 2\n0 1 10\n").unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.edge_count(), 1);
        assert_eq!(t.edge(0).capacity, 10.0);
        assert_eq!(t.edge_between(0, 1), Some(0));
        assert_eq!(t.edge_between(1, 0), None);
    }

    #[test]
    fn reports_line_numbers() {
        let err = Topology::parse("# header\nnodes 3\n0 1 10\n1 x 5\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_bad_capacity() {
        assert!(matches!(
            Topology::parse("nodes 2\n0 1 10\n0 1 3\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Topology::parse("nodes 2\n0 1 0\n"),
            Err(Error::NonPositiveCapacity { .. })
        ));
        assert!(matches!(
            Topology::parse("nodes 2\n0 1 -4\n"),
            Err(Error::NonPositiveCapacity { .. })
        ));
        assert!(matches!(
            Topology::new(2, vec![Edge { src: 0, dst: 1, capacity: 1.0 }, Edge { src: 0, dst: 1, capacity: 2.0 }]),
            Err(Error::DuplicateEdge { src: 0, dst: 1 })
        ));
    }

    #[test]
    fn rejects_missing_header_and_self_loops() {
        assert!(Topology::parse("0 1 10\n").is_err());
        assert!(Topology::parse("").is_err());
        assert!(Topology::parse("nodes 2\n1 1 10\n").is_err());
        assert!(Topology::parse("nodes 2\n0 2 10\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let t = Topology::parse("nodes 3\n0 1 10\n1 2 2.5\n2 0 7\n").unwrap();
        let again = Topology::parse(&t.to_text()).unwrap();
        assert_eq!(t.edges(), again.edges());
    }

    #[test]
    fn hop_distances_on_a_line() {
        let t = Topology::parse("nodes 3\n0 1 1\n1 2 1\n").unwrap();
        assert_eq!(t.hop_distances(0), vec![Some(0), Some(1), Some(2)]);
        assert_eq!(t.hop_distances(2), vec![None, None, Some(0)]);
    }
}
