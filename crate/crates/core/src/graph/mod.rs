//! Oriented weighted graphs and the integer linear algebra of their cycle
//! space.
//!
//! A [`WeightedGraph`] is always simple, connected and bridge-free: every edge
//! lies outside at least one spanning tree, so every edge is traversed by some
//! cycle. Graphs that violate this (self-loops and parallel edges produced by
//! smoothing) live in the separate [`Multigraph`] type and never reach the
//! enumeration code.

mod cycles;
mod document;
mod incidence;
mod lattice;
mod smoothing;
mod subdivision;
mod trees;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use cycles::solve_rational;
pub use cycles::{basis_change, bfs_spanning_tree, fundamental_cycle_basis, CycleBasis};
pub use document::{load_graph, BranchSpec, EdgeRecord, GraphDocument};
pub use incidence::{incidence_matrix, IncidenceMatrix};
pub use lattice::{cycle_basis_lattice_check, smith_divisors, LatticeCheck};
pub use smoothing::{smooth_two_valent, Multigraph};
pub use subdivision::{subdivide, Subdivided, SubdivisionScheme};
pub use trees::{spanning_tree_count, spanning_trees, SpanningTrees, TreeMode, DEFAULT_TREE_CAP};

/// Vertex label as written in a graph document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Num(i64),
    Name(String),
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Num(n) => write!(f, "{n}"),
            VertexId::Name(s) => f.write_str(s),
        }
    }
}

impl From<i64> for VertexId {
    fn from(n: i64) -> Self {
        VertexId::Num(n)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId::Name(s.to_owned())
    }
}

/// An oriented edge `tail -> head` between vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(String),
    #[error("edge {edge} references unknown vertex {vertex}")]
    UnknownVertex { edge: usize, vertex: String },
    #[error("edge {edge} ({tail} -> {head}) is a self-loop")]
    SelfLoop {
        edge: usize,
        tail: String,
        head: String,
    },
    #[error("edge {edge} ({tail} -> {head}) duplicates edge {first}")]
    DuplicateEdge {
        edge: usize,
        first: usize,
        tail: String,
        head: String,
    },
    #[error("edge {edge} has zero weight")]
    ZeroWeight { edge: usize },
    #[error("edge {edge} has non-finite weight")]
    NonFiniteWeight { edge: usize },
    #[error("graph is disconnected: vertex {vertex} is unreachable from {root}")]
    Disconnected { root: String, vertex: String },
    #[error("edge {edge} ({tail} -> {head}) is a bridge: it lies in every spanning tree")]
    Bridge {
        edge: usize,
        tail: String,
        head: String,
    },
    #[error("edge set is not a spanning tree: {0}")]
    NotSpanningTree(String),
    #[error("spanning tree count {count} exceeds the enumeration cap {cap}")]
    TreeCapExceeded { count: u128, cap: usize },
    #[error("subdivision rate for edge {edge} must be positive, got {rate}")]
    NonPositiveRate { edge: usize, rate: f64 },
    #[error("subdivision scale must be at least 1")]
    ZeroScale,
    #[error("expected {expected} per-edge values, got {got}")]
    EdgeCountMismatch { expected: usize, got: usize },
    #[error("integer overflow in exact arithmetic")]
    Overflow,
}

/// Simple, connected, bridge-free weighted graph with a fixed edge order and
/// orientation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedGraph {
    vertices: Vec<VertexId>,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds and validates a graph from labelled vertices and index-based
    /// edges `(tail, head, weight)`.
    pub fn new(
        vertices: Vec<VertexId>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|(tail, head, weight)| Edge { tail, head, weight })
            .collect();
        let graph = WeightedGraph { vertices, edges };
        graph.validate()?;
        Ok(graph)
    }

    /// Vertices labelled `1..=n`.
    pub fn with_numbered_vertices(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let vertices = (1..=n as i64).map(VertexId::Num).collect();
        Self::new(vertices, edges)
    }

    fn validate(&self) -> Result<(), GraphError> {
        let n = self.vertices.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen_ids = HashMap::new();
        for v in &self.vertices {
            if seen_ids.insert(v.clone(), ()).is_some() {
                return Err(GraphError::DuplicateVertex(v.to_string()));
            }
        }
        let mut seen_pairs: HashMap<(usize, usize), usize> = HashMap::new();
        for (idx, e) in self.edges.iter().enumerate() {
            for end in [e.tail, e.head] {
                if end >= n {
                    return Err(GraphError::UnknownVertex {
                        edge: idx,
                        vertex: end.to_string(),
                    });
                }
            }
            if !e.weight.is_finite() {
                return Err(GraphError::NonFiniteWeight { edge: idx });
            }
            if e.weight == 0.0 {
                return Err(GraphError::ZeroWeight { edge: idx });
            }
            if e.tail == e.head {
                return Err(GraphError::SelfLoop {
                    edge: idx,
                    tail: self.label(e.tail),
                    head: self.label(e.head),
                });
            }
            let key = (e.tail.min(e.head), e.tail.max(e.head));
            if let Some(&first) = seen_pairs.get(&key) {
                return Err(GraphError::DuplicateEdge {
                    edge: idx,
                    first,
                    tail: self.label(e.tail),
                    head: self.label(e.head),
                });
            }
            seen_pairs.insert(key, idx);
        }
        self.check_connected()?;
        if let Some(edge) = self.find_bridge() {
            let e = self.edges[edge];
            return Err(GraphError::Bridge {
                edge,
                tail: self.label(e.tail),
                head: self.label(e.head),
            });
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(GraphError::Disconnected {
                root: self.label(0),
                vertex: self.label(v),
            }),
            None => Ok(()),
        }
    }

    /// First bridge in edge order, found with an iterative lowlink DFS.
    fn find_bridge(&self) -> Option<usize> {
        let n = self.vertex_count();
        let adj = self.adjacency();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut bridges = Vec::new();
        let mut timer = 0;
        // (vertex, edge used to enter it, next neighbour index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(0, usize::MAX, 0)];
        disc[0] = 0;
        low[0] = 0;
        timer += 1;
        while let Some(top) = stack.last_mut() {
            let (u, parent_edge) = (top.0, top.1);
            if top.2 < adj[u].len() {
                let (w, e) = adj[u][top.2];
                top.2 += 1;
                if e == parent_edge {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, e, 0));
                } else {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        bridges.push(parent_edge);
                    }
                }
            }
        }
        bridges.into_iter().min()
    }

    /// Neighbour lists `(neighbour, edge index)` in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for (idx, e) in self.edges.iter().enumerate() {
            adj[e.tail].push((e.head, idx));
            adj[e.head].push((e.tail, idx));
        }
        adj
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Dimension of the cycle space, `|E| - |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn label(&self, v: usize) -> String {
        self.vertices
            .get(v)
            .map_or_else(|| v.to_string(), |id| id.to_string())
    }

    pub fn vertex_index(&self, id: &VertexId) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.tail == v || e.head == v)
            .count()
    }

    /// Same structure with new weights (validated again).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, GraphError> {
        if weights.len() != self.edge_count() {
            return Err(GraphError::EdgeCountMismatch {
                expected: self.edge_count(),
                got: weights.len(),
            });
        }
        Self::new(
            self.vertices.clone(),
            self.edges
                .iter()
                .zip(weights)
                .map(|(e, &w)| (e.tail, e.head, w)),
        )
    }

    /// True when every vertex has degree two and the graph is one cycle.
    pub fn is_ring(&self) -> bool {
        self.cycle_rank() == 1 && (0..self.vertex_count()).all(|v| self.degree(v) == 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        WeightedGraph::with_numbered_vertices(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_has_one_cycle() {
        let g = triangle();
        assert_eq!(
            (g.vertex_count(), g.edge_count(), g.cycle_rank()),
            (3, 3, 1)
        );
        assert!(g.is_ring());
    }

    #[test]
    fn rejects_bridges() {
        let err = WeightedGraph::with_numbered_vertices(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap_err();
        assert!(matches!(err, GraphError::Bridge { edge: 0, .. }), "{err}");
        // two triangles joined by a single edge
        let err = WeightedGraph::with_numbered_vertices(
            6,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (2, 3, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 3, 1.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Bridge { edge: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_malformed_edges() {
        let loops = WeightedGraph::with_numbered_vertices(2, [(0, 0, 1.0)]).unwrap_err();
        assert!(matches!(loops, GraphError::SelfLoop { .. }));
        let dup = WeightedGraph::with_numbered_vertices(
            3,
            [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (1, 0, 2.0)],
        )
        .unwrap_err();
        assert!(matches!(
            dup,
            GraphError::DuplicateEdge {
                edge: 3,
                first: 0,
                ..
            }
        ));
        let zero =
            WeightedGraph::with_numbered_vertices(3, [(0, 1, 0.0), (1, 2, 1.0), (2, 0, 1.0)])
                .unwrap_err();
        assert_eq!(zero, GraphError::ZeroWeight { edge: 0 });
    }

    #[test]
    fn rejects_disconnected() {
        let err = WeightedGraph::with_numbered_vertices(
            6,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 3, 1.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Disconnected { .. }));
    }

    #[test]
    fn negative_weights_are_allowed() {
        let g = WeightedGraph::with_numbered_vertices(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, -1.0)]);
        assert!(g.is_ok());
    }
}
