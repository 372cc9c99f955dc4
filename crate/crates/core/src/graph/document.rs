use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{GraphError, VertexId, WeightedGraph};

/// Branch as written in a document: `"principal"`, `"reflected"` or `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BranchSpec {
    Named(String),
    Interval([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub tail: VertexId,
    pub head: VertexId,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchSpec>,
}

/// JSON graph document. `cycle_basis` optionally pins explicit basis rows
/// (one integer entry per edge) instead of the default fundamental basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_basis: Option<Vec<Vec<i64>>>,
}

impl GraphDocument {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn from_graph(g: &WeightedGraph) -> Self {
        GraphDocument {
            vertices: g.vertices().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    tail: g.vertices()[e.tail].clone(),
                    head: g.vertices()[e.head].clone(),
                    weight: e.weight,
                    branch: None,
                })
                .collect(),
            omega: None,
            cycle_basis: None,
        }
    }

    pub fn branches(&self) -> Vec<Option<BranchSpec>> {
        self.edges.iter().map(|e| e.branch.clone()).collect()
    }
}

/// Validates a document into a graph; edge order and orientation are kept as
/// written.
pub fn load_graph(doc: &GraphDocument) -> Result<WeightedGraph, GraphError> {
    let index: HashMap<&VertexId, usize> = doc
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (idx, rec) in doc.edges.iter().enumerate() {
        let lookup = |v: &VertexId| {
            index
                .get(v)
                .copied()
                .ok_or_else(|| GraphError::UnknownVertex {
                    edge: idx,
                    vertex: v.to_string(),
                })
        };
        edges.push((lookup(&rec.tail)?, lookup(&rec.head)?, rec.weight));
    }
    WeightedGraph::new(doc.vertices.clone(), edges)
}
