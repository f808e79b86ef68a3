//! Compute graph abstraction: subcircuits as tensor-network nodes, cuts as
//! dimension-4 contraction indices, output qubits (or merge bins) as the
//! free output indices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragments::PartitionedCircuit;

/// Dimension of every cut index: one slot per {I, X, Y, Z} basis.
pub const CUT_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputeGraph {
    /// Output dimension per node: 2^(output qubits) in full-state mode, or
    /// the node's bin count in merge mode.
    pub node_dims: Vec<u64>,
    /// Cut edges indexed by cut id; self edges (a == b) are allowed and give
    /// the node a single dimension-4 index that is summed out locally.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge {edge} references node {node}, but the graph has {nodes} nodes")]
    EdgeOutOfRange {
        edge: usize,
        node: usize,
        nodes: usize,
    },
    #[error("graph has no nodes")]
    Empty,
    #[error("bad graph spec: {0}")]
    BadSpec(String),
}

impl ComputeGraph {
    pub fn new(
        node_dims: Vec<u64>,
        edges: Vec<(usize, usize)>,
    ) -> Result<ComputeGraph, GraphError> {
        if node_dims.is_empty() {
            return Err(GraphError::Empty);
        }
        for (i, &(a, b)) in edges.iter().enumerate() {
            for node in [a, b] {
                if node >= node_dims.len() {
                    return Err(GraphError::EdgeOutOfRange {
                        edge: i,
                        node,
                        nodes: node_dims.len(),
                    });
                }
            }
        }
        Ok(ComputeGraph { node_dims, edges })
    }

    /// Full-state graph from a partition: node i gets dimension 2^(outputs_i),
    /// edge k runs from the measurement-side subcircuit to the init side.
    pub fn from_partition(partitioned: &PartitionedCircuit) -> ComputeGraph {
        let node_dims = partitioned
            .fragments
            .iter()
            .map(|f| 1u64 << f.output_count())
            .collect();
        let mut edges = vec![(usize::MAX, usize::MAX); partitioned.cut_count()];
        for frag in &partitioned.fragments {
            for role in &frag.roles {
                match role.side {
                    crate::fragments::CutSide::Measure => edges[role.cut].0 = frag.subcircuit,
                    crate::fragments::CutSide::Init => edges[role.cut].1 = frag.subcircuit,
                }
            }
        }
        ComputeGraph { node_dims, edges }
    }

    /// Same topology with replaced output dimensions (merge bins).
    pub fn with_node_dims(&self, node_dims: Vec<u64>) -> ComputeGraph {
        assert_eq!(node_dims.len(), self.node_dims.len());
        ComputeGraph {
            node_dims,
            edges: self.edges.clone(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_dims.len()
    }

    pub fn cut_count(&self) -> usize {
        self.edges.len()
    }

    /// Distinct cuts attached to a node, ascending: the node's tensor has one
    /// dimension-4 index per entry here (a self edge appears once).
    pub fn cuts_of(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|&(_, &(a, b))| a == node || b == node)
            .map(|(k, _)| k)
            .collect()
    }

    /// Cut ids whose both endpoints are this node.
    pub fn self_cuts_of(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|&(_, &(a, b))| a == node && b == node)
            .map(|(k, _)| k)
            .collect()
    }

    /// Edge endpoints incident to the node; a self edge counts twice.
    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| (a == node) as usize + (b == node) as usize)
            .sum()
    }

    /// Stored input values for one node: 4^cuts * node_dim.
    pub fn node_storage(&self, node: usize) -> u64 {
        let cuts = self.cuts_of(node).len() as u32;
        (CUT_DIM as u64)
            .saturating_pow(cuts)
            .saturating_mul(self.node_dims[node])
    }

    /// Total stored input values across nodes.
    pub fn input_storage(&self) -> u64 {
        (0..self.node_count())
            .map(|i| self.node_storage(i))
            .fold(0u64, u64::saturating_add)
    }
}

#[derive(Debug, Deserialize)]
struct NodeSpec {
    qubits: Option<u32>,
    dim: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct GraphSpec {
    nodes: Vec<NodeSpec>,
    edges: Vec<(usize, usize)>,
}

/// Parse a standalone graph-spec JSON: `{"nodes": [{"qubits": 1} | {"dim": 7},
/// ...], "edges": [[0, 1], ...]}`. Lets cost-model runs work without circuits.
pub fn graph_from_spec_json(text: &str) -> Result<ComputeGraph, GraphError> {
    let spec: GraphSpec =
        serde_json::from_str(text).map_err(|e| GraphError::BadSpec(e.to_string()))?;
    let mut dims = Vec::with_capacity(spec.nodes.len());
    for (i, node) in spec.nodes.iter().enumerate() {
        let dim = match (node.qubits, node.dim) {
            (Some(q), None) => {
                if q >= 63 {
                    return Err(GraphError::BadSpec(format!(
                        "node {i}: qubits {q} too large"
                    )));
                }
                1u64 << q
            }
            (None, Some(d)) if d >= 1 => d,
            _ => {
                return Err(GraphError::BadSpec(format!(
                    "node {i}: exactly one of `qubits` or `dim` (>= 1) required"
                )))
            }
        };
        dims.push(dim);
    }
    ComputeGraph::new(dims, spec.edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The worked three-subcircuit example: tensors {4,4,4,2}, {4,4,1},
    /// {4,4,4,16} with cuts 0-1, 0-2, 0-2, 1-2.
    pub(crate) fn worked_example() -> ComputeGraph {
        ComputeGraph::new(vec![2, 1, 16], vec![(0, 1), (0, 2), (0, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn worked_example_storage() {
        let g = worked_example();
        assert_eq!(g.node_storage(0), 128);
        assert_eq!(g.node_storage(1), 16);
        assert_eq!(g.node_storage(2), 1024);
        assert_eq!(g.input_storage(), 1168);
    }

    #[test]
    fn degree_counts_self_edges_twice() {
        let g = ComputeGraph::new(vec![2, 2], vec![(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.degree(0), 3);
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.cuts_of(0), vec![0, 1]);
        assert_eq!(g.self_cuts_of(0), vec![0]);
        // the self edge contributes one dimension-4 index
        assert_eq!(g.node_storage(0), 4 * 4 * 2);
    }

    #[test]
    fn spec_json_round_trip() {
        let g = graph_from_spec_json(
            r#"{"nodes": [{"qubits": 1}, {"qubits": 0}, {"qubits": 4}],
                "edges": [[0,1],[0,2],[0,2],[1,2]]}"#,
        )
        .unwrap();
        assert_eq!(g, worked_example());
        let b = graph_from_spec_json(r#"{"nodes": [{"dim": 7}], "edges": []}"#).unwrap();
        assert_eq!(b.node_dims, vec![7]);
        assert!(graph_from_spec_json(r#"{"nodes": [], "edges": []}"#).is_err());
        assert!(graph_from_spec_json(r#"{"nodes": [{"qubits": 1}], "edges": [[0,1]]}"#).is_err());
    }
}
