//! Simple undirected graphs and the topology families used as server
//! interconnects.

mod edge_list;
mod generators;

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use edge_list::{load_edge_list, save_edge_list};
pub use generators::{
    gen_clique, gen_complete_bipartite, gen_erased_regular, gen_erdos_renyi, gen_isolated,
    gen_rgg_torus, gen_ring, gen_toric_grid, rgg_from_points, rgg_radius, GraphSpec,
};

pub type Vertex = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: malformed input: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: vertex {vertex} out of range for {n} vertices")]
    OutOfRange { line: usize, vertex: u64, n: usize },
    #[error("line {line}: self-loop at vertex {vertex}")]
    SelfLoop { line: usize, vertex: u32 },
    #[error("line {line}: duplicate edge {u}-{v}")]
    DuplicateEdge { line: usize, u: u32, v: u32 },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Immutable simple undirected graph on vertices `0..n`.
///
/// Neighbor lists are sorted ascending and free of duplicates and
/// self-loops; adjacency is symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    label: String,
}

impl Graph {
    /// Builds a graph from an undirected edge list, rejecting self-loops,
    /// duplicates (in either orientation) and out-of-range ids.
    pub fn from_edges<I>(n: usize, edges: I, label: impl Into<String>) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        for (line, (u, v)) in edges.into_iter().enumerate() {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(GraphError::OutOfRange { line: line + 1, vertex: w as u64, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { line: line + 1, vertex: u });
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (u as u32, w[0]);
                return Err(GraphError::DuplicateEdge { line: 0, u: a.min(b), v: a.max(b) });
            }
        }
        Ok(Self { adjacency, label: label.into() })
    }

    /// Wraps adjacency lists that the caller guarantees to be valid.
    pub(crate) fn from_adjacency_unchecked(adjacency: Vec<Vec<Vertex>>, label: String) -> Self {
        let g = Self { adjacency, label };
        debug_assert!(g.validate().is_ok(), "{:?}", g.validate());
        g
    }

    pub fn n_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.n_vertices() as f64
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    /// `{v} ∪ neighbors(v)`, sorted ascending.
    pub fn closed_neighborhood(&self, v: Vertex) -> Vec<Vertex> {
        let nb = self.neighbors(v);
        let at = nb.partition_point(|&w| w < v);
        let mut out = Vec::with_capacity(nb.len() + 1);
        out.extend_from_slice(&nb[..at]);
        out.push(v);
        out.extend_from_slice(&nb[at..]);
        out
    }

    /// Degree → number of vertices with that degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for list in &self.adjacency {
            *h.entry(list.len()).or_insert(0) += 1;
        }
        h
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            let u = u as Vertex;
            list.iter().copied().filter(move |&v| v > u).map(move |v| (u, v))
        })
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.n_vertices();
        for (u, list) in self.adjacency.iter().enumerate() {
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(GraphError::Invariant(format!(
                        "neighbor list of {u} not strictly increasing"
                    )));
                }
            }
            for &v in list {
                if v as usize >= n {
                    return Err(GraphError::Invariant(format!("neighbor {v} of {u} out of range")));
                }
                if v as usize == u {
                    return Err(GraphError::Invariant(format!("self-loop at {u}")));
                }
                if !self.has_edge(v, u as Vertex) {
                    return Err(GraphError::Invariant(format!("edge {u}-{v} not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Short content hash of the adjacency structure (hex, 16 chars).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_vertices() as u64).to_le_bytes());
        for (u, v) in self.edges() {
            h.update(u.to_le_bytes());
            h.update(v.to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(matches!(
            Graph::from_edges(3, [(0, 0)], "x"),
            Err(GraphError::SelfLoop { .. })
        ));
        assert!(matches!(
            Graph::from_edges(3, [(0, 1), (1, 0)], "x"),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            Graph::from_edges(3, [(0, 3)], "x"),
            Err(GraphError::OutOfRange { .. })
        ));
    }

    #[test]
    fn closed_neighborhood_is_sorted() {
        let g = gen_ring(5).unwrap();
        assert_eq!(g.closed_neighborhood(0), vec![0, 1, 4]);
        assert_eq!(g.closed_neighborhood(2), vec![1, 2, 3]);
        let c = gen_clique(4).unwrap();
        assert_eq!(c.closed_neighborhood(0), vec![0, 1, 2, 3]);
        let iso = gen_isolated(7).unwrap();
        assert_eq!(iso.closed_neighborhood(3), vec![3]);
    }

    #[test]
    fn fingerprint_depends_on_edges() {
        let a = gen_ring(6).unwrap();
        let b = gen_clique(6).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), gen_ring(6).unwrap().fingerprint());
    }
}
