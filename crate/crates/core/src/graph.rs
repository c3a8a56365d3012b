//! Undirected region graph and the matrix operators derived from it.
//!
//! Nodes carry opaque string identifiers (county FIPS codes in the real
//! data) mapped to dense indices at construction. Edges are simple and
//! undirected; a merged edge keeps the union of its kind tags (adjacent,
//! flight) and the sum of its weights. Propagation uses the binary
//! adjacency by default; self-loops exist only inside the renormalized
//! operator, never in the stored adjacency.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Tag on an input edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Adjacent,
    Flight,
}

/// Union of kind tags accumulated when parallel input edges merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeKindSet {
    pub adjacent: bool,
    pub flight: bool,
}

impl EdgeKindSet {
    pub fn of(kind: EdgeKind) -> Self {
        let mut s = EdgeKindSet::default();
        s.insert(kind);
        s
    }

    pub fn insert(&mut self, kind: EdgeKind) {
        match kind {
            EdgeKind::Adjacent => self.adjacent = true,
            EdgeKind::Flight => self.flight = true,
        }
    }

    pub fn contains(&self, kind: EdgeKind) -> bool {
        match kind {
            EdgeKind::Adjacent => self.adjacent,
            EdgeKind::Flight => self.flight,
        }
    }
}

/// Merged attributes of one undirected edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeAttr {
    pub kinds: EdgeKindSet,
    pub weight: f64,
}

/// Input edge specification for [`build_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub src: String,
    pub dst: String,
    pub kind: EdgeKind,
    pub weight: f64,
}

impl EdgeSpec {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, kind: EdgeKind, weight: f64) -> Self {
        EdgeSpec {
            src: src.into(),
            dst: dst.into(),
            kind,
            weight,
        }
    }
}

/// Undirected simple graph over string-identified nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    node_ids: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    edges: BTreeMap<(usize, usize), EdgeAttr>,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.node_ids[index]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    /// Neighbor indices of `v`, strictly sorted.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.edges.contains_key(&ordered(u, v))
    }

    pub fn edge_attr(&self, u: usize, v: usize) -> Option<&EdgeAttr> {
        self.edges.get(&ordered(u, v))
    }

    /// Iterator over `(u, v, attr)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &EdgeAttr)> {
        self.edges.iter().map(|(&(u, v), attr)| (u, v, attr))
    }

    /// Number of incident edges tagged `flight`.
    pub fn flight_degree(&self, v: usize) -> usize {
        self.adjacency[v]
            .iter()
            .filter(|&&u| {
                self.edges[&ordered(u, v)]
                    .kinds
                    .contains(EdgeKind::Flight)
            })
            .count()
    }

    /// Sum of weights of incident flight edges.
    pub fn flight_weight(&self, v: usize) -> f64 {
        // fold from +0.0: an empty f64 Sum would yield -0.0
        self.adjacency[v]
            .iter()
            .filter_map(|&u| {
                let attr = &self.edges[&ordered(u, v)];
                attr.kinds.contains(EdgeKind::Flight).then_some(attr.weight)
            })
            .fold(0.0, |acc, w| acc + w)
    }

    /// Sorted degree multiset, used by the rewiring tests.
    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut degs: Vec<usize> = (0..self.node_count()).map(|v| self.degree(v)).collect();
        degs.sort_unstable();
        degs
    }

    /// Relabeled copy: node `i` of the result is node `perm[i]` of `self`.
    pub fn relabeled(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.node_count());
        // inverse[old] = new
        let mut inverse = vec![0usize; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let node_ids: Vec<String> = perm.iter().map(|&old| self.node_ids[old].clone()).collect();
        let mut edges = BTreeMap::new();
        for (&(u, v), attr) in &self.edges {
            edges.insert(ordered(inverse[u], inverse[v]), *attr);
        }
        let mut adjacency = vec![Vec::new(); perm.len()];
        for &(u, v) in edges.keys() {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph {
            node_ids,
            adjacency,
            edges,
        }
    }
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Build a validated graph from node ids and edge specifications.
///
/// Duplicate `(src, dst)` pairs merge: weights sum and kind tags union.
/// Self-loops, unknown endpoints, and negative weights are rejected.
pub fn build_graph(node_ids: &[String], edges: &[EdgeSpec]) -> Result<Graph> {
    let index: BTreeMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut merged: BTreeMap<(usize, usize), EdgeAttr> = BTreeMap::new();
    for spec in edges {
        let src = *index.get(spec.src.as_str()).ok_or_else(|| Error::UnknownNode {
            node: spec.src.clone(),
            src: spec.src.clone(),
            dst: spec.dst.clone(),
        })?;
        let dst = *index.get(spec.dst.as_str()).ok_or_else(|| Error::UnknownNode {
            node: spec.dst.clone(),
            src: spec.src.clone(),
            dst: spec.dst.clone(),
        })?;
        if src == dst {
            return Err(Error::SelfLoop {
                node: spec.src.clone(),
            });
        }
        if spec.weight < 0.0 || !spec.weight.is_finite() {
            return Err(Error::NegativeWeight {
                src: spec.src.clone(),
                dst: spec.dst.clone(),
                weight: spec.weight,
            });
        }
        let entry = merged.entry(ordered(src, dst)).or_insert(EdgeAttr {
            kinds: EdgeKindSet::default(),
            weight: 0.0,
        });
        entry.kinds.insert(spec.kind);
        entry.weight += spec.weight;
    }

    let mut adjacency = vec![Vec::new(); node_ids.len()];
    for &(u, v) in merged.keys() {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    Ok(Graph {
        node_ids: node_ids.to_vec(),
        adjacency,
        edges: merged,
    })
}

/// Rebuild a graph with the same node ids from a bare `(u, v)` index edge
/// list. All edges come out tagged adjacent with weight 1; the rewiring
/// null model uses this since kind tags cannot survive endpoint swaps.
pub(crate) fn from_index_edges(node_ids: &[String], edges: &[(usize, usize)]) -> Graph {
    let mut merged = BTreeMap::new();
    for &(u, v) in edges {
        debug_assert_ne!(u, v);
        merged.insert(
            ordered(u, v),
            EdgeAttr {
                kinds: EdgeKindSet::of(EdgeKind::Adjacent),
                weight: 1.0,
            },
        );
    }
    let mut adjacency = vec![Vec::new(); node_ids.len()];
    for &(u, v) in merged.keys() {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Graph {
        node_ids: node_ids.to_vec(),
        adjacency,
        edges: merged,
    }
}

/// Binary adjacency matrix: symmetric, zero diagonal, 1 iff the edge exists.
pub fn adjacency_matrix(g: &Graph) -> DenseMatrix {
    let n = g.node_count();
    let mut a = DenseMatrix::zeros(n, n);
    for (u, v, _) in g.edges() {
        a.set(u, v, 1.0);
        a.set(v, u, 1.0);
    }
    a
}

/// Renormalized propagation operator `D̄^{-1/2} (A + I) D̄^{-1/2}`.
///
/// Self-loops added here keep isolated nodes propagating to themselves.
/// Binary adjacency by default; see [`renormalized_propagation_with`].
pub fn renormalized_propagation(g: &Graph) -> DenseMatrix {
    renormalized_propagation_with(g, false)
}

/// Renormalized propagation with optional edge weights.
pub fn renormalized_propagation_with(g: &Graph, weighted: bool) -> DenseMatrix {
    let n = g.node_count();
    let mut a_bar = DenseMatrix::identity(n);
    for (u, v, attr) in g.edges() {
        let w = if weighted { attr.weight } else { 1.0 };
        a_bar.set(u, v, w);
        a_bar.set(v, u, w);
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = a_bar.row(i).iter().sum();
            1.0 / deg.sqrt()
        })
        .collect();
    let mut p = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = a_bar.get(i, j);
            if v != 0.0 {
                p.set(i, j, inv_sqrt_deg[i] * v * inv_sqrt_deg[j]);
            }
        }
    }
    p
}

/// Normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
///
/// Rejects graphs with an isolated node, naming it.
pub fn normalized_laplacian(g: &Graph) -> Result<DenseMatrix> {
    let n = g.node_count();
    for v in 0..n {
        if g.degree(v) == 0 {
            return Err(Error::IsolatedNode {
                node: g.node_id(v).to_string(),
            });
        }
    }
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
    let mut l = DenseMatrix::identity(n);
    for (u, v, _) in g.edges() {
        let w = -inv_sqrt_deg[u] * inv_sqrt_deg[v];
        l.set(u, v, w);
        l.set(v, u, w);
    }
    Ok(l)
}

#[cfg(test)]
pub(crate) fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}
