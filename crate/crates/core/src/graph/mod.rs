//! Undirected simple graphs on `0..n`, vertex-set algebra, binomial random
//! graphs and the four-phase perturbation plan.

mod random;
mod vertex_set;

use alloc::vec::Vec;

pub use random::{generate_gnp, generate_gnp_with, relabel_uniformly, PerturbationPlan, PHASES};
pub use vertex_set::VertexSet;

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Undirected simple graph on the vertices `0..n`.
///
/// Neighbourhoods are kept as sorted lists for scans, and an `n × n` bit
/// matrix answers adjacency queries in O(1). The graph is immutable once
/// built.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    m: usize,
    neighbors: Vec<Vec<Vertex>>,
    row_words: usize,
    matrix: Vec<u64>,
}

impl core::fmt::Debug for Graph {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Graph").field("n", &self.n).field("m", &self.m).finish()
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let row_words = n.div_ceil(64);
        Graph { n, m: 0, neighbors: alloc::vec![Vec::new(); n], row_words, matrix: alloc::vec![0; n * row_words] }
    }

    /// Builds a graph from an edge list. Duplicate edges (in either
    /// orientation) are merged; self-loops and out-of-range endpoints are
    /// rejected.
    pub fn from_edges<I: IntoIterator<Item = (Vertex, Vertex)>>(n: usize, edges: I) -> Result<Self> {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            g.insert(u, v);
        }
        g.finish();
        Ok(g)
    }

    fn insert(&mut self, u: Vertex, v: Vertex) -> bool {
        if self.has_edge(u, v) {
            return false;
        }
        self.matrix[u * self.row_words + (v >> 6)] |= 1 << (v & 63);
        self.matrix[v * self.row_words + (u >> 6)] |= 1 << (u & 63);
        self.neighbors[u].push(v);
        self.neighbors[v].push(u);
        self.m += 1;
        true
    }

    fn finish(&mut self) {
        for list in &mut self.neighbors {
            list.sort_unstable();
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.insert(u, v);
            }
        }
        g.finish();
        g
    }

    /// `K_{a,b}` with sides `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let mut g = Self::empty(a + b);
        for u in 0..a {
            for v in a..a + b {
                g.insert(u, v);
            }
        }
        g.finish();
        g
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("path edges are valid")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        if n >= 3 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, edges).expect("cycle edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n && v < self.n && self.matrix[u * self.row_words + (v >> 6)] & (1 << (v & 63)) != 0
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.neighbors[v].len()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors[u].iter().copied().filter(move |&v| u < v).map(move |v| (u, v)))
    }

    /// Number of neighbours of `v` inside `set`.
    pub fn degree_into(&self, v: Vertex, set: &VertexSet) -> usize {
        self.row(v).iter().zip(set.raw_words()).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Adjacency row of `v` as bitset words.
    pub(crate) fn row(&self, v: Vertex) -> &[u64] {
        &self.matrix[v * self.row_words..(v + 1) * self.row_words]
    }

    /// Neighbours of `v` inside `set`, ascending.
    pub fn neighbors_in<'a>(&'a self, v: Vertex, set: &'a VertexSet) -> impl Iterator<Item = Vertex> + 'a {
        self.neighbors[v].iter().copied().filter(move |&w| set.contains(w))
    }

    /// `e(x, y)` for disjoint `x`, `y`.
    pub fn edges_between(&self, x: &VertexSet, y: &VertexSet) -> usize {
        x.iter().map(|v| self.degree_into(v, y)).sum()
    }

    pub fn union(&self, other: &Graph) -> Result<Graph> {
        graph_union(self, other)
    }

    pub fn min_degree(&self) -> Result<usize> {
        min_degree(self)
    }

    pub fn density(&self, x: &VertexSet, y: &VertexSet) -> Result<f64> {
        density(self, x, y)
    }

    /// The graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[Vertex]) -> Graph {
        assert_eq!(perm.len(), self.n);
        Graph::from_edges(self.n, self.edges().map(|(u, v)| (perm[u], perm[v])))
            .expect("a permutation maps edges to edges")
    }
}

pub fn graph_union(g: &Graph, h: &Graph) -> Result<Graph> {
    if g.n != h.n {
        return Err(Error::VertexCountMismatch { left: g.n, right: h.n });
    }
    Graph::from_edges(g.n, g.edges().chain(h.edges()))
}

/// Union of any number of graphs on the same vertex set.
pub fn union_all<'a, I: IntoIterator<Item = &'a Graph>>(n: usize, graphs: I) -> Result<Graph> {
    let mut edges = Vec::new();
    for g in graphs {
        if g.n != n {
            return Err(Error::VertexCountMismatch { left: n, right: g.n });
        }
        edges.extend(g.edges());
    }
    Graph::from_edges(n, edges)
}

pub fn min_degree(g: &Graph) -> Result<usize> {
    (0..g.n).map(|v| g.degree(v)).min().ok_or(Error::EmptyGraph)
}

/// `e(x, y) / (|x| |y|)` for disjoint nonempty `x`, `y`.
pub fn density(g: &Graph, x: &VertexSet, y: &VertexSet) -> Result<f64> {
    if x.is_empty() || y.is_empty() || !x.is_disjoint(y) {
        return Err(Error::InvalidVertexSets);
    }
    Ok(g.edges_between(x, y) as f64 / (x.len() as f64 * y.len() as f64))
}
