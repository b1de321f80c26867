//! Bounded-degree trees: generation, leaves, bare paths, leaf removal.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet};
use crate::rng::StreamRng;

/// A rooted labelled tree on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    parent: Vec<Option<Vertex>>,
    adjacency: Vec<Vec<Vertex>>,
    root: Vertex,
}

impl Tree {
    /// Builds a tree from a parent array with exactly one root (`None`).
    pub fn from_parents(parent: Vec<Option<Vertex>>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidTree("no vertices".into()));
        }
        let roots: Vec<_> = (0..n).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!("expected one root, found {}", roots.len())));
        }
        let mut adjacency = alloc::vec![Vec::new(); n];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n || p == v {
                    return Err(Error::InvalidTree(format!("bad parent {p} of {v}")));
                }
                adjacency[p].push(v);
                adjacency[v].push(p);
            }
        }
        let tree = Tree { parent, adjacency, root: roots[0] };
        if tree.bfs_order().len() != n {
            return Err(Error::InvalidTree("parent array contains a cycle".into()));
        }
        Ok(tree)
    }

    /// Builds a tree from `n - 1` undirected edges, rooted at `root`.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)], root: Vertex) -> Result<Self> {
        if n == 0 || root >= n {
            return Err(Error::InvalidTree("empty tree or root out of range".into()));
        }
        if edges.len() + 1 != n {
            return Err(Error::InvalidTree(format!("{} edges for {n} vertices", edges.len())));
        }
        let mut adjacency = alloc::vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidTree(format!("bad edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut parent = alloc::vec![None; n];
        let mut seen = VertexSet::new(n);
        seen.insert(root);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in &adjacency[u] {
                if seen.insert(w) {
                    parent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
        if seen.len() != n {
            return Err(Error::InvalidTree("edges do not connect all vertices".into()));
        }
        Self::from_parents(parent)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<Vertex>] {
        &self.parent
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Edges as `(parent, child)`, ordered by child.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        (0..self.n()).filter_map(|v| self.parent[v].map(|p| (p, v))).collect()
    }

    pub fn leaves(&self) -> Vec<Vertex> {
        (0..self.n()).filter(|&v| self.degree(v) == 1).collect()
    }

    pub fn bfs_order(&self) -> Vec<Vertex> {
        let mut order = Vec::with_capacity(self.n());
        let mut queue = VecDeque::from([self.root]);
        let mut seen = VertexSet::new(self.n());
        seen.insert(self.root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in &self.adjacency[u] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// The whole tree as a forest over its own labels.
    pub fn as_forest(&self) -> Forest {
        Forest::induced(self, &VertexSet::full(self.n()))
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<_> = (0..self.n()).map(|v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }
}

/// A subforest of a tree induced on a subset of its vertices, keeping the
/// tree's labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forest {
    vertices: VertexSet,
    adjacency: Vec<Vec<Vertex>>,
}

impl Forest {
    pub fn induced(tree: &Tree, keep: &VertexSet) -> Self {
        let adjacency = (0..tree.n())
            .map(|v| {
                if keep.contains(v) {
                    tree.neighbors(v).iter().copied().filter(|&w| keep.contains(w)).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Forest { vertices: keep.clone(), adjacency }
    }

    /// Size of the label space (the host tree's `n`).
    pub fn label_space(&self) -> usize {
        self.adjacency.len()
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        self.vertices
            .iter()
            .flat_map(|u| self.adjacency[u].iter().filter(move |&&w| u < w).map(move |&w| (u, w)))
            .collect()
    }

    /// BFS order of every component, each started at its smallest label.
    /// Returns `(order, parent)` where `parent[v]` is the BFS parent.
    pub fn bfs_order(&self) -> (Vec<Vertex>, Vec<Option<Vertex>>) {
        let mut order = Vec::with_capacity(self.len());
        let mut parent = alloc::vec![None; self.label_space()];
        let mut seen = VertexSet::new(self.label_space());
        for root in self.vertices.iter() {
            if !seen.insert(root) {
                continue;
            }
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                order.push(u);
                for &w in &self.adjacency[u] {
                    if seen.insert(w) {
                        parent[w] = Some(u);
                        queue.push_back(w);
                    }
                }
            }
        }
        (order, parent)
    }
}

/// Shapes produced by [`generate_bounded_tree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeShape {
    /// Each new vertex attaches to a uniformly random earlier vertex with
    /// spare degree capacity.
    UniformAttachment,
    Path,
    /// A spine with pendant leaves on interior spine vertices.
    Caterpillar,
    /// A path with `Δ - 1` extra leaves on one end.
    Broom,
    /// A small uniform-attachment tree whose edges are subdivided into long
    /// bare paths; few leaves.
    Subdivided,
}

impl TreeShape {
    pub const ALL: [TreeShape; 5] = [
        TreeShape::UniformAttachment,
        TreeShape::Path,
        TreeShape::Caterpillar,
        TreeShape::Broom,
        TreeShape::Subdivided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TreeShape::UniformAttachment => "uniform-attachment",
            TreeShape::Path => "path",
            TreeShape::Caterpillar => "caterpillar",
            TreeShape::Broom => "broom",
            TreeShape::Subdivided => "subdivided",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|shape| shape.name() == s)
    }
}

/// Vertices of the base tree of a [`TreeShape::Subdivided`] tree on `n`
/// vertices.
pub fn subdivided_base_size(n: usize) -> usize {
    n.div_ceil(25).max(2).min(n)
}

pub fn generate_bounded_tree(n: usize, delta_max: usize, shape: TreeShape, rng: &mut StreamRng) -> Result<Tree> {
    if n == 0 {
        return Err(Error::InvalidTree("no vertices".into()));
    }
    if delta_max < 2 && n >= 3 {
        return Err(Error::InfeasibleShape(format!("maximum degree {delta_max} with {n} vertices")));
    }
    if n <= 2 {
        return Tree::from_parents((0..n).map(|v| v.checked_sub(1)).collect());
    }
    let parent = match shape {
        TreeShape::Path => (0..n).map(|v| v.checked_sub(1)).collect(),
        TreeShape::UniformAttachment => uniform_attachment(n, delta_max, rng),
        TreeShape::Caterpillar => {
            if delta_max < 3 {
                return Err(Error::InfeasibleShape("a caterpillar with pendant leaves needs Δ ≥ 3".into()));
            }
            let pendants = (n - 2) * (delta_max - 2) / (delta_max - 1);
            let spine = n - pendants;
            let mut parent: Vec<Option<Vertex>> = (0..spine).map(|v| v.checked_sub(1)).collect();
            let mut slots: Vec<Vertex> =
                (1..spine - 1).flat_map(|v| core::iter::repeat_n(v, delta_max - 2)).collect();
            slots.shuffle(rng);
            parent.extend(slots[..pendants].iter().map(|&s| Some(s)));
            parent
        }
        TreeShape::Broom => {
            let bristles = (delta_max - 1).min(n - 2);
            let handle = n - bristles;
            let mut parent: Vec<Option<Vertex>> = (0..handle).map(|v| v.checked_sub(1)).collect();
            parent.extend(core::iter::repeat_n(Some(handle - 1), bristles));
            parent
        }
        TreeShape::Subdivided => {
            let base = subdivided_base_size(n);
            let base_parent = uniform_attachment(base, delta_max, rng);
            let interior = n - base;
            let edges = base - 1;
            let mut parent: Vec<Option<Vertex>> = alloc::vec![None; n];
            let mut next = base;
            for child in 1..base {
                let share = interior / edges + usize::from(child - 1 < interior % edges);
                let mut prev = base_parent[child].expect("non-root base vertex");
                for _ in 0..share {
                    parent[next] = Some(prev);
                    prev = next;
                    next += 1;
                }
                parent[child] = Some(prev);
            }
            parent
        }
    };
    let tree = Tree::from_parents(parent)?;
    debug_assert!(tree.max_degree() <= delta_max);
    Ok(tree)
}

fn uniform_attachment(n: usize, delta_max: usize, rng: &mut StreamRng) -> Vec<Option<Vertex>> {
    let mut parent = alloc::vec![None; n];
    let mut degree = alloc::vec![0usize; n];
    let mut open: Vec<Vertex> = Vec::with_capacity(n);
    if n > 0 {
        open.push(0);
    }
    for v in 1..n {
        let slot = rng.gen_range(0..open.len());
        let p = open[slot];
        parent[v] = Some(p);
        degree[p] += 1;
        degree[v] = 1;
        if degree[p] >= delta_max {
            open.swap_remove(slot);
        }
        if delta_max > 1 {
            open.push(v);
        }
    }
    parent
}

/// Number of degree-one vertices. Rejects the single-vertex tree.
pub fn count_leaves(t: &Tree) -> Result<usize> {
    if t.n() < 2 {
        return Err(Error::InvalidTree("a single vertex has no leaves".into()));
    }
    Ok(t.leaves().len())
}

/// Vertex-disjoint bare paths of a tree together with the forest left after
/// deleting their interiors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BarePathDecomposition {
    /// Path length in edges; every path has `k + 1` vertices.
    pub k: usize,
    pub paths: Vec<Vec<Vertex>>,
    pub forest_vertices: VertexSet,
    /// `(first, last)` of each path, in path order.
    pub special_pairs: Vec<(Vertex, Vertex)>,
}

impl BarePathDecomposition {
    fn from_paths(n: usize, k: usize, paths: Vec<Vec<Vertex>>) -> Self {
        let mut forest_vertices = VertexSet::full(n);
        for p in &paths {
            for &v in &p[1..p.len() - 1] {
                forest_vertices.remove(v);
            }
        }
        let special_pairs = paths.iter().map(|p| (p[0], p[p.len() - 1])).collect();
        BarePathDecomposition { k, paths, forest_vertices, special_pairs }
    }

    /// Keeps `count` of the paths chosen uniformly at random, in their
    /// original relative order.
    pub fn choose(&self, count: usize, rng: &mut StreamRng) -> Self {
        let mut picked: Vec<usize> = (0..self.paths.len()).collect();
        picked.shuffle(rng);
        picked.truncate(count);
        picked.sort_unstable();
        let paths = picked.into_iter().map(|i| self.paths[i].clone()).collect();
        Self::from_paths(self.forest_vertices.universe(), self.k, paths)
    }

    pub fn forest(&self, tree: &Tree) -> Forest {
        Forest::induced(tree, &self.forest_vertices)
    }

    /// Forest edges followed by the path edges.
    pub fn reassembled_edges(&self, tree: &Tree) -> Vec<(Vertex, Vertex)> {
        let mut edges = self.forest(tree).edges();
        for p in &self.paths {
            edges.extend(p.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))));
        }
        edges
    }
}

/// Greedy maximal collection of vertex-disjoint bare paths of length `k`:
/// every maximal run of degree-two vertices is cut into `⌊run / (k + 1)⌋`
/// consecutive pieces.
pub fn extract_bare_paths(t: &Tree, k: usize) -> Result<BarePathDecomposition> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("bare path length k = {k} must be at least 2")));
    }
    let n = t.n();
    let is_bare = |v: Vertex| t.degree(v) == 2;
    let mut visited = VertexSet::new(n);
    let mut paths = Vec::new();
    for start in 0..n {
        if !is_bare(start) || visited.contains(start) {
            continue;
        }
        // Walk to one end of the run, then collect it in order.
        let mut end = start;
        let mut prev = usize::MAX;
        loop {
            let next = t.neighbors(end).iter().copied().find(|&w| w != prev && is_bare(w));
            match next {
                Some(w) if w != start => {
                    prev = end;
                    end = w;
                }
                _ => break,
            }
        }
        let mut run = alloc::vec![end];
        visited.insert(end);
        let mut prev = usize::MAX;
        let mut cur = end;
        while let Some(w) = t.neighbors(cur).iter().copied().find(|&w| w != prev && is_bare(w) && !visited.contains(w))
        {
            visited.insert(w);
            run.push(w);
            prev = cur;
            cur = w;
        }
        paths.extend(run.chunks_exact(k + 1).map(<[Vertex]>::to_vec));
    }
    Ok(BarePathDecomposition::from_paths(n, k, paths))
}

/// Lower bound `(n − (2ℓ − 2)(k + 1)) / (k + 1)` on the number of disjoint
/// bare `k`-paths in a tree with `ℓ` leaves.
pub fn bare_path_lower_bound(n: usize, leaves: usize, k: usize) -> f64 {
    (n as f64 - (2.0 * leaves as f64 - 2.0) * (k as f64 + 1.0)) / (k as f64 + 1.0)
}

/// Result of deleting leaves from a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedTree {
    pub kept: VertexSet,
    pub removed: Vec<Vertex>,
    /// `(a, ℓ(a))` for every kept vertex that lost at least one leaf.
    pub demand: Vec<(Vertex, usize)>,
}

impl PrunedTree {
    pub fn forest(&self, tree: &Tree) -> Forest {
        Forest::induced(tree, &self.kept)
    }

    /// The pruned tree relabelled onto `0..kept.len()` in increasing label order.
    pub fn compact_tree(&self, tree: &Tree) -> Tree {
        let kept = self.kept.to_vec();
        let mut index = alloc::vec![usize::MAX; tree.n()];
        for (i, &v) in kept.iter().enumerate() {
            index[v] = i;
        }
        let edges: Vec<_> = self.forest(tree).edges().into_iter().map(|(u, v)| (index[u], index[v])).collect();
        Tree::from_edges(kept.len(), &edges, 0).expect("removing leaves keeps a tree")
    }
}

/// Deletes `count` leaves chosen uniformly at random.
pub fn remove_leaves(t: &Tree, count: usize, rng: &mut StreamRng) -> Result<PrunedTree> {
    let mut leaves = t.leaves();
    if count > leaves.len() {
        return Err(Error::TooManyLeaves { requested: count, available: leaves.len() });
    }
    leaves.shuffle(rng);
    leaves.truncate(count);
    leaves.sort_unstable();
    let mut kept = VertexSet::full(t.n());
    for &v in &leaves {
        kept.remove(v);
    }
    let mut demand = alloc::vec![0usize; t.n()];
    for &v in &leaves {
        let a = t.neighbors(v)[0];
        if !kept.contains(a) {
            return Err(Error::InvalidTree("removing both ends of a single edge".into()));
        }
        demand[a] += 1;
    }
    let demand = (0..t.n()).filter(|&a| demand[a] > 0).map(|a| (a, demand[a])).collect();
    Ok(PrunedTree { kept, removed: leaves, demand })
}
