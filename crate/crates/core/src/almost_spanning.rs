//! Greedy randomized forest embedding into sparse hosts, and an independent
//! embedding validator.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::graph::{Graph, Vertex, VertexSet};
use crate::rng::StreamRng;
use crate::tree::{Forest, Tree};

/// A partial injective map from tree vertices to host vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    map: Vec<Option<Vertex>>,
    used: VertexSet,
}

impl Embedding {
    pub fn new(tree_n: usize, host_n: usize) -> Self {
        Embedding { map: alloc::vec![None; tree_n], used: VertexSet::new(host_n) }
    }

    /// Maps `t` to `h`. Panics if `t` is already mapped or `h` already used.
    pub fn place(&mut self, t: Vertex, h: Vertex) {
        assert!(self.map[t].is_none(), "tree vertex {t} already placed");
        assert!(self.used.insert(h), "host vertex {h} already used");
        self.map[t] = Some(h);
    }

    pub fn unplace(&mut self, t: Vertex) -> Option<Vertex> {
        let h = self.map[t].take()?;
        self.used.remove(h);
        Some(h)
    }

    pub fn image(&self, t: Vertex) -> Option<Vertex> {
        self.map[t]
    }

    pub fn map(&self) -> &[Option<Vertex>] {
        &self.map
    }

    pub fn used(&self) -> &VertexSet {
        &self.used
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    /// Copies every placement of `other` into `self`.
    pub fn absorb(&mut self, other: &Embedding) {
        for (t, h) in other.map.iter().enumerate() {
            if let Some(h) = *h {
                self.place(t, h);
            }
        }
    }
}

/// Anything with vertices and edges over a label space that can be checked
/// against an [`Embedding`].
pub trait EmbeddingTarget {
    fn label_space(&self) -> usize;
    fn target_vertices(&self) -> Vec<Vertex>;
    fn target_edges(&self) -> Vec<(Vertex, Vertex)>;
}

impl EmbeddingTarget for Tree {
    fn label_space(&self) -> usize {
        self.n()
    }
    fn target_vertices(&self) -> Vec<Vertex> {
        (0..self.n()).collect()
    }
    fn target_edges(&self) -> Vec<(Vertex, Vertex)> {
        self.edges()
    }
}

impl EmbeddingTarget for Forest {
    fn label_space(&self) -> usize {
        Forest::label_space(self)
    }
    fn target_vertices(&self) -> Vec<Vertex> {
        self.vertices().to_vec()
    }
    fn target_edges(&self) -> Vec<(Vertex, Vertex)> {
        self.edges()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingViolation {
    LabelSpace { expected: usize, found: usize },
    Unmapped { tree_vertex: Vertex },
    OutOfRange { tree_vertex: Vertex, host_vertex: Vertex },
    Collision { first: Vertex, second: Vertex, host_vertex: Vertex },
    MissingEdge { tree_edge: (Vertex, Vertex), host_edge: (Vertex, Vertex) },
}

/// Checks that `e` is injective, total on `t`, and maps every edge of `t`
/// onto an edge of `host`. Only reads the raw map.
pub fn verify_embedding<T: EmbeddingTarget>(t: &T, host: &Graph, e: &Embedding) -> Result<(), EmbeddingViolation> {
    let map = e.map();
    if map.len() != t.label_space() {
        return Err(EmbeddingViolation::LabelSpace { expected: t.label_space(), found: map.len() });
    }
    let mut owner: Vec<Option<Vertex>> = alloc::vec![None; host.n()];
    for (tv, h) in map.iter().enumerate() {
        let Some(h) = *h else { continue };
        if h >= host.n() {
            return Err(EmbeddingViolation::OutOfRange { tree_vertex: tv, host_vertex: h });
        }
        if let Some(first) = owner[h] {
            return Err(EmbeddingViolation::Collision { first, second: tv, host_vertex: h });
        }
        owner[h] = Some(tv);
    }
    for v in t.target_vertices() {
        if map[v].is_none() {
            return Err(EmbeddingViolation::Unmapped { tree_vertex: v });
        }
    }
    for (a, b) in t.target_edges() {
        let (ha, hb) = (map[a].unwrap(), map[b].unwrap());
        if !host.has_edge(ha, hb) {
            return Err(EmbeddingViolation::MissingEdge { tree_edge: (a, b), host_edge: (ha, hb) });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreedyFailure {
    /// Size of the subtree that was being re-placed when the budget ran out.
    pub stuck_subtree: usize,
    pub placed: usize,
    pub forest_size: usize,
}

/// Default placement budget for a forest embedded into an `n`-vertex host.
pub fn default_retry_budget(n: usize) -> usize {
    10 * n
}

/// Embeds `f` into `host` using only vertices of `allowed`.
///
/// Vertices are placed in BFS order: a component root goes to a uniformly
/// random free allowed vertex, every other vertex to a uniformly random free
/// allowed host neighbour of its parent's image. At a dead end the parent's
/// whole placed subtree is removed and the parent is moved to an untried
/// image; a parent with no untried image escalates the same repair to its
/// own parent. `retry_budget` bounds the total number of placements.
pub fn embed_forest_greedy(
    f: &Forest,
    host: &Graph,
    allowed: &VertexSet,
    rng: &mut StreamRng,
    retry_budget: usize,
) -> Result<Embedding, GreedyFailure> {
    let labels = f.label_space();
    let (order, parent) = f.bfs_order();
    let mut children: Vec<Vec<Vertex>> = alloc::vec![Vec::new(); labels];
    for &v in &order {
        if let Some(p) = parent[v] {
            children[p].push(v);
        }
    }
    let fail = |stuck: usize, placed: usize| GreedyFailure { stuck_subtree: stuck, placed, forest_size: f.len() };
    if f.len() > allowed.len() {
        return Err(fail(f.len(), 0));
    }

    let mut e = Embedding::new(labels, host.n());
    let mut tried: Vec<Vec<Vertex>> = alloc::vec![Vec::new(); labels];
    // Vertices whose parent is placed (or roots), waiting in BFS order.
    let mut pending: alloc::collections::VecDeque<Vertex> =
        order.iter().copied().filter(|&v| parent[v].is_none()).collect();
    let mut budget = retry_budget;
    let mut candidates = Vec::new();
    let mut stamp = alloc::vec![0u32; labels];
    let mut epoch = 0u32;
    let mut last_stuck = 0;

    while let Some(v) = pending.pop_front() {
        candidates.clear();
        let free = |h: Vertex| allowed.contains(h) && !e.used().contains(h);
        match parent[v] {
            None => candidates.extend(allowed.iter().filter(|&h| free(h) && !tried[v].contains(&h))),
            Some(p) => {
                let hp = e.image(p).expect("parent placed before child");
                candidates.extend(host.neighbors(hp).iter().copied().filter(|&h| free(h) && !tried[v].contains(&h)));
            }
        }
        if let Some(&h) = candidates.choose(rng) {
            if budget == 0 {
                return Err(fail(last_stuck.max(1), e.len()));
            }
            budget -= 1;
            e.place(v, h);
            pending.extend(children[v].iter().copied());
            continue;
        }
        // Dead end at v: move its parent, discarding the parent's subtree.
        // A parent that itself runs out of images dead-ends on its next turn,
        // which escalates the repair one level up.
        let Some(p) = parent[v] else {
            return Err(fail(last_stuck.max(1), e.len()));
        };
        tried[p].push(e.image(p).expect("parent placed"));
        epoch += 1;
        let mut stack = alloc::vec![p];
        let mut removed = 0;
        while let Some(u) = stack.pop() {
            stamp[u] = epoch;
            removed += 1;
            if u != p {
                tried[u].clear();
            }
            e.unplace(u);
            stack.extend(children[u].iter().copied());
        }
        last_stuck = removed;
        pending.retain(|&u| stamp[u] != epoch);
        pending.push_front(p);
    }
    Ok(e)
}
