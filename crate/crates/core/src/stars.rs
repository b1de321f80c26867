//! Hall conditions with multiplicities, disjoint star packings, and the
//! many-leaves completion of a spanning tree embedding.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::almost_spanning::{default_retry_budget, embed_forest_greedy, Embedding, GreedyFailure};
use crate::error::{Error, Result};
use crate::graph::{graph_union, Graph, PerturbationPlan, Vertex, VertexSet};
use crate::matching::{hall_violator, maximum_matching};
use crate::rng::StreamRng;
use crate::tree::{count_leaves, remove_leaves, Tree};

/// Leaf demands `ℓ(a)` of centres `a` on a bipartite graph `(A, B)` with
/// `Σ ℓ(a) = |B|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarDemand {
    a_side: VertexSet,
    b_side: VertexSet,
    demand: Vec<(Vertex, usize)>,
}

impl StarDemand {
    /// `A` is the set of keys of `demand`.
    pub fn new(b_side: VertexSet, mut demand: Vec<(Vertex, usize)>) -> Result<Self> {
        demand.sort_unstable();
        let n = b_side.universe();
        let mut a_side = VertexSet::new(n);
        for &(a, l) in &demand {
            if a >= n {
                return Err(Error::VertexOutOfRange { vertex: a, n });
            }
            if l == 0 || !a_side.insert(a) || b_side.contains(a) {
                return Err(Error::InvalidParameter(format!("bad demand entry ({a}, {l})")));
            }
        }
        let total: usize = demand.iter().map(|d| d.1).sum();
        if total != b_side.len() {
            return Err(Error::InvalidParameter(format!("demands sum to {total}, |B| = {}", b_side.len())));
        }
        Ok(StarDemand { a_side, b_side, demand })
    }

    pub fn a_side(&self) -> &VertexSet {
        &self.a_side
    }

    pub fn b_side(&self) -> &VertexSet {
        &self.b_side
    }

    /// `(a, ℓ(a))` sorted by `a`.
    pub fn demand(&self) -> &[(Vertex, usize)] {
        &self.demand
    }

    pub fn max_demand(&self) -> usize {
        self.demand.iter().map(|d| d.1).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HallMode {
    /// Scan every subset of `A`; needs `|A| ≤ 20`.
    Exhaustive,
    /// Maximum matching in the graph with `ℓ(a)` copies of each `a`.
    Matching,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HallVerdict {
    pub holds: bool,
    /// A set `S ⊆ A` with `|N(S)| < Σ_{s∈S} ℓ(s)` when the condition fails.
    pub witness: Option<Vec<Vertex>>,
}

/// Neighbourhoods of the `A` vertices inside `B`, as indices into the
/// sorted list of `B`.
fn cross_adjacency(g: &Graph, d: &StarDemand) -> (Vec<Vertex>, Vec<Vec<usize>>) {
    let b: Vec<Vertex> = d.b_side.to_vec();
    let mut index = alloc::vec![usize::MAX; g.n()];
    for (i, &v) in b.iter().enumerate() {
        index[v] = i;
    }
    let adj = d
        .demand
        .iter()
        .map(|&(a, _)| g.neighbors(a).iter().filter(|&&w| index[w] != usize::MAX).map(|&w| index[w]).collect())
        .collect();
    (b, adj)
}

pub fn check_hall_condition(g: &Graph, d: &StarDemand, mode: HallMode) -> Result<HallVerdict> {
    let (b, adj) = cross_adjacency(g, d);
    match mode {
        HallMode::Exhaustive => {
            let k = d.demand.len();
            if k > 20 {
                return Err(Error::InvalidParameter(format!("exhaustive Hall check on |A| = {k} > 20")));
            }
            let words = b.len().div_ceil(64).max(1);
            let rows: Vec<Vec<u64>> = adj
                .iter()
                .map(|row| {
                    let mut bits = alloc::vec![0u64; words];
                    for &i in row {
                        bits[i / 64] |= 1 << (i % 64);
                    }
                    bits
                })
                .collect();
            let mut union = alloc::vec![0u64; words];
            for mask in 1u32..(1u32 << k) {
                union.iter_mut().for_each(|w| *w = 0);
                let mut need = 0;
                for (j, row) in rows.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        need += d.demand[j].1;
                        union.iter_mut().zip(row).for_each(|(u, r)| *u |= r);
                    }
                }
                let have: u32 = union.iter().map(|w| w.count_ones()).sum();
                if (have as usize) < need {
                    let witness = (0..k).filter(|&j| mask >> j & 1 == 1).map(|j| d.demand[j].0).collect();
                    return Ok(HallVerdict { holds: false, witness: Some(witness) });
                }
            }
            Ok(HallVerdict { holds: true, witness: None })
        }
        HallMode::Matching => {
            let (_, witness) = replicated_matching(&b, &adj, d);
            Ok(HallVerdict { holds: witness.is_none(), witness })
        }
    }
}

/// `(owner index, matched B index)` per copy of an `A` vertex.
type CopyMatches = Vec<(usize, Option<usize>)>;

/// Matching in the replicated graph. Returns, per copy, the matched `B`
/// index, or a Hall-violating witness.
fn replicated_matching(b: &[Vertex], adj: &[Vec<usize>], d: &StarDemand) -> (CopyMatches, Option<Vec<Vertex>>) {
    let mut owner = Vec::new();
    let mut rep_adj = Vec::new();
    for (j, &(_, l)) in d.demand.iter().enumerate() {
        for _ in 0..l {
            owner.push(j);
            rep_adj.push(adj[j].clone());
        }
    }
    let m = maximum_matching(rep_adj.len(), b.len(), &rep_adj);
    let copies = owner.iter().copied().zip(m.left_to_right.iter().copied()).collect();
    if m.size() == rep_adj.len() {
        return (copies, None);
    }
    let mut witness: Vec<Vertex> = hall_violator(&m, &rep_adj).into_iter().map(|c| d.demand[owner[c]].0).collect();
    witness.dedup();
    (copies, Some(witness))
}

/// Disjoint stars, one per centre, with the demanded number of leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StarPacking {
    pub stars: Vec<(Vertex, Vec<Vertex>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HallViolation {
    pub witness: Vec<Vertex>,
}

pub fn find_star_packing(g: &Graph, d: &StarDemand) -> core::result::Result<StarPacking, HallViolation> {
    let (b, adj) = cross_adjacency(g, d);
    let (copies, witness) = replicated_matching(&b, &adj, d);
    if let Some(witness) = witness {
        return Err(HallViolation { witness });
    }
    let mut stars: Vec<(Vertex, Vec<Vertex>)> = d.demand.iter().map(|&(a, _)| (a, Vec::new())).collect();
    for (j, r) in copies {
        stars[j].1.push(b[r.expect("perfect matching")]);
    }
    for s in &mut stars {
        s.1.sort_unstable();
    }
    Ok(StarPacking { stars })
}

/// Independent check of a packing against the graph and the demand.
pub fn verify_star_packing(g: &Graph, d: &StarDemand, p: &StarPacking) -> core::result::Result<(), String> {
    if p.stars.len() != d.demand.len() {
        return Err(format!("{} stars for {} centres", p.stars.len(), d.demand.len()));
    }
    let mut seen = alloc::vec![false; g.n()];
    for (&(a, l), (centre, leaves)) in d.demand.iter().zip(&p.stars) {
        if a != *centre || leaves.len() != l {
            return Err(format!("star at {centre} has {} leaves, demand ({a}, {l})", leaves.len()));
        }
        for &b in leaves {
            if !d.b_side.contains(b) || !g.has_edge(a, b) || core::mem::replace(&mut seen[b], true) {
                return Err(format!("leaf {b} of centre {a} is outside B, not adjacent, or reused"));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case1Outcome {
    #[serde(skip)]
    pub embedding: Embedding,
    pub removed_leaves: usize,
    pub centres: usize,
    /// Smallest degree of a centre into the unused vertices in `G ∪ R₂`.
    pub min_cross_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Case1Failure {
    TooFewLeaves { leaves: usize, required: usize },
    AlmostSpanning(GreedyFailure),
    StarPacking { witness_size: usize, witness_demand: usize, witness_neighbourhood: usize },
}

/// Number of leaves removed for the many-leaves case on `n` vertices.
pub fn case1_leaf_count(n: usize, lambda: f64) -> usize {
    libm::ceil(lambda * n as f64 - 1e-9).max(0.0) as usize
}

/// Removes `⌈λn⌉` random leaves, embeds the rest of the tree into `R₁`, and
/// attaches the removed leaves by a star packing in `G ∪ R₂` between the
/// centres' images and the unused vertices.
pub fn complete_case1(
    tree: &Tree,
    host: &Graph,
    plan: &PerturbationPlan,
    lambda: f64,
    rng: &mut StreamRng,
) -> Result<core::result::Result<Case1Outcome, Case1Failure>> {
    let n = host.n();
    if tree.n() != n {
        return Err(Error::VertexCountMismatch { left: tree.n(), right: n });
    }
    let leaves = count_leaves(tree)?;
    let required = case1_leaf_count(n, lambda);
    if (leaves as f64) < lambda * n as f64 - 1e-9 || required > leaves {
        return Ok(Err(Case1Failure::TooFewLeaves { leaves, required }));
    }
    let pruned = remove_leaves(tree, required, rng)?;
    let r1 = plan.sample_phase(n, 0);
    let forest = pruned.forest(tree);
    let mut e = match embed_forest_greedy(&forest, &r1, &VertexSet::full(n), rng, default_retry_budget(n)) {
        Ok(e) => e,
        Err(f) => return Ok(Err(Case1Failure::AlmostSpanning(f))),
    };
    let r2 = plan.sample_phase(n, 1);
    let bip = graph_union(host, &r2)?;
    let unused = e.used().complement();
    let demand: Vec<(Vertex, usize)> =
        pruned.demand.iter().map(|&(a, l)| (e.image(a).expect("pruned tree fully embedded"), l)).collect();
    let d = StarDemand::new(unused.clone(), demand)?;
    let min_cross_degree = d.demand().iter().map(|&(a, _)| bip.degree_into(a, &unused)).min().unwrap_or(0);
    let packing = match find_star_packing(&bip, &d) {
        Ok(p) => p,
        Err(v) => {
            let witness_demand = d.demand().iter().filter(|x| v.witness.contains(&x.0)).map(|x| x.1).sum();
            let mut nbhd = VertexSet::new(n);
            for &a in &v.witness {
                for &b in bip.neighbors(a) {
                    if unused.contains(b) {
                        nbhd.insert(b);
                    }
                }
            }
            return Ok(Err(Case1Failure::StarPacking {
                witness_size: v.witness.len(),
                witness_demand,
                witness_neighbourhood: nbhd.len(),
            }));
        }
    };
    debug_assert_eq!(verify_star_packing(&bip, &d, &packing), Ok(()));
    // Hand the removed leaves of each tree vertex to its star.
    let mut owed: Vec<Vec<Vertex>> = alloc::vec![Vec::new(); n];
    for &leaf in &pruned.removed {
        owed[tree.neighbors(leaf)[0]].push(leaf);
    }
    let mut preimage = alloc::vec![usize::MAX; n];
    for t in pruned.kept.iter() {
        preimage[e.image(t).unwrap()] = t;
    }
    for (centre, star_leaves) in &packing.stars {
        for (&leaf, &b) in owed[preimage[*centre]].iter().zip(star_leaves) {
            e.place(leaf, b);
        }
    }
    Ok(Ok(Case1Outcome { embedding: e, removed_leaves: required, centres: d.demand().len(), min_cross_degree }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::almost_spanning::verify_embedding;
    use crate::graph::union_all;
    use crate::rng;
    use crate::tree::{generate_bounded_tree, TreeShape};

    fn demand(n: usize, b: &[Vertex], d: &[(Vertex, usize)]) -> StarDemand {
        StarDemand::new(VertexSet::from_iter(n, b.iter().copied()), d.to_vec()).unwrap()
    }

    #[test]
    fn complete_bipartite_always_packs() {
        let g = Graph::complete_bipartite(2, 3);
        let d = demand(5, &[2, 3, 4], &[(0, 1), (1, 2)]);
        for mode in [HallMode::Exhaustive, HallMode::Matching] {
            assert!(check_hall_condition(&g, &d, mode).unwrap().holds);
        }
        let p = find_star_packing(&g, &d).unwrap();
        assert_eq!(p.stars[0].1.len(), 1);
        assert_eq!(p.stars[1].1.len(), 2);
        assert_eq!(verify_star_packing(&g, &d, &p), Ok(()));
    }

    #[test]
    fn single_centre_with_one_neighbour() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let d = demand(3, &[1, 2], &[(0, 2)]);
        for mode in [HallMode::Exhaustive, HallMode::Matching] {
            let v = check_hall_condition(&g, &d, mode).unwrap();
            assert!(!v.holds);
            assert_eq!(v.witness, Some(alloc::vec![0]));
        }
        assert_eq!(find_star_packing(&g, &d), Err(HallViolation { witness: alloc::vec![0] }));
    }

    #[test]
    fn demand_validation() {
        let b = VertexSet::from_iter(4, [2, 3]);
        assert!(StarDemand::new(b.clone(), alloc::vec![(0, 1)]).is_err());
        assert!(StarDemand::new(b.clone(), alloc::vec![(0, 0), (1, 2)]).is_err());
        assert!(StarDemand::new(b.clone(), alloc::vec![(2, 2)]).is_err());
        assert!(StarDemand::new(b, alloc::vec![(0, 1), (1, 1)]).is_ok());
    }

    #[test]
    fn exhaustive_rejects_large_sides() {
        let n = 42;
        let d = StarDemand::new(VertexSet::from_iter(n, 21..42), (0..21).map(|a| (a, 1)).collect()).unwrap();
        assert!(check_hall_condition(&Graph::empty(n), &d, HallMode::Exhaustive).is_err());
        assert!(!check_hall_condition(&Graph::empty(n), &d, HallMode::Matching).unwrap().holds);
    }

    #[test]
    fn star_host_star_tree() {
        let n = 30;
        let host = Graph::complete(n);
        let t = Tree::from_parents((0..n).map(|v| v.checked_sub(1).map(|_| 0)).collect()).unwrap();
        // c = 4n makes every phase complete.
        let plan = PerturbationPlan::from_budget(n, 4.0 * n as f64, [1.0; 4], 3).unwrap();
        let out = complete_case1(&t, &host, &plan, 0.5, &mut rng::stream(1, &[])).unwrap().unwrap();
        let all = union_all(n, [&host, &plan.sample_phase(n, 0), &plan.sample_phase(n, 1)]).unwrap();
        assert_eq!(verify_embedding(&t, &all, &out.embedding), Ok(()));
        assert_eq!(out.removed_leaves, 15);
    }

    #[test]
    fn lambda_above_leaf_fraction_is_rejected() {
        let n = 20;
        let t = generate_bounded_tree(n, 2, TreeShape::Path, &mut rng::stream(0, &[])).unwrap();
        let plan = PerturbationPlan::from_budget(n, 4.0, [1.0; 4], 3).unwrap();
        let out = complete_case1(&t, &Graph::complete(n), &plan, 0.2, &mut rng::stream(1, &[])).unwrap();
        assert_eq!(out, Err(Case1Failure::TooFewLeaves { leaves: 2, required: 4 }));
    }
}
