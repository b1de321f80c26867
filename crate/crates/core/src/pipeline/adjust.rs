use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{ClusterSets, SpecialPair};
use crate::graph::{graph_union, Graph, Vertex, VertexSet};
use crate::matching::maximal_matching;
use crate::regularity::ClusterId;
use crate::rng::StreamRng;

/// Fresh attempts at routing all templates before the stage fails.
const REALIZE_ATTEMPTS: usize = 4;

/// A fixed cluster sequence for a special path with `k` edges: an
/// `X` cluster, `k − 1` free-vertex clusters `W`, and the partner `X` cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Template {
    pub cluster_sequence: Vec<ClusterId>,
    pub good: bool,
}

impl Template {
    pub fn new(cluster_sequence: Vec<ClusterId>) -> Self {
        assert!(cluster_sequence.len() >= 3, "a template needs at least one middle slot");
        let k = cluster_sequence.len() - 1;
        let first = cluster_sequence[0];
        let good = cluster_sequence[k] == first.partner()
            && cluster_sequence[1] == first.partner()
            && cluster_sequence[k - 1] == first;
        Template { cluster_sequence, good }
    }

    /// Path length in edges.
    pub fn k(&self) -> usize {
        self.cluster_sequence.len() - 1
    }

    pub fn middles(&self) -> &[ClusterId] {
        &self.cluster_sequence[1..self.k()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub z: usize,
    pub w: [usize; 2],
    pub m: f64,
    pub l_z: usize,
    pub l_w: usize,
}

impl LedgerRow {
    /// `m = min{|Z|, 2|W₁|/(k−1), 2|W₂|/(k−1)}`, `L^Z = ⌊m/2⌋`,
    /// `L^W = ((k−1)/2)·L^Z`, in exact integer arithmetic.
    pub fn new(z: usize, w: [usize; 2], k: usize) -> Self {
        assert!(k >= 3 && k % 2 == 1, "k must be odd and at least 3");
        let km1 = (k - 1) as f64;
        let m = (z as f64).min(2.0 * w[0] as f64 / km1).min(2.0 * w[1] as f64 / km1);
        let l_z = (z / 2).min(w[0] / (k - 1)).min(w[1] / (k - 1));
        LedgerRow { z, w, m, l_z, l_w: (k - 1) / 2 * l_z }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustmentLedger {
    pub k: usize,
    pub rows: Vec<LedgerRow>,
    /// Largest `max(r, 1/r)` over clusters, `r = ((k−1)/2)|X_i|/|W_i|`.
    pub rho: f64,
    pub gamma: f64,
    pub templates: Vec<(Template, usize)>,
    /// Free vertices taken from each cluster (indexed by `ClusterId::index`).
    pub consumption: Vec<usize>,
    pub sequences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdjustFailure {
    LedgerInfeasible { cluster: usize, detail: String },
    PathRealization { template: usize, found: usize, needed: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustOutcome {
    pub ledger: AdjustmentLedger,
    /// Realized pairs with the interior of their host path, from `x` to `y`.
    pub paths: Vec<(SpecialPair, Vec<Vertex>)>,
    pub remaining: Vec<SpecialPair>,
    pub clusters: ClusterSets,
    pub consumed: VertexSet,
}

fn measured_rho(clusters: &ClusterSets, k: usize) -> f64 {
    clusters
        .x
        .iter()
        .zip(&clusters.w)
        .map(|(x, w)| {
            let r = (k - 1) as f64 / 2.0 * x.len() as f64 / w.len() as f64;
            if r.is_finite() && r > 0.0 {
                r.max(1.0 / r)
            } else {
                f64::INFINITY
            }
        })
        .fold(1.0, f64::max)
}

impl AdjustmentLedger {
    /// Ledger rows from per-pair `|Z_i|` and per-cluster `|W|`, plus the
    /// good special sequences that bring every pair down to `(L^Z, L^W)`.
    pub fn plan(k: usize, z: &[usize], clusters: &ClusterSets) -> Result<Self, AdjustFailure> {
        let q = z.len();
        assert_eq!(clusters.w.len(), 2 * q);
        let w_len = |c: ClusterId| clusters.w[c.index()].len();
        let rows: Vec<LedgerRow> = (0..q)
            .map(|i| LedgerRow::new(z[i], [w_len(ClusterId::new(i, 0)), w_len(ClusterId::new(i, 1))], k))
            .collect();
        let rho = measured_rho(clusters, k);
        let gamma = 1.0 / (3.0 * rho * rho);

        let ids: Vec<ClusterId> = (0..2 * q).map(ClusterId::from_index).collect();
        let mut residual: Vec<usize> = ids.iter().map(|&c| w_len(c) - rows[c.pair].l_w).collect();
        let consumption = residual.clone();
        for &c in &ids {
            if consumption[c.index()] as f64 > (1.0 - gamma) * w_len(c) as f64 + 1e-9 {
                return Err(AdjustFailure::LedgerInfeasible {
                    cluster: c.index(),
                    detail: alloc::format!(
                        "consumes {} of {} free vertices, above (1 - gamma) with gamma = {gamma:.4}",
                        consumption[c.index()],
                        w_len(c)
                    ),
                });
            }
        }
        let mut seqs: Vec<Vec<ClusterId>> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let count = row.z - row.l_z;
            let (first, last) = (ClusterId::new(i, 0), ClusterId::new(i, 1));
            for c in [first, last] {
                if residual[c.index()] < count {
                    return Err(AdjustFailure::LedgerInfeasible {
                        cluster: c.index(),
                        detail: alloc::format!("{count} sequences need an end slot, {} left", residual[c.index()]),
                    });
                }
                residual[c.index()] -= count;
            }
            seqs.extend((0..count).map(|_| alloc::vec![first, last]));
        }
        // Position by position across all sequences, so that shortfalls of
        // partner capacity are shared evenly.
        for _ in 0..k - 3 {
            for seq in &mut seqs {
                let prev = *seq.last().unwrap();
                let next = if residual[prev.partner().index()] > 0 {
                    prev.partner()
                } else {
                    *ids.iter().max_by_key(|c| (residual[c.index()], core::cmp::Reverse(c.index()))).unwrap()
                };
                assert!(residual[next.index()] > 0, "residual capacity matches the middle slots");
                residual[next.index()] -= 1;
                seq.push(next);
            }
        }
        let sequences = seqs.len();
        let mut counts: BTreeMap<Vec<ClusterId>, usize> = BTreeMap::new();
        for mut seq in seqs {
            let first = seq[0];
            seq.push(first);
            seq.push(first.partner());
            *counts.entry(seq).or_default() += 1;
        }
        debug_assert!(residual.iter().all(|&r| r == 0));
        let templates = counts.into_iter().map(|(s, c)| (Template::new(s), c)).collect();
        Ok(AdjustmentLedger { k, rows, rho, gamma, templates, consumption, sequences })
    }
}

/// Attempts per candidate at the random forward walk.
const WALK_TRIES: usize = 8;

/// A path `x → y` whose `j`-th interior vertex comes from `pools[seq[j]]`:
/// backward reachability sets in `h`, then a uniformly random forward walk
/// that never repeats a vertex.
fn routed_path(
    h: &Graph,
    x: Vertex,
    y: Vertex,
    seq: &[ClusterId],
    pools: &[VertexSet],
    rng: &mut StreamRng,
) -> Option<Vec<Vertex>> {
    let n = h.n();
    let len = seq.len();
    let mut reach: Vec<VertexSet> = alloc::vec![VertexSet::new(n); len];
    reach[len - 1] = VertexSet::from_iter(n, h.neighbors_in(y, &pools[seq[len - 1].index()]));
    for j in (0..len - 1).rev() {
        let next = &reach[j + 1];
        if next.is_empty() {
            return None;
        }
        reach[j] = VertexSet::from_iter(n, pools[seq[j].index()].iter().filter(|&v| h.degree_into(v, next) > 0));
    }
    'walk: for _ in 0..WALK_TRIES {
        let mut path: Vec<Vertex> = Vec::with_capacity(len);
        let mut cur = x;
        for layer in &reach {
            let options: Vec<Vertex> = h.neighbors_in(cur, layer).filter(|v| !path.contains(v)).collect();
            let Some(&v) = options.choose(rng) else { continue 'walk };
            path.push(v);
            cur = v;
        }
        return Some(path);
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateFailure {
    pub found: usize,
    pub needed: usize,
}

/// Finds up to `count` vertex-disjoint host paths following `template`, one
/// per candidate pair, with middles drawn from the per-cluster `pools` and
/// edges from `g ∪ r4`. Candidates with at least `δξ|pool|` neighbours in
/// `g` into the pools of the first and last middle slot are tried first.
///
/// Returns the candidate index with the path interior. Succeeds when at least
/// `⌈(1 − ξ)·count⌉` paths were found.
#[allow(clippy::too_many_arguments)]
pub fn find_template_paths(
    template: &Template,
    count: usize,
    candidates: &[SpecialPair],
    pools: &[VertexSet],
    g: &Graph,
    r4: &Graph,
    delta: f64,
    xi: f64,
    rng: &mut StreamRng,
) -> Result<Vec<(usize, Vec<Vertex>)>, TemplateFailure> {
    let h = graph_union(g, r4).expect("phases share the vertex set");
    let mut pools: Vec<VertexSet> = pools.to_vec();
    let seq = template.middles();
    let (first, last) = (seq[0].index(), seq[seq.len() - 1].index());
    let threshold = |s: &VertexSet| libm::ceil(delta * xi * s.len() as f64) as usize;
    let (t_first, t_last) = (threshold(&pools[first]), threshold(&pools[last]));
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(rng);
    order.sort_by_key(|&j| {
        let p = candidates[j];
        !(g.degree_into(p.x, &pools[first]) >= t_first && g.degree_into(p.y, &pools[last]) >= t_last)
    });
    let mut found: Vec<(usize, Vec<Vertex>)> = Vec::new();
    for j in order {
        if found.len() >= count {
            break;
        }
        let p = candidates[j];
        if let Some(path) = routed_path(&h, p.x, p.y, seq, &pools, rng) {
            for (&c, &v) in seq.iter().zip(&path) {
                pools[c.index()].remove(v);
            }
            found.push((j, path));
        }
    }
    let needed = libm::ceil((1.0 - xi) * count as f64 - 1e-9) as usize;
    if found.len() >= needed {
        Ok(found)
    } else {
        Err(TemplateFailure { found: found.len(), needed: count })
    }
}

/// Sizes of randomized maximal matchings in `h` between consecutive slots.
pub fn slot_matching_sizes(h: &Graph, slots: &[VertexSet], rng: &mut StreamRng) -> Vec<usize> {
    slots
        .windows(2)
        .map(|pair| {
            let (left, right) = (pair[0].to_vec(), pair[1].to_vec());
            let adj: Vec<Vec<usize>> = left
                .iter()
                .map(|&u| right.iter().enumerate().filter(|&(_, &v)| h.has_edge(u, v)).map(|(r, _)| r).collect())
                .collect();
            let mut order: Vec<usize> = (0..left.len()).collect();
            order.shuffle(rng);
            maximal_matching(&order, right.len(), &adj).len()
        })
        .collect()
}

/// Removes special paths along good templates until every pair `i` keeps
/// exactly `L^Z_i` special pairs and each of its clusters `L^W_i` free
/// vertices, so that `2|W_i| = (k−1)|X_i|` holds cluster by cluster.
#[allow(clippy::too_many_arguments)]
pub fn stage_adjust_clusters(
    pairs: &[SpecialPair],
    clusters: &ClusterSets,
    g: &Graph,
    r4: &Graph,
    k: usize,
    delta: f64,
    xi: f64,
    rng: &mut StreamRng,
) -> Result<AdjustOutcome, AdjustFailure> {
    let n = g.n();
    let q = clusters.w.len() / 2;
    let mut z = alloc::vec![0; q];
    for p in pairs {
        z[p.home] += 1;
    }
    let ledger = AdjustmentLedger::plan(k, &z, clusters)?;

    let mut last_failure = None;
    let mut realized = None;
    for _ in 0..REALIZE_ATTEMPTS {
        match realize(&ledger, pairs, clusters, g, r4, delta, xi, rng) {
            Ok(r) => {
                realized = Some(r);
                break;
            }
            Err(e) => last_failure = Some(e),
        }
    }
    let Some((paths, remaining, pools, consumed)) = realized else {
        return Err(last_failure.expect("at least one attempt"));
    };

    let mut x: Vec<VertexSet> = alloc::vec![VertexSet::new(n); 2 * q];
    for p in remaining.iter().flatten() {
        x[ClusterId::new(p.home, 0).index()].insert(p.x);
        x[ClusterId::new(p.home, 1).index()].insert(p.y);
    }
    let clusters = ClusterSets { x, w: pools };
    for (xi_set, wi) in clusters.x.iter().zip(&clusters.w) {
        assert_eq!(2 * wi.len(), (k - 1) * xi_set.len(), "balance identity after adjustment");
    }
    Ok(AdjustOutcome { ledger, paths, remaining: remaining.into_iter().flatten().collect(), clusters, consumed })
}

type Realized = (Vec<(SpecialPair, Vec<Vertex>)>, Vec<Vec<SpecialPair>>, Vec<VertexSet>, VertexSet);

/// Routes every template's quota of special pairs, or reports the first
/// template that fell short.
#[allow(clippy::too_many_arguments)]
fn realize(
    ledger: &AdjustmentLedger,
    pairs: &[SpecialPair],
    clusters: &ClusterSets,
    g: &Graph,
    r4: &Graph,
    delta: f64,
    xi: f64,
    rng: &mut StreamRng,
) -> Result<Realized, AdjustFailure> {
    let n = g.n();
    let q = clusters.w.len() / 2;
    let mut pools = clusters.w.clone();
    let mut remaining: Vec<Vec<SpecialPair>> = alloc::vec![Vec::new(); q];
    for p in pairs {
        remaining[p.home].push(*p);
    }
    let mut consumed = VertexSet::new(n);
    let mut paths = Vec::with_capacity(ledger.sequences);
    for (t, (template, count)) in ledger.templates.iter().enumerate() {
        let home = template.cluster_sequence[0].pair;
        let candidates = &remaining[home];
        let found = find_template_paths(template, *count, candidates, &pools, g, r4, delta, xi, rng);
        let found = match found {
            Ok(f) if f.len() == *count => f,
            Ok(f) => return Err(AdjustFailure::PathRealization { template: t, found: f.len(), needed: *count }),
            Err(e) => return Err(AdjustFailure::PathRealization { template: t, found: e.found, needed: *count }),
        };
        let mut taken = alloc::vec![false; candidates.len()];
        for (j, path) in found {
            for (&c, &v) in template.middles().iter().zip(&path) {
                assert!(pools[c.index()].remove(v), "template trace must follow its cluster sequence");
                consumed.insert(v);
            }
            taken[j] = true;
            paths.push((candidates[j], path));
        }
        let mut it = taken.iter();
        remaining[home].retain(|_| !*it.next().unwrap());
    }
    Ok((paths, remaining, pools, consumed))
}
