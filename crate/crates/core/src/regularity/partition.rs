use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::certify::{certify_dense, certify_super_regular, CertifyMode, Verdict};
use super::cover::star_cover;
use super::{robust_eps, RegularityParams};
use crate::error::{Error, Result};
use crate::graph::{min_degree, Graph, Vertex, VertexSet};
use crate::rng::StreamRng;

/// Cluster `V_i^h`, with `side` 0 or 1 standing for `h = 1, 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClusterId {
    pub pair: usize,
    pub side: usize,
}

impl ClusterId {
    pub fn new(pair: usize, side: usize) -> Self {
        debug_assert!(side < 2);
        ClusterId { pair, side }
    }

    pub fn partner(self) -> Self {
        ClusterId { pair: self.pair, side: 1 - self.side }
    }

    /// Dense index `2·pair + side`.
    pub fn index(self) -> usize {
        2 * self.pair + self.side
    }

    pub fn from_index(i: usize) -> Self {
        ClusterId { pair: i / 2, side: i % 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Uniformly random equitable clusters.
    RandomEquitable,
    /// k-means on adjacency rows, for hosts with twin-like structure.
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionStats {
    pub strategy: Strategy,
    pub initial_clusters: usize,
    pub cluster_graph_edges: usize,
    pub exceptional: usize,
    pub trimmed: usize,
    pub redistributed: usize,
    /// Largest `added / original` over clusters, and `max{2f, 1+f}·ε` at it.
    pub max_growth: f64,
    pub growth_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterPartition {
    pub pairs: Vec<[VertexSet; 2]>,
    pub params: RegularityParams,
    /// Largest ratio between two cluster sizes.
    pub rho: f64,
    pub q: usize,
    pub pair_densities: Vec<f64>,
    pub stats: Option<PartitionStats>,
    #[serde(skip)]
    membership: Vec<ClusterId>,
}

impl ClusterPartition {
    /// Wraps explicit pairs; they must be non-empty, disjoint and cover `0..n`.
    pub fn from_pairs(g: &Graph, pairs: Vec<[VertexSet; 2]>, params: RegularityParams) -> Result<Self> {
        let n = g.n();
        let mut membership = alloc::vec![ClusterId::new(usize::MAX, 0); n];
        let mut covered = 0;
        for (i, pair) in pairs.iter().enumerate() {
            for (h, c) in pair.iter().enumerate() {
                if c.universe() != n || c.is_empty() {
                    return Err(Error::InvalidVertexSets);
                }
                for v in c.iter() {
                    if membership[v].pair != usize::MAX {
                        return Err(Error::InvalidVertexSets);
                    }
                    membership[v] = ClusterId::new(i, h);
                    covered += 1;
                }
            }
        }
        if covered != n || pairs.is_empty() {
            return Err(Error::InvalidVertexSets);
        }
        let sizes: Vec<usize> = pairs.iter().flat_map(|p| p.iter().map(VertexSet::len)).collect();
        let rho = *sizes.iter().max().unwrap() as f64 / *sizes.iter().min().unwrap() as f64;
        let pair_densities =
            pairs.iter().map(|[a, b]| g.edges_between(a, b) as f64 / (a.len() * b.len()) as f64).collect();
        Ok(ClusterPartition { q: pairs.len(), pairs, params, rho, pair_densities, stats: None, membership })
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn cluster(&self, id: ClusterId) -> &VertexSet {
        &self.pairs[id.pair][id.side]
    }

    pub fn cluster_of(&self, v: Vertex) -> ClusterId {
        self.membership[v]
    }

    /// All `2q` cluster ids in index order.
    pub fn ids(&self) -> impl Iterator<Item = ClusterId> {
        (0..2 * self.q).map(ClusterId::from_index)
    }

    /// Certifies every pair afresh at the stored parameters.
    pub fn recertify(&self, g: &Graph, mode: CertifyMode, rng: &mut StreamRng) -> Result<Vec<Verdict>> {
        self.pairs
            .iter()
            .map(|[a, b]| certify_super_regular(g, a, b, self.params.epsilon, self.params.delta, mode, rng))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionFailure {
    pub step: String,
    pub pair: Option<usize>,
    pub detail: String,
}

fn failure(step: &str, pair: Option<usize>, detail: String) -> PartitionFailure {
    PartitionFailure { step: step.to_string(), pair, detail }
}

/// Partitions `g` into `q` pairs of partner clusters, each certified
/// `(ε, δ)`-super-regular by sampling.
///
/// Steps: clusters (random equitable, then profile clustering if that fails);
/// cluster graph on pairs with density at least `α/4` that pass a sampled
/// `(ε, α/8)` density check; star cover of the cluster graph; leaf clusters
/// of each star merged; each pair trimmed to vertices with at least
/// `δ·|partner|` cross neighbours (at most `ε|V|` deletions per side); trimmed
/// and uncovered vertices moved to the partner of a uniformly random cluster
/// where they have a `δ` fraction of neighbours; final certification.
pub fn build_partition(
    g: &Graph,
    alpha: f64,
    target_cluster_size: usize,
    params: RegularityParams,
    rng: &mut StreamRng,
) -> Result<core::result::Result<ClusterPartition, PartitionFailure>> {
    let n = g.n();
    let delta = min_degree(g)?;
    if (delta as f64) < alpha * n as f64 - 1e-9 {
        return Err(Error::MinDegreeTooSmall { min_degree: delta, alpha, n });
    }
    if n < 4 || target_cluster_size == 0 {
        return Err(Error::InvalidParameter(format!("n = {n}, target cluster size {target_cluster_size}")));
    }
    let mut last = None;
    for strategy in [Strategy::RandomEquitable, Strategy::Profile] {
        match attempt(g, alpha, target_cluster_size, params, strategy, rng) {
            Ok(p) => return Ok(Ok(p)),
            Err(f) => last = Some(f),
        }
    }
    Ok(Err(last.unwrap()))
}

fn attempt(
    g: &Graph,
    alpha: f64,
    target: usize,
    params: RegularityParams,
    strategy: Strategy,
    rng: &mut StreamRng,
) -> core::result::Result<ClusterPartition, PartitionFailure> {
    let n = g.n();
    let k0 = ((n as f64 / target as f64 + 0.5) as usize).clamp(2, n / 2);
    let clusters = match strategy {
        Strategy::RandomEquitable => {
            let mut order: Vec<Vertex> = (0..n).collect();
            order.shuffle(rng);
            let mut clusters = alloc::vec![Vec::new(); k0];
            for (j, v) in order.into_iter().enumerate() {
                clusters[j % k0].push(v);
            }
            clusters
        }
        Strategy::Profile => profile_clusters(g, k0, target, rng),
    };
    let sets: Vec<VertexSet> = clusters.iter().map(|c| VertexSet::from_iter(n, c.iter().copied())).collect();

    // Cluster graph.
    let alpha_prime = alpha / 4.0;
    let mode = CertifyMode::Sampled { budget: params.witness_budget };
    let k = sets.len();
    let mut cg_edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let d = g.edges_between(&sets[i], &sets[j]) as f64 / (sets[i].len() * sets[j].len()) as f64;
            if d >= alpha_prime
                && certify_dense(g, &sets[i], &sets[j], params.epsilon, alpha_prime / 2.0, mode, rng)
                    .expect("disjoint non-empty clusters")
                    .passed()
            {
                cg_edges.push((i, j));
            }
        }
    }
    let mut active: Vec<usize> = (0..k).filter(|&i| cg_edges.iter().any(|&(a, b)| a == i || b == i)).collect();
    if active.len() < 2 {
        return Err(failure("cluster-graph", None, format!("{strategy:?}: no dense cluster pairs among {k} clusters")));
    }
    active.sort_unstable();
    let mut local = alloc::vec![usize::MAX; k];
    for (j, &i) in active.iter().enumerate() {
        local[i] = j;
    }
    let cg = Graph::from_edges(active.len(), cg_edges.iter().map(|&(a, b)| (local[a], local[b])))
        .expect("valid cluster graph");
    let cg_min = min_degree(&cg).expect("non-empty");
    let alpha_c = (cg_min as f64 / active.len() as f64).min(0.5);
    let stars = star_cover(&cg, alpha_c).map_err(|e| failure("star-cover", None, format!("{e}")))?;

    let mut pairs: Vec<[VertexSet; 2]> = stars
        .iter()
        .map(|s| {
            let centre = sets[active[s.center]].clone();
            let mut leaves = VertexSet::new(n);
            for &l in &s.leaves {
                leaves = leaves.union(&sets[active[l]]);
            }
            [centre, leaves]
        })
        .collect();
    let original: Vec<usize> = pairs.iter().flat_map(|p| p.iter().map(VertexSet::len)).collect();

    let mut bad: Vec<Vertex> =
        (0..k).filter(|&i| local[i] == usize::MAX).flat_map(|i| clusters[i].iter().copied()).collect();
    let exceptional = bad.len();

    // Trim to super-regular cores.
    let mut trimmed = 0;
    for (i, pair) in pairs.iter_mut().enumerate() {
        let caps = [pair[0].len(), pair[1].len()].map(|s| (params.epsilon * s as f64) as usize);
        let mut removed = [0usize; 2];
        loop {
            let mut changed = false;
            for h in 0..2 {
                let partner_len = pair[1 - h].len() as f64;
                let low: Vec<Vertex> = pair[h]
                    .iter()
                    .filter(|&v| (g.degree_into(v, &pair[1 - h]) as f64) < params.delta * partner_len)
                    .collect();
                for v in low {
                    pair[h].remove(v);
                    bad.push(v);
                    removed[h] += 1;
                    changed = true;
                }
                if removed[h] > caps[h] || pair[h].is_empty() {
                    return Err(failure(
                        "trim",
                        Some(i),
                        format!("{strategy:?}: side {h} lost {} of {} vertices", removed[h], original[2 * i + h]),
                    ));
                }
            }
            if !changed {
                break;
            }
        }
        trimmed += removed[0] + removed[1];
    }

    let mut added = alloc::vec![0usize; pairs.len() * 2];
    let mut redistributed = 0;
    for round in 0..6 {
        bad.shuffle(rng);
        for &v in &bad {
            let eligible: Vec<usize> = (0..pairs.len() * 2)
                .filter(|&c| {
                    let set = &pairs[c / 2][c % 2];
                    (g.degree_into(v, set) as f64) >= params.delta * set.len() as f64
                })
                .collect();
            let Some(&c) = eligible.get(rng.gen_range(0..eligible.len().max(1))) else {
                return Err(failure("redistribute", None, format!("{strategy:?}: vertex {v} has no eligible cluster")));
            };
            let target = c ^ 1;
            pairs[target / 2][target % 2].insert(v);
            added[target] += 1;
            redistributed += 1;
        }
        // Degree repair: vertices that lost their δ fraction get moved again.
        bad.clear();
        for pair in pairs.iter_mut() {
            for h in 0..2 {
                let partner_len = pair[1 - h].len() as f64;
                let low: Vec<Vertex> = pair[h]
                    .iter()
                    .filter(|&v| (g.degree_into(v, &pair[1 - h]) as f64) < params.delta * partner_len)
                    .collect();
                for v in low {
                    pair[h].remove(v);
                    bad.push(v);
                }
            }
        }
        if bad.is_empty() {
            break;
        }
        if round == 5 {
            return Err(failure("degree", None, format!("{strategy:?}: {} vertices keep failing", bad.len())));
        }
    }

    for (i, [a, b]) in pairs.iter().enumerate() {
        let v = certify_super_regular(g, a, b, params.epsilon, params.delta, mode, rng).expect("valid pair");
        if !v.passed() {
            return Err(failure("certify", Some(i), format!("{strategy:?}: {v:?}")));
        }
    }

    let max_growth = added.iter().zip(&original).map(|(&a, &o)| a as f64 / o.max(1) as f64).fold(0.0, f64::max);
    let mut p =
        ClusterPartition::from_pairs(g, pairs, params).map_err(|e| failure("assemble", None, format!("{e}")))?;
    p.stats = Some(PartitionStats {
        strategy,
        initial_clusters: k,
        cluster_graph_edges: cg_edges.len(),
        exceptional,
        trimmed,
        redistributed,
        max_growth,
        growth_epsilon: robust_eps(params.epsilon, max_growth),
    });
    Ok(p)
}

/// k-means++ / Lloyd on adjacency rows, then size repair: clusters below
/// half the target are dissolved into their nearest neighbour cluster and
/// clusters above twice the target are split at random.
fn profile_clusters(g: &Graph, k: usize, target: usize, rng: &mut StreamRng) -> Vec<Vec<Vertex>> {
    let n = g.n();
    let hamming = |a: Vertex, b: Vertex| -> f64 {
        g.row(a).iter().zip(g.row(b)).map(|(x, y)| (x ^ y).count_ones()).sum::<u32>() as f64
    };
    let mut seeds = alloc::vec![rng.gen_range(0..n)];
    let mut dist: Vec<f64> = (0..n).map(|v| hamming(v, seeds[0])).collect();
    while seeds.len() < k {
        let total: f64 = dist.iter().map(|d| d * d).sum();
        if total <= 0.0 {
            break;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = n - 1;
        for (v, d) in dist.iter().enumerate() {
            pick -= d * d;
            if pick <= 0.0 && *d > 0.0 {
                chosen = v;
                break;
            }
        }
        seeds.push(chosen);
        for v in 0..n {
            dist[v] = dist[v].min(hamming(v, chosen));
        }
    }
    let mut centroids: Vec<Vec<f64>> = seeds
        .iter()
        .map(|&s| {
            let mut c = alloc::vec![0.0; n];
            for &w in g.neighbors(s) {
                c[w] = 1.0;
            }
            c
        })
        .collect();
    let sq_dist = |v: Vertex, c: &[f64], norm: f64| -> f64 {
        g.degree(v) as f64 - 2.0 * g.neighbors(v).iter().map(|&w| c[w]).sum::<f64>() + norm
    };
    let mut assign = alloc::vec![usize::MAX; n];
    for _ in 0..20 {
        let norms: Vec<f64> = centroids.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
        let mut changed = false;
        for v in 0..n {
            let best = (0..centroids.len())
                .min_by(|&a, &b| sq_dist(v, &centroids[a], norms[a]).total_cmp(&sq_dist(v, &centroids[b], norms[b])))
                .unwrap();
            if assign[v] != best {
                assign[v] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        centroids = mean_rows(g, &assign, centroids.len());
    }
    let mut clusters: Vec<Vec<Vertex>> = alloc::vec![Vec::new(); centroids.len()];
    for v in 0..n {
        clusters[assign[v]].push(v);
    }
    clusters.retain(|c| !c.is_empty());

    // Dissolve small clusters.
    loop {
        if clusters.len() <= 2 {
            break;
        }
        let (small, size) = clusters.iter().enumerate().map(|(i, c)| (i, c.len())).min_by_key(|p| p.1).unwrap();
        if 2 * size >= target {
            break;
        }
        let members = clusters.swap_remove(small);
        let assign: Vec<usize> = {
            let mut a = alloc::vec![usize::MAX; n];
            for (i, c) in clusters.iter().enumerate() {
                for &v in c {
                    a[v] = i;
                }
            }
            a
        };
        let cents = mean_rows(g, &assign, clusters.len());
        let norms: Vec<f64> = cents.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
        for v in members {
            let best = (0..cents.len())
                .min_by(|&a, &b| sq_dist(v, &cents[a], norms[a]).total_cmp(&sq_dist(v, &cents[b], norms[b])))
                .unwrap();
            clusters[best].push(v);
        }
    }
    // Split large clusters.
    let mut out = Vec::new();
    for mut c in clusters {
        if c.len() > 2 * target {
            let parts = c.len().div_ceil(target);
            c.shuffle(rng);
            let mut split = alloc::vec![Vec::new(); parts];
            for (j, v) in c.into_iter().enumerate() {
                split[j % parts].push(v);
            }
            out.extend(split);
        } else {
            out.push(c);
        }
    }
    if out.len() == 1 {
        let mut c = out.pop().unwrap();
        c.shuffle(rng);
        let tail = c.split_off(c.len() / 2);
        out = alloc::vec![c, tail];
    }
    for c in &mut out {
        c.sort_unstable();
    }
    out
}

fn mean_rows(g: &Graph, assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut sums = alloc::vec![alloc::vec![0.0; n]; k];
    let mut counts = alloc::vec![0usize; k];
    for v in 0..n {
        if assign[v] < k {
            counts[assign[v]] += 1;
            for &w in g.neighbors(v) {
                sums[assign[v]][w] += 1.0;
            }
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|x| *x /= c as f64);
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_gnp;
    use crate::rng;

    fn params() -> RegularityParams {
        RegularityParams::new(0.25, 0.15, 500).unwrap()
    }

    fn check(g: &Graph, p: &ClusterPartition) {
        let mut seen = VertexSet::new(g.n());
        for id in p.ids() {
            for v in p.cluster(id).iter() {
                assert!(seen.insert(v));
                assert_eq!(p.cluster_of(v), id);
            }
        }
        assert_eq!(seen.len(), g.n());
        let verdicts = p.recertify(g, CertifyMode::Sampled { budget: 200 }, &mut rng::stream(99, &[])).unwrap();
        assert!(verdicts.iter().all(Verdict::passed));
    }

    #[test]
    fn complete_graph() {
        let g = Graph::complete(120);
        let p = build_partition(&g, 0.9, 30, params(), &mut rng::stream(1, &[])).unwrap().unwrap();
        check(&g, &p);
        assert_eq!(p.q, 2);
        assert_eq!(p.rho, 1.0);
    }

    #[test]
    fn unbalanced_complete_bipartite_straddles() {
        let g = Graph::complete_bipartite(100, 200);
        let p = build_partition(&g, 0.33, 150, params(), &mut rng::stream(2, &[])).unwrap().unwrap();
        check(&g, &p);
        assert_eq!(p.stats.as_ref().unwrap().strategy, Strategy::Profile);
        for [a, b] in &p.pairs {
            let a_in_small = a.iter().all(|v| v < 100);
            let b_in_small = b.iter().all(|v| v < 100);
            assert!(a_in_small != b_in_small, "pair does not straddle");
        }
        assert!(p.rho <= 4.0);
    }

    #[test]
    fn random_dense_host() {
        let g = generate_gnp(200, 0.5, 5).unwrap();
        let p = build_partition(&g, 0.35, 50, params(), &mut rng::stream(3, &[])).unwrap().unwrap();
        check(&g, &p);
    }

    #[test]
    fn rejects_low_min_degree() {
        let g = Graph::path(10);
        assert!(build_partition(&g, 0.3, 5, params(), &mut rng::stream(0, &[])).is_err());
    }

    #[test]
    fn cluster_id_arithmetic() {
        let id = ClusterId::new(3, 1);
        assert_eq!(id.partner(), ClusterId::new(3, 0));
        assert_eq!(ClusterId::from_index(id.index()), id);
    }
}
