//! Staged embedding of a bounded-degree spanning tree into `G ∪ R`.
//!
//! Trees with many leaves go through [`crate::stars::complete_case1`]. Other
//! trees have `P = ⌊n / (2(k−1))⌋` bare paths of length `k` cut out; the
//! remaining forest is embedded into `R₂`, the path ends are moved into
//! partner clusters with length-2 paths using `R₃`, surplus pairs are routed
//! along templates in `G ∪ R₄` until every cluster pair is balanced, and the
//! rest are completed inside their cluster pair using `G` alone.

mod adjust;
mod cycles;
mod endpoints;
mod forest;

use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

pub use adjust::{
    find_template_paths, slot_matching_sizes, stage_adjust_clusters, AdjustFailure, AdjustOutcome, AdjustmentLedger,
    LedgerRow, Template, TemplateFailure,
};
pub use cycles::{stage_complete_cycles, CycleConfig, CycleFailure};
pub use endpoints::{stage_fix_endpoints, EndpointFailure, EndpointOutcome};
pub use forest::{stage_embed_forest, ForestOutcome, Occupancy};

use crate::almost_spanning::{verify_embedding, Embedding};
use crate::error::{Error, Result};
use crate::graph::{min_degree, union_all, Graph, PerturbationPlan, Vertex, VertexSet};
use crate::regularity::{build_partition, measure_pair, ClusterPartition, RegularityParams, DEFAULT_WITNESS_BUDGET};
use crate::rng::{self, tag, StreamRng};
use crate::stars::{case1_leaf_count, complete_case1};
use crate::tree::{count_leaves, extract_bare_paths, Tree};

/// Two special vertices joined by a path still to be embedded. After
/// endpoint fixing `x` lies in cluster `(home, 0)` and `y` in `(home, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpecialPair {
    pub x: Vertex,
    pub y: Vertex,
    pub home: usize,
    /// Index of the bare path this pair closes.
    pub route: usize,
    /// `x` sits at the last vertex of the bare path rather than the first.
    pub flipped: bool,
}

/// Host images along one bare path: `head[j]` is the image of the `j`-th
/// path vertex, `tail[j]` of the `j`-th from the end, and `middle` the rest
/// in path order once known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecialRoute {
    pub tree_path: Vec<Vertex>,
    pub head: Vec<Vertex>,
    pub tail: Vec<Vertex>,
    pub middle: Option<Vec<Vertex>>,
}

/// Special vertices `X` and free vertices `W` per cluster, indexed by
/// [`crate::regularity::ClusterId::index`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterSets {
    pub x: Vec<VertexSet>,
    pub w: Vec<VertexSet>,
}

impl ClusterSets {
    pub fn total_x(&self) -> usize {
        self.x.iter().map(VertexSet::len).sum()
    }

    pub fn total_w(&self) -> usize {
        self.w.iter().map(VertexSet::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub delta_max: usize,
    /// Bare path length before endpoint fixing; odd and at least 7.
    pub k: usize,
    /// Leaf fraction at which the many-leaves route is taken.
    pub lambda: f64,
    /// Fraction of all leaves removed on the many-leaves route (at least
    /// `⌈λn⌉` are removed either way).
    pub leaf_removal: f64,
    /// Defaults to `n / 2`.
    pub target_cluster_size: Option<usize>,
    pub regularity: RegularityParams,
    pub xi: f64,
    pub retry_factor: usize,
    pub cycles: CycleConfig,
    /// Sampling rounds per pair for the reported tightest `δ`; 0 disables it.
    pub measure_budget: usize,
    /// Bare-path runs per trial before reporting failure.
    pub attempts: usize,
}

impl PipelineConfig {
    pub fn new(alpha: f64, delta_max: usize) -> Self {
        PipelineConfig {
            alpha,
            delta_max,
            k: 9,
            lambda: 0.05,
            leaf_removal: 0.9,
            target_cluster_size: None,
            regularity: RegularityParams { epsilon: 0.25, delta: 0.15, witness_budget: DEFAULT_WITNESS_BUDGET },
            xi: 0.1,
            retry_factor: 10,
            cycles: CycleConfig::default(),
            measure_budget: 0,
            attempts: 3,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 7 || self.k.is_multiple_of(2) {
            return Err(Error::InvalidParameter(alloc::format!("k = {} must be odd and at least 7", self.k)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0)
            || !(self.xi >= 0.0 && self.xi < 1.0)
            || !(self.leaf_removal >= 0.0 && self.leaf_removal <= 1.0)
        {
            return Err(Error::InvalidParameter(alloc::format!(
                "lambda = {}, xi = {}, leaf removal = {}",
                self.lambda,
                self.xi,
                self.leaf_removal
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("alpha = {}", self.alpha)));
        }
        if self.attempts == 0 {
            return Err(Error::InvalidParameter("at least one attempt per trial".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    ManyLeaves,
    BarePaths,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Passed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: &'static str,
    pub status: StageStatus,
    /// Host vertices this stage took.
    pub consumed: usize,
    pub detail: String,
    /// Smallest `δ` seen over the stage's cluster pairs, when measured.
    pub tightest_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub n: usize,
    pub alpha: f64,
    pub delta_max: usize,
    pub k: usize,
    pub lambda: f64,
    pub phase_densities: [f64; 4],
    pub seed: u64,
    pub case: Case,
    pub leaves: usize,
    pub stages: Vec<StageRecord>,
    pub q: Option<usize>,
    pub rho: Option<f64>,
    pub ledger: Option<AdjustmentLedger>,
    pub occupancy: Option<Occupancy>,
    /// `2|W_i| = (k−1)|X_i|` after adjustment, for every cluster.
    pub balance_identity: Option<bool>,
    /// Runs of the bare-path stages after the partition; the stage list
    /// belongs to the last one.
    pub attempts: usize,
    pub success: bool,
    pub embedding_valid: bool,
    /// Filled in by callers that own a clock.
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub embedding: Option<Embedding>,
    pub report: TrialReport,
}

impl TrialReport {
    fn record(&mut self, stage: &'static str, status: StageStatus, consumed: usize, detail: String) {
        self.stages.push(StageRecord { stage, status, consumed, detail, tightest_delta: None });
    }

    fn fail(&mut self, stage: &'static str, detail: String) {
        self.record(stage, StageStatus::Failed, 0, detail);
    }

    pub fn failed_stage(&self) -> Option<&'static str> {
        self.stages.iter().find(|s| s.status == StageStatus::Failed).map(|s| s.stage)
    }
}

/// Smallest measured `δ` over the pairs `(X_c, W_c̄)`.
fn tightest_delta(g: &Graph, sets: &ClusterSets, eps: f64, budget: usize, rng: &mut StreamRng) -> Option<f64> {
    if budget == 0 {
        return None;
    }
    let mut best: Option<f64> = None;
    for c in 0..sets.x.len() {
        let (x, w) = (&sets.x[c], &sets.w[c ^ 1]);
        if x.is_empty() || w.is_empty() {
            continue;
        }
        if let Ok(m) = measure_pair(g, x, w, eps, budget, rng) {
            best = Some(best.map_or(m.tightest_delta(), |b: f64| b.min(m.tightest_delta())));
        }
    }
    best
}

/// Embeds the spanning tree `t` into `host ∪ R₁ ∪ … ∪ R₄`.
///
/// Returns `Err` only when a precondition fails (vertex counts, minimum
/// degree, maximum degree, configuration). Stage failures end the trial with
/// `success = false` and are recorded in the report.
pub fn embed_spanning_tree(
    t: &Tree,
    host: &Graph,
    plan: &PerturbationPlan,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<TrialOutcome> {
    cfg.validate()?;
    let n = host.n();
    if t.n() != n {
        return Err(Error::VertexCountMismatch { left: t.n(), right: n });
    }
    let min_deg = min_degree(host)?;
    if (min_deg as f64) < cfg.alpha * n as f64 - 1e-9 {
        return Err(Error::MinDegreeTooSmall { min_degree: min_deg, alpha: cfg.alpha, n });
    }
    if t.max_degree() > cfg.delta_max {
        return Err(Error::InvalidTree(alloc::format!("maximum degree {} exceeds {}", t.max_degree(), cfg.delta_max)));
    }
    let leaves = count_leaves(t)?;
    let case = if leaves as f64 >= cfg.lambda * n as f64 { Case::ManyLeaves } else { Case::BarePaths };
    let mut report = TrialReport {
        n,
        alpha: cfg.alpha,
        delta_max: cfg.delta_max,
        k: cfg.k,
        lambda: cfg.lambda,
        phase_densities: plan.phase_densities,
        seed,
        case,
        leaves,
        stages: Vec::new(),
        q: None,
        rho: None,
        ledger: None,
        occupancy: None,
        balance_identity: None,
        attempts: 0,
        success: false,
        embedding_valid: false,
        wall_ms: None,
    };
    let phases = plan.sample(n);
    let embedding = match case {
        Case::ManyLeaves => {
            let mut rng = rng::stream(seed, &[tag::CASE1]);
            let remove = case1_leaf_count(n, cfg.lambda).max((cfg.leaf_removal * leaves as f64) as usize).min(leaves);
            match complete_case1(t, host, plan, remove as f64 / n as f64, &mut rng)? {
                Ok(out) => {
                    let detail = alloc::format!(
                        "removed {} leaves, {} centres, min cross degree {}",
                        out.removed_leaves,
                        out.centres,
                        out.min_cross_degree
                    );
                    report.record("many_leaves", StageStatus::Passed, n, detail);
                    Some(out.embedding)
                }
                Err(f) => {
                    report.fail("many_leaves", alloc::format!("{f:?}"));
                    None
                }
            }
        }
        Case::BarePaths => case2(t, host, &phases, cfg, seed, &mut report)?,
    };
    let Some(embedding) = embedding else {
        return Ok(TrialOutcome { embedding: None, report });
    };
    let full = union_all(n, core::iter::once(host).chain(phases.iter()))?;
    match verify_embedding(t, &full, &embedding) {
        Ok(()) => {
            report.embedding_valid = true;
            report.success = true;
        }
        Err(v) => report.fail("verify", alloc::format!("{v:?}")),
    }
    Ok(TrialOutcome { embedding: Some(embedding), report })
}

fn case2(
    t: &Tree,
    host: &Graph,
    phases: &[Graph; 4],
    cfg: &PipelineConfig,
    seed: u64,
    report: &mut TrialReport,
) -> Result<Option<Embedding>> {
    let n = host.n();
    let k = cfg.k;
    let count = n / (2 * (k - 1));
    let all = extract_bare_paths(t, k)?;
    if count == 0 || all.paths.len() < count {
        report.fail("bare_paths", alloc::format!("{} bare paths of length {k}, need {count}", all.paths.len()));
        return Ok(None);
    }
    report.record("bare_paths", StageStatus::Passed, 0, alloc::format!("{} available, {count} used", all.paths.len()));

    let target = cfg.target_cluster_size.unwrap_or(n / 2).max(1);
    let partition: ClusterPartition =
        match build_partition(host, cfg.alpha, target, cfg.regularity, &mut rng::stream(seed, &[tag::PARTITION]))? {
            Ok(p) => p,
            Err(f) => {
                report.fail("partition", alloc::format!("{f:?}"));
                return Ok(None);
            }
        };
    report.q = Some(partition.q);
    report.record(
        "partition",
        StageStatus::Passed,
        0,
        alloc::format!("q = {}, rho = {:.3}", partition.q, partition.rho),
    );

    // Later stages only draw algorithmic randomness, so a failed attempt is
    // rerun on the same graphs with fresh streams.
    let base = report.stages.len();
    for attempt in 0..cfg.attempts {
        report.stages.truncate(base);
        report.attempts = attempt + 1;
        (report.rho, report.ledger, report.occupancy, report.balance_identity) = (None, None, None, None);
        if let Some(e) = bare_path_attempt(t, host, phases, cfg, seed, attempt as u64, &all, count, &partition, report)
        {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn bare_path_attempt(
    t: &Tree,
    host: &Graph,
    phases: &[Graph; 4],
    cfg: &PipelineConfig,
    seed: u64,
    attempt: u64,
    all: &crate::tree::BarePathDecomposition,
    count: usize,
    partition: &ClusterPartition,
    report: &mut TrialReport,
) -> Option<Embedding> {
    let n = host.n();
    let k = cfg.k;
    let stream = |t: u64| if attempt == 0 { rng::stream(seed, &[t]) } else { rng::stream(seed, &[t, attempt]) };
    let mut rng = stream(tag::FOREST);
    let decomp = all.choose(count, &mut rng);
    let mut measure_rng = rng::stream(seed, &[tag::PARTITION, 1]);
    let eps = cfg.regularity.epsilon;
    let f = match stage_embed_forest(t, &decomp, &phases[1], partition, cfg.retry_factor * n, &mut rng) {
        Ok(f) => f,
        Err(e) => {
            report.fail("embed_forest", alloc::format!("{e:?}"));
            return None;
        }
    };
    assert_eq!(2 * f.clusters.total_w(), (k - 1) * f.clusters.total_x(), "size identity after the forest");
    let forest_used = f.embedding.used().clone();
    report.record("embed_forest", StageStatus::Passed, forest_used.len(), alloc::format!("{:?}", f.occupancy));
    report.stages.last_mut().unwrap().tightest_delta =
        tightest_delta(host, &f.clusters, eps, cfg.measure_budget, &mut measure_rng);
    report.occupancy = Some(f.occupancy.clone());
    let mut routes = f.routes;
    let mut embedding = f.embedding;

    let mut rng = stream(tag::ENDPOINTS);
    let fixed = match stage_fix_endpoints(&f.pairs, &mut routes, host, &phases[2], partition, &f.clusters, &mut rng) {
        Ok(o) => o,
        Err(e) => {
            report.fail("fix_endpoints", alloc::format!("{e:?}"));
            return None;
        }
    };
    let k = k - 4;
    assert_eq!(2 * fixed.clusters.total_w(), (k - 1) * fixed.clusters.total_x(), "size identity after endpoint fixing");
    report.record("fix_endpoints", StageStatus::Passed, fixed.consumed.len(), alloc::format!("k now {k}"));
    report.stages.last_mut().unwrap().tightest_delta =
        tightest_delta(host, &fixed.clusters, eps, cfg.measure_budget, &mut measure_rng);

    let mut rng = stream(tag::ADJUST);
    let delta = cfg.regularity.delta;
    let adjusted =
        match stage_adjust_clusters(&fixed.pairs, &fixed.clusters, host, &phases[3], k, delta, cfg.xi, &mut rng) {
            Ok(o) => o,
            Err(e) => {
                report.fail("adjust_clusters", alloc::format!("{e:?}"));
                return None;
            }
        };
    report.rho = Some(adjusted.ledger.rho);
    report.balance_identity =
        Some(adjusted.clusters.x.iter().zip(&adjusted.clusters.w).all(|(x, w)| 2 * w.len() == (k - 1) * x.len()));
    report.record(
        "adjust_clusters",
        StageStatus::Passed,
        adjusted.consumed.len(),
        alloc::format!("{} paths over {} templates", adjusted.paths.len(), adjusted.ledger.templates.len()),
    );
    report.ledger = Some(adjusted.ledger.clone());

    let mut rng = stream(tag::CYCLES);
    let closed = match stage_complete_cycles(&adjusted.remaining, &adjusted.clusters, host, k, cfg.cycles, &mut rng) {
        Ok(c) => c,
        Err(e) => {
            report.fail("complete_cycles", alloc::format!("{e:?}"));
            return None;
        }
    };
    let cycle_used = adjusted.clusters.w.iter().fold(VertexSet::new(n), |acc, w| acc.union(w));
    report.record("complete_cycles", StageStatus::Passed, cycle_used.len(), alloc::format!("{} paths", closed.len()));

    // Stage accounting: disjoint consumption covering every host vertex.
    let parts = [&forest_used, &fixed.consumed, &adjusted.consumed, &cycle_used];
    let total: usize = parts.iter().map(|s| s.len()).sum();
    let union = parts.iter().fold(VertexSet::new(n), |acc, s| acc.union(s));
    assert!(total == n && union.len() == n, "stage consumption must partition the host vertices");

    for (pair, interior) in adjusted.paths.into_iter().chain(closed) {
        let mut middle = interior;
        if pair.flipped {
            middle.reverse();
        }
        routes[pair.route].middle = Some(middle);
    }
    for route in &routes {
        let path = &route.tree_path;
        let last = path.len() - 1;
        let middle = route.middle.as_ref().expect("every special path completed");
        for j in 1..route.head.len() {
            embedding.place(path[j], route.head[j]);
            embedding.place(path[last - j], route.tail[j]);
        }
        for (j, &h) in middle.iter().enumerate() {
            embedding.place(path[route.head.len() + j], h);
        }
    }
    Some(embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_gnp_with;
    use crate::tree::{generate_bounded_tree, TreeShape};

    fn plan(n: usize, c: f64, seed: u64) -> PerturbationPlan {
        PerturbationPlan::from_budget(n, c, [1.0; 4], seed).unwrap()
    }

    #[test]
    fn star_takes_the_many_leaves_route() {
        let n = 40;
        let star = Tree::from_parents((0..n).map(|v| if v == 0 { None } else { Some(0) }).collect()).unwrap();
        let cfg = PipelineConfig::new(0.9, n);
        let out = embed_spanning_tree(&star, &Graph::complete(n), &plan(n, 4.0 * n as f64, 1), &cfg, 1).unwrap();
        assert_eq!(out.report.case, Case::ManyLeaves);
        assert!(out.report.success, "{:?}", out.report.stages);
    }

    #[test]
    fn path_on_complete_host_takes_the_bare_path_route() {
        let n = 200;
        let path = Tree::from_parents((0..n).map(|v: usize| v.checked_sub(1)).collect()).unwrap();
        let cfg = PipelineConfig::new(0.9, 2);
        let out = embed_spanning_tree(&path, &Graph::complete(n), &plan(n, 4.0 * n as f64, 2), &cfg, 2).unwrap();
        assert_eq!(out.report.case, Case::BarePaths);
        assert!(out.report.success, "{:?}", out.report.stages);
        assert_eq!(out.report.balance_identity, Some(true));
        // 12 bare paths: the forest keeps n − 12·8 vertices, fixing takes 4 per path.
        assert_eq!(out.report.stages[2].consumed, n - 12 * 8);
        assert_eq!(out.report.stages[3].consumed, 48);
    }

    #[test]
    fn preconditions_are_errors() {
        let n = 30;
        let path = Tree::from_parents((0..n).map(|v: usize| v.checked_sub(1)).collect()).unwrap();
        let cfg = PipelineConfig::new(0.5, 2);
        assert!(embed_spanning_tree(&path, &Graph::path(n), &plan(n, 1.0, 1), &cfg, 1).is_err());
        assert!(embed_spanning_tree(&path, &Graph::complete(n + 1), &plan(n + 1, 1.0, 1), &cfg, 1).is_err());
        let even = PipelineConfig { k: 8, ..cfg };
        assert!(embed_spanning_tree(&path, &Graph::complete(n), &plan(n, 1.0, 1), &even, 1).is_err());
        let star = Tree::from_parents((0..n).map(|v| if v == 0 { None } else { Some(0) }).collect()).unwrap();
        assert!(embed_spanning_tree(&star, &Graph::complete(n), &plan(n, 1.0, 1), &cfg, 1).is_err());
    }

    #[test]
    fn dense_random_host_few_leaves() {
        let n = 300;
        let mut host_rng = rng::stream(5, &[tag::HOST]);
        let host = loop {
            let g = generate_gnp_with(n, 0.5, &mut host_rng).unwrap();
            if min_degree(&g).unwrap() as f64 >= 0.35 * n as f64 {
                break g;
            }
        };
        let cfg = PipelineConfig::new(0.35, 3);
        let mut wins = 0;
        let mut log = Vec::new();
        for seed in 0..5 {
            let t = generate_bounded_tree(n, 3, TreeShape::Subdivided, &mut rng::stream(seed, &[tag::TREE])).unwrap();
            let out = embed_spanning_tree(&t, &host, &plan(n, 40.0, seed), &cfg, seed).unwrap();
            assert_eq!(out.report.case, Case::BarePaths);
            if out.report.success {
                wins += 1;
            } else {
                log.push(out.report.stages.last().cloned());
            }
        }
        assert!(wins >= 4, "{wins}: {log:?}");
    }
}
