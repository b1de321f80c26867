use alloc::vec::Vec;

use serde::Serialize;

use super::{ClusterSets, SpecialPair, SpecialRoute};
use crate::almost_spanning::{embed_forest_greedy, Embedding, GreedyFailure};
use crate::graph::{Graph, VertexSet};
use crate::regularity::ClusterPartition;
use crate::rng::StreamRng;
use crate::tree::{BarePathDecomposition, Tree};

/// How far each `|W_i|` sits from its hypergeometric mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupancy {
    pub max_abs_z: f64,
    pub outside_five_sigma: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestOutcome {
    pub embedding: Embedding,
    pub pairs: Vec<SpecialPair>,
    pub routes: Vec<SpecialRoute>,
    pub clusters: ClusterSets,
    pub occupancy: Occupancy,
}

/// Embeds the forest left by deleting the bare path interiors into `r2`,
/// then records special vertices `X_i` and free vertices `W_i` per cluster.
pub fn stage_embed_forest(
    tree: &Tree,
    decomp: &BarePathDecomposition,
    r2: &Graph,
    partition: &ClusterPartition,
    retry_budget: usize,
    rng: &mut StreamRng,
) -> Result<ForestOutcome, GreedyFailure> {
    let n = r2.n();
    let forest = decomp.forest(tree);
    let embedding = embed_forest_greedy(&forest, r2, &VertexSet::full(n), rng, retry_budget)?;

    let mut routes = Vec::with_capacity(decomp.paths.len());
    let mut pairs = Vec::with_capacity(decomp.paths.len());
    let mut special = VertexSet::new(n);
    for (j, path) in decomp.paths.iter().enumerate() {
        let x = embedding.image(path[0]).expect("special vertex embedded");
        let y = embedding.image(*path.last().unwrap()).expect("special vertex embedded");
        special.insert(x);
        special.insert(y);
        routes.push(SpecialRoute { tree_path: path.clone(), head: alloc::vec![x], tail: alloc::vec![y], middle: None });
        pairs.push(SpecialPair { x, y, home: partition.cluster_of(x).pair, route: j, flipped: false });
    }
    let free = embedding.used().complement();
    let clusters = ClusterSets {
        x: partition.ids().map(|id| partition.cluster(id).intersection(&special)).collect(),
        w: partition.ids().map(|id| partition.cluster(id).intersection(&free)).collect(),
    };

    // |W_i| is hypergeometric: |free| draws from n with |V_i| successes.
    let (big_n, draws) = (n as f64, free.len() as f64);
    let mut occupancy = Occupancy { max_abs_z: 0.0, outside_five_sigma: 0 };
    for (id, w) in partition.ids().zip(&clusters.w) {
        let k = partition.cluster(id).len() as f64;
        let mean = draws * k / big_n;
        let var = draws * (k / big_n) * (1.0 - k / big_n) * (big_n - draws) / (big_n - 1.0).max(1.0);
        let z = if var > 0.0 { (w.len() as f64 - mean) / libm::sqrt(var) } else { 0.0 };
        occupancy.max_abs_z = occupancy.max_abs_z.max(libm::fabs(z));
        if libm::fabs(z) > 5.0 {
            occupancy.outside_five_sigma += 1;
        }
    }
    Ok(ForestOutcome { embedding, pairs, routes, clusters, occupancy })
}
