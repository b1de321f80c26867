use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{ClusterSets, SpecialPair, SpecialRoute};
use crate::graph::{Graph, Vertex, VertexSet};
use crate::regularity::{ClusterId, ClusterPartition};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EndpointFailure {
    /// Position of the failing pair in processing order.
    pub position: usize,
    pub route: usize,
    /// `|N_G(v) ∩ W^(1)_ī \ S|` and `|W^(2)_r \ S|` at the failing end.
    pub middle_candidates: usize,
    pub target_candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointOutcome {
    pub pairs: Vec<SpecialPair>,
    pub clusters: ClusterSets,
    /// Vertices used by the length-2 paths.
    pub consumed: VertexSet,
}

/// Moves every special pair into partner clusters by length-2 paths
/// `x – w – x′`: `w ∈ N_G(x) ∩ W^(1)` of the partner of `x`'s cluster and
/// `x′ ∈ W^(2)_r` joined to `w` in `r3`, and symmetrically `y′ ∈ W^(2)_r̄`.
/// Each `W_i` is split uniformly at random into halves `W^(1)`, `W^(2)`;
/// destinations `r` are dealt round-robin over the `2q` clusters from a
/// random offset, over a uniformly random pair order.
pub fn stage_fix_endpoints(
    pairs: &[SpecialPair],
    routes: &mut [SpecialRoute],
    g: &Graph,
    r3: &Graph,
    partition: &ClusterPartition,
    clusters: &ClusterSets,
    rng: &mut StreamRng,
) -> Result<EndpointOutcome, EndpointFailure> {
    let n = g.n();
    let ids: Vec<ClusterId> = partition.ids().collect();
    let (mut mid, mut dest): (Vec<VertexSet>, Vec<VertexSet>) = clusters
        .w
        .iter()
        .map(|w| {
            let mut members = w.to_vec();
            members.shuffle(rng);
            let half = members.len() / 2;
            (
                VertexSet::from_iter(n, members[..half].iter().copied()),
                VertexSet::from_iter(n, members[half..].iter().copied()),
            )
        })
        .unzip();

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(rng);
    let offset = rng.gen_range(0..ids.len());
    let mut consumed = VertexSet::new(n);
    let mut new_x: Vec<VertexSet> = alloc::vec![VertexSet::new(n); ids.len()];
    let mut out = Vec::with_capacity(pairs.len());

    for (position, &p) in order.iter().enumerate() {
        let pair = pairs[p];
        let r = ids[(offset + position) % ids.len()];
        let mut moved = [0; 2];
        for (end, (v, target)) in [(pair.x, r), (pair.y, r.partner())].into_iter().enumerate() {
            let home = partition.cluster_of(v).partner().index();
            let mut middles: Vec<Vertex> = g.neighbors_in(v, &mid[home]).collect();
            middles.shuffle(rng);
            let found = middles.iter().find_map(|&w| {
                let targets: Vec<Vertex> = r3.neighbors_in(w, &dest[target.index()]).collect();
                targets.choose(rng).map(|&t| (w, t))
            });
            let Some((w, t)) = found else {
                return Err(EndpointFailure {
                    position,
                    route: pair.route,
                    middle_candidates: middles.len(),
                    target_candidates: dest[target.index()].len(),
                });
            };
            mid[home].remove(w);
            dest[target.index()].remove(t);
            consumed.insert(w);
            consumed.insert(t);
            new_x[target.index()].insert(t);
            let route = &mut routes[pair.route];
            // end 0 is the pair's x; map it back onto the route's ends.
            let chain = if (end == 0) != pair.flipped { &mut route.head } else { &mut route.tail };
            chain.push(w);
            chain.push(t);
            moved[end] = t;
        }
        // Orient so that x lies in the first cluster of its pair.
        let flip = r.side == 1;
        let (x, y) = if flip { (moved[1], moved[0]) } else { (moved[0], moved[1]) };
        out.push(SpecialPair { x, y, home: r.pair, route: pair.route, flipped: pair.flipped != flip });
    }
    let w = clusters.w.iter().map(|w| w.difference(&consumed)).collect();
    Ok(EndpointOutcome { pairs: out, clusters: ClusterSets { x: new_x, w }, consumed })
}
