use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{ClusterSets, SpecialPair};
use crate::graph::{Graph, Vertex};
use crate::matching::maximum_matching;
use crate::regularity::ClusterId;
use crate::rng::StreamRng;

/// Instances with at most this many path slots also get an exhaustive search.
const EXACT_SLOTS: usize = 24;
const EXACT_BUDGET: usize = 1_000_000;
const REPAIR_STEPS_PER_CHAIN: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleConfig {
    pub restarts: usize,
    pub augmentation_rounds: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig { restarts: 20, augmentation_rounds: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleFailure {
    pub pair: usize,
    pub n_z: usize,
    /// First path position (1-based) with a missing edge in the best attempt.
    pub layer: usize,
    /// Missing edges left in the best attempt.
    pub unmatched: usize,
}

/// Completes every remaining special path inside its own pair of clusters,
/// using only edges of `g`: positions alternate between the free vertices of
/// the partner of `x`'s cluster (odd) and of `x`'s cluster (even), so that
/// each path uses exactly the `(k−1)/2` vertices per side that the balance
/// identity leaves for it.
pub fn stage_complete_cycles(
    pairs: &[SpecialPair],
    clusters: &ClusterSets,
    g: &Graph,
    k: usize,
    cfg: CycleConfig,
    rng: &mut StreamRng,
) -> Result<Vec<(SpecialPair, Vec<Vertex>)>, CycleFailure> {
    assert!(k >= 3 && k % 2 == 1, "cycle completion needs odd k ≥ 3");
    let q = clusters.w.len() / 2;
    let mut out = Vec::with_capacity(pairs.len());
    for i in 0..q {
        let zs: Vec<SpecialPair> = pairs.iter().filter(|p| p.home == i).copied().collect();
        let s1 = clusters.w[ClusterId::new(i, 1).index()].to_vec();
        let s2 = clusters.w[ClusterId::new(i, 0).index()].to_vec();
        let half = (k - 1) / 2 * zs.len();
        assert!(s1.len() == half && s2.len() == half, "balance identity must hold before cycle completion");
        if zs.is_empty() {
            continue;
        }
        let paths = pack_paths(g, &zs, &s1, &s2, k, cfg, rng).map_err(|(layer, unmatched)| CycleFailure {
            pair: i,
            n_z: zs.len(),
            layer,
            unmatched,
        })?;
        // One special pair per cycle, and every free vertex used once.
        let mut seen = crate::graph::VertexSet::new(g.n());
        for (p, path) in zs.iter().zip(&paths) {
            assert_eq!(path.len(), k - 1);
            assert!(path.iter().all(|&v| seen.insert(v)));
            out.push((*p, path.clone()));
        }
        assert_eq!(seen.len(), 2 * half);
    }
    Ok(out)
}

/// Interiors of vertex-disjoint `x_j – y_j` paths, odd positions from `s1` and
/// even positions from `s2`, together using all of both.
pub(crate) fn pack_paths(
    g: &Graph,
    zs: &[SpecialPair],
    s1: &[Vertex],
    s2: &[Vertex],
    k: usize,
    cfg: CycleConfig,
    rng: &mut StreamRng,
) -> Result<Vec<Vec<Vertex>>, (usize, usize)> {
    let mut best = (0, usize::MAX);
    for _ in 0..cfg.restarts.max(1) {
        match attempt(g, zs, s1, s2, k, cfg.augmentation_rounds, rng) {
            Ok(paths) => return Ok(paths),
            Err(e) => {
                if e.1 < best.1 || (e.1 == best.1 && e.0 > best.0) {
                    best = e;
                }
            }
        }
    }
    if zs.len() * (k - 1) <= EXACT_SLOTS {
        if let Some(paths) = exact(g, zs, s1, s2, k) {
            return Ok(paths);
        }
    }
    Err(best)
}

fn attempt(
    g: &Graph,
    zs: &[SpecialPair],
    s1: &[Vertex],
    s2: &[Vertex],
    k: usize,
    rounds: usize,
    rng: &mut StreamRng,
) -> Result<Vec<Vec<Vertex>>, (usize, usize)> {
    let nz = zs.len();
    let mut free = [s1.to_vec(), s2.to_vec()];
    free[0].shuffle(rng);
    free[1].shuffle(rng);
    let mut chains: Vec<Vec<Vertex>> = alloc::vec![Vec::with_capacity(k - 1); nz];
    let end = |chains: &Vec<Vec<Vertex>>, j: usize| chains[j].last().copied().unwrap_or(zs[j].x);

    for pos in 1..k - 1 {
        let side = (pos + 1) % 2;
        let mut order: Vec<usize> = (0..nz).collect();
        order.shuffle(rng);
        let adj: Vec<Vec<usize>> = order
            .iter()
            .map(|&j| {
                let e = end(&chains, j);
                free[side].iter().enumerate().filter(|&(_, &v)| g.has_edge(e, v)).map(|(r, _)| r).collect()
            })
            .collect();
        let m = maximum_matching(nz, free[side].len(), &adj);
        let mut taken = alloc::vec![false; free[side].len()];
        for (l, r) in m.pairs() {
            chains[order[l]].push(free[side][r]);
            taken[r] = true;
        }
        // Unmatched chains take arbitrary leftovers; repair fixes them later.
        let spare: Vec<usize> = (0..free[side].len()).filter(|&r| !taken[r]).collect();
        let stuck = (0..nz).filter(|&l| m.left_to_right[l].is_none());
        for (l, r) in stuck.zip(spare) {
            chains[order[l]].push(free[side][r]);
            taken[r] = true;
        }
        let mut it = taken.iter();
        free[side].retain(|_| !*it.next().unwrap());
    }

    // The last vertex must see both the chain end and y.
    let last = &mut free[1];
    debug_assert_eq!(last.len(), nz);
    for round in 0..=rounds {
        let adj: Vec<Vec<usize>> = (0..nz)
            .map(|j| {
                let e = end(&chains, j);
                last.iter()
                    .enumerate()
                    .filter(|&(_, &v)| g.has_edge(e, v) && g.has_edge(v, zs[j].y))
                    .map(|(r, _)| r)
                    .collect()
            })
            .collect();
        let m = maximum_matching(nz, nz, &adj);
        if m.size() == nz || round == rounds {
            let mut spare = (0..nz).filter(|&r| m.right_to_left[r].is_none());
            let picks: Vec<usize> =
                (0..nz).map(|j| m.left_to_right[j].unwrap_or_else(|| spare.next().unwrap())).collect();
            for (j, r) in picks.into_iter().enumerate() {
                chains[j].push(last[r]);
            }
            break;
        }
        // Swap a spare leftover into another chain's even slot when that
        // frees a vertex fitting a stuck chain.
        let mut spare: Vec<usize> = (0..nz).filter(|&r| m.right_to_left[r].is_none()).collect();
        for j in (0..nz).filter(|&j| m.left_to_right[j].is_none()) {
            let e = end(&chains, j);
            let y = zs[j].y;
            let swap = (0..nz).filter(|&c| c != j).find_map(|c| {
                (2..k - 1).step_by(2).find_map(|pos| {
                    let v = chains[c][pos - 1];
                    if !(g.has_edge(e, v) && g.has_edge(v, y)) {
                        return None;
                    }
                    let (prev, next) = (chains[c][pos - 2], chains[c][pos]);
                    spare
                        .iter()
                        .position(|&r| g.has_edge(prev, last[r]) && g.has_edge(last[r], next))
                        .map(|s| (c, pos, s))
                })
            });
            if let Some((c, pos, s)) = swap {
                let r = spare.swap_remove(s);
                core::mem::swap(&mut chains[c][pos - 1], &mut last[r]);
            }
        }
    }
    repair(g, zs, &mut chains, k, REPAIR_STEPS_PER_CHAIN * nz, rng)?;
    Ok(chains)
}

/// Missing edges along chain `j`, with the endpoints included.
fn violations(g: &Graph, p: &SpecialPair, chain: &[Vertex]) -> usize {
    let mut prev = p.x;
    let mut bad = 0;
    for &v in chain.iter().chain(core::iter::once(&p.y)) {
        bad += usize::from(!g.has_edge(prev, v));
        prev = v;
    }
    bad
}

/// Local search over same-position swaps between chains, accepting any swap
/// that does not increase the number of missing edges.
fn repair(
    g: &Graph,
    zs: &[SpecialPair],
    chains: &mut [Vec<Vertex>],
    k: usize,
    budget: usize,
    rng: &mut StreamRng,
) -> Result<(), (usize, usize)> {
    let nz = zs.len();
    let mut bad: Vec<usize> = zs.iter().zip(chains.iter()).map(|(p, c)| violations(g, p, c)).collect();
    let mut total: usize = bad.iter().sum();
    for _ in 0..budget {
        if total == 0 {
            return Ok(());
        }
        let broken: Vec<usize> = (0..nz).filter(|&j| bad[j] > 0).collect();
        let j = *broken.choose(rng).unwrap();
        let pos = rng.gen_range(1..k);
        let c = rng.gen_range(0..nz);
        if c == j {
            continue;
        }
        let (a, b) = (chains[j][pos - 1], chains[c][pos - 1]);
        chains[j][pos - 1] = b;
        chains[c][pos - 1] = a;
        let (nj, nc) = (violations(g, &zs[j], &chains[j]), violations(g, &zs[c], &chains[c]));
        if nj + nc <= bad[j] + bad[c] {
            total = total + nj + nc - bad[j] - bad[c];
            bad[j] = nj;
            bad[c] = nc;
        } else {
            chains[j][pos - 1] = a;
            chains[c][pos - 1] = b;
        }
    }
    if total == 0 {
        return Ok(());
    }
    let first = (1..=k)
        .find(|&pos| {
            zs.iter().zip(chains.iter()).any(|(p, ch)| {
                let at = |i: usize| {
                    if i == 0 {
                        p.x
                    } else if i == k {
                        p.y
                    } else {
                        ch[i - 1]
                    }
                };
                !g.has_edge(at(pos - 1), at(pos))
            })
        })
        .unwrap_or(k);
    Err((first, total))
}

/// Depth-first search over all path systems, within a fixed step budget.
fn exact(g: &Graph, zs: &[SpecialPair], s1: &[Vertex], s2: &[Vertex], k: usize) -> Option<Vec<Vec<Vertex>>> {
    struct Search<'a> {
        g: &'a Graph,
        zs: &'a [SpecialPair],
        sides: [&'a [Vertex]; 2],
        used: [Vec<bool>; 2],
        chains: Vec<Vec<Vertex>>,
        k: usize,
        steps: usize,
    }
    impl Search<'_> {
        fn go(&mut self, j: usize) -> Option<bool> {
            if j == self.zs.len() {
                return Some(true);
            }
            let pos = self.chains[j].len() + 1;
            if pos == self.k {
                let e = *self.chains[j].last().unwrap();
                return if self.g.has_edge(e, self.zs[j].y) { self.go(j + 1) } else { Some(false) };
            }
            let side = (pos + 1) % 2;
            let e = self.chains[j].last().copied().unwrap_or(self.zs[j].x);
            for r in 0..self.sides[side].len() {
                let v = self.sides[side][r];
                if self.used[side][r] || !self.g.has_edge(e, v) {
                    continue;
                }
                self.steps += 1;
                if self.steps > EXACT_BUDGET {
                    return None;
                }
                self.used[side][r] = true;
                self.chains[j].push(v);
                if self.go(j)? {
                    return Some(true);
                }
                self.chains[j].pop();
                self.used[side][r] = false;
            }
            Some(false)
        }
    }
    let mut s = Search {
        g,
        zs,
        sides: [s1, s2],
        used: [alloc::vec![false; s1.len()], alloc::vec![false; s2.len()]],
        chains: alloc::vec![Vec::new(); zs.len()],
        k,
        steps: 0,
    };
    match s.go(0) {
        Some(true) => Some(s.chains),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_gnp, VertexSet};
    use crate::rng;
    use proptest::prelude::*;

    fn pair(x: Vertex, y: Vertex) -> SpecialPair {
        SpecialPair { x, y, home: 0, route: 0, flipped: false }
    }

    fn check(g: &Graph, zs: &[SpecialPair], paths: &[Vec<Vertex>], s1: &[Vertex], s2: &[Vertex]) {
        let mut seen = VertexSet::new(g.n());
        for (p, path) in zs.iter().zip(paths) {
            let full: Vec<Vertex> =
                core::iter::once(p.x).chain(path.iter().copied()).chain(core::iter::once(p.y)).collect();
            assert!(full.windows(2).all(|w| g.has_edge(w[0], w[1])), "{full:?}");
            for (i, v) in path.iter().enumerate() {
                assert!(if i % 2 == 0 { s1.contains(v) } else { s2.contains(v) });
                assert!(seen.insert(*v));
            }
        }
    }

    #[test]
    fn tripartite_blow_up_gives_two_triangles() {
        // S^Z = {x0/y0, x1/y1}, S¹ = {4, 5}, S² = {6, 7}, complete between
        // consecutive classes.
        let zs = [pair(0, 2), pair(1, 3)];
        let (s1, s2) = ([4, 5], [6, 7]);
        let mut edges = Vec::new();
        for x in [0, 1] {
            edges.extend(s1.iter().map(|&a| (x, a)));
        }
        for &a in &s1 {
            edges.extend(s2.iter().map(|&b| (a, b)));
        }
        for y in [2, 3] {
            edges.extend(s2.iter().map(|&b| (y, b)));
        }
        let g = Graph::from_edges(8, edges).unwrap();
        let paths = pack_paths(&g, &zs, &s1, &s2, 3, CycleConfig::default(), &mut rng::stream(1, &[])).unwrap();
        assert_eq!(paths.len(), 2);
        check(&g, &zs, &paths, &s1, &s2);
    }

    fn permutations(items: &[Vertex]) -> Vec<Vec<Vertex>> {
        if items.is_empty() {
            return alloc::vec![Vec::new()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    /// Whether some `x – y` path alternates through all of `s1` and `s2`.
    fn brute_force(g: &Graph, x: Vertex, y: Vertex, s1: &[Vertex], s2: &[Vertex]) -> bool {
        permutations(s1).iter().any(|a| {
            permutations(s2).iter().any(|b| {
                let mut full = alloc::vec![x];
                for (u, v) in a.iter().zip(b) {
                    full.push(*u);
                    full.push(*v);
                }
                full.push(y);
                full.windows(2).all(|w| g.has_edge(w[0], w[1]))
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn single_pair_matches_path_oracle(seed in any::<u64>(), half in 1usize..4, p in 0.3f64..0.9) {
            let k = 2 * half + 1;
            let n = 2 + 2 * half;
            let g = generate_gnp(n, p, seed).unwrap();
            let s1: Vec<Vertex> = (2..2 + half).collect();
            let s2: Vec<Vertex> = (2 + half..n).collect();
            let zs = [pair(0, 1)];
            let got = pack_paths(&g, &zs, &s1, &s2, k, CycleConfig { restarts: 2, augmentation_rounds: 1 }, &mut rng::stream(seed, &[1]));
            prop_assert_eq!(got.is_ok(), brute_force(&g, 0, 1, &s1, &s2));
            if let Ok(paths) = got {
                check(&g, &zs, &paths, &s1, &s2);
            }
        }
    }

    #[test]
    fn dense_random_pair_packs_many_paths() {
        // 12 pairs, k = 5: 24 free vertices per side inside G(72, 0.5).
        let n = 72;
        let mut ok = 0;
        for seed in 0..10u64 {
            let g = generate_gnp(n, 0.5, seed).unwrap();
            let zs: Vec<SpecialPair> = (0..12).map(|j| pair(j, 12 + j)).collect();
            let s1: Vec<Vertex> = (24..48).collect();
            let s2: Vec<Vertex> = (48..72).collect();
            if let Ok(paths) = pack_paths(&g, &zs, &s1, &s2, 5, CycleConfig::default(), &mut rng::stream(seed, &[2])) {
                check(&g, &zs, &paths, &s1, &s2);
                ok += 1;
            }
        }
        assert_eq!(ok, 10);
    }
}
