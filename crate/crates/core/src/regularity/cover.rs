use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{min_degree, Graph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Star {
    pub center: Vertex,
    pub leaves: Vec<Vertex>,
}

impl Star {
    pub fn size(&self) -> usize {
        1 + self.leaves.len()
    }
}

const NONE: usize = usize::MAX;

/// Covers `g` by vertex-disjoint stars with between 2 and `1 + ⌊1/α⌋`
/// vertices, by exchange moves: an uncovered vertex joins an adjacent
/// centre whose star has room (either end of a 2-vertex star may act as
/// centre), otherwise steals an adjacent leaf of a star with at least 3
/// vertices to form a new 2-vertex star, otherwise pairs with an adjacent
/// uncovered vertex.
///
/// For `α > 1/2` the size cap is 2 and a cover need not exist (a triangle);
/// that case is reported as an error.
pub fn star_cover(g: &Graph, alpha: f64) -> Result<Vec<Star>> {
    let n = g.n();
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("α = {alpha} outside (0, 1]")));
    }
    let delta = min_degree(g)?;
    if (delta as f64) < alpha * n as f64 - 1e-9 {
        return Err(Error::MinDegreeTooSmall { min_degree: delta, alpha, n });
    }
    let cap = 1 + libm::floor(1.0 / alpha + 1e-9) as usize;
    // star[v]: index of v's star; stars[s] = (center, leaves).
    let mut star = alloc::vec![NONE; n];
    let mut stars: Vec<(Vertex, Vec<Vertex>)> = Vec::new();
    let mut free: Vec<usize> = Vec::new();

    for v in 0..n {
        if star[v] != NONE {
            continue;
        }
        let mut covered = false;
        // Move 1: join a centre with room.
        for &w in g.neighbors(v) {
            let s = star[w];
            if s == NONE {
                continue;
            }
            let (c, leaves) = &mut stars[s];
            if 1 + leaves.len() >= cap {
                continue;
            }
            if *c != w {
                if leaves.len() != 1 {
                    continue;
                }
                // Re-root the 2-vertex star at w.
                let old = *c;
                *c = w;
                leaves[0] = old;
            }
            leaves.push(v);
            star[v] = s;
            covered = true;
            break;
        }
        if covered {
            continue;
        }
        // Move 2: steal a leaf of a star with at least 3 vertices.
        for &w in g.neighbors(v) {
            let s = star[w];
            if s == NONE || stars[s].0 == w || stars[s].1.len() < 2 {
                continue;
            }
            stars[s].1.retain(|&u| u != w);
            let t = free.pop().unwrap_or_else(|| {
                stars.push((NONE, Vec::new()));
                stars.len() - 1
            });
            stars[t] = (w, alloc::vec![v]);
            star[w] = t;
            star[v] = t;
            covered = true;
            break;
        }
        if covered {
            continue;
        }
        // Seed a new 2-vertex star with an uncovered neighbour.
        if let Some(&w) = g.neighbors(v).iter().find(|&&w| star[w] == NONE) {
            stars.push((v, alloc::vec![w]));
            star[v] = stars.len() - 1;
            star[w] = stars.len() - 1;
            continue;
        }
        return Err(Error::InvalidParameter(format!(
            "vertex {v} is only adjacent to full stars; no cover with stars of at most {cap} vertices"
        )));
    }
    let out: Vec<Star> = stars
        .into_iter()
        .map(|(center, mut leaves)| {
            leaves.sort_unstable();
            Star { center, leaves }
        })
        .collect();
    check_cover(g, &out, cap);
    Ok(out)
}

fn check_cover(g: &Graph, stars: &[Star], cap: usize) {
    let mut seen = alloc::vec![false; g.n()];
    for s in stars {
        assert!((2..=cap).contains(&s.size()), "star of size {}", s.size());
        for &v in core::iter::once(&s.center).chain(&s.leaves) {
            assert!(!core::mem::replace(&mut seen[v], true), "vertex {v} covered twice");
        }
        for &l in &s.leaves {
            assert!(g.has_edge(s.center, l));
        }
    }
    assert!(seen.iter().all(|&b| b), "cover is not spanning");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4() {
        let s = star_cover(&Graph::complete(4), 0.5).unwrap();
        assert_eq!(s.iter().map(Star::size).sum::<usize>(), 4);
        assert!(s.iter().all(|s| s.size() <= 3));
    }

    #[test]
    fn four_cycle_gives_two_edges() {
        let s = star_cover(&Graph::cycle(4), 0.5).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|s| s.size() == 2));
    }

    #[test]
    fn single_edge() {
        let s = star_cover(&Graph::complete(2), 0.5).unwrap();
        assert_eq!(s, [Star { center: 0, leaves: alloc::vec![1] }]);
    }

    #[test]
    fn triangle_with_large_alpha_has_no_cover() {
        assert!(star_cover(&Graph::complete(3), 2.0 / 3.0).is_err());
        assert_eq!(star_cover(&Graph::complete(3), 0.5).unwrap().len(), 1);
    }

    #[test]
    fn precondition() {
        assert!(matches!(star_cover(&Graph::path(5), 0.3), Err(Error::MinDegreeTooSmall { .. })));
    }

    #[test]
    fn star_graph_needs_one_big_star() {
        let g = Graph::complete_bipartite(1, 5);
        let s = star_cover(&g, 1.0 / 6.0).unwrap();
        assert_eq!(s, [Star { center: 0, leaves: alloc::vec![1, 2, 3, 4, 5] }]);
    }
}
