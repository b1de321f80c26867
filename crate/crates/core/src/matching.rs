//! Bipartite matchings on explicit left/right adjacency lists.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

const FREE: usize = usize::MAX;

/// A matching between left vertices `0..left` and right vertices `0..right`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub left_to_right: Vec<Option<usize>>,
    pub right_to_left: Vec<Option<usize>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.left_to_right.iter().flatten().count()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left_to_right.iter().enumerate().filter_map(|(l, r)| r.map(|r| (l, r)))
    }
}

/// Maximum matching by Hopcroft–Karp. Free left vertices are processed in
/// increasing order and neighbours are tried in ascending order, so the
/// result is a deterministic function of the input.
pub fn maximum_matching(left: usize, right: usize, adj: &[Vec<usize>]) -> Matching {
    assert_eq!(adj.len(), left);
    let adj: Vec<Vec<usize>> = adj
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.sort_unstable();
            row.dedup();
            debug_assert!(row.iter().all(|&r| r < right));
            row
        })
        .collect();
    let mut mate_l = alloc::vec![FREE; left];
    let mut mate_r = alloc::vec![FREE; right];
    let mut dist = alloc::vec![0usize; left];
    let mut next = alloc::vec![0usize; left];
    loop {
        // Layer the graph from the free left vertices.
        let mut queue = VecDeque::new();
        for l in 0..left {
            if mate_l[l] == FREE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                match mate_r[r] {
                    FREE => found = true,
                    m if dist[m] == usize::MAX => {
                        dist[m] = dist[l] + 1;
                        queue.push_back(m);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        next.iter_mut().for_each(|n| *n = 0);
        for l in 0..left {
            if mate_l[l] == FREE {
                augment(l, &adj, &mut mate_l, &mut mate_r, &mut dist, &mut next);
            }
        }
    }
    let wrap = |v: Vec<usize>| v.into_iter().map(|m| (m != FREE).then_some(m)).collect();
    Matching { left_to_right: wrap(mate_l), right_to_left: wrap(mate_r) }
}

/// Iterative layered DFS for one augmenting path from the free vertex `root`.
fn augment(
    root: usize,
    adj: &[Vec<usize>],
    mate_l: &mut [usize],
    mate_r: &mut [usize],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    let mut stack = alloc::vec![root];
    while let Some(&l) = stack.last() {
        if next[l] >= adj[l].len() {
            dist[l] = usize::MAX;
            stack.pop();
            continue;
        }
        let r = adj[l][next[l]];
        next[l] += 1;
        let m = mate_r[r];
        if m == FREE {
            // Flip the path: each stacked left vertex takes the right vertex
            // it was exploring.
            let mut r = r;
            while let Some(l) = stack.pop() {
                let prev = mate_l[l];
                mate_l[l] = r;
                mate_r[r] = l;
                r = prev;
            }
            return true;
        }
        if dist[m] == dist[l] + 1 {
            stack.push(m);
        }
    }
    false
}

/// Greedy maximal matching scanning left vertices in the given order.
pub fn maximal_matching(left_order: &[usize], right: usize, adj: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut taken = alloc::vec![false; right];
    let mut pairs = Vec::new();
    for &l in left_order {
        if let Some(&r) = adj[l].iter().find(|&&r| !taken[r]) {
            taken[r] = true;
            pairs.push((l, r));
        }
    }
    pairs
}

/// Left vertices reachable by alternating paths from unmatched left vertices.
/// For a maximum matching that is not left-perfect this set violates Hall's
/// condition.
pub fn hall_violator(m: &Matching, adj: &[Vec<usize>]) -> Vec<usize> {
    let left = m.left_to_right.len();
    let mut seen = alloc::vec![false; left];
    let mut queue: VecDeque<usize> = (0..left).filter(|&l| m.left_to_right[l].is_none()).collect();
    for &l in &queue {
        seen[l] = true;
    }
    while let Some(l) = queue.pop_front() {
        for &r in &adj[l] {
            if let Some(w) = m.right_to_left[r] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    (0..left).filter(|&l| seen[l]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(left: usize, right: usize, adj: &[Vec<usize>]) -> usize {
        fn go(l: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if l == adj.len() {
                return 0;
            }
            let mut best = go(l + 1, adj, used);
            for &r in &adj[l] {
                if !used[r] {
                    used[r] = true;
                    best = best.max(1 + go(l + 1, adj, used));
                    used[r] = false;
                }
            }
            best
        }
        let _ = left;
        go(0, adj, &mut alloc::vec![false; right])
    }

    fn check(m: &Matching, adj: &[Vec<usize>]) {
        for (l, r) in m.pairs() {
            assert!(adj[l].contains(&r));
            assert_eq!(m.right_to_left[r], Some(l));
        }
    }

    #[test]
    fn perfect_on_complete() {
        let adj: Vec<Vec<usize>> = (0..5).map(|_| (0..5).collect()).collect();
        let m = maximum_matching(5, 5, &adj);
        assert_eq!(m.size(), 5);
        // Lowest-index tie-break pairs l with l.
        assert_eq!(m.pairs().collect::<Vec<_>>(), [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)]);
    }

    #[test]
    fn needs_augmentation() {
        let adj = alloc::vec![alloc::vec![0, 1], alloc::vec![0]];
        let m = maximum_matching(2, 2, &adj);
        assert_eq!(m.size(), 2);
        assert_eq!(m.left_to_right, [Some(1), Some(0)]);
    }

    #[test]
    fn violator_on_deficient_graph() {
        let adj = alloc::vec![alloc::vec![0], alloc::vec![0], alloc::vec![0, 1, 2]];
        let m = maximum_matching(3, 3, &adj);
        assert_eq!(m.size(), 2);
        assert_eq!(hall_violator(&m, &adj), [0, 1]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(left in 0usize..7, right in 0usize..7, bits in proptest::collection::vec(any::<bool>(), 49)) {
            let adj: Vec<Vec<usize>> = (0..left)
                .map(|l| (0..right).filter(|&r| bits[l * 7 + r]).collect())
                .collect();
            let m = maximum_matching(left, right, &adj);
            check(&m, &adj);
            prop_assert_eq!(m.size(), brute_force(left, right, &adj));
            let violator = hall_violator(&m, &adj);
            if m.size() < left {
                let mut nbrs: Vec<usize> = violator.iter().flat_map(|&l| adj[l].iter().copied()).collect();
                nbrs.sort_unstable();
                nbrs.dedup();
                prop_assert!(nbrs.len() < violator.len());
            } else {
                prop_assert!(violator.is_empty());
            }
            let order: Vec<usize> = (0..left).collect();
            let maximal = maximal_matching(&order, right, &adj);
            prop_assert!(2 * maximal.len() >= m.size());
        }
    }
}
