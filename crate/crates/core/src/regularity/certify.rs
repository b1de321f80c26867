use alloc::format;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex, VertexSet};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifyMode {
    /// Decision procedure; requires `|x| + |y| ≤ 24`.
    Exhaustive,
    /// One-sided search over `budget` witness pairs at the threshold sizes.
    Sampled { budget: usize },
}

/// Subsets `U₁ ⊆ x`, `U₂ ⊆ y` at least the threshold sizes with density
/// below `δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub u1: Vec<Vertex>,
    pub u2: Vec<Vertex>,
    pub edges: usize,
    pub density: f64,
}

impl Counterexample {
    /// Recomputes everything from the graph.
    pub fn reverify(&self, g: &Graph, x: &VertexSet, y: &VertexSet, eps: f64, delta: f64) -> bool {
        let u1 = VertexSet::from_iter(g.n(), self.u1.iter().copied());
        let u2 = VertexSet::from_iter(g.n(), self.u2.iter().copied());
        if u1.len() != self.u1.len() || u2.len() != self.u2.len() || !u1.is_subset(x) || !u2.is_subset(y) {
            return false;
        }
        if u1.len() < threshold_size(eps, x.len()) || u2.len() < threshold_size(eps, y.len()) {
            return false;
        }
        let edges: usize = u1.iter().map(|u| g.neighbors(u).iter().filter(|&&w| u2.contains(w)).count()).sum();
        edges == self.edges && below(edges, u1.len(), u2.len(), delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Density(Counterexample),
    Degree { vertex: Vertex, degree: usize, required: f64 },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Smallest subset size `s` with `s ≥ ε·size`, kept within `1..=size`.
pub fn threshold_size(eps: f64, size: usize) -> usize {
    if eps >= 1.0 {
        return size;
    }
    (libm::ceil(eps * size as f64 - 1e-9) as usize).clamp(1.min(size), size)
}

fn below(edges: usize, s1: usize, s2: usize, delta: f64) -> bool {
    (edges as f64) < delta * (s1 * s2) as f64
}

fn check_sides(x: &VertexSet, y: &VertexSet) -> Result<()> {
    if x.is_empty() || y.is_empty() || !x.is_disjoint(y) {
        return Err(Error::InvalidVertexSets);
    }
    Ok(())
}

/// For a fixed `U₂`, the `U₁ ⊆ side` of size `s` with fewest edges to `U₂`
/// is the `s` vertices of lowest degree into `U₂`. Returns a witness if
/// some size `s ≥ s_min` falls below `δ`.
fn best_response(g: &Graph, side: &[Vertex], u2: &VertexSet, s_min: usize, delta: f64) -> Option<(Vec<Vertex>, usize)> {
    let mut degs: Vec<(usize, Vertex)> = side.iter().map(|&v| (g.degree_into(v, u2), v)).collect();
    degs.sort_unstable();
    let mut edges = 0;
    for (s, &(d, _)) in degs.iter().enumerate() {
        edges += d;
        if s + 1 >= s_min && below(edges, s + 1, u2.len(), delta) {
            return Some((degs[..=s].iter().map(|p| p.1).collect(), edges));
        }
    }
    None
}

fn witness(u1: Vec<Vertex>, u2: Vec<Vertex>, edges: usize) -> Verdict {
    let density = edges as f64 / (u1.len() * u2.len()) as f64;
    let (mut u1, mut u2) = (u1, u2);
    u1.sort_unstable();
    u2.sort_unstable();
    Verdict::Density(Counterexample { u1, u2, edges, density })
}

/// Looks for `U₁ ⊆ x`, `U₂ ⊆ y` with `|U_h| ≥ ε|V_h|` and `d(U₁, U₂) < δ`.
pub fn certify_dense(
    g: &Graph,
    x: &VertexSet,
    y: &VertexSet,
    eps: f64,
    delta: f64,
    mode: CertifyMode,
    rng: &mut StreamRng,
) -> Result<Verdict> {
    check_sides(x, y)?;
    let (xs, ys) = (x.to_vec(), y.to_vec());
    let (tx, ty) = (threshold_size(eps, xs.len()), threshold_size(eps, ys.len()));
    match mode {
        CertifyMode::Exhaustive => {
            if xs.len() + ys.len() > 24 {
                return Err(Error::InvalidParameter(format!(
                    "exhaustive certification on {} + {} vertices",
                    xs.len(),
                    ys.len()
                )));
            }
            // Enumerate the smaller side and answer with the best response.
            let swap = ys.len() > xs.len();
            let (outer, inner, t_outer, t_inner) = if swap { (&xs, &ys, tx, ty) } else { (&ys, &xs, ty, tx) };
            for mask in 1u32..(1u32 << outer.len()) {
                if (mask.count_ones() as usize) < t_outer {
                    continue;
                }
                let u = VertexSet::from_iter(g.n(), (0..outer.len()).filter(|&j| mask >> j & 1 == 1).map(|j| outer[j]));
                if let Some((w, edges)) = best_response(g, inner, &u, t_inner, delta) {
                    let u = u.to_vec();
                    return Ok(if swap { witness(u, w, edges) } else { witness(w, u, edges) });
                }
            }
            Ok(Verdict::Pass)
        }
        CertifyMode::Sampled { budget } => {
            let full = g.edges_between(x, y);
            if below(full, xs.len(), ys.len(), delta) {
                return Ok(witness(xs, ys, full));
            }
            for round in 0..budget {
                // Alternate which side is drawn at random.
                let (drawn, other, t_drawn, t_other, from_y) =
                    if round % 2 == 0 { (&ys, &xs, ty, tx, true) } else { (&xs, &ys, tx, ty, false) };
                let pick = index::sample(rng, drawn.len(), t_drawn);
                let u = VertexSet::from_iter(g.n(), pick.iter().map(|j| drawn[j]));
                if let Some((w, edges)) = best_response(g, other, &u, t_other, delta) {
                    let u = u.to_vec();
                    return Ok(if from_y { witness(w, u, edges) } else { witness(u, w, edges) });
                }
            }
            Ok(Verdict::Pass)
        }
    }
}

/// [`certify_dense`] plus the degree clause: every vertex has at least
/// `δ·|partner|` neighbours in the partner set.
pub fn certify_super_regular(
    g: &Graph,
    x: &VertexSet,
    y: &VertexSet,
    eps: f64,
    delta: f64,
    mode: CertifyMode,
    rng: &mut StreamRng,
) -> Result<Verdict> {
    check_sides(x, y)?;
    for (side, partner) in [(x, y), (y, x)] {
        let required = delta * partner.len() as f64;
        for v in side.iter() {
            let degree = g.degree_into(v, partner);
            if (degree as f64) < required {
                return Ok(Verdict::Degree { vertex: v, degree, required });
            }
        }
    }
    certify_dense(g, x, y, eps, delta, mode, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMeasurement {
    pub density: f64,
    /// Smallest `deg(v, partner)/|partner|` over both sides.
    pub min_degree_fraction: f64,
    /// Smallest density seen among sampled threshold-size witnesses.
    pub min_sampled_density: f64,
}

impl PairMeasurement {
    /// Largest `δ` the pair could certify at this `ε`, as far as sampling saw.
    pub fn tightest_delta(&self) -> f64 {
        libm::fmin(self.min_degree_fraction, self.min_sampled_density)
    }
}

pub fn measure_pair(
    g: &Graph,
    x: &VertexSet,
    y: &VertexSet,
    eps: f64,
    budget: usize,
    rng: &mut StreamRng,
) -> Result<PairMeasurement> {
    check_sides(x, y)?;
    let (xs, ys) = (x.to_vec(), y.to_vec());
    let density = g.edges_between(x, y) as f64 / (xs.len() * ys.len()) as f64;
    let mut min_degree_fraction = f64::INFINITY;
    for (side, partner) in [(&xs, y), (&ys, x)] {
        for &v in side {
            min_degree_fraction = min_degree_fraction.min(g.degree_into(v, partner) as f64 / partner.len() as f64);
        }
    }
    let (tx, ty) = (threshold_size(eps, xs.len()), threshold_size(eps, ys.len()));
    let mut min_sampled_density = density;
    for round in 0..budget {
        let (drawn, other, t_drawn, t_other) = if round % 2 == 0 { (&ys, &xs, ty, tx) } else { (&xs, &ys, tx, ty) };
        let pick = index::sample(rng, drawn.len(), t_drawn);
        let u = VertexSet::from_iter(g.n(), pick.iter().map(|j| drawn[j]));
        let mut degs: Vec<usize> = other.iter().map(|&v| g.degree_into(v, &u)).collect();
        degs.sort_unstable();
        let edges: usize = degs[..t_other].iter().sum();
        min_sampled_density = min_sampled_density.min(edges as f64 / (t_other * t_drawn) as f64);
    }
    Ok(PairMeasurement { density, min_degree_fraction, min_sampled_density })
}

/// Draws uniformly random subsets of sizes `sizes` from `x` and `y` and
/// certifies the sub-pair as `(ε′, δ/2)`-super-regular.
#[allow(clippy::too_many_arguments)]
pub fn subset_inherits(
    g: &Graph,
    x: &VertexSet,
    y: &VertexSet,
    sizes: (usize, usize),
    eps_prime: f64,
    delta: f64,
    mode: CertifyMode,
    rng: &mut StreamRng,
) -> Result<Verdict> {
    if sizes.0 == 0 || sizes.1 == 0 || sizes.0 > x.len() || sizes.1 > y.len() {
        return Err(Error::InvalidParameter(format!("subset sizes {sizes:?} for sides {} and {}", x.len(), y.len())));
    }
    let mut draw = |side: &VertexSet, size: usize| {
        let mut members = side.to_vec();
        members.shuffle(rng);
        VertexSet::from_iter(g.n(), members.into_iter().take(size))
    };
    let (sx, sy) = (draw(x, sizes.0), draw(y, sizes.1));
    certify_super_regular(g, &sx, &sy, eps_prime, delta / 2.0, mode, rng)
}
