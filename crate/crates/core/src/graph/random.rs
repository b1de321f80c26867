use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{union_all, Graph, Vertex};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Number of independent random phases `R₁ … R₄`.
pub const PHASES: usize = 4;

/// Binomial random graph `G(n, p)`: every pair independently with
/// probability `p`, drawn in lexicographic pair order from the seeded stream.
pub fn generate_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    generate_gnp_with(n, p, &mut rng::stream(seed, &[]))
}

pub fn generate_gnp_with(n: usize, p: f64, rng: &mut StreamRng) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// A uniformly random permutation of `0..n`.
pub fn relabel_uniformly(n: usize, rng: &mut StreamRng) -> Vec<Vertex> {
    let mut perm: Vec<Vertex> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// The random perturbation `R ⊇ R₁ ∪ R₂ ∪ R₃ ∪ R₄`, with `Rᵢ ~ G(n, cᵢ/n)`
/// drawn independently from per-phase streams of `seed`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationPlan {
    pub phase_densities: [f64; PHASES],
    pub seed: u64,
}

impl PerturbationPlan {
    pub fn new(phase_densities: [f64; PHASES], seed: u64) -> Result<Self> {
        if let Some(&p) = phase_densities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(PerturbationPlan { phase_densities, seed })
    }

    /// Splits a total budget `c` into phases `cᵢ = split[i] · c / Σ split`,
    /// each with edge probability `min(cᵢ / n, 1)`.
    pub fn from_budget(n: usize, c: f64, split: [f64; PHASES], seed: u64) -> Result<Self> {
        let total: f64 = split.iter().sum();
        if !(c >= 0.0) || split.iter().any(|s| !(*s >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("budget c = {c}, split = {split:?}")));
        }
        let densities = split.map(|s| if n == 0 { 0.0 } else { (c * s / total / n as f64).min(1.0) });
        Self::new(densities, seed)
    }

    /// Probability that a fixed pair is an edge of the union of all phases.
    pub fn union_edge_probability(&self) -> f64 {
        1.0 - self.phase_densities.iter().map(|p| 1.0 - p).product::<f64>()
    }

    pub fn sample_phase(&self, n: usize, phase: usize) -> Graph {
        let mut rng = rng::stream(self.seed, &[rng::tag::PHASES, phase as u64]);
        generate_gnp_with(n, self.phase_densities[phase], &mut rng).expect("validated densities")
    }

    pub fn sample(&self, n: usize) -> [Graph; PHASES] {
        core::array::from_fn(|i| self.sample_phase(n, i))
    }

    pub fn sample_union(&self, n: usize) -> Graph {
        union_all(n, self.sample(n).iter()).expect("phases share n")
    }
}
