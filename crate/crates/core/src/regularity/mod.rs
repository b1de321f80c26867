//! Dense and super-regular pairs: certification, parameter bookkeeping, star
//! covers, and a partition of a dense graph into certified partner clusters.

mod certify;
mod cover;
mod partition;

pub use certify::{
    certify_dense, certify_super_regular, measure_pair, subset_inherits, threshold_size, CertifyMode, Counterexample,
    PairMeasurement, Verdict,
};
pub use cover::{star_cover, Star};
pub use partition::{build_partition, ClusterId, ClusterPartition, PartitionFailure, PartitionStats, Strategy};

use alloc::format;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default number of witness pairs drawn by sampled certification.
pub const DEFAULT_WITNESS_BUDGET: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityParams {
    pub epsilon: f64,
    pub delta: f64,
    pub witness_budget: usize,
}

impl RegularityParams {
    pub fn new(epsilon: f64, delta: f64, witness_budget: usize) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x < 1.0;
        if !ok(epsilon) || !ok(delta) {
            return Err(Error::InvalidParameter(format!("need 0 < ε, δ < 1, got ε = {epsilon}, δ = {delta}")));
        }
        Ok(RegularityParams { epsilon, delta, witness_budget })
    }
}

/// `δ / r`: density lower bound after merging `r` clusters on one side.
pub fn combine_delta(delta: f64, r: f64) -> f64 {
    delta / r
}

/// `max{2f, 1 + f}·ε`: regularity after growing each side by a fraction `f`.
pub fn robust_eps(eps: f64, f: f64) -> f64 {
    libm::fmax(2.0 * f, 1.0 + f) * eps
}

/// `min{1/4, 1/(1 + f·ε)}·δ`.
pub fn robust_delta(delta: f64, f: f64, eps: f64) -> f64 {
    libm::fmin(0.25, 1.0 / (1.0 + f * eps)) * delta
}

/// An `(ε, δ)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub epsilon: f64,
    pub delta: f64,
}

/// Constants for pairs after endpoint fixing:
/// `(ρ(k−1)ε₂/(1−δ₂/2), δ₂/2)`.
pub fn move_ok_level(eps2: f64, delta2: f64, rho: f64, k: usize) -> Level {
    Level { epsilon: rho * (k as f64 - 1.0) * eps2 / (1.0 - delta2 / 2.0), delta: delta2 / 2.0 }
}

/// The four stage levels of the spanning construction, starting from the
/// partition's `(ε₁, δ₁)`. `k` is the path length before endpoint fixing.
/// The random-subset step keeps `ε₂ = ε₁` here; the ratio bound doubles
/// between the third and fourth levels.
pub fn stage_levels(eps1: f64, delta1: f64, rho: f64, k: usize) -> [Level; 4] {
    let l1 = Level { epsilon: eps1, delta: delta1 };
    let l2 = Level { epsilon: eps1, delta: delta1 / 2.0 };
    let l3 = move_ok_level(l2.epsilon, l2.delta, rho, k);
    let rho4 = 2.0 * rho;
    let l4 = Level { epsilon: 3.0 * rho4 * rho4 * l3.epsilon, delta: l3.delta / 4.0 };
    [l1, l2, l3, l4]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_examples() {
        assert_eq!(combine_delta(0.4, 2.0), 0.2);
        assert!((robust_eps(0.1, 1.0) - 0.2).abs() < 1e-15);
        assert_eq!(robust_delta(0.3, 1.0, 0.1), 0.3 / 4.0);
        assert_eq!(robust_eps(0.17, 0.0), 0.17);
        assert_eq!(combine_delta(0.33, 1.0), 0.33);
    }

    #[test]
    fn stage_chain() {
        let [l1, l2, l3, l4] = stage_levels(0.01, 0.4, 2.0, 9);
        assert_eq!(l1, Level { epsilon: 0.01, delta: 0.4 });
        assert_eq!(l2.delta, 0.2);
        assert!((l3.epsilon - 2.0 * 8.0 * 0.01 / 0.9).abs() < 1e-12);
        assert_eq!(l3.delta, 0.1);
        assert!((l4.epsilon - 48.0 * l3.epsilon).abs() < 1e-12);
        assert_eq!(l4.delta, 0.025);
    }

    #[test]
    fn params_validation() {
        assert!(RegularityParams::new(0.2, 0.3, 10).is_ok());
        assert!(RegularityParams::new(0.0, 0.3, 10).is_err());
        assert!(RegularityParams::new(0.2, 1.0, 10).is_err());
    }
}
