//! Explicit embeddings of bounded-degree spanning trees into randomly
//! perturbed dense graphs `G ∪ R`, where `G` has minimum degree `αn` and
//! `R` is a sparse binomial random graph split into four independent phases.
//!
//! The crate is `no_std` (with `alloc`). Everything that touches the file
//! system, the clock or threads lives in the companion `perturbed-embed`
//! crate.
//!
//! Layout:
//! - [`graph`]: host graphs, vertex sets, `G(n, p)` sampling, phase plans.
//! - [`tree`]: bounded-degree tree generation, leaves, bare paths.
//! - [`matching`]: bipartite maximum matching and maximal matchings.
//! - [`stars`]: Hall conditions and disjoint star packings (many-leaves case).
//! - [`regularity`]: dense / super-regular pair certification and the
//!   partition of a dense graph into super-regular partner clusters.
//! - [`almost_spanning`]: greedy forest embedding and the independent validator.
//! - [`pipeline`]: the staged embedding of a spanning tree.
#![no_std]

extern crate alloc;

pub mod almost_spanning;
pub mod error;
pub mod graph;
pub mod matching;
pub mod pipeline;
pub mod regularity;
pub mod rng;
pub mod stars;
pub mod tree;

pub use almost_spanning::{embed_forest_greedy, verify_embedding, Embedding, EmbeddingViolation};
pub use error::{Error, Result};
pub use graph::{Graph, PerturbationPlan, Vertex, VertexSet};
pub use tree::{BarePathDecomposition, Tree, TreeShape};
