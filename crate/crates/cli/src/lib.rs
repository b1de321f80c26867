//! File formats, host construction and the seeded Monte Carlo harness around
//! `perturbed-embed-core`.

pub mod harness;
pub mod host;
pub mod io;
