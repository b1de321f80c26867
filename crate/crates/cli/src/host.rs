use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use perturbed_embed_core::graph::{generate_gnp_with, min_degree};
use perturbed_embed_core::rng::StreamRng;
use perturbed_embed_core::Graph;

use crate::io::{read_edge_list, FormatError};

/// Resampling attempts for a `G(n, p)` host meeting the degree condition.
const MAX_HOST_DRAWS: usize = 1000;

/// Where the dense host graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum HostSpec {
    /// `G(n, p)` conditioned on minimum degree at least `αn`.
    Gnp(f64),
    /// Complete bipartite graph with parts in proportion `a : b`.
    Bipartite(usize, usize),
    File(PathBuf),
}

#[derive(Debug, thiserror::Error)]
pub enum HostError {
    #[error("bad host spec {0:?}: expected gnp:<p>, bipartite:<a>:<b> or file:<path>")]
    Syntax(String),
    #[error("no G({n}, {p}) draw out of {MAX_HOST_DRAWS} reached minimum degree {alpha}·n")]
    DegreeCondition { n: usize, p: f64, alpha: f64 },
    #[error("host file has {found} vertices, expected {expected}")]
    Size { found: usize, expected: usize },
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl FromStr for HostSpec {
    type Err = HostError;

    fn from_str(s: &str) -> Result<Self, HostError> {
        let bad = || HostError::Syntax(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "gnp" => {
                let p: f64 = rest.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad());
                }
                Ok(HostSpec::Gnp(p))
            }
            "bipartite" => {
                let (a, b) = rest.split_once(':').ok_or_else(bad)?;
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a == 0 || b == 0 {
                    return Err(bad());
                }
                Ok(HostSpec::Bipartite(a, b))
            }
            "file" if !rest.is_empty() => Ok(HostSpec::File(PathBuf::from(rest))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for HostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HostSpec::Gnp(p) => write!(f, "gnp:{p}"),
            HostSpec::Bipartite(a, b) => write!(f, "bipartite:{a}:{b}"),
            HostSpec::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl HostSpec {
    /// Builds an `n`-vertex host. The degree condition is enforced by
    /// resampling for `gnp` only; the other kinds are returned as they are.
    pub fn build(&self, n: usize, alpha: f64, rng: &mut StreamRng) -> Result<Graph, HostError> {
        match self {
            HostSpec::Gnp(p) => {
                for _ in 0..MAX_HOST_DRAWS {
                    let g = generate_gnp_with(n, *p, rng).expect("validated probability");
                    if n == 0 || min_degree(&g).expect("non-empty") as f64 >= alpha * n as f64 - 1e-9 {
                        return Ok(g);
                    }
                }
                Err(HostError::DegreeCondition { n, p: *p, alpha })
            }
            HostSpec::Bipartite(a, b) => {
                let left = (n * a + (a + b) / 2) / (a + b);
                Ok(Graph::complete_bipartite(left, n - left))
            }
            HostSpec::File(path) => {
                let g = read_edge_list(path)?;
                if g.n() != n {
                    return Err(HostError::Size { found: g.n(), expected: n });
                }
                Ok(g)
            }
        }
    }
}
