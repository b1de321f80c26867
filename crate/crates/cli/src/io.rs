//! Plain-text edge lists and trees, and JSON partitions.
//!
//! Edge list: a header line `n m`, then `m` lines `u v`. Tree: a header line
//! `n`, then `n − 1` lines `parent child`. Blank lines and lines starting
//! with `#` are ignored in both.

use std::fs;
use std::path::Path;

use perturbed_embed_core::regularity::ClusterPartition;
use perturbed_embed_core::{Graph, Tree, Vertex};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] perturbed_embed_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn numbers<const N: usize>(line: usize, text: &str) -> Result<[usize; N], FormatError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != N {
        return Err(parse_err(line, format!("expected {N} fields, found {}", fields.len())));
    }
    let mut out = [0; N];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f.parse().map_err(|e| parse_err(line, format!("{f:?}: {e}")))?;
    }
    Ok(out)
}

pub fn parse_edge_list(text: &str) -> Result<Graph, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing `n m` header"))?;
    let [n, m] = numbers::<2>(hl, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let [u, v] = numbers::<2>(line, text)?;
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(parse_err(hl, format!("header announces {m} edges, found {}", edges.len())));
    }
    Ok(Graph::from_edges(n, edges)?)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn read_edge_list(path: &Path) -> Result<Graph, FormatError> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<(), FormatError> {
    Ok(fs::write(path, format_edge_list(g))?)
}

pub fn parse_tree(text: &str) -> Result<Tree, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing `n` header"))?;
    let [n] = numbers::<1>(hl, header)?;
    let mut parent: Vec<Option<Vertex>> = vec![None; n];
    let mut count = 0;
    for (line, text) in lines {
        let [p, c] = numbers::<2>(line, text)?;
        if c >= n || p >= n {
            return Err(parse_err(line, format!("vertex out of range for n = {n}")));
        }
        if parent[c].replace(p).is_some() {
            return Err(parse_err(line, format!("vertex {c} has two parents")));
        }
        count += 1;
    }
    if n > 0 && count != n - 1 {
        return Err(parse_err(hl, format!("a tree on {n} vertices needs {} edges, found {count}", n - 1)));
    }
    Ok(Tree::from_parents(parent)?)
}

pub fn format_tree(t: &Tree) -> String {
    let mut out = format!("{}\n", t.n());
    for (p, c) in t.edges() {
        out.push_str(&format!("{p} {c}\n"));
    }
    out
}

pub fn read_tree(path: &Path) -> Result<Tree, FormatError> {
    parse_tree(&fs::read_to_string(path)?)
}

pub fn write_tree(path: &Path, t: &Tree) -> Result<(), FormatError> {
    Ok(fs::write(path, format_tree(t))?)
}

pub fn partition_json(p: &ClusterPartition) -> Result<String, FormatError> {
    Ok(serde_json::to_string_pretty(p)?)
}

pub fn write_partition(path: &Path, p: &ClusterPartition) -> Result<(), FormatError> {
    Ok(fs::write(path, partition_json(p)?)?)
}
