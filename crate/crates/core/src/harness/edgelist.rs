//! Plain-text edge lists.
//!
//! ```text
//! # optional comments anywhere
//! n m
//! u v        (m lines, 0-based, whitespace separated)
//! ```

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::graph::{Graph, GraphError};

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("header declares {declared} edges but {found} were listed")]
    EdgeCount { declared: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn parse_edge_list(text: &str) -> Result<Graph, EdgeListError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: &str| EdgeListError::Syntax { line: i + 1, msg: msg.to_string() };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = fields[..] else {
            return Err(syntax("expected two integers"));
        };
        let a: usize = a.parse().map_err(|_| syntax("not a non-negative integer"))?;
        let b: usize = b.parse().map_err(|_| syntax("not a non-negative integer"))?;
        match header {
            None => header = Some((a, b)),
            Some(_) => edges.push((a, b)),
        }
    }
    let (n, m) = header.ok_or(EdgeListError::Syntax { line: 0, msg: "missing `n m` header".into() })?;
    if edges.len() != m {
        return Err(EdgeListError::EdgeCount { declared: m, found: edges.len() });
    }
    Ok(Graph::from_edges(n, edges)?)
}

pub fn read_edge_list(path: &Path) -> Result<Graph, EdgeListError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| EdgeListError::Io { path: path.display().to_string(), source })?;
    parse_edge_list(&text)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
