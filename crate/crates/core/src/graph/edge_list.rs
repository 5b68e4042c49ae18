//! Edge-list text format: a header line `N M` followed by `M` lines `u v`
//! (0-based, decimal, space separated).

use std::fmt::Write;

use super::{Graph, GraphError, Vertex};

fn parse_field(tok: Option<&str>, line: usize, what: &str) -> Result<u64, GraphError> {
    let tok = tok.ok_or_else(|| GraphError::Malformed { line, reason: format!("missing {what}") })?;
    tok.parse::<u64>()
        .map_err(|_| GraphError::Malformed { line, reason: format!("bad {what} '{tok}'") })
}

pub fn load_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines
        .next()
        .ok_or(GraphError::Malformed { line: 1, reason: "empty input".into() })?;
    let mut toks = header.split_whitespace();
    let n = parse_field(toks.next(), hl + 1, "vertex count")? as usize;
    let m = parse_field(toks.next(), hl + 1, "edge count")? as usize;
    if toks.next().is_some() {
        return Err(GraphError::Malformed { line: hl + 1, reason: "trailing tokens in header".into() });
    }
    // (neighbor, line) so that a duplicate can be reported at its second occurrence
    let mut adjacency: Vec<Vec<(Vertex, usize)>> = vec![Vec::new(); n];
    let mut seen = 0usize;
    for (i, l) in lines {
        let line = i + 1;
        let mut toks = l.split_whitespace();
        let u = parse_field(toks.next(), line, "endpoint")?;
        let v = parse_field(toks.next(), line, "endpoint")?;
        if toks.next().is_some() {
            return Err(GraphError::Malformed { line, reason: "trailing tokens".into() });
        }
        for w in [u, v] {
            if w >= n as u64 {
                return Err(GraphError::OutOfRange { line, vertex: w, n });
            }
        }
        let (u, v) = (u as Vertex, v as Vertex);
        if u == v {
            return Err(GraphError::SelfLoop { line, vertex: u });
        }
        adjacency[u as usize].push((v, line));
        adjacency[v as usize].push((u, line));
        seen += 1;
    }
    let mut duplicate: Option<(usize, Vertex, Vertex)> = None;
    for (u, list) in adjacency.iter_mut().enumerate() {
        list.sort_unstable();
        for w in list.windows(2) {
            if w[0].0 == w[1].0 {
                let line = w[0].1.max(w[1].1);
                if duplicate.is_none_or(|(l, _, _)| line < l) {
                    let (a, b) = (u as Vertex, w[0].0);
                    duplicate = Some((line, a.min(b), a.max(b)));
                }
            }
        }
    }
    if let Some((line, u, v)) = duplicate {
        return Err(GraphError::DuplicateEdge { line, u, v });
    }
    let adjacency = adjacency
        .into_iter()
        .map(|l| l.into_iter().map(|(v, _)| v).collect())
        .collect();
    if seen != m {
        return Err(GraphError::Malformed {
            line: hl + 1,
            reason: format!("header announces {m} edges, found {seen}"),
        });
    }
    Ok(Graph::from_adjacency_unchecked(adjacency, "edge_list".to_string()))
}

/// Canonical form: edges with `u < v`, sorted lexicographically.
pub fn save_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", g.n_vertices(), g.edge_count()).unwrap();
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}
