use std::collections::HashMap;
use std::path::Path;

use log::warn;

use super::{Graph, GraphError};

/// Parses a DIMACS clique document (`c` comments, one `p edge n m` line,
/// `e u v` lines with 1-based ids).
///
/// The declared edge count is advisory: a mismatch only logs a warning.
pub fn parse_dimacs_clq(text: &str) -> Result<Graph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("p") => {
                if header.is_some() {
                    return Err(GraphError::MalformedHeader(format!(
                        "second problem line at line {}",
                        lineno + 1
                    )));
                }
                let _format = tok
                    .next()
                    .ok_or_else(|| GraphError::MalformedHeader(line.to_owned()))?;
                let parse = |t: Option<&str>| {
                    t.and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| GraphError::MalformedHeader(line.to_owned()))
                };
                let n = parse(tok.next())?;
                let m = parse(tok.next())?;
                if n == 0 {
                    return Err(GraphError::EmptyGraph);
                }
                header = Some((n, m));
            }
            Some("e") => {
                let (n, _) = header.ok_or_else(|| {
                    GraphError::MalformedHeader(format!("edge before problem line at line {}", lineno + 1))
                })?;
                let malformed = || GraphError::MalformedLine {
                    line: lineno + 1,
                    content: line.to_owned(),
                };
                let u: usize = tok.next().and_then(|s| s.parse().ok()).ok_or_else(malformed)?;
                let v: usize = tok.next().and_then(|s| s.parse().ok()).ok_or_else(malformed)?;
                for x in [u, v] {
                    if x == 0 || x > n {
                        return Err(GraphError::NodeOutOfRange {
                            node: x,
                            node_count: n,
                        });
                    }
                }
                edges.push((u - 1, v - 1));
            }
            _ => {
                return Err(GraphError::MalformedLine {
                    line: lineno + 1,
                    content: line.to_owned(),
                })
            }
        }
    }
    let (n, declared) =
        header.ok_or_else(|| GraphError::MalformedHeader("missing `p edge n m` line".into()))?;
    let g = Graph::from_edges(n, edges)?;
    if declared != g.edge_count() {
        warn!(
            "DIMACS header declares {declared} edges, found {} distinct edges",
            g.edge_count()
        );
    }
    Ok(g)
}

/// Parses a whitespace-separated edge list. Lines starting with `%` or `#`
/// are comments; tokens after the first two on a line are ignored. Node ids
/// are remapped to `0..n` in first-seen order.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut ids: HashMap<i64, usize> = HashMap::new();
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        let mut endpoint = || -> Result<usize, GraphError> {
            let raw_id: i64 = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
                GraphError::MalformedLine {
                    line: lineno + 1,
                    content: line.to_owned(),
                }
            })?;
            let next = ids.len();
            Ok(*ids.entry(raw_id).or_insert(next))
        };
        let u = endpoint()?;
        let v = endpoint()?;
        edges.push((u, v));
    }
    if ids.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    Graph::from_edges(ids.len(), edges)
}

/// Reads a graph file, choosing the parser by content: documents with a
/// `p` problem line are DIMACS, everything else is an edge list.
pub fn read_graph_file(path: &Path) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    let is_dimacs = text
        .lines()
        .map(str::trim_start)
        .any(|l| l.starts_with("p ") || l.starts_with("e "));
    if is_dimacs {
        parse_dimacs_clq(&text)
    } else {
        parse_edge_list(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_triangle() {
        let g = parse_dimacs_clq("c k3\np edge 3 3\ne 1 2\ne 2 3\ne 1 3\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 3));
    }

    #[test]
    fn dimacs_dedups_orientations() {
        let g = parse_dimacs_clq("p edge 2 2\ne 1 2\ne 2 1\n").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn dimacs_errors() {
        assert!(matches!(
            parse_dimacs_clq("p edge 3 1\ne 1 5\n"),
            Err(GraphError::NodeOutOfRange { node: 5, .. })
        ));
        assert!(matches!(parse_dimacs_clq("e 1 2\n"), Err(GraphError::MalformedHeader(_))));
        assert!(matches!(parse_dimacs_clq("c only\n"), Err(GraphError::MalformedHeader(_))));
        assert!(matches!(parse_dimacs_clq("p edge x 1\n"), Err(GraphError::MalformedHeader(_))));
        assert!(matches!(parse_dimacs_clq("p edge 0 0\n"), Err(GraphError::EmptyGraph)));
    }

    #[test]
    fn dimacs_wrong_edge_count_is_not_fatal() {
        let g = parse_dimacs_clq("p edge 3 10\ne 1 2\ne 1 1\n").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_list_examples() {
        let g = parse_edge_list("1 2\n2 3").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(g.neighbors(1), &[0, 2]);
        let g = parse_edge_list("# c\n7 9").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert!(matches!(parse_edge_list("a b"), Err(GraphError::MalformedLine { line: 1, .. })));
        assert!(matches!(parse_edge_list("% nothing\n"), Err(GraphError::EmptyGraph)));
    }

    #[test]
    fn edge_list_ignores_weight_column() {
        let g = parse_edge_list("%\n10 20 0.5\n20 30 1\n").unwrap();
        assert_eq!(g.edge_count(), 2);
    }
}
