//! Line-oriented text format for rolled graphs (`.lig`).
//!
//! ```text
//! # comment
//! node P baseline
//! node Q
//! P -> Q
//! Q o-> R
//! unobserved U
//! role mediator M
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{EdgeKind, GraphError, NodeKind, TailedGraph, UnrolledDag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, token: &str, message: impl Into<String>) -> Self {
        ParseError { line, token: token.to_string(), message: message.into() }
    }
}

/// A `role <role> <node>` statement as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleBinding {
    pub role: String,
    pub node: String,
    pub line: usize,
}

/// Parsed `.lig` file: the graph plus latent tags and role bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDocument {
    pub graph: TailedGraph,
    pub latent: BTreeSet<String>,
    pub roles: Vec<RoleBinding>,
}

fn valid_name(token: &str) -> bool {
    !token.is_empty()
        && token.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '^' | '@' | '.' | '-' | '\'' | '*'))
        && token != "->"
        && token != "o->"
}

pub fn parse_lig(text: &str) -> Result<GraphDocument, ParseError> {
    let mut kinds: BTreeMap<String, NodeKind> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut edges: BTreeMap<(String, String), (EdgeKind, usize)> = BTreeMap::new();
    let mut latent = BTreeSet::new();
    let mut roles = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&head) = tokens.first() else { continue };
        match head {
            "node" => {
                let name = *tokens.get(1).ok_or_else(|| ParseError::new(line, head, "missing node name"))?;
                if !valid_name(name) {
                    return Err(ParseError::new(line, name, "invalid node name"));
                }
                let kind = match tokens.get(2) {
                    None => NodeKind::Process,
                    Some(&"baseline") => NodeKind::Baseline,
                    Some(&"process") => NodeKind::Process,
                    Some(other) => return Err(ParseError::new(line, other, "expected `baseline` or end of line")),
                };
                if let Some(extra) = tokens.get(3) {
                    return Err(ParseError::new(line, extra, "unexpected token"));
                }
                if kinds.insert(name.to_string(), kind).is_some() {
                    return Err(ParseError::new(line, name, "node declared twice"));
                }
                order.push(name.to_string());
            }
            "unobserved" => {
                let name = *tokens.get(1).ok_or_else(|| ParseError::new(line, head, "missing node name"))?;
                if !kinds.contains_key(name) {
                    return Err(ParseError::new(line, name, "undeclared node"));
                }
                if let Some(extra) = tokens.get(2) {
                    return Err(ParseError::new(line, extra, "unexpected token"));
                }
                latent.insert(name.to_string());
            }
            "role" => {
                let role = *tokens.get(1).ok_or_else(|| ParseError::new(line, head, "missing role name"))?;
                let node = *tokens.get(2).ok_or_else(|| ParseError::new(line, role, "missing node name"))?;
                if !kinds.contains_key(node) {
                    return Err(ParseError::new(line, node, "undeclared node"));
                }
                if let Some(extra) = tokens.get(3) {
                    return Err(ParseError::new(line, extra, "unexpected token"));
                }
                roles.push(RoleBinding { role: role.to_string(), node: node.to_string(), line });
            }
            _ => {
                if tokens.len() < 3 {
                    return Err(ParseError::new(line, head, "unknown statement"));
                }
                let kind = match tokens[1] {
                    "->" => EdgeKind::Directed,
                    "o->" => EdgeKind::Tailed,
                    other => return Err(ParseError::new(line, other, "expected `->` or `o->`")),
                };
                if let Some(extra) = tokens.get(3) {
                    return Err(ParseError::new(line, extra, "unexpected token"));
                }
                let (from, to) = (tokens[0], tokens[2]);
                let from_kind = *kinds.get(from).ok_or_else(|| ParseError::new(line, from, "undeclared node"))?;
                let to_kind = *kinds.get(to).ok_or_else(|| ParseError::new(line, to, "undeclared node"))?;
                if to_kind == NodeKind::Baseline && (kind != EdgeKind::Tailed || from_kind != NodeKind::Baseline) {
                    return Err(ParseError::new(line, to, "edges into a baseline node must be tailed edges from baseline nodes"));
                }
                let key = (from.to_string(), to.to_string());
                if let Some(&(prev, _)) = edges.get(&key) {
                    if prev != kind {
                        return Err(ParseError::new(line, tokens[1], "edge already declared with the other kind"));
                    }
                }
                edges.insert(key, (kind, line));
            }
        }
    }

    let graph = TailedGraph::new(
        order.iter().map(|n| (n.clone(), kinds[n])),
        edges.iter().map(|((a, b), &(k, _))| (a.clone(), b.clone(), k)),
    )
    .map_err(|e| graph_error_at(e, &edges))?;
    Ok(GraphDocument { graph, latent, roles })
}

fn graph_error_at(err: GraphError, edges: &BTreeMap<(String, String), (EdgeKind, usize)>) -> ParseError {
    let line = match &err {
        GraphError::ConflictingEdge { from, to } | GraphError::BaselineInvariant { from, to, .. } => {
            edges.get(&(from.clone(), to.clone())).map(|&(_, l)| l).unwrap_or(0)
        }
        _ => 0,
    };
    ParseError { line, token: String::new(), message: err.to_string() }
}

/// Serializes a document back to `.lig` text. Output is canonical (sorted).
pub fn write_lig(doc: &GraphDocument) -> String {
    let mut out = String::new();
    write_graph(&mut out, &doc.graph);
    for name in &doc.latent {
        let _ = writeln!(out, "unobserved {name}");
    }
    for r in &doc.roles {
        let _ = writeln!(out, "role {} {}", r.role, r.node);
    }
    out
}

fn write_graph(out: &mut String, g: &TailedGraph) {
    for n in g.nodes() {
        match n.kind {
            NodeKind::Process => writeln!(out, "node {}", n.name),
            NodeKind::Baseline => writeln!(out, "node {} baseline", n.name),
        }
        .expect("write to string");
    }
    for (i, j, k) in g.edges() {
        let _ = writeln!(out, "{} {} {}", g.name(i), k, g.name(j));
    }
}

/// Serializes an unrolled DAG with node names `<name>@<lag>`.
///
/// Lag-0 baseline copies keep the `baseline` marker; edges between them are written
/// as tailed edges so the output is itself a valid `.lig` graph.
pub fn write_unrolled(dag: &UnrolledDag) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# unrolled on {} lags", dag.lag_count());
    for v in 0..dag.len() {
        let kind = dag.sources()[dag.var(v).source].kind;
        match kind {
            NodeKind::Process => writeln!(out, "node {}", dag.var_name(v)),
            NodeKind::Baseline => writeln!(out, "node {} baseline", dag.var_name(v)),
        }
        .expect("write to string");
    }
    for (i, j) in dag.edges() {
        let into_baseline = dag.sources()[dag.var(j).source].kind == NodeKind::Baseline;
        let arrow = if into_baseline { "o->" } else { "->" };
        let _ = writeln!(out, "{} {} {}", dag.var_name(i), arrow, dag.var_name(j));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nodes_edges_roles() {
        let text = "# demo\nnode P baseline\nnode Q\nnode R # trailing\nP -> Q\nQ o-> R\nunobserved R\nrole mediator Q\n";
        let doc = parse_lig(text).unwrap();
        assert_eq!(doc.graph.len(), 3);
        let (p, q, r) = (doc.graph.index_of("P").unwrap(), doc.graph.index_of("Q").unwrap(), doc.graph.index_of("R").unwrap());
        assert_eq!(doc.graph.kind(p), NodeKind::Baseline);
        assert_eq!(doc.graph.edge(p, q), Some(EdgeKind::Directed));
        assert_eq!(doc.graph.edge(q, r), Some(EdgeKind::Tailed));
        assert!(doc.latent.contains("R"));
        assert_eq!(doc.roles, vec![RoleBinding { role: "mediator".into(), node: "Q".into(), line: 8 }]);
    }

    #[test]
    fn errors_carry_line_and_token() {
        let err = parse_lig("node a\nnode b\na => b\n").unwrap_err();
        assert_eq!((err.line, err.token.as_str()), (3, "=>"));
        let err = parse_lig("node a\na -> ghost\n").unwrap_err();
        assert_eq!((err.line, err.token.as_str()), (2, "ghost"));
        let err = parse_lig("node a\nnode w baseline\na o-> w\n").unwrap_err();
        assert_eq!((err.line, err.token.as_str()), (3, "w"));
        let err = parse_lig("node a\nnode b\na -> b\na o-> b\n").unwrap_err();
        assert_eq!(err.line, 4);
        let err = parse_lig("node a sideways\n").unwrap_err();
        assert_eq!(err.token, "sideways");
        let err = parse_lig("frobnicate\n").unwrap_err();
        assert_eq!((err.line, err.token.as_str()), (1, "frobnicate"));
    }

    #[test]
    fn round_trips_through_text() {
        let text = "node P baseline\nnode Q\nnode R\nP -> Q\nQ o-> R\nR -> Q\nunobserved R\nrole outcome Q\n";
        let doc = parse_lig(text).unwrap();
        let again = parse_lig(&write_lig(&doc)).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn unrolled_output_parses() {
        let doc = parse_lig("node W baseline\nnode V baseline\nnode X\nW o-> V\nW -> X\nX o-> X\n").unwrap();
        let dag = crate::transform::unroll(&doc.graph, 2).unwrap();
        let text = write_unrolled(&dag);
        let back = parse_lig(&text).unwrap();
        assert_eq!(back.graph.len(), dag.len());
        assert_eq!(back.graph.edge_count(), dag.adjacency().edge_count());
    }
}
