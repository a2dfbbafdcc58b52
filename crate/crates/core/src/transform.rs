//! Unrolling rolled graphs into lag DAGs and rolling them back.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph_core::{EdgeKind, GraphError, LaggedNode, NodeKind, TailedGraph, UnrolledDag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("node sets differ: `{0}` is present in only one graph")]
    NodeMismatch(String),
    #[error("node `{0}` has a different kind in the two graphs")]
    KindMismatch(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Unrolls `graph` on `lags` lags.
///
/// Emits `i@s -> j@t` for every `s < t` when `i *-> j`, `i@t -> j@t` when `i o-> j`,
/// and `i@s -> i@t` for every process `i` and `s < t`.
pub fn unroll(graph: &TailedGraph, lags: usize) -> Result<UnrolledDag, GraphError> {
    if lags == 0 {
        return Err(GraphError::ZeroLags);
    }
    let sources = graph.nodes().to_vec();
    let lags_of = |i: usize| if graph.is_process(i) { lags } else { 0 };
    let mut edges = Vec::new();
    for (i, j, kind) in graph.edges() {
        for t in 0..=lags_of(j) {
            let last = if kind == EdgeKind::Tailed { t } else { t.saturating_sub(1) };
            if kind == EdgeKind::Directed && t == 0 {
                continue;
            }
            for s in 0..=last.min(lags_of(i)) {
                edges.push((LaggedNode { source: i, lag: s }, LaggedNode { source: j, lag: t }));
            }
        }
    }
    for i in 0..graph.len() {
        if graph.is_process(i) {
            for t in 1..=lags {
                for s in 0..t {
                    edges.push((LaggedNode { source: i, lag: s }, LaggedNode { source: i, lag: t }));
                }
            }
        }
    }
    UnrolledDag::from_lagged(lags, sources, edges)
}

/// Rolls a lag DAG back to process level. Self-loops are dropped; an edge is tailed
/// when some same-lag copy of it exists.
pub fn roll(dag: &UnrolledDag) -> TailedGraph {
    let mut kinds: BTreeMap<(usize, usize), EdgeKind> = BTreeMap::new();
    for (a, b) in dag.edges() {
        let (u, v) = (dag.var(a), dag.var(b));
        if u.source == v.source {
            continue;
        }
        let kind = if u.lag == v.lag { EdgeKind::Tailed } else { EdgeKind::Directed };
        let entry = kinds.entry((u.source, v.source)).or_insert(kind);
        if kind == EdgeKind::Tailed {
            *entry = EdgeKind::Tailed;
        }
    }
    let names = |i: usize| dag.sources()[i].name.clone();
    TailedGraph::new(
        dag.sources().iter().map(|n| (n.name.clone(), n.kind)),
        kinds.into_iter().map(|((i, j), k)| (names(i), names(j), k)),
    )
    .expect("a valid unrolled DAG rolls to a valid graph")
}

/// Whether the two graphs form a proper pair: `roll(unrolled) == rolled` or
/// `unrolled == unroll(rolled, lag_count)`.
pub fn is_proper(rolled: &TailedGraph, unrolled: &UnrolledDag) -> Result<bool, TransformError> {
    let left: BTreeMap<&str, NodeKind> = rolled.nodes().iter().map(|n| (n.name.as_str(), n.kind)).collect();
    let right: BTreeMap<&str, NodeKind> = unrolled.sources().iter().map(|n| (n.name.as_str(), n.kind)).collect();
    for name in left.keys().chain(right.keys()) {
        match (left.get(name), right.get(name)) {
            (Some(a), Some(b)) if a != b => return Err(TransformError::KindMismatch(name.to_string())),
            (Some(_), Some(_)) => {}
            _ => return Err(TransformError::NodeMismatch(name.to_string())),
        }
    }
    if roll(unrolled) == *rolled {
        return Ok(true);
    }
    match unroll(rolled, unrolled.lag_count()) {
        Ok(dag) => Ok(dag == *unrolled),
        Err(GraphError::Cycle(_)) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn lagged_cycle_unrolls_to_reference() {
        let dag = unroll(&catalog::lagged_cycle(), 2).unwrap();
        assert_eq!(dag, catalog::lagged_cycle_unrolled());
    }

    #[test]
    fn contemporaneous_cycle_unrolls_to_reference() {
        let dag = unroll(&catalog::contemporaneous_cycle(), 2).unwrap();
        assert_eq!(dag, catalog::contemporaneous_cycle_unrolled());
    }

    #[test]
    fn rolling_is_not_injective() {
        assert_eq!(roll(&catalog::lagged_cycle_unrolled()), catalog::lagged_cycle());
        assert_eq!(roll(&catalog::lagged_cycle_sparse_unrolling()), catalog::lagged_cycle());
        assert_ne!(catalog::lagged_cycle_unrolled(), catalog::lagged_cycle_sparse_unrolling());
        assert_eq!(roll(&catalog::contemporaneous_cycle_unrolled()), catalog::contemporaneous_cycle());
    }

    #[test]
    fn proper_pairs() {
        let a = catalog::lagged_cycle();
        assert!(is_proper(&a, &catalog::lagged_cycle_unrolled()).unwrap());
        assert!(is_proper(&a, &catalog::lagged_cycle_sparse_unrolling()).unwrap());
        assert!(!is_proper(&a, &catalog::contemporaneous_cycle_unrolled()).unwrap());

        let empty = TailedGraph::builder().processes(&["x", "y"]).build().unwrap();
        let dag = unroll(&empty, 3).unwrap();
        assert_eq!(dag.adjacency().edge_count(), 2 * 6);
        assert!(is_proper(&empty, &dag).unwrap());
    }

    #[test]
    fn node_mismatch_is_an_error() {
        let a = TailedGraph::builder().processes(&["x"]).build().unwrap();
        let b = unroll(&TailedGraph::builder().processes(&["y"]).build().unwrap(), 1).unwrap();
        assert!(matches!(is_proper(&a, &b), Err(TransformError::NodeMismatch(_))));
        let c = unroll(&TailedGraph::builder().baseline("x").build().unwrap(), 1).unwrap();
        assert!(matches!(is_proper(&a, &c), Err(TransformError::KindMismatch(_))));
    }

    #[test]
    fn tailed_cycle_cannot_be_unrolled() {
        let g = TailedGraph::builder().processes(&["a", "b"]).tailed("a", "b").tailed("b", "a").build().unwrap();
        match unroll(&g, 1) {
            Err(GraphError::Cycle(names)) => assert_eq!(names.len(), 2),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn baseline_copies_only_at_lag_zero() {
        let g = TailedGraph::builder()
            .baseline("w")
            .baseline("v")
            .process("x")
            .tailed("w", "v")
            .tailed("v", "x")
            .edge("w", "x")
            .build()
            .unwrap();
        let dag = unroll(&g, 2).unwrap();
        assert_eq!(dag.len(), 2 + 3);
        let w0 = dag.index_of("w", 0).unwrap();
        let v0 = dag.index_of("v", 0).unwrap();
        assert!(dag.has_edge(w0, v0));
        assert!(dag.has_edge(v0, dag.index_of("x", 0).unwrap()));
        assert!(!dag.has_edge(w0, dag.index_of("x", 0).unwrap()));
        assert!(dag.has_edge(w0, dag.index_of("x", 2).unwrap()));
        assert_eq!(roll(&dag), g);
    }
}
