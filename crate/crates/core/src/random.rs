//! Seeded generators of graphs, queries and models for property tests and the self-test.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph_core::{EdgeKind, NodeKind, NodeSet, TailedGraph};
use crate::hawkes::MediationWeights;
use crate::separation::SeparationQuery;

/// Knobs for [`random_graph`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphShape {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Chance that a node is a baseline variable. At least one node is always a process.
    pub baseline_prob: f64,
    pub edge_prob: f64,
    /// Chance that an admissible edge is tailed. Zero gives plain graphs.
    pub tailed_prob: f64,
}

impl Default for GraphShape {
    fn default() -> Self {
        GraphShape { min_nodes: 2, max_nodes: 8, baseline_prob: 0.25, edge_prob: 0.3, tailed_prob: 0.3 }
    }
}

/// Random rolled graph over nodes `v0, v1, …`.
///
/// Directed edges may form cycles. Tailed edges follow a random node order so they never
/// do, and enter a baseline node only from another baseline node.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, shape: &GraphShape) -> TailedGraph {
    let n = rng.random_range(shape.min_nodes..=shape.max_nodes);
    let mut kinds: Vec<NodeKind> =
        (0..n).map(|_| if rng.random_bool(shape.baseline_prob) { NodeKind::Baseline } else { NodeKind::Process }).collect();
    if kinds.iter().all(|&k| k == NodeKind::Baseline) {
        let k = rng.random_range(0..n);
        kinds[k] = NodeKind::Process;
    }
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || !rng.random_bool(shape.edge_prob) {
                continue;
            }
            let can_tail = rank[i] < rank[j];
            let tailed = can_tail && shape.tailed_prob > 0.0 && rng.random_bool(shape.tailed_prob);
            let kind = match (kinds[i], kinds[j], tailed) {
                (_, NodeKind::Process, false) => EdgeKind::Directed,
                (NodeKind::Process, NodeKind::Process, true) => EdgeKind::Tailed,
                (NodeKind::Baseline, _, true) => EdgeKind::Tailed,
                _ => continue,
            };
            edges.push((format!("v{i}"), format!("v{j}"), kind));
        }
    }
    TailedGraph::new((0..n).map(|i| (format!("v{i}"), kinds[i])), edges).expect("generated graphs are valid")
}

/// Random query with nonempty `from`, a nonempty process `target` and any `given`, all disjoint.
/// Returns `None` when the graph is too small to hold one.
pub fn random_query<R: Rng + ?Sized>(rng: &mut R, graph: &TailedGraph) -> Option<SeparationQuery> {
    let processes: Vec<usize> = graph.processes().into_iter().collect();
    if processes.is_empty() || graph.len() < 2 {
        return None;
    }
    let b = processes[rng.random_range(0..processes.len())];
    let mut target: NodeSet = [b].into();
    let mut from = NodeSet::new();
    let mut given = NodeSet::new();
    let mut rest: Vec<usize> = (0..graph.len()).filter(|&v| v != b).collect();
    rest.shuffle(rng);
    from.insert(rest[0]);
    for &v in &rest[1..] {
        match rng.random_range(0..6) {
            0 => {
                from.insert(v);
            }
            1 | 2 => {
                given.insert(v);
            }
            3 if graph.is_process(v) => {
                target.insert(v);
            }
            _ => {}
        }
    }
    Some(SeparationQuery::new(from, target, given))
}

/// Like [`random_query`] but targets and sources may be any nodes, for DAG queries.
pub fn random_dag_query<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Option<SeparationQuery> {
    if n < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut q = SeparationQuery::new([order[0]].into(), [order[1]].into(), NodeSet::new());
    for &v in &order[2..] {
        match rng.random_range(0..5) {
            0 => {
                q.from.insert(v);
            }
            1 => {
                q.target.insert(v);
            }
            2 | 3 => {
                q.given.insert(v);
            }
            _ => {}
        }
    }
    Some(q)
}

/// Random edge set of a DAG on `n` nodes, acyclic along a random order.
pub fn random_dag_edges<R: Rng + ?Sized>(rng: &mut R, n: usize, edge_prob: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(edge_prob) {
                edges.push((order[a], order[b]));
            }
        }
    }
    edges
}

/// Branching ratios for the five-process mediation model, each in `[low, high)`.
///
/// The topology is acyclic, so every such matrix has spectral radius zero.
pub fn random_mediation_weights<R: Rng + ?Sized>(rng: &mut R, low: f64, high: f64) -> MediationWeights {
    let mut w = || rng.random_range(low..high);
    MediationWeights { ma: w(), da: w(), dm: w(), ml: w(), dl: w(), lu: w(), du: w() }
}
