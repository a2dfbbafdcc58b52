//! d-separation on lag DAGs, δ-separation on rolled graphs, and the extended
//! criterion for graphs with same-lag effects.
//!
//! The fast paths run a reachability search over (node, arrival-direction) states.
//! [`oracle`] enumerates simple paths instead and is used to cross-check.

pub mod oracle;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph_core::{Adjacency, GraphError, NodeSet, TailedGraph, UnrolledDag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("node `{0}` appears in more than one of the from/target/given sets")]
    Overlap(String),
    #[error("target node `{0}` is a baseline variable")]
    BaselineTarget(String),
    #[error("graph has {nodes} nodes; path enumeration is limited to {budget}")]
    TooLarge { nodes: usize, budget: usize },
    #[error("graph is not acyclic: {}", .0.join(" -> "))]
    Cyclic(Vec<String>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    D,
    Delta,
    DeltaExtended,
}

/// Three pairwise disjoint node sets: separate `target` from `from` given `given`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeparationQuery {
    pub from: NodeSet,
    pub target: NodeSet,
    pub given: NodeSet,
}

impl SeparationQuery {
    pub fn new(from: NodeSet, target: NodeSet, given: NodeSet) -> Self {
        SeparationQuery { from, target, given }
    }

    fn check_disjoint(&self, name: impl Fn(usize) -> String) -> Result<(), QueryError> {
        for v in self.from.iter().chain(self.target.iter()).chain(self.given.iter()) {
            let hits = [&self.from, &self.target, &self.given].iter().filter(|s| s.contains(v)).count();
            if hits > 1 {
                return Err(QueryError::Overlap(name(*v)));
            }
        }
        Ok(())
    }
}

/// Direction of travel along one edge of a path or walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// Along the edge, `u -> v`.
    Forward,
    /// Against the edge, `u <- v`.
    Backward,
}

/// A connecting route returned when separation fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub nodes: Vec<String>,
    pub steps: Vec<Step>,
    /// False when the route could not be shortened to a simple path and is reported as a walk.
    pub simple: bool,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, node) in self.nodes.iter().enumerate() {
            if k > 0 {
                f.write_str(match self.steps[k - 1] {
                    Step::Forward => " -> ",
                    Step::Backward => " <- ",
                })?;
            }
            f.write_str(node)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Arrival {
    /// Arrived against an edge, so the edge has its tail here.
    Tail,
    /// Arrived along an edge, so the edge points into this node.
    Head,
}

/// Breadth-first search for a connecting walk in `search`.
///
/// Noncolliders in `given` block; colliders pass only when in `open_colliders`.
/// Returns the walk as `(node, step into node)` pairs; the first pair is the start node.
fn connecting_walk(
    search: &Adjacency,
    open_colliders: &[bool],
    given: &[bool],
    from: &NodeSet,
    target: &[bool],
) -> Option<Vec<(usize, Step)>> {
    #[derive(Clone, Copy)]
    enum Pred {
        Start(usize),
        State(usize),
    }
    let n = search.len();
    let slot = |v: usize, a: Arrival| 2 * v + a as usize;
    let mut prev: Vec<Option<(Pred, Step)>> = vec![None; 2 * n];
    let mut queue = VecDeque::new();
    let mut push = |queue: &mut VecDeque<(usize, Arrival)>, v: usize, a: Arrival, pred: Pred, step: Step| {
        let s = slot(v, a);
        if prev[s].is_none() {
            prev[s] = Some((pred, step));
            queue.push_back((v, a));
        }
    };

    for &a in from {
        for &p in search.parents(a) {
            push(&mut queue, p, Arrival::Tail, Pred::Start(a), Step::Backward);
        }
        for &c in search.children(a) {
            push(&mut queue, c, Arrival::Head, Pred::Start(a), Step::Forward);
        }
    }

    while let Some((v, arrival)) = queue.pop_front() {
        if target[v] {
            let mut route = Vec::new();
            let mut cur = slot(v, arrival);
            loop {
                let (pred, step) = prev[cur].expect("reached state has a predecessor");
                route.push((cur / 2, step));
                match pred {
                    Pred::Start(a) => {
                        route.push((a, Step::Forward));
                        break;
                    }
                    Pred::State(s) => cur = s,
                }
            }
            route.reverse();
            return Some(route);
        }
        let here = Pred::State(slot(v, arrival));
        let noncollider_ok = !given[v];
        match arrival {
            Arrival::Tail => {
                if noncollider_ok {
                    for &p in search.parents(v) {
                        push(&mut queue, p, Arrival::Tail, here, Step::Backward);
                    }
                    for &c in search.children(v) {
                        push(&mut queue, c, Arrival::Head, here, Step::Forward);
                    }
                }
            }
            Arrival::Head => {
                if noncollider_ok {
                    for &c in search.children(v) {
                        push(&mut queue, c, Arrival::Head, here, Step::Forward);
                    }
                }
                if open_colliders[v] {
                    for &p in search.parents(v) {
                        push(&mut queue, p, Arrival::Tail, here, Step::Backward);
                    }
                }
            }
        }
    }
    None
}

fn mask(n: usize, set: &NodeSet) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

/// Prepared search problem: the graph to walk in and the collider rule.
struct Prepared {
    search: Adjacency,
    open_colliders: Vec<bool>,
    given: Vec<bool>,
    target: Vec<bool>,
}

fn prepare_d(adj: &Adjacency, q: &SeparationQuery) -> Prepared {
    let n = adj.len();
    Prepared {
        search: adj.clone(),
        open_colliders: mask(n, &adj.ancestors_plus(&q.given)),
        given: mask(n, &q.given),
        target: mask(n, &q.target),
    }
}

fn prepare_delta(graph: &TailedGraph, q: &SeparationQuery) -> Result<Prepared, QueryError> {
    q.check_disjoint(|v| graph.name(v).to_string())?;
    if let Some(&b) = q.target.iter().find(|&&b| !graph.is_process(b)) {
        return Err(QueryError::BaselineTarget(graph.name(b).to_string()));
    }
    let n = graph.len();
    let full = graph.adjacency();
    Ok(Prepared {
        search: full.without_edges_out_of(&q.target),
        open_colliders: mask(n, &full.ancestors_plus(&q.given)),
        given: mask(n, &q.given),
        target: mask(n, &q.target),
    })
}

/// d-separation of `target` from `from` given `given` in a plain DAG.
pub fn d_separated_in(adj: &Adjacency, q: &SeparationQuery) -> Result<bool, QueryError> {
    q.check_disjoint(|v| v.to_string())?;
    let p = prepare_d(adj, q);
    Ok(connecting_walk(&p.search, &p.open_colliders, &p.given, &q.from, &p.target).is_none())
}

/// d-separation in a lag DAG.
pub fn d_separated(dag: &UnrolledDag, q: &SeparationQuery) -> Result<bool, QueryError> {
    q.check_disjoint(|v| dag.var_name(v))?;
    d_separated_in(dag.adjacency(), q)
}

/// δ-separation: `target` from `from` given `given`, searched in D⁻ with edges out of
/// `target` removed. Colliders are open when they are ancestors of `given` in the full graph.
pub fn delta_separated(graph: &TailedGraph, q: &SeparationQuery) -> Result<bool, QueryError> {
    let p = prepare_delta(graph, q)?;
    Ok(connecting_walk(&p.search, &p.open_colliders, &p.given, &q.from, &p.target).is_none())
}

/// Connecting route for a failed δ-separation, or `None` when separated.
///
/// Small graphs get a simple path from the enumeration oracle; larger ones the search walk.
pub fn delta_witness(graph: &TailedGraph, q: &SeparationQuery) -> Result<Option<Witness>, QueryError> {
    let p = prepare_delta(graph, q)?;
    let name = |v: usize| graph.name(v).to_string();
    Ok(witness_from(&p, q, name))
}

/// Connecting route for a failed d-separation, or `None` when separated.
pub fn d_witness(adj: &Adjacency, q: &SeparationQuery, name: impl Fn(usize) -> String) -> Result<Option<Witness>, QueryError> {
    q.check_disjoint(&name)?;
    let p = prepare_d(adj, q);
    Ok(witness_from(&p, q, name))
}

fn witness_from(p: &Prepared, q: &SeparationQuery, name: impl Fn(usize) -> String) -> Option<Witness> {
    let walk = connecting_walk(&p.search, &p.open_colliders, &p.given, &q.from, &p.target)?;
    if p.search.len() <= oracle::NODE_BUDGET {
        if let Some(path) = oracle::first_connecting_path(&p.search, &p.open_colliders, &p.given, &q.from, &p.target) {
            return Some(Witness {
                nodes: path.iter().map(|&(v, _)| name(v)).collect(),
                steps: path.iter().skip(1).map(|&(_, s)| s).collect(),
                simple: true,
            });
        }
    }
    Some(Witness {
        nodes: walk.iter().map(|&(v, _)| name(v)).collect(),
        steps: walk.iter().skip(1).map(|&(_, s)| s).collect(),
        simple: false,
    })
}

/// Why the extended criterion could not certify a local independence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Inconclusive {
    /// Some `from` nodes are process nodes with a tailed path into the target.
    TailedAncestorInFrom { nodes: Vec<String> },
    /// The modified δ-separation failed.
    Connected { witness: Option<Witness> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GrangerVerdict {
    Holds,
    Inconclusive(Inconclusive),
}

impl GrangerVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, GrangerVerdict::Holds)
    }
}

/// The δ-separation query the extended criterion reduces to, when its first condition holds.
///
/// Process tailed ancestors of the target that sit in `given` move into the target set.
pub fn extended_query(graph: &TailedGraph, q: &SeparationQuery) -> Result<Result<SeparationQuery, NodeSet>, QueryError> {
    q.check_disjoint(|v| graph.name(v).to_string())?;
    if let Some(&b) = q.target.iter().find(|&&b| !graph.is_process(b)) {
        return Err(QueryError::BaselineTarget(graph.name(b).to_string()));
    }
    let tailed = graph.tailed_process_ancestors(&q.target);
    let clash: NodeSet = q.from.intersection(&tailed).copied().collect();
    if !clash.is_empty() {
        return Ok(Err(clash));
    }
    let mut target = q.target.clone();
    target.extend(tailed.intersection(&q.given).copied());
    let given: NodeSet = q.given.difference(&tailed).copied().collect();
    Ok(Ok(SeparationQuery { from: q.from.clone(), target, given }))
}

/// Sufficient graphical condition for `target` being locally independent of `from`
/// given `given`, allowing same-lag effects. Never claims dependence.
pub fn granger_noncausal_graphical(graph: &TailedGraph, q: &SeparationQuery) -> Result<GrangerVerdict, QueryError> {
    match extended_query(graph, q)? {
        Err(clash) => Ok(GrangerVerdict::Inconclusive(Inconclusive::TailedAncestorInFrom { nodes: graph.names_of(&clash) })),
        Ok(modified) => {
            if delta_separated(graph, &modified)? {
                Ok(GrangerVerdict::Holds)
            } else {
                Ok(GrangerVerdict::Inconclusive(Inconclusive::Connected { witness: delta_witness(graph, &modified)? }))
            }
        }
    }
}

/// Resolves name lists against a rolled graph.
pub fn query_by_name<S: AsRef<str>>(
    graph: &TailedGraph,
    from: &[S],
    target: &[S],
    given: &[S],
) -> Result<SeparationQuery, QueryError> {
    Ok(SeparationQuery::new(graph.resolve(from)?, graph.resolve(target)?, graph.resolve(given)?))
}

/// Resolves `name@lag` labels against a lag DAG.
pub fn dag_query_by_label<S: AsRef<str>>(
    dag: &UnrolledDag,
    from: &[S],
    target: &[S],
    given: &[S],
) -> Result<SeparationQuery, QueryError> {
    let resolve = |xs: &[S]| -> Result<NodeSet, QueryError> {
        xs.iter().map(|s| dag.index_of_label(s.as_ref()).map_err(QueryError::from)).collect()
    };
    Ok(SeparationQuery::new(resolve(from)?, resolve(target)?, resolve(given)?))
}

/// Lag-DAG query matching a local-independence statement at time `t`:
/// `target@t` against the history of `from` up to `t-1`, given the history of
/// `target ∪ given` up to `t-1` plus `current@t`.
pub fn local_independence_query(
    dag: &UnrolledDag,
    from: &NodeSet,
    target: &NodeSet,
    given: &NodeSet,
    current: &NodeSet,
    t: usize,
) -> SeparationQuery {
    let past: NodeSet = target.union(given).copied().collect();
    let mut cond = dag.history(&past, t - 1);
    cond.extend(dag.slice(current, t));
    let mut from_set = dag.history(from, t - 1);
    from_set.retain(|v| !cond.contains(v));
    SeparationQuery::new(from_set, dag.slice(target, t), cond)
}

/// Maps rolled-graph indices to the matching sources of a lag DAG built from it.
pub fn source_map(graph: &TailedGraph, dag: &UnrolledDag) -> Result<BTreeMap<usize, usize>, GraphError> {
    (0..graph.len()).map(|i| Ok((i, dag.source_index(graph.name(i))?))).collect()
}
