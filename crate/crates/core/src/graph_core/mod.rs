//! Rolled process graphs and their unrolled lag DAGs.
//!
//! A rolled graph has one node per coordinate process or baseline variable and
//! two edge kinds: plain directed edges (lagged influence only) and tailed edges
//! (lagged plus same-lag influence). An unrolled DAG has one node per lagged copy.
//!
//! Nodes are stored in lexicographic name order so every iteration is reproducible.

pub mod dsl;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Set of node indices. Ordered so iteration is deterministic.
pub type NodeSet = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Process,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Directed,
    Tailed,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeKind::Directed => f.write_str("->"),
            EdgeKind::Tailed => f.write_str("o->"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("edge {from} -> {to} is declared both plain and tailed")]
    ConflictingEdge { from: String, to: String },
    #[error("edge {from} {kind} {to} enters baseline node `{to}`; only tailed edges from baseline nodes may")]
    BaselineInvariant { from: String, to: String, kind: EdgeKind },
    #[error("same-lag edges form a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("lag count must be at least 1")]
    ZeroLags,
    #[error("lagged node `{name}@{lag}` does not exist")]
    UnknownLaggedNode { name: String, lag: usize },
    #[error("edge {from} -> {to} points backwards in time")]
    BackwardEdge { from: String, to: String },
}

/// Plain adjacency lists over node indices. Used for D⁻, for D^B and for unrolled DAGs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (i, j) in edges {
            parents[j].push(i);
            children[i].push(j);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Adjacency { parents, children }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.children[i].binary_search(&j).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children.iter().enumerate().flat_map(|(i, cs)| cs.iter().map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    /// The graph with every edge leaving `set` deleted.
    pub fn without_edges_out_of(&self, set: &NodeSet) -> Adjacency {
        Adjacency::from_edges(self.len(), self.edges().filter(|(i, _)| !set.contains(i)))
    }

    /// Nodes with a directed path to some target node, a target counting only when it
    /// reaches a different target.
    pub fn ancestors(&self, target: &NodeSet) -> NodeSet {
        self.closure(target, true)
    }

    /// Mirror of [`Adjacency::ancestors`] along children.
    pub fn descendants(&self, target: &NodeSet) -> NodeSet {
        self.closure(target, false)
    }

    /// `an(target) ∪ target`.
    pub fn ancestors_plus(&self, target: &NodeSet) -> NodeSet {
        let mut out = self.ancestors(target);
        out.extend(target.iter().copied());
        out
    }

    fn closure(&self, target: &NodeSet, upward: bool) -> NodeSet {
        let step = |v: usize| if upward { &self.parents[v] } else { &self.children[v] };
        let back = |v: usize| if upward { &self.children[v] } else { &self.parents[v] };
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &t in target {
            for &p in step(t) {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        while let Some(v) = queue.pop_front() {
            for &p in step(v) {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        let mut out = NodeSet::new();
        for v in 0..self.len() {
            if !seen[v] {
                continue;
            }
            if !target.contains(&v) {
                out.insert(v);
                continue;
            }
            // A target reached only through a cycle back to itself is not its own ancestor.
            let mut mark = vec![false; self.len()];
            let mut queue: VecDeque<usize> = back(v).iter().copied().collect();
            let mut hit = false;
            while let Some(w) = queue.pop_front() {
                if mark[w] {
                    continue;
                }
                mark[w] = true;
                if w != v && target.contains(&w) {
                    hit = true;
                    break;
                }
                queue.extend(back(w).iter().copied());
            }
            if hit {
                out.insert(v);
            }
        }
        out
    }

    /// Kahn order with ties broken by index. On failure returns the nodes of one cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>, Vec<usize>> {
        let n = self.len();
        let mut indegree: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        Err(self.find_cycle(&indegree))
    }

    fn find_cycle(&self, indegree: &[usize]) -> Vec<usize> {
        // Every leftover node has a leftover parent; walk parents until a repeat.
        let start = (0..self.len()).find(|&i| indegree[i] > 0).expect("leftover node");
        let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
        let mut walk = vec![start];
        let mut v = start;
        loop {
            pos.insert(v, walk.len() - 1);
            let p = *self.parents[v].iter().find(|&&p| indegree[p] > 0).expect("leftover parent");
            if let Some(&k) = pos.get(&p) {
                let mut cycle: Vec<usize> = walk[k..].to_vec();
                cycle.reverse();
                return cycle;
            }
            walk.push(p);
            v = p;
        }
    }
}

/// Rolled graph over processes and baseline variables with plain and tailed edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailedGraph {
    nodes: Vec<Node>,
    index: BTreeMap<String, usize>,
    edges: BTreeMap<(usize, usize), EdgeKind>,
    full: Adjacency,
    tailed: Adjacency,
}

impl TailedGraph {
    /// Builds and validates a graph. Self-loops are dropped; everything else invalid is rejected.
    pub fn new<N, E, S, T>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = (S, NodeKind)>,
        E: IntoIterator<Item = (T, T, EdgeKind)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut named: Vec<Node> = Vec::new();
        let mut seen = BTreeSet::new();
        for (name, kind) in nodes {
            let name = name.into();
            if !seen.insert(name.clone()) {
                return Err(GraphError::DuplicateNode(name));
            }
            named.push(Node { name, kind });
        }
        named.sort_by(|a, b| a.name.cmp(&b.name));
        let index: BTreeMap<String, usize> = named.iter().enumerate().map(|(i, n)| (n.name.clone(), i)).collect();
        let lookup = |s: &str| index.get(s).copied().ok_or_else(|| GraphError::UnknownNode(s.to_string()));

        let mut edge_map: BTreeMap<(usize, usize), EdgeKind> = BTreeMap::new();
        for (from, to, kind) in edges {
            let (i, j) = (lookup(from.as_ref())?, lookup(to.as_ref())?);
            if i == j {
                log::debug!("dropping self-loop on `{}`", named[i].name);
                continue;
            }
            if let Some(&prev) = edge_map.get(&(i, j)) {
                if prev != kind {
                    return Err(GraphError::ConflictingEdge { from: named[i].name.clone(), to: named[j].name.clone() });
                }
            }
            if named[j].kind == NodeKind::Baseline && (kind != EdgeKind::Tailed || named[i].kind != NodeKind::Baseline) {
                return Err(GraphError::BaselineInvariant { from: named[i].name.clone(), to: named[j].name.clone(), kind });
            }
            edge_map.insert((i, j), kind);
        }
        Ok(Self::assemble(named, index, edge_map))
    }

    fn assemble(nodes: Vec<Node>, index: BTreeMap<String, usize>, edges: BTreeMap<(usize, usize), EdgeKind>) -> Self {
        let n = nodes.len();
        let full = Adjacency::from_edges(n, edges.keys().copied());
        let tailed = Adjacency::from_edges(n, edges.iter().filter(|(_, &k)| k == EdgeKind::Tailed).map(|(&e, _)| e));
        TailedGraph { nodes, index, edges, full, tailed }
    }

    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i].name
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.nodes[i].kind
    }

    pub fn is_process(&self, i: usize) -> bool {
        self.nodes[i].kind == NodeKind::Process
    }

    pub fn processes(&self) -> NodeSet {
        (0..self.len()).filter(|&i| self.is_process(i)).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.index.get(name).copied().ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeSet, GraphError> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect()
    }

    pub fn names_of(&self, set: &NodeSet) -> Vec<String> {
        set.iter().map(|&i| self.nodes[i].name.clone()).collect()
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<EdgeKind> {
        self.edges.get(&(i, j)).copied()
    }

    /// All edges as `(from, to, kind)` in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeKind)> + '_ {
        self.edges.iter().map(|(&(i, j), &k)| (i, j, k))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_tailed_edges(&self) -> bool {
        self.tailed.edge_count() > 0
    }

    /// Parent/child lists of D⁻, ignoring edge kinds.
    pub fn adjacency(&self) -> &Adjacency {
        &self.full
    }

    /// Parent/child lists restricted to tailed edges.
    pub fn tailed_adjacency(&self) -> &Adjacency {
        &self.tailed
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        self.full.parents(i)
    }

    pub fn children(&self, i: usize) -> &[usize] {
        self.full.children(i)
    }

    pub fn ancestors(&self, target: &NodeSet) -> NodeSet {
        self.full.ancestors(target)
    }

    pub fn ancestors_plus(&self, target: &NodeSet) -> NodeSet {
        self.full.ancestors_plus(target)
    }

    pub fn descendants(&self, target: &NodeSet) -> NodeSet {
        self.full.descendants(target)
    }

    /// `pa_•(target)`, never containing target nodes.
    pub fn tailed_parents(&self, target: &NodeSet) -> NodeSet {
        target.iter().flat_map(|&b| self.tailed.parents(b).iter().copied()).filter(|v| !target.contains(v)).collect()
    }

    /// `an_•(target)`: origins of tailed-only directed paths into target, never containing target nodes.
    pub fn tailed_ancestors(&self, target: &NodeSet) -> NodeSet {
        let mut out = self.tailed.ancestors(target);
        out.retain(|v| !target.contains(v));
        out
    }

    /// `an_•^V(target)`: tailed ancestors that are processes.
    pub fn tailed_process_ancestors(&self, target: &NodeSet) -> NodeSet {
        let mut out = self.tailed_ancestors(target);
        out.retain(|&v| self.is_process(v));
        out
    }

    /// `de_•(target)`, never containing target nodes.
    pub fn tailed_descendants(&self, target: &NodeSet) -> NodeSet {
        let mut out = self.tailed.descendants(target);
        out.retain(|v| !target.contains(v));
        out
    }

    /// D⁻: every tailed edge replaced by a plain directed edge.
    pub fn strip_tails(&self) -> TailedGraph {
        let edges = self.edges.keys().map(|&e| (e, EdgeKind::Directed)).collect();
        Self::assemble(self.nodes.clone(), self.index.clone(), edges)
    }

    /// Same nodes with extra edges; validated like a fresh graph.
    pub fn with_edges<T: AsRef<str>>(
        &self,
        extra: impl IntoIterator<Item = (T, T, EdgeKind)>,
    ) -> Result<TailedGraph, GraphError> {
        let mut edges: Vec<(String, String, EdgeKind)> =
            self.edges().map(|(i, j, k)| (self.name(i).to_string(), self.name(j).to_string(), k)).collect();
        edges.extend(extra.into_iter().map(|(a, b, k)| (a.as_ref().to_string(), b.as_ref().to_string(), k)));
        TailedGraph::new(self.nodes.iter().map(|n| (n.name.clone(), n.kind)), edges)
    }

    /// Same nodes without the listed edges.
    pub fn without_edges(&self, removed: &BTreeSet<(usize, usize)>) -> TailedGraph {
        let edges = self.edges.iter().filter(|(e, _)| !removed.contains(e)).map(|(&e, &k)| (e, k)).collect();
        Self::assemble(self.nodes.clone(), self.index.clone(), edges)
    }
}

/// Incremental construction helper, mostly for fixtures and tests.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    nodes: Vec<(String, NodeKind)>,
    edges: Vec<(String, String, EdgeKind)>,
}

impl GraphBuilder {
    pub fn process(mut self, name: &str) -> Self {
        self.nodes.push((name.to_string(), NodeKind::Process));
        self
    }

    pub fn baseline(mut self, name: &str) -> Self {
        self.nodes.push((name.to_string(), NodeKind::Baseline));
        self
    }

    pub fn processes(mut self, names: &[&str]) -> Self {
        self.nodes.extend(names.iter().map(|n| (n.to_string(), NodeKind::Process)));
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string(), EdgeKind::Directed));
        self
    }

    pub fn tailed(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string(), EdgeKind::Tailed));
        self
    }

    pub fn build(self) -> Result<TailedGraph, GraphError> {
        TailedGraph::new(self.nodes, self.edges)
    }
}

/// One lagged copy `name@lag` of a rolled node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaggedNode {
    /// Index into [`UnrolledDag::sources`].
    pub source: usize,
    pub lag: usize,
}

/// DAG over lagged node copies. Processes have copies at lags `0..=lag_count`,
/// baseline variables only at lag 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrolledDag {
    lag_count: usize,
    sources: Vec<Node>,
    vars: Vec<LaggedNode>,
    index: BTreeMap<LaggedNode, usize>,
    adjacency: Adjacency,
}

impl UnrolledDag {
    /// Builds and validates a DAG from named lagged endpoints.
    pub fn new<S, T>(
        lag_count: usize,
        sources: impl IntoIterator<Item = (S, NodeKind)>,
        edges: impl IntoIterator<Item = ((T, usize), (T, usize))>,
    ) -> Result<Self, GraphError>
    where
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut nodes: Vec<Node> = Vec::new();
        let mut seen = BTreeSet::new();
        for (name, kind) in sources {
            let name = name.into();
            if !seen.insert(name.clone()) {
                return Err(GraphError::DuplicateNode(name));
            }
            nodes.push(Node { name, kind });
        }
        nodes.sort_by(|a, b| a.name.cmp(&b.name));
        let by_name: BTreeMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.name.clone(), i)).collect();
        let mut resolved = Vec::new();
        for ((a, s), (b, t)) in edges {
            let find = |name: &str, lag: usize| -> Result<LaggedNode, GraphError> {
                let source = *by_name.get(name).ok_or_else(|| GraphError::UnknownNode(name.to_string()))?;
                Ok(LaggedNode { source, lag })
            };
            resolved.push((find(a.as_ref(), s)?, find(b.as_ref(), t)?));
        }
        Self::from_lagged(lag_count, nodes, resolved)
    }

    pub(crate) fn from_lagged(
        lag_count: usize,
        sources: Vec<Node>,
        edges: Vec<(LaggedNode, LaggedNode)>,
    ) -> Result<Self, GraphError> {
        if lag_count == 0 {
            return Err(GraphError::ZeroLags);
        }
        let mut vars = Vec::new();
        for lag in 0..=lag_count {
            for (source, node) in sources.iter().enumerate() {
                if node.kind == NodeKind::Process || lag == 0 {
                    vars.push(LaggedNode { source, lag });
                }
            }
        }
        let index: BTreeMap<LaggedNode, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let label = |v: LaggedNode| format!("{}@{}", sources[v.source].name, v.lag);
        let mut pairs = Vec::with_capacity(edges.len());
        for (from, to) in edges {
            let i = *index
                .get(&from)
                .ok_or_else(|| GraphError::UnknownLaggedNode { name: sources[from.source].name.clone(), lag: from.lag })?;
            let j = *index
                .get(&to)
                .ok_or_else(|| GraphError::UnknownLaggedNode { name: sources[to.source].name.clone(), lag: to.lag })?;
            if from.lag > to.lag {
                return Err(GraphError::BackwardEdge { from: label(from), to: label(to) });
            }
            if sources[to.source].kind == NodeKind::Baseline && sources[from.source].kind != NodeKind::Baseline {
                return Err(GraphError::BaselineInvariant { from: label(from), to: label(to), kind: EdgeKind::Directed });
            }
            if i == j {
                continue;
            }
            pairs.push((i, j));
        }
        let adjacency = Adjacency::from_edges(vars.len(), pairs);
        if let Err(cycle) = adjacency.topological_order() {
            return Err(GraphError::Cycle(cycle.into_iter().map(|v| label(vars[v])).collect()));
        }
        Ok(UnrolledDag { lag_count, sources, vars, index, adjacency })
    }

    pub fn lag_count(&self) -> usize {
        self.lag_count
    }

    /// The rolled-level nodes, sorted by name.
    pub fn sources(&self) -> &[Node] {
        &self.sources
    }

    pub fn source_index(&self, name: &str) -> Result<usize, GraphError> {
        self.sources.iter().position(|n| n.name == name).ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn var(&self, i: usize) -> LaggedNode {
        self.vars[i]
    }

    pub fn var_name(&self, i: usize) -> String {
        let v = self.vars[i];
        format!("{}@{}", self.sources[v.source].name, v.lag)
    }

    pub fn find(&self, source: usize, lag: usize) -> Option<usize> {
        self.index.get(&LaggedNode { source, lag }).copied()
    }

    /// Index of `name@lag`.
    pub fn index_of(&self, name: &str, lag: usize) -> Result<usize, GraphError> {
        let source = self.source_index(name)?;
        self.find(source, lag).ok_or_else(|| GraphError::UnknownLaggedNode { name: name.to_string(), lag })
    }

    /// Resolves a label of the form `name@lag`.
    pub fn index_of_label(&self, label: &str) -> Result<usize, GraphError> {
        let (name, lag) = label
            .rsplit_once('@')
            .and_then(|(n, l)| l.parse::<usize>().ok().map(|l| (n, l)))
            .ok_or_else(|| GraphError::UnknownNode(label.to_string()))?;
        self.index_of(name, lag)
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.edges()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.has_edge(i, j)
    }

    /// Copies of `sources` at lags `0..=upto`.
    pub fn history(&self, sources: &NodeSet, upto: usize) -> NodeSet {
        sources.iter().flat_map(|&s| (0..=upto).filter_map(move |lag| self.find(s, lag))).collect()
    }

    /// Copies of `sources` at exactly `lag`.
    pub fn slice(&self, sources: &NodeSet, lag: usize) -> NodeSet {
        sources.iter().filter_map(|&s| self.find(s, lag)).collect()
    }

    pub fn ancestors(&self, target: &NodeSet) -> NodeSet {
        self.adjacency.ancestors(target)
    }

    /// A topological order, ties broken by (lag, name).
    pub fn topological_order(&self) -> Vec<usize> {
        self.adjacency.topological_order().expect("unrolled DAG is acyclic by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(g: &TailedGraph, names: &[&str]) -> NodeSet {
        g.resolve(names).unwrap()
    }

    fn lagged_cycle() -> TailedGraph {
        TailedGraph::builder()
            .baseline("P")
            .processes(&["Q", "R", "S"])
            .edge("P", "S")
            .edge("Q", "R")
            .edge("S", "Q")
            .edge("R", "S")
            .build()
            .unwrap()
    }

    #[test]
    fn chain_ancestors() {
        let g = TailedGraph::builder().processes(&["a", "b", "c"]).edge("a", "b").edge("b", "c").build().unwrap();
        assert_eq!(g.ancestors(&set(&g, &["c"])), set(&g, &["a", "b"]));
        assert_eq!(g.descendants(&set(&g, &["a"])), set(&g, &["b", "c"]));
    }

    #[test]
    fn target_on_cycle_is_not_its_own_ancestor() {
        let g = lagged_cycle();
        assert_eq!(g.ancestors(&set(&g, &["R"])), set(&g, &["P", "Q", "S"]));
        // With two targets on the cycle each reaches the other.
        assert_eq!(g.ancestors(&set(&g, &["R", "S"])), set(&g, &["P", "Q", "R", "S"]));
        assert_eq!(g.ancestors_plus(&set(&g, &["R"])), set(&g, &["P", "Q", "R", "S"]));
    }

    #[test]
    fn edgeless_ancestors_empty() {
        let g = TailedGraph::builder().process("x").build().unwrap();
        assert!(g.ancestors(&set(&g, &["x"])).is_empty());
    }

    #[test]
    fn tailed_ancestors_follow_tailed_edges_only() {
        let g = TailedGraph::builder()
            .baseline("P")
            .processes(&["Q", "R", "S"])
            .edge("P", "S")
            .tailed("Q", "R")
            .tailed("S", "Q")
            .edge("R", "S")
            .build()
            .unwrap();
        assert_eq!(g.tailed_ancestors(&set(&g, &["R"])), set(&g, &["Q", "S"]));
        assert_eq!(g.tailed_parents(&set(&g, &["R"])), set(&g, &["Q"]));
        assert_eq!(g.tailed_descendants(&set(&g, &["S"])), set(&g, &["Q", "R"]));
        assert!(lagged_cycle().tailed_ancestors(&set(&g, &["R"])).is_empty());

        let chain = TailedGraph::builder()
            .processes(&["F1", "F2", "F3", "F4"])
            .tailed("F2", "F1")
            .edge("F3", "F2")
            .edge("F3", "F4")
            .build()
            .unwrap();
        assert_eq!(chain.tailed_ancestors(&set(&chain, &["F1"])), set(&chain, &["F2"]));
    }

    #[test]
    fn strip_tails_gives_plain_graph() {
        let g = TailedGraph::builder()
            .baseline("P")
            .processes(&["Q", "R", "S"])
            .edge("P", "S")
            .tailed("Q", "R")
            .tailed("S", "Q")
            .edge("R", "S")
            .build()
            .unwrap();
        let stripped = g.strip_tails();
        assert_eq!(stripped, lagged_cycle());
        assert_eq!(stripped.strip_tails(), stripped);
        let single = TailedGraph::builder().processes(&["a", "b"]).tailed("a", "b").build().unwrap();
        assert_eq!(single.strip_tails().edge(0, 1), Some(EdgeKind::Directed));
    }

    #[test]
    fn construction_rejects_invalid_edges() {
        let err = TailedGraph::builder().processes(&["a", "b"]).edge("a", "b").tailed("a", "b").build();
        assert!(matches!(err, Err(GraphError::ConflictingEdge { .. })));
        let err = TailedGraph::builder().process("a").baseline("w").tailed("a", "w").build();
        assert!(matches!(err, Err(GraphError::BaselineInvariant { .. })));
        let err = TailedGraph::builder().baseline("v").baseline("w").edge("v", "w").build();
        assert!(matches!(err, Err(GraphError::BaselineInvariant { .. })));
        let err = TailedGraph::builder().process("a").process("a").build();
        assert!(matches!(err, Err(GraphError::DuplicateNode(_))));
        let err = TailedGraph::builder().process("a").edge("a", "zz").build();
        assert_eq!(err, Err(GraphError::UnknownNode("zz".into())));
        let ok = TailedGraph::builder().baseline("v").baseline("w").tailed("v", "w").build();
        assert!(ok.is_ok());
    }

    #[test]
    fn self_loops_are_dropped() {
        let g = TailedGraph::builder().processes(&["a", "b"]).edge("a", "a").edge("a", "b").build().unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn topological_order_reports_cycle() {
        let adj = Adjacency::from_edges(4, [(0, 1), (1, 2), (2, 1), (2, 3)]);
        let cycle = adj.topological_order().unwrap_err();
        let mut sorted = cycle.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 2]);
        assert_eq!(Adjacency::from_edges(3, [(0, 1), (1, 2)]).topological_order().unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn unrolled_dag_validation() {
        let bad = UnrolledDag::new(1, [("x", NodeKind::Process)], [(("x", 1), ("x", 0))]);
        assert!(matches!(bad, Err(GraphError::BackwardEdge { .. })));
        let bad = UnrolledDag::new(1, [("w", NodeKind::Baseline)], [(("w", 0), ("w", 1))]);
        assert!(matches!(bad, Err(GraphError::UnknownLaggedNode { .. })));
        let bad = UnrolledDag::new(
            1,
            [("x", NodeKind::Process), ("y", NodeKind::Process)],
            [(("x", 0), ("y", 0)), (("y", 0), ("x", 0))],
        );
        assert!(matches!(bad, Err(GraphError::Cycle(_))));
        let dag = UnrolledDag::new(2, [("x", NodeKind::Process), ("w", NodeKind::Baseline)], [(("w", 0), ("x", 2))]).unwrap();
        assert_eq!(dag.len(), 4);
        assert!(dag.has_edge(dag.index_of("w", 0).unwrap(), dag.index_of_label("x@2").unwrap()));
    }
}
