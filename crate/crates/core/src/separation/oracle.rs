//! Exhaustive simple-path enumeration, applying the blocking rules literally.
//!
//! Shares no code with the reachability search: ancestors come from a Warshall
//! closure over the raw edge list and every simple path is visited explicitly.

use crate::graph_core::{Adjacency, TailedGraph};

use super::{QueryError, SeparationQuery, Step};

/// Largest graph the enumeration accepts.
pub const NODE_BUDGET: usize = 12;

fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for &(i, j) in edges {
        reach[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

/// `an⁺(given)` as a mask, from the closure of `edges`.
fn ancestors_plus_mask(n: usize, edges: &[(usize, usize)], given: &[bool]) -> Vec<bool> {
    let reach = closure(n, edges);
    (0..n).map(|v| given[v] || (0..n).any(|c| given[c] && reach[v][c])).collect()
}

fn mask(n: usize, set: &crate::graph_core::NodeSet) -> Vec<bool> {
    (0..n).map(|v| set.contains(&v)).collect()
}

fn disjoint(q: &SeparationQuery, name: impl Fn(usize) -> String) -> Result<(), QueryError> {
    for v in &q.from {
        if q.target.contains(v) || q.given.contains(v) {
            return Err(QueryError::Overlap(name(*v)));
        }
    }
    for v in &q.target {
        if q.given.contains(v) {
            return Err(QueryError::Overlap(name(*v)));
        }
    }
    Ok(())
}

struct Search<'a> {
    /// `steps[v]` lists `(w, step)` for every edge incident to `v`, one entry per edge.
    steps: Vec<Vec<(usize, Step)>>,
    open: &'a [bool],
    given: &'a [bool],
    target: &'a [bool],
}

impl Search<'_> {
    fn new<'a>(n: usize, edges: &[(usize, usize)], open: &'a [bool], given: &'a [bool], target: &'a [bool]) -> Search<'a> {
        let mut steps = vec![Vec::new(); n];
        for &(i, j) in edges {
            steps[i].push((j, Step::Forward));
            steps[j].push((i, Step::Backward));
        }
        for s in &mut steps {
            s.sort_by_key(|&(w, st)| (w, st == Step::Backward));
        }
        Search { steps, open, given, target }
    }

    /// Depth-first over simple paths of at most `max_len` edges extending `path`.
    fn extend(&self, path: &mut Vec<(usize, Step)>, on_path: &mut Vec<bool>, max_len: usize) -> bool {
        if path.len() > max_len {
            return false;
        }
        let &(v, entry) = path.last().expect("nonempty path");
        let at_start = path.len() == 1;
        for &(w, step) in &self.steps[v] {
            if on_path[w] {
                continue;
            }
            if !at_start {
                let into_v_before = entry == Step::Forward;
                let into_v_after = step == Step::Backward;
                let collider = into_v_before && into_v_after;
                let blocked = if collider { !self.open[v] } else { self.given[v] };
                if blocked {
                    continue;
                }
            }
            path.push((w, step));
            if self.target[w] {
                return true;
            }
            on_path[w] = true;
            if self.extend(path, on_path, max_len) {
                return true;
            }
            on_path[w] = false;
            path.pop();
        }
        false
    }
}

fn find_path(
    n: usize,
    edges: &[(usize, usize)],
    open: &[bool],
    given: &[bool],
    from: &crate::graph_core::NodeSet,
    target: &[bool],
) -> Option<Vec<(usize, Step)>> {
    let search = Search::new(n, edges, open, given, target);
    // Deepening on the number of edges makes the reported path a shortest one.
    for max_len in 1..n.max(1) {
        for &a in from {
            let mut path = vec![(a, Step::Forward)];
            let mut on_path = vec![false; n];
            on_path[a] = true;
            if search.extend(&mut path, &mut on_path, max_len) {
                return Some(path);
            }
        }
    }
    None
}

/// First connecting simple path under already computed masks, for witness reporting.
pub(crate) fn first_connecting_path(
    search: &Adjacency,
    open: &[bool],
    given: &[bool],
    from: &crate::graph_core::NodeSet,
    target: &[bool],
) -> Option<Vec<(usize, Step)>> {
    let edges: Vec<(usize, usize)> = search.edges().collect();
    find_path(search.len(), &edges, open, given, from, target)
}

/// d-separation by enumerating every simple path of a DAG.
pub fn d_separated_by_paths(adj: &Adjacency, q: &SeparationQuery) -> Result<bool, QueryError> {
    let n = adj.len();
    if n > NODE_BUDGET {
        return Err(QueryError::TooLarge { nodes: n, budget: NODE_BUDGET });
    }
    disjoint(q, |v| v.to_string())?;
    let edges: Vec<(usize, usize)> = adj.edges().collect();
    let given = mask(n, &q.given);
    let open = ancestors_plus_mask(n, &edges, &given);
    Ok(find_path(n, &edges, &open, &given, &q.from, &mask(n, &q.target)).is_none())
}

/// δ-separation by enumerating every simple path of D^B (edges out of the target removed).
pub fn delta_separated_by_paths(graph: &TailedGraph, q: &SeparationQuery) -> Result<bool, QueryError> {
    let n = graph.len();
    if n > NODE_BUDGET {
        return Err(QueryError::TooLarge { nodes: n, budget: NODE_BUDGET });
    }
    disjoint(q, |v| graph.name(v).to_string())?;
    if let Some(&b) = q.target.iter().find(|&&b| !graph.is_process(b)) {
        return Err(QueryError::BaselineTarget(graph.name(b).to_string()));
    }
    let all: Vec<(usize, usize)> = graph.edges().map(|(i, j, _)| (i, j)).collect();
    let given = mask(n, &q.given);
    let open = ancestors_plus_mask(n, &all, &given);
    let pruned: Vec<(usize, usize)> = all.iter().copied().filter(|(i, _)| !q.target.contains(i)).collect();
    Ok(find_path(n, &pruned, &open, &given, &q.from, &mask(n, &q.target)).is_none())
}
