//! Random models that are Markov to a given lag DAG or mediation graph.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use super::model::{DiscreteScm, MediationLayout, SeparatedScm, Treatment, ALIVE};
use super::{DiscreteNetwork, ScmError, Variable, NA, TABLE_BUDGET};
use crate::graph_core::{EdgeKind, GraphError, NodeSet, UnrolledDag};
use crate::mediation::MediationGraph;
use crate::transform::unroll;

/// Smallest probability given to any free CPT cell.
pub const MIN_CELL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("`{0}` needs a tailed edge from the outcome so it can become unavailable after death")]
    MissingDeathEdge(String),
    #[error("`{0}` at the last lag would affect the final survival indicator")]
    LastLagIntoOutcome(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

/// A random distribution over `card` states, every cell at least [`MIN_CELL`].
pub fn random_row<R: Rng + ?Sized>(rng: &mut R, card: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..card).map(|_| rng.random::<f64>()).collect();
    let total: f64 = draws.iter().sum();
    let free = 1.0 - MIN_CELL * card as f64;
    let mut row: Vec<f64> = draws.iter().map(|d| MIN_CELL + free * d / total).collect();
    // Put the rounding residue on the largest cell so rows sum to one.
    let residue = 1.0 - row.iter().sum::<f64>();
    let big = (0..card).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0);
    row[big] += residue;
    row
}

/// Binary variables named `name@lag`, one per DAG node, in topological order with random CPTs.
pub fn random_network<R: Rng + ?Sized>(dag: &UnrolledDag, rng: &mut R) -> Result<DiscreteNetwork, ScmError> {
    let order = dag.topological_order();
    let position: BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, &v)| (v, p)).collect();
    let vars = order
        .iter()
        .map(|&v| {
            let parents: Vec<usize> = dag.adjacency().parents(v).iter().map(|p| position[p]).collect();
            let rows = 1usize << parents.len();
            Variable {
                name: dag.var_name(v),
                states: vec!["0".into(), "1".into()],
                parents,
                cpt: (0..rows).map(|_| random_row(rng, 2)).collect(),
            }
        })
        .collect();
    DiscreteNetwork::new(vars)
}

/// Random separated model whose lag DAG is the unrolling of `mg` on `lags` lags.
///
/// Outcome copies become survival indicators `N@1 … N@K` (binary, `1` = alive); `N@0` is
/// dropped since everyone is alive at the first grid point. Mediators and covariates take
/// values `{0, 1, NA}` and are `NA` after death, which requires tailed edges from the
/// outcome into each of them. Other unassigned nodes are latent and binary.
pub fn random_mediation_scm<R: Rng + ?Sized>(
    mg: &MediationGraph,
    lags: usize,
    rng: &mut R,
) -> Result<SeparatedScm, GenerateError> {
    let g = mg.graph();
    let roles = mg.roles();
    let dag = unroll(g, lags)?;
    let outcome = roles.outcome;
    let is_na_role = |src: usize| roles.mediators.contains(&src) || (roles.covariates.contains(&src) && g.is_process(src));
    for &m in roles.mediators.iter().chain(&mg.process_covariates()) {
        if g.edge(outcome, m) != Some(EdgeKind::Tailed) {
            return Err(GenerateError::MissingDeathEdge(g.name(m).to_string()));
        }
    }
    // Graph source indices coincide with dag source indices (both sorted by name).
    let last_outcome = dag.find(outcome, lags).expect("outcome is a process");
    let keep = |v: usize| {
        let lv = dag.var(v);
        if lv.source == outcome {
            lv.lag > 0
        } else {
            lv.lag < lags || !g.is_process(lv.source)
        }
    };
    for &p in dag.adjacency().parents(last_outcome) {
        if !keep(p) && dag.var(p).lag == lags {
            return Err(GenerateError::LastLagIntoOutcome(dag.var_name(p)));
        }
    }
    let order: Vec<usize> = dag.topological_order().into_iter().filter(|&v| keep(v)).collect();
    let position: BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, &v)| (v, p)).collect();

    let binary = || vec!["0".to_string(), "1".to_string()];
    let tri = || vec!["0".to_string(), "1".to_string(), NA.to_string()];
    let mut vars: Vec<Variable> = Vec::with_capacity(order.len());
    for &v in &order {
        let lv = dag.var(v);
        let parents: Vec<usize> = dag.adjacency().parents(v).iter().filter_map(|p| position.get(p).copied()).collect();
        let states = if is_na_role(lv.source) { tri() } else { binary() };
        let cards: Vec<usize> = parents.iter().map(|&p| vars[p].card()).collect();
        let rows: usize = cards.iter().product();
        // Parent slots holding survival indicators, with their lags.
        let survival_slots: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .filter_map(|(k, &p)| {
                let pv = dag.var(order[p]);
                (pv.source == outcome).then_some((k, pv.lag))
            })
            .collect();
        let mut cpt = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut rem = r;
            let mut values = vec![0; parents.len()];
            for k in (0..parents.len()).rev() {
                values[k] = rem % cards[k];
                rem /= cards[k];
            }
            let dead = survival_slots.iter().any(|&(k, _)| values[k] != ALIVE);
            let row = if lv.source == outcome {
                if dead {
                    vec![1.0, 0.0]
                } else {
                    random_row(rng, 2)
                }
            } else if states.len() == 3 {
                let same_lag_dead = survival_slots.iter().any(|&(k, lag)| lag == lv.lag && values[k] != ALIVE);
                if same_lag_dead {
                    vec![0.0, 0.0, 1.0]
                } else {
                    let mut r2 = random_row(rng, 2);
                    r2.push(0.0);
                    r2
                }
            } else {
                random_row(rng, states.len())
            };
            cpt.push(row);
        }
        vars.push(Variable { name: dag.var_name(v), states, parents, cpt });
    }
    let net = DiscreteNetwork::new(vars)?;
    let cells = net.joint_cells();
    if cells > TABLE_BUDGET as u128 {
        return Err(ScmError::TooLarge { cells, budget: TABLE_BUDGET }.into());
    }
    let at = |src: usize, lag: usize| dag.find(src, lag).and_then(|v| position.get(&v).copied());
    let per_lag = |set: &NodeSet| -> Vec<Vec<usize>> {
        (0..lags).map(|lag| set.iter().filter(|&&s| g.is_process(s) || lag == 0).filter_map(|&s| at(s, lag)).collect()).collect()
    };
    let layout = MediationLayout {
        grid: (0..=lags).map(|k| k as f64).collect(),
        treatment: Treatment::Separated {
            direct: at(roles.treatment_direct, 0).expect("kept"),
            mediated: at(roles.treatment_mediated, 0).expect("kept"),
        },
        survival: (1..=lags).map(|lag| at(outcome, lag).expect("kept")).collect(),
        mediators: per_lag(&roles.mediators),
        covariates: per_lag(&roles.covariates),
    };
    Ok(SeparatedScm::new(DiscreteScm::new(net, layout)?)?)
}
