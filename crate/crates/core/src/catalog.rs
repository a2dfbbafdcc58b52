//! Small reference graphs used by tests, the self-test and the documentation.
//!
//! Edge lists here are written out by hand rather than produced by [`crate::transform`],
//! so they can serve as independent expectations.

use crate::graph_core::{EdgeKind, NodeKind, TailedGraph, UnrolledDag};
use crate::mediation::MediationGraph;

const CYCLE_NODES: [(&str, NodeKind); 4] =
    [("P", NodeKind::Baseline), ("Q", NodeKind::Process), ("R", NodeKind::Process), ("S", NodeKind::Process)];

/// Baseline `P` feeding the lagged cycle `S -> Q -> R -> S`.
pub fn lagged_cycle() -> TailedGraph {
    TailedGraph::builder()
        .baseline("P")
        .processes(&["Q", "R", "S"])
        .edge("P", "S")
        .edge("Q", "R")
        .edge("S", "Q")
        .edge("R", "S")
        .build()
        .expect("valid fixture")
}

/// Same cycle with `Q o-> R` and `S o-> Q` admitting same-lag effects.
pub fn contemporaneous_cycle() -> TailedGraph {
    TailedGraph::builder()
        .baseline("P")
        .processes(&["Q", "R", "S"])
        .edge("P", "S")
        .tailed("Q", "R")
        .tailed("S", "Q")
        .edge("R", "S")
        .build()
        .expect("valid fixture")
}

/// Edge between `name@lag` endpoints.
type LagEdge = ((&'static str, usize), (&'static str, usize));

fn lagged_cycle_edges() -> Vec<LagEdge> {
    let mut edges = vec![
        (("P", 0), ("S", 1)),
        (("P", 0), ("S", 2)),
        (("Q", 0), ("R", 1)),
        (("Q", 0), ("R", 2)),
        (("Q", 1), ("R", 2)),
        (("S", 0), ("Q", 1)),
        (("S", 0), ("Q", 2)),
        (("S", 1), ("Q", 2)),
        (("R", 0), ("S", 1)),
        (("R", 0), ("S", 2)),
        (("R", 1), ("S", 2)),
    ];
    for p in ["Q", "R", "S"] {
        edges.extend([((p, 0), (p, 1)), ((p, 1), (p, 2)), ((p, 0), (p, 2))]);
    }
    edges
}

/// Hand-written unrolling of [`lagged_cycle`] on two lags.
pub fn lagged_cycle_unrolled() -> UnrolledDag {
    UnrolledDag::new(2, CYCLE_NODES, lagged_cycle_edges()).expect("valid fixture")
}

/// A sparser lag DAG that still rolls to [`lagged_cycle`].
pub fn lagged_cycle_sparse_unrolling() -> UnrolledDag {
    let edges = lagged_cycle_edges().into_iter().filter(|e| *e != (("Q", 0), ("R", 1)) && *e != (("S", 0), ("Q", 1)));
    UnrolledDag::new(2, CYCLE_NODES, edges).expect("valid fixture")
}

/// Hand-written unrolling of [`contemporaneous_cycle`] on two lags.
pub fn contemporaneous_cycle_unrolled() -> UnrolledDag {
    let mut edges = lagged_cycle_edges();
    for t in 0..=2 {
        edges.push((("S", t), ("Q", t)));
        edges.push((("Q", t), ("R", t)));
    }
    UnrolledDag::new(2, CYCLE_NODES, edges).expect("valid fixture")
}

/// `F2 o-> F1`, `F3 -> F2`, `F3 -> F4`: a tailed edge at the end of a plain chain.
pub fn tailed_chain() -> TailedGraph {
    TailedGraph::builder()
        .processes(&["F1", "F2", "F3", "F4"])
        .tailed("F2", "F1")
        .edge("F3", "F2")
        .edge("F3", "F4")
        .build()
        .expect("valid fixture")
}

/// Baselines `A`, `C1`, `C2` with `A o-> C1 <-o C2 o-> B` and `C1 o-> B`.
///
/// The extended criterion holds for `B` against `A` given `{C1, C2}`, while the variant
/// that moves every tailed ancestor of `B` into the target set does not.
pub fn baseline_tailed_fan() -> TailedGraph {
    TailedGraph::builder()
        .baseline("A")
        .baseline("C1")
        .baseline("C2")
        .process("B")
        .tailed("A", "C1")
        .tailed("C2", "C1")
        .tailed("C2", "B")
        .tailed("C1", "B")
        .build()
        .expect("valid fixture")
}

/// Two-step discrete survival DAG with separated treatment.
///
/// Variables: `AD`, `AM`, `M0`, `C0`, `S1` (survival past the first grid point), `M1`, `C1`, `S2`.
pub fn two_step_survival_dag() -> UnrolledDag {
    let nodes = [
        ("AD", NodeKind::Baseline),
        ("AM", NodeKind::Baseline),
        ("M0", NodeKind::Baseline),
        ("C0", NodeKind::Baseline),
        ("S1", NodeKind::Baseline),
        ("M1", NodeKind::Baseline),
        ("C1", NodeKind::Baseline),
        ("S2", NodeKind::Baseline),
    ];
    let order = ["AD", "AM", "M0", "C0", "S1", "M1", "C1", "S2"];
    let mut edges = Vec::new();
    // Everything may depend on its whole past except the treatment components, which
    // act only through their own channel.
    for (k, &to) in order.iter().enumerate().skip(2) {
        for &from in &order[2..k] {
            edges.push(((from, 0), (to, 0)));
        }
    }
    edges.extend([(("AM", 0), ("M1", 0)), (("AD", 0), ("S1", 0)), (("AD", 0), ("S2", 0)), (("AD", 0), ("C1", 0))]);
    UnrolledDag::new(1, nodes, edges).expect("valid fixture")
}

fn mediation(text: &str) -> MediationGraph {
    let doc = crate::graph_core::dsl::parse_lig(text).expect("valid fixture");
    MediationGraph::from_document(&doc).expect("valid fixture")
}

/// Mediator `M`, covariate process `C`, outcome `N`, no latent processes.
pub const BASIC_MEDIATION: &str = "\
node AD baseline
node AM baseline
node M
node C
node N
AM -> M
AD -> N
M -> N
C -> M
C -> N
N o-> M
N o-> C
role treatment_direct AD
role treatment_mediated AM
role mediator M
role covariate C
role outcome N
";

/// [`BASIC_MEDIATION`] plus latent processes `UM` (into `M`) and `UC` (into `C` and `N`).
pub const LATENT_CONFOUNDED_MEDIATION: &str = "\
node AD baseline
node AM baseline
node M
node C
node N
node UM
node UC
AM -> M
AD -> N
M -> N
C -> M
C -> N
N o-> M
N o-> C
UM -> M
UC -> C
UC -> N
unobserved UM
unobserved UC
role treatment_direct AD
role treatment_mediated AM
role mediator M
role covariate C
role outcome N
";

/// Like [`LATENT_CONFOUNDED_MEDIATION`] but the covariate process `C` is itself
/// driven by the direct treatment component.
pub const COVARIATE_MEDIATION: &str = "\
node AD baseline
node AM baseline
node M
node C
node N
node UM
node UC
AM -> M
AD -> C
AD -> N
M -> N
C -> M
C -> N
N o-> M
N o-> C
UM -> M
UC -> C
UC -> N
unobserved UM
unobserved UC
role treatment_direct AD
role treatment_mediated AM
role mediator M
role covariate C
role outcome N
";

pub fn basic_mediation() -> MediationGraph {
    mediation(BASIC_MEDIATION)
}

pub fn latent_confounded_mediation() -> MediationGraph {
    mediation(LATENT_CONFOUNDED_MEDIATION)
}

pub fn covariate_mediation() -> MediationGraph {
    mediation(COVARIATE_MEDIATION)
}

/// Adds plain or tailed edges to a mediation graph, keeping roles.
pub fn with_extra_edges(mg: &MediationGraph, extra: &[(&str, &str, EdgeKind)]) -> MediationGraph {
    let graph = mg.graph().with_edges(extra.iter().copied()).expect("valid extra edges");
    mg.with_graph(graph).expect("roles still valid")
}
