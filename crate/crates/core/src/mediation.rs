//! Role-annotated rolled graphs and graphical checks of the mediation assumptions.
//!
//! The treatment is split into a direct component and a mediated component, both
//! baseline nodes. Three local independences are checked:
//!
//! * `a1`: mediators are locally independent of the direct component given the
//!   mediated component, covariates and outcome.
//! * `a2_discrete`: the outcome is locally independent of the mediated component
//!   given the direct component, covariates and mediators (grid points only).
//! * `a3`: process covariates are locally independent of the mediated component
//!   given the direct component, mediators and outcome.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::graph_core::dsl::GraphDocument;
use crate::graph_core::{EdgeKind, GraphError, NodeSet, TailedGraph};
use crate::separation::{
    delta_separated, delta_witness, granger_noncausal_graphical, Flavor, GrangerVerdict, Inconclusive, QueryError,
    SeparationQuery, Witness,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MediationError {
    #[error("missing role `{0}`")]
    MissingRole(&'static str),
    #[error("role `{role}` is bound more than once (line {line})")]
    DuplicateRole { role: String, line: usize },
    #[error("unknown role `{role}` (line {line})")]
    UnknownRole { role: String, line: usize },
    #[error("node `{0}` has more than one role")]
    RoleOverlap(String),
    #[error("latent node `{0}` cannot carry a role")]
    LatentWithRole(String),
    #[error("node `{0}` is neither latent nor bound to a role")]
    Unassigned(String),
    #[error("treatment node `{0}` must be a baseline node")]
    TreatmentNotBaseline(String),
    #[error("outcome node `{0}` must be a process node")]
    OutcomeNotProcess(String),
    #[error("mediator node `{0}` must be a process node")]
    MediatorNotProcess(String),
    #[error("the direct treatment component has no edge into a covariate process")]
    NotTreatmentDrivenCovariate,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Node indices for each role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    pub treatment_direct: usize,
    pub treatment_mediated: usize,
    pub mediators: NodeSet,
    pub covariates: NodeSet,
    pub outcome: usize,
    pub latent: NodeSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediationGraph {
    graph: TailedGraph,
    roles: Roles,
    randomized: bool,
}

const SINGLE_ROLES: [&str; 3] = ["treatment_direct", "treatment_mediated", "outcome"];

impl MediationGraph {
    /// Reads roles from `role` statements and latent tags from `unobserved` statements.
    pub fn from_document(doc: &GraphDocument) -> Result<Self, MediationError> {
        let g = &doc.graph;
        let mut single: [Option<usize>; 3] = [None; 3];
        let mut mediators = NodeSet::new();
        let mut covariates = NodeSet::new();
        for binding in &doc.roles {
            let v = g.index_of(&binding.node)?;
            match binding.role.as_str() {
                "mediator" => {
                    mediators.insert(v);
                }
                "covariate" => {
                    covariates.insert(v);
                }
                role => {
                    let k = SINGLE_ROLES
                        .iter()
                        .position(|r| *r == role)
                        .ok_or_else(|| MediationError::UnknownRole { role: role.to_string(), line: binding.line })?;
                    if single[k].is_some() {
                        return Err(MediationError::DuplicateRole { role: role.to_string(), line: binding.line });
                    }
                    single[k] = Some(v);
                }
            }
        }
        let need = |k: usize| single[k].ok_or(MediationError::MissingRole(SINGLE_ROLES[k]));
        let latent = doc.latent.iter().map(|n| g.index_of(n)).collect::<Result<NodeSet, _>>()?;
        let roles =
            Roles { treatment_direct: need(0)?, treatment_mediated: need(1)?, outcome: need(2)?, mediators, covariates, latent };
        Self::new(doc.graph.clone(), roles)
    }

    /// Validates the role map against the graph.
    pub fn new(graph: TailedGraph, roles: Roles) -> Result<Self, MediationError> {
        if roles.mediators.is_empty() {
            return Err(MediationError::MissingRole("mediator"));
        }
        let name = |v: usize| graph.name(v).to_string();
        let mut seen = BTreeSet::new();
        let bound = [roles.treatment_direct, roles.treatment_mediated, roles.outcome]
            .into_iter()
            .chain(roles.mediators.iter().copied())
            .chain(roles.covariates.iter().copied());
        for v in bound {
            if !seen.insert(v) {
                return Err(MediationError::RoleOverlap(name(v)));
            }
            if roles.latent.contains(&v) {
                return Err(MediationError::LatentWithRole(name(v)));
            }
        }
        if let Some(v) = (0..graph.len()).find(|v| !seen.contains(v) && !roles.latent.contains(v)) {
            return Err(MediationError::Unassigned(name(v)));
        }
        for v in [roles.treatment_direct, roles.treatment_mediated] {
            if graph.is_process(v) {
                return Err(MediationError::TreatmentNotBaseline(name(v)));
            }
        }
        if !graph.is_process(roles.outcome) {
            return Err(MediationError::OutcomeNotProcess(name(roles.outcome)));
        }
        if let Some(&m) = roles.mediators.iter().find(|&&m| !graph.is_process(m)) {
            return Err(MediationError::MediatorNotProcess(name(m)));
        }
        Ok(MediationGraph { graph, roles, randomized: false })
    }

    pub fn graph(&self) -> &TailedGraph {
        &self.graph
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    /// Same roles (by name) on a different edge set over the same nodes.
    pub fn with_graph(&self, graph: TailedGraph) -> Result<Self, MediationError> {
        let remap = |v: usize| graph.index_of(self.graph.name(v));
        let remap_set = |s: &NodeSet| s.iter().map(|&v| remap(v)).collect::<Result<NodeSet, _>>();
        let roles = Roles {
            treatment_direct: remap(self.roles.treatment_direct)?,
            treatment_mediated: remap(self.roles.treatment_mediated)?,
            mediators: remap_set(&self.roles.mediators)?,
            covariates: remap_set(&self.roles.covariates)?,
            outcome: remap(self.roles.outcome)?,
            latent: remap_set(&self.roles.latent)?,
        };
        let mut out = Self::new(graph, roles)?;
        out.randomized = self.randomized;
        Ok(out)
    }

    /// Records the user's assertion that treatment was randomized.
    pub fn with_randomized(mut self, randomized: bool) -> Self {
        self.randomized = randomized;
        self
    }

    pub fn randomized(&self) -> bool {
        self.randomized
    }

    pub fn process_covariates(&self) -> NodeSet {
        self.roles.covariates.iter().copied().filter(|&c| self.graph.is_process(c)).collect()
    }

    fn baseline_covariates(&self) -> NodeSet {
        self.roles.covariates.iter().copied().filter(|&c| !self.graph.is_process(c)).collect()
    }

    /// Tailed edges outside the allowed set: outcome into mediators or covariates, or
    /// between baseline nodes.
    pub fn disallowed_tailed_edges(&self) -> Vec<(usize, usize)> {
        let r = &self.roles;
        self.graph
            .edges()
            .filter(|&(i, j, k)| {
                k == EdgeKind::Tailed
                    && !(i == r.outcome && (r.mediators.contains(&j) || r.covariates.contains(&j)))
                    && self.graph.is_process(j)
            })
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    /// The three queries in the order a1, a2_discrete, a3. `None` when there is nothing to check.
    pub fn assumption_queries(&self) -> [Option<SeparationQuery>; 3] {
        let r = &self.roles;
        let ad: NodeSet = [r.treatment_direct].into();
        let am: NodeSet = [r.treatment_mediated].into();
        let n: NodeSet = [r.outcome].into();
        let union = |sets: &[&NodeSet]| -> NodeSet { sets.iter().flat_map(|s| s.iter().copied()).collect() };
        let covs_process = self.process_covariates();
        let covs_baseline = self.baseline_covariates();
        let a1 = SeparationQuery::new(ad.clone(), r.mediators.clone(), union(&[&am, &r.covariates, &n]));
        let a2 = SeparationQuery::new(am.clone(), n.clone(), union(&[&ad, &r.covariates, &r.mediators]));
        let a3 = (!covs_process.is_empty())
            .then(|| SeparationQuery::new(am, covs_process, union(&[&ad, &r.mediators, &n, &covs_baseline])));
        [Some(a1), Some(a2), a3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Verified,
    NotImplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionStatus {
    Satisfied,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedQuery {
    pub from: Vec<String>,
    pub target: Vec<String>,
    pub given: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssumptionCheck {
    pub status: Status,
    /// `delta` when the structural precondition holds, `delta_extended` otherwise.
    pub criterion: Flavor,
    pub query: Option<NamedQuery>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<Inconclusive>,
}

impl AssumptionCheck {
    pub fn verified(&self) -> bool {
        self.status == Status::Verified
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreconditionCheck {
    pub status: PreconditionStatus,
    /// Tailed edges other than outcome-to-mediator and outcome-to-covariate.
    pub offending_edges: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MediationReport {
    /// User assertion, not derived from the graph.
    pub a0_randomized_asserted: bool,
    pub a1: AssumptionCheck,
    pub a2_discrete: AssumptionCheck,
    pub a3: AssumptionCheck,
    pub prop2_preconditions: PreconditionCheck,
    pub latent: Vec<String>,
    pub notes: Vec<String>,
}

impl MediationReport {
    pub fn all_verified(&self) -> bool {
        self.a1.verified() && self.a2_discrete.verified() && self.a3.verified()
    }
}

fn named(g: &TailedGraph, q: &SeparationQuery) -> NamedQuery {
    NamedQuery { from: g.names_of(&q.from), target: g.names_of(&q.target), given: g.names_of(&q.given) }
}

fn run_check(g: &TailedGraph, q: Option<SeparationQuery>, plain: bool) -> Result<AssumptionCheck, QueryError> {
    let Some(q) = q else {
        let criterion = if plain { Flavor::Delta } else { Flavor::DeltaExtended };
        return Ok(AssumptionCheck { status: Status::Verified, criterion, query: None, witness: None, reason: None });
    };
    let query = Some(named(g, &q));
    if plain {
        let (status, witness) =
            if delta_separated(g, &q)? { (Status::Verified, None) } else { (Status::NotImplied, delta_witness(g, &q)?) };
        return Ok(AssumptionCheck { status, criterion: Flavor::Delta, query, witness, reason: None });
    }
    Ok(match granger_noncausal_graphical(g, &q)? {
        GrangerVerdict::Holds => {
            AssumptionCheck { status: Status::Verified, criterion: Flavor::DeltaExtended, query, witness: None, reason: None }
        }
        GrangerVerdict::Inconclusive(reason) => {
            let witness = match &reason {
                Inconclusive::Connected { witness } => witness.clone(),
                Inconclusive::TailedAncestorInFrom { .. } => None,
            };
            AssumptionCheck { status: Status::NotImplied, criterion: Flavor::DeltaExtended, query, witness, reason: Some(reason) }
        }
    })
}

/// Checks the three assumptions graphically.
///
/// When the only tailed edges run from the outcome into mediators or covariates, plain
/// δ-separation is used. Otherwise the extended criterion is attempted instead, and a
/// failure is reported as `not_implied`, never as a violation.
pub fn check_assumptions(mg: &MediationGraph) -> Result<MediationReport, MediationError> {
    let g = mg.graph();
    let offending = mg.disallowed_tailed_edges();
    let plain = offending.is_empty();
    let [q1, q2, q3] = mg.assumption_queries();
    let mut notes = vec![
        "the input graph is taken to be the edge union of the rolled graphs at every time point".to_string(),
        "a2 is checked at grid points only".to_string(),
    ];
    if !plain {
        notes.push("structural precondition failed; the extended criterion was used".to_string());
    }
    Ok(MediationReport {
        a0_randomized_asserted: mg.randomized(),
        a1: run_check(g, q1, plain)?,
        a2_discrete: run_check(g, q2, plain)?,
        a3: run_check(g, q3, plain)?,
        prop2_preconditions: PreconditionCheck {
            status: if plain { PreconditionStatus::Satisfied } else { PreconditionStatus::Violated },
            offending_edges: offending
                .iter()
                .map(|&(i, j)| format!("{} {} {}", g.name(i), EdgeKind::Tailed, g.name(j)))
                .collect(),
        },
        latent: g.names_of(&mg.roles().latent),
        notes,
    })
}

/// [`check_assumptions`] for graphs where the direct treatment component drives a
/// covariate process. Mediation through such a covariate counts toward the direct effect.
pub fn check_extended_example(mg: &MediationGraph) -> Result<MediationReport, MediationError> {
    let g = mg.graph();
    let ad = mg.roles().treatment_direct;
    if !mg.process_covariates().iter().any(|&c| g.edge(ad, c).is_some()) {
        return Err(MediationError::NotTreatmentDrivenCovariate);
    }
    let mut report = check_assumptions(mg)?;
    report.notes.push("covariates driven by the direct treatment component contribute to the direct effect".to_string());
    Ok(report)
}
