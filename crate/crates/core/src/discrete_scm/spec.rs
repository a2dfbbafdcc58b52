//! JSON model files.
//!
//! ```json
//! {
//!   "grid": [0, 1, 2],
//!   "treatment": {"single": "A"},
//!   "survival": ["S1", "S2"],
//!   "mediators": [["M0"], ["M1"]],
//!   "covariates": [[], []],
//!   "variables": [
//!     {"name": "A", "states": ["0", "1"], "parents": [], "cpt": [[0.5, 0.5]]}
//!   ]
//! }
//! ```
//!
//! `treatment` is either `{"single": name}` or `{"separated": {"direct": name, "mediated": name}}`.
//! Parents are named and must appear earlier in `variables`.

use serde::{Deserialize, Serialize};

use super::model::{DiscreteScm, MediationLayout, Treatment};
use super::{DiscreteNetwork, ScmError, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentSpec {
    Single(String),
    Separated { direct: String, mediated: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub states: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmSpec {
    pub grid: Vec<f64>,
    pub treatment: TreatmentSpec,
    pub survival: Vec<String>,
    pub mediators: Vec<Vec<String>>,
    #[serde(default)]
    pub covariates: Vec<Vec<String>>,
    pub variables: Vec<VariableSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

impl ScmSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn build(&self) -> Result<DiscreteScm, ScmError> {
        let mut vars: Vec<Variable> = Vec::with_capacity(self.variables.len());
        for v in &self.variables {
            let parents = v
                .parents
                .iter()
                .map(|p| {
                    vars.iter().position(|q| &q.name == p).ok_or_else(|| {
                        if self.variables.iter().any(|q| &q.name == p) {
                            ScmError::ParentOrder { var: v.name.clone(), parent: p.clone() }
                        } else {
                            ScmError::UnknownVariable(p.clone())
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            vars.push(Variable { name: v.name.clone(), states: v.states.clone(), parents, cpt: v.cpt.clone() });
        }
        let net = DiscreteNetwork::new(vars)?;
        let one = |name: &String| net.index_of(name);
        let many = |names: &[String]| names.iter().map(one).collect::<Result<Vec<_>, _>>();
        let lags = self.survival.len();
        let per_lag = |rows: &[Vec<String>]| -> Result<Vec<Vec<usize>>, ScmError> {
            let mut out = rows.iter().map(|r| many(r)).collect::<Result<Vec<_>, _>>()?;
            if out.len() > lags {
                return Err(ScmError::Layout(format!("{} lags listed but only {lags} survival indicators", out.len())));
            }
            out.resize(lags, Vec::new());
            Ok(out)
        };
        let treatment = match &self.treatment {
            TreatmentSpec::Single(a) => Treatment::Single(one(a)?),
            TreatmentSpec::Separated { direct, mediated } => {
                Treatment::Separated { direct: one(direct)?, mediated: one(mediated)? }
            }
        };
        let layout = MediationLayout {
            grid: self.grid.clone(),
            treatment,
            survival: many(&self.survival)?,
            mediators: per_lag(&self.mediators)?,
            covariates: per_lag(&self.covariates)?,
        };
        DiscreteScm::new(net, layout)
    }

    pub fn from_scm(scm: &DiscreteScm) -> Self {
        let net = scm.network();
        let name = |v: &usize| net.var(*v).name.clone();
        let layout = scm.layout();
        ScmSpec {
            grid: layout.grid.clone(),
            treatment: match layout.treatment {
                Treatment::Single(a) => TreatmentSpec::Single(name(&a)),
                Treatment::Separated { direct, mediated } => {
                    TreatmentSpec::Separated { direct: name(&direct), mediated: name(&mediated) }
                }
            },
            survival: layout.survival.iter().map(name).collect(),
            mediators: layout.mediators.iter().map(|r| r.iter().map(name).collect()).collect(),
            covariates: layout.covariates.iter().map(|r| r.iter().map(name).collect()).collect(),
            variables: net
                .vars()
                .iter()
                .map(|v| VariableSpec {
                    name: v.name.clone(),
                    states: v.states.clone(),
                    parents: v.parents.iter().map(|&p| net.var(p).name.clone()).collect(),
                    cpt: v.cpt.clone(),
                })
                .collect(),
        }
    }
}
