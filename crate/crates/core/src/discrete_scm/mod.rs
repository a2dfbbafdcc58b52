//! Exact discrete structural causal models.
//!
//! A [`DiscreteNetwork`] is a Bayesian network with explicit conditional probability
//! tables, stored in a topological order. Joint and marginal tables are computed by
//! exhaustive enumeration, skipping zero-probability branches. On top of that,
//! [`model`] adds the survival/mediation layout, interventions and the g-formula,
//! and [`granger`] tests local independence exactly on lagged tables.

pub mod generate;
pub mod granger;
pub mod model;
pub mod spec;

use std::collections::BTreeMap;

use thiserror::Error;

/// Default cap on the number of cells a joint table may have.
pub const TABLE_BUDGET: usize = 1 << 22;

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Name of the distinguished "not available" state.
pub const NA: &str = "NA";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}` lists parent `{parent}` that does not precede it")]
    ParentOrder { var: String, parent: String },
    #[error("variable `{var}`: expected {expected} CPT rows, found {found}")]
    RowCount { var: String, expected: usize, found: usize },
    #[error("variable `{var}`, row {row}: expected {expected} probabilities, found {found}")]
    RowWidth { var: String, row: usize, expected: usize, found: usize },
    #[error("variable `{var}`, row {row}: {reason}")]
    BadRow { var: String, row: usize, reason: String },
    #[error("variable `{var}` has no state `{state}`")]
    UnknownState { var: String, state: String },
    #[error("variable `{0}` needs at least one state")]
    NoStates(String),
    #[error("table would have {cells} cells, budget is {budget}")]
    TooLarge { cells: u128, budget: usize },
    #[error("cannot assign NA to survival indicator `{0}`")]
    NaSurvival(String),
    #[error("conditioning event has probability zero: {0}")]
    ZeroProbability(String),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("treatment value {0} is out of range")]
    TreatmentValue(usize),
}

/// One discrete variable with its parents and CPT.
///
/// Row `r` of `cpt` is the distribution given the parent configuration whose mixed-radix
/// encoding is `r`, first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<usize>,
    pub cpt: Vec<Vec<f64>>,
}

impl Variable {
    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Bayesian network over discrete variables listed in a topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteNetwork {
    vars: Vec<Variable>,
    index: BTreeMap<String, usize>,
}

impl DiscreteNetwork {
    /// Validates parent order, CPT shapes and row sums.
    pub fn new(vars: Vec<Variable>) -> Result<Self, ScmError> {
        let mut index = BTreeMap::new();
        for (k, v) in vars.iter().enumerate() {
            if v.states.is_empty() {
                return Err(ScmError::NoStates(v.name.clone()));
            }
            if index.insert(v.name.clone(), k).is_some() {
                return Err(ScmError::DuplicateVariable(v.name.clone()));
            }
            for &p in &v.parents {
                if p >= k {
                    let parent = vars.get(p).map(|x| x.name.clone()).unwrap_or_else(|| format!("#{p}"));
                    return Err(ScmError::ParentOrder { var: v.name.clone(), parent });
                }
            }
            let expected: usize = v.parents.iter().map(|&p| vars[p].card()).product();
            if v.cpt.len() != expected {
                return Err(ScmError::RowCount { var: v.name.clone(), expected, found: v.cpt.len() });
            }
            for (r, row) in v.cpt.iter().enumerate() {
                if row.len() != v.card() {
                    return Err(ScmError::RowWidth { var: v.name.clone(), row: r, expected: v.card(), found: row.len() });
                }
                if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                    return Err(ScmError::BadRow { var: v.name.clone(), row: r, reason: format!("invalid probability {p}") });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(ScmError::BadRow { var: v.name.clone(), row: r, reason: format!("sums to {sum}") });
                }
            }
        }
        Ok(DiscreteNetwork { vars, index })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, i: usize) -> &Variable {
        &self.vars[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ScmError> {
        self.index.get(name).copied().ok_or_else(|| ScmError::UnknownVariable(name.to_string()))
    }

    pub fn state_of(&self, var: usize, state: &str) -> Result<usize, ScmError> {
        self.vars[var]
            .state_index(state)
            .ok_or_else(|| ScmError::UnknownState { var: self.vars[var].name.clone(), state: state.to_string() })
    }

    fn row_index(&self, var: usize, values: &[usize]) -> usize {
        self.vars[var].parents.iter().fold(0, |acc, &p| acc * self.vars[p].card() + values[p])
    }

    /// Replaces the mechanisms of the assigned variables by point masses (and drops their parents).
    pub fn intervene(&self, assignments: &[(usize, usize)]) -> Result<DiscreteNetwork, ScmError> {
        let mut vars = self.vars.clone();
        for &(v, s) in assignments {
            let var = vars.get_mut(v).ok_or_else(|| ScmError::UnknownVariable(format!("#{v}")))?;
            if s >= var.card() {
                return Err(ScmError::UnknownState { var: var.name.clone(), state: s.to_string() });
            }
            let mut row = vec![0.0; var.card()];
            row[s] = 1.0;
            var.parents.clear();
            var.cpt = vec![row];
        }
        DiscreteNetwork::new(vars)
    }

    /// [`Self::intervene`] with names.
    pub fn intervene_named(&self, assignments: &[(&str, &str)]) -> Result<DiscreteNetwork, ScmError> {
        let resolved = assignments
            .iter()
            .map(|&(v, s)| {
                let i = self.index_of(v)?;
                Ok((i, self.state_of(i, s)?))
            })
            .collect::<Result<Vec<_>, ScmError>>()?;
        self.intervene(&resolved)
    }

    /// Number of cells in the full joint table.
    pub fn joint_cells(&self) -> u128 {
        self.vars.iter().map(|v| v.card() as u128).product()
    }

    /// Full joint table over all variables.
    pub fn joint(&self) -> Result<JointTable, ScmError> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.marginal(&all)
    }

    /// Exact marginal over `keep`, in the given order, by enumerating every
    /// positive-probability assignment of the network.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointTable, ScmError> {
        let cells = self.joint_cells();
        if cells > TABLE_BUDGET as u128 {
            return Err(ScmError::TooLarge { cells, budget: TABLE_BUDGET });
        }
        let names = keep.iter().map(|&v| self.vars[v].name.clone()).collect();
        let cards: Vec<usize> = keep.iter().map(|&v| self.vars[v].card()).collect();
        let mut acc = Accumulator::new(cards.iter().product());
        let mut values = vec![0; self.len()];
        self.enumerate(0, 1.0, &mut values, &mut |values, p| {
            let cell = keep.iter().zip(&cards).fold(0, |a, (&v, &c)| a * c + values[v]);
            acc.add(cell, p);
        });
        Ok(JointTable { names, cards, probs: acc.finish() })
    }

    fn enumerate(&self, k: usize, p: f64, values: &mut Vec<usize>, visit: &mut impl FnMut(&[usize], f64)) {
        if k == self.len() {
            visit(values, p);
            return;
        }
        let row = &self.vars[k].cpt[self.row_index(k, values)];
        for (s, &q) in row.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            values[k] = s;
            self.enumerate(k + 1, p * q, values, visit);
        }
    }
}

/// Per-cell compensated (Neumaier) summation.
struct Accumulator {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator { sum: vec![0.0; n], comp: vec![0.0; n] }
    }

    fn add(&mut self, cell: usize, x: f64) {
        let s = self.sum[cell];
        let t = s + x;
        if s.abs() >= x.abs() {
            self.comp[cell] += (s - t) + x;
        } else {
            self.comp[cell] += (x - t) + s;
        }
        self.sum[cell] = t;
    }

    fn finish(self) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c).collect()
    }
}

/// Dense probability table, row-major with the first variable most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    names: Vec<String>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

/// A fixed value for one table coordinate.
pub type Filter = (usize, usize);

impl JointTable {
    pub fn new(names: Vec<String>, cards: Vec<usize>, probs: Vec<f64>) -> Result<Self, ScmError> {
        if names.len() != cards.len() || cards.iter().product::<usize>() != probs.len() {
            return Err(ScmError::Layout("table shape does not match its variables".into()));
        }
        Ok(JointTable { names, cards, probs })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn total(&self) -> f64 {
        let mut acc = Accumulator::new(1);
        for &p in &self.probs {
            acc.add(0, p);
        }
        acc.finish()[0]
    }

    /// Decodes a flat cell index into per-coordinate values.
    pub fn decode(&self, mut cell: usize, out: &mut [usize]) {
        for k in (0..self.cards.len()).rev() {
            out[k] = cell % self.cards[k];
            cell /= self.cards[k];
        }
    }

    /// Marginal over the listed coordinates, in that order.
    pub fn marginal(&self, keep: &[usize]) -> JointTable {
        self.marginal_where(keep, &[])
    }

    /// Marginal over `keep` of the cells matching every filter (not renormalized).
    pub fn marginal_where(&self, keep: &[usize], filters: &[Filter]) -> JointTable {
        let cards: Vec<usize> = keep.iter().map(|&k| self.cards[k]).collect();
        let mut acc = Accumulator::new(cards.iter().product());
        let mut values = vec![0; self.cards.len()];
        for (cell, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            self.decode(cell, &mut values);
            if filters.iter().any(|&(k, s)| values[k] != s) {
                continue;
            }
            let out = keep.iter().zip(&cards).fold(0, |a, (&k, &c)| a * c + values[k]);
            acc.add(out, p);
        }
        JointTable { names: keep.iter().map(|&k| self.names[k].clone()).collect(), cards, probs: acc.finish() }
    }

    /// Largest violation of `x ⊥ y | z` among strata with positive probability, after
    /// restricting to cells matching `filters`.
    ///
    /// The violation is `max |P(y | x, z) − P(y | z)|`. Also returns the number of `z`
    /// strata skipped for having probability zero.
    pub fn ci_check(&self, x: &[usize], y: &[usize], z: &[usize], filters: &[Filter]) -> (f64, usize) {
        let keep: Vec<usize> = z.iter().chain(x).chain(y).copied().collect();
        let m = self.marginal_where(&keep, filters);
        let zc: usize = z.iter().map(|&k| self.cards[k]).product();
        let xc: usize = x.iter().map(|&k| self.cards[k]).product();
        let yc: usize = y.iter().map(|&k| self.cards[k]).product();
        let mut worst: f64 = 0.0;
        let mut skipped = 0;
        for zi in 0..zc {
            let block = &m.probs[zi * xc * yc..(zi + 1) * xc * yc];
            let pz: f64 = block.iter().sum();
            if pz <= 0.0 {
                skipped += 1;
                continue;
            }
            for xi in 0..xc {
                let row = &block[xi * yc..(xi + 1) * yc];
                let pxz: f64 = row.iter().sum();
                if pxz <= 0.0 {
                    continue;
                }
                for yi in 0..yc {
                    let pyz: f64 = (0..xc).map(|x2| block[x2 * yc + yi]).sum();
                    worst = worst.max((row[yi] / pxz - pyz / pz).abs());
                }
            }
        }
        (worst, skipped)
    }

    /// Whether `x ⊥ y | z` holds to within `tol` on the filtered table.
    pub fn independent(&self, x: &[usize], y: &[usize], z: &[usize], filters: &[Filter], tol: f64) -> bool {
        self.ci_check(x, y, z, filters).0 <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(name: &str, p1: f64) -> Variable {
        Variable { name: name.into(), states: vec!["0".into(), "1".into()], parents: vec![], cpt: vec![vec![1.0 - p1, p1]] }
    }

    #[test]
    fn single_variable_joint() {
        let net = DiscreteNetwork::new(vec![coin("x", 0.3)]).unwrap();
        assert_eq!(net.joint().unwrap().probs(), &[0.7, 0.3]);
    }

    #[test]
    fn two_fair_coins_are_uniform() {
        let net = DiscreteNetwork::new(vec![coin("x", 0.5), coin("y", 0.5)]).unwrap();
        let j = net.joint().unwrap();
        assert_eq!(j.probs(), &[0.25; 4]);
        assert!(j.independent(&[0], &[1], &[], &[], 0.0));
    }

    #[test]
    fn row_order_is_mixed_radix() {
        let y = Variable {
            name: "y".into(),
            states: vec!["0".into(), "1".into(), "2".into()],
            parents: vec![0, 1],
            cpt: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.0]],
        };
        let net = DiscreteNetwork::new(vec![coin("a", 0.5), coin("b", 0.5), y]).unwrap();
        let j = net.joint().unwrap();
        // a=1, b=0 is row 2, which puts all mass on y=2.
        let m = j.marginal_where(&[2], &[(0, 1), (1, 0)]);
        assert_eq!(m.probs(), &[0.0, 0.0, 0.25]);
        assert!((j.total() - 1.0).abs() < 1e-15);
        assert!(!j.independent(&[0], &[2], &[], &[], 1e-9));
    }

    #[test]
    fn validation_errors() {
        let bad = Variable { cpt: vec![vec![0.5, 0.6]], ..coin("x", 0.5) };
        assert!(matches!(DiscreteNetwork::new(vec![bad]), Err(ScmError::BadRow { .. })));
        let forward = Variable { parents: vec![1], cpt: vec![vec![0.5, 0.5]; 2], ..coin("x", 0.5) };
        assert!(matches!(DiscreteNetwork::new(vec![forward, coin("y", 0.5)]), Err(ScmError::ParentOrder { .. })));
        let rows = Variable { parents: vec![0], ..coin("y", 0.5) };
        assert!(matches!(DiscreteNetwork::new(vec![coin("x", 0.5), rows]), Err(ScmError::RowCount { .. })));
    }

    #[test]
    fn root_intervention_matches_conditioning() {
        let y = Variable { parents: vec![0], cpt: vec![vec![0.9, 0.1], vec![0.2, 0.8]], ..coin("y", 0.0) };
        let net = DiscreteNetwork::new(vec![coin("x", 0.5), y]).unwrap();
        let done = net.intervene_named(&[("x", "1")]).unwrap();
        assert_eq!(done.marginal(&[1]).unwrap().probs(), &[0.2, 0.8]);
        let twice = done.intervene_named(&[("x", "1")]).unwrap();
        assert_eq!(twice, done);
        let cond = net.joint().unwrap().marginal_where(&[1], &[(0, 1)]);
        assert_eq!(cond.probs().iter().map(|p| p * 2.0).collect::<Vec<_>>(), vec![0.2, 0.8]);
    }

    #[test]
    fn budget_is_enforced() {
        let vars: Vec<Variable> = (0..23).map(|k| coin(&format!("v{k}"), 0.5)).collect();
        let net = DiscreteNetwork::new(vars).unwrap();
        assert!(matches!(net.joint(), Err(ScmError::TooLarge { .. })));
    }
}
