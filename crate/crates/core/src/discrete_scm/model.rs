//! Survival/mediation layout on top of a [`DiscreteNetwork`]: interventions,
//! interventional survival, the mediational g-formula and exact assumption checks.
//!
//! Observed variables follow the time order
//! `A, M_0, C_0, S_1, M_1, C_1, S_2, …, S_K` where `S_k` is the indicator of
//! survival past grid point `t_k` (state index [`ALIVE`]). Variables with no role are latent.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{DiscreteNetwork, JointTable, ScmError, Variable, NA};

/// State index meaning "still alive" for survival indicators.
pub const ALIVE: usize = 1;

/// Tolerance used by the exact assumption checks.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Treatment {
    Single(usize),
    Separated { direct: usize, mediated: usize },
}

/// Which network variables play which role at which lag.
#[derive(Debug, Clone, PartialEq)]
pub struct MediationLayout {
    /// Grid `t_0 < t_1 < … < t_K`.
    pub grid: Vec<f64>,
    pub treatment: Treatment,
    /// `S_1 … S_K`.
    pub survival: Vec<usize>,
    /// Mediators at lags `0 … K-1`.
    pub mediators: Vec<Vec<usize>>,
    /// Covariates at lags `0 … K-1`.
    pub covariates: Vec<Vec<usize>>,
}

impl MediationLayout {
    pub fn lag_count(&self) -> usize {
        self.survival.len()
    }

    fn treatment_vars(&self) -> Vec<usize> {
        match self.treatment {
            Treatment::Single(a) => vec![a],
            Treatment::Separated { direct, mediated } => vec![direct, mediated],
        }
    }

    /// Observed variables in time order, treatment first.
    pub fn time_order(&self) -> Vec<usize> {
        let mut out = self.treatment_vars();
        for k in 0..self.lag_count() {
            out.extend(&self.mediators[k]);
            out.extend(&self.covariates[k]);
            out.push(self.survival[k]);
        }
        out
    }
}

/// A discrete survival/mediation model: a network plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    net: DiscreteNetwork,
    layout: MediationLayout,
}

fn na_state(v: &Variable) -> Option<usize> {
    v.state_index(NA)
}

/// Decodes the parent configuration of CPT row `r`.
fn parent_values(net: &DiscreteNetwork, var: usize, mut r: usize) -> Vec<usize> {
    let parents = &net.var(var).parents;
    let mut out = vec![0; parents.len()];
    for (k, &p) in parents.iter().enumerate().rev() {
        let c = net.var(p).card();
        out[k] = r % c;
        r /= c;
    }
    out
}

impl DiscreteScm {
    pub fn new(net: DiscreteNetwork, layout: MediationLayout) -> Result<Self, ScmError> {
        let k = layout.lag_count();
        let bad = |msg: String| Err(ScmError::Layout(msg));
        if k == 0 {
            return bad("at least one survival indicator is required".into());
        }
        if layout.mediators.len() != k || layout.covariates.len() != k {
            return bad(format!("expected mediator and covariate lists for {k} lags"));
        }
        if layout.grid.len() != k + 1 || layout.grid.windows(2).any(|w| w[0] >= w[1] || w[0].is_nan() || w[1].is_nan()) {
            return bad(format!("grid must have {} strictly increasing points", k + 1));
        }
        let order = layout.time_order();
        let mut seen = BTreeSet::new();
        for &v in &order {
            if v >= net.len() {
                return bad(format!("variable index {v} out of range"));
            }
            if !seen.insert(v) {
                return bad(format!("variable `{}` has more than one role", net.var(v).name));
            }
        }
        for a in layout.treatment_vars() {
            if !net.var(a).parents.is_empty() {
                return bad(format!("treatment `{}` must be a root", net.var(a).name));
            }
        }
        // Observed parents must come earlier in time order.
        let position: std::collections::BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, &v)| (v, p)).collect();
        for &v in &order {
            for p in &net.var(v).parents {
                if let Some(&pp) = position.get(p) {
                    if pp >= position[&v] {
                        return bad(format!(
                            "`{}` depends on `{}`, which comes later in time order",
                            net.var(v).name,
                            net.var(*p).name
                        ));
                    }
                }
            }
        }
        for (j, &s) in layout.survival.iter().enumerate() {
            let var = net.var(s);
            if var.card() != 2 {
                return bad(format!("survival indicator `{}` must be binary", var.name));
            }
            if j > 0 && !var.parents.contains(&layout.survival[j - 1]) {
                return bad(format!("`{}` must depend on the previous survival indicator", var.name));
            }
            for (r, row) in var.cpt.iter().enumerate() {
                let pv = parent_values(&net, s, r);
                let dead_parent = var.parents.iter().zip(&pv).any(|(p, &x)| layout.survival.contains(p) && x != ALIVE);
                if dead_parent && row[ALIVE] != 0.0 {
                    return bad(format!("`{}` can come back to life (row {r})", var.name));
                }
            }
        }
        for lag in 1..k {
            let s = layout.survival[lag - 1];
            for &v in layout.mediators[lag].iter().chain(&layout.covariates[lag]) {
                let var = net.var(v);
                let Some(na) = na_state(var) else {
                    return bad(format!("`{}` needs an `{NA}` state", var.name));
                };
                let Some(slot) = var.parents.iter().position(|&p| p == s) else {
                    return bad(format!("`{}` must depend on `{}`", var.name, net.var(s).name));
                };
                for (r, row) in var.cpt.iter().enumerate() {
                    if parent_values(&net, v, r)[slot] != ALIVE && row[na] != 1.0 {
                        return bad(format!("`{}` must be `{NA}` after death (row {r})", var.name));
                    }
                }
            }
        }
        Ok(DiscreteScm { net, layout })
    }

    pub fn network(&self) -> &DiscreteNetwork {
        &self.net
    }

    pub fn layout(&self) -> &MediationLayout {
        &self.layout
    }

    pub fn lag_count(&self) -> usize {
        self.layout.lag_count()
    }

    /// Variables with no role.
    pub fn latent(&self) -> Vec<usize> {
        let observed: BTreeSet<usize> = self.layout.time_order().into_iter().collect();
        (0..self.net.len()).filter(|v| !observed.contains(v)).collect()
    }

    /// Point interventions. Survival indicators cannot be set to `NA`.
    pub fn intervene(&self, assignments: &[(usize, usize)]) -> Result<DiscreteScm, ScmError> {
        for &(v, s) in assignments {
            if self.layout.survival.contains(&v) && self.net.var(v).states.get(s).map(String::as_str) == Some(NA) {
                return Err(ScmError::NaSurvival(self.net.var(v).name.clone()));
            }
        }
        Ok(DiscreteScm { net: self.net.intervene(assignments)?, layout: self.layout.clone() })
    }

    /// [`Self::intervene`] by variable and state names.
    pub fn intervene_named(&self, assignments: &[(&str, &str)]) -> Result<DiscreteScm, ScmError> {
        let mut resolved = Vec::new();
        for &(name, state) in assignments {
            let v = self.net.index_of(name)?;
            if state == NA && self.layout.survival.contains(&v) {
                return Err(ScmError::NaSurvival(name.to_string()));
            }
            resolved.push((v, self.net.state_of(v, state)?));
        }
        self.intervene(&resolved)
    }

    /// Joint table of the observed variables in time order.
    pub fn observed_table(&self) -> Result<JointTable, ScmError> {
        self.net.marginal(&self.layout.time_order())
    }

    /// `P(T > t_k)` for `k = 1..K`.
    pub fn survival_curve(&self) -> Result<Vec<f64>, ScmError> {
        let t = self.net.marginal(&self.layout.survival)?;
        Ok((0..self.lag_count()).map(|k| t.marginal(&[k]).probs()[ALIVE]).collect())
    }

    fn single_treatment(&self) -> Result<usize, ScmError> {
        match self.layout.treatment {
            Treatment::Single(a) => Ok(a),
            Treatment::Separated { .. } => {
                Err(ScmError::Layout("this operation needs the observational model with one treatment".into()))
            }
        }
    }

    fn check_treatment_value(&self, a: usize) -> Result<(), ScmError> {
        let var = self.layout.treatment_vars()[0];
        if a >= self.net.var(var).card() {
            return Err(ScmError::TreatmentValue(a));
        }
        Ok(())
    }

    /// `P(T > t_k | do(A = a))` for `k = 1..K`.
    pub fn survival_under_treatment(&self, a: usize) -> Result<Vec<f64>, ScmError> {
        let var = self.single_treatment()?;
        self.check_treatment_value(a)?;
        self.intervene(&[(var, a)])?.survival_curve()
    }

    /// `P(T > t_k | A = a)` for `k = 1..K`, by conditioning the observed table.
    pub fn survival_given_treatment(&self, a: usize) -> Result<Vec<f64>, ScmError> {
        let var = self.single_treatment()?;
        self.check_treatment_value(a)?;
        let mut keep = vec![var];
        keep.extend(&self.layout.survival);
        let t = self.net.marginal(&keep)?;
        let pa = t.marginal_where(&[0], &[(0, a)]).probs()[a];
        if pa <= 0.0 {
            return Err(ScmError::ZeroProbability(format!("{} = {a}", self.net.var(var).name)));
        }
        Ok((1..keep.len()).map(|k| t.marginal_where(&[k], &[(0, a)]).probs()[ALIVE] / pa).collect())
    }

    /// Mediational g-formula evaluated on the observed joint: mediator factors under
    /// `A = a_star`, covariate and survival factors under `A = a`. Returns one value per grid
    /// point `t_1 … t_K`.
    ///
    /// Histories whose conditioning event has probability zero contribute nothing unless
    /// `strict`, in which case they are an error.
    pub fn mediational_g_formula(&self, a: usize, a_star: usize, strict: bool) -> Result<Vec<f64>, ScmError> {
        self.single_treatment()?;
        self.check_treatment_value(a)?;
        self.check_treatment_value(a_star)?;
        let order = self.layout.time_order();
        let table = self.net.marginal(&order)?;
        let prefixes = prefix_tables(&table);
        let mediator_set: BTreeSet<usize> = self.layout.mediators.iter().flatten().copied().collect();
        let steps: Vec<Step> = order
            .iter()
            .enumerate()
            .skip(1)
            .map(|(pos, v)| Step {
                card: table.cards()[pos],
                regime_star: mediator_set.contains(v),
                survival_index: self.layout.survival.iter().position(|s| s == v),
            })
            .collect();
        let mut walker = GWalk {
            steps: &steps,
            prefixes: &prefixes,
            out: vec![0.0; self.lag_count()],
            strict,
            names: order.iter().map(|&v| self.net.var(v).name.clone()).collect(),
            history: Vec::new(),
        };
        walker.go(0, a, a_star, 1.0)?;
        Ok(walker.out)
    }

    /// Standard g-computation formula: the g-formula with a single regime.
    pub fn g_computation(&self, a: usize, strict: bool) -> Result<Vec<f64>, ScmError> {
        self.mediational_g_formula(a, a, strict)
    }
}

struct Step {
    card: usize,
    regime_star: bool,
    survival_index: Option<usize>,
}

/// `prefixes[l]` is the marginal over the first `l + 1` time-ordered variables.
fn prefix_tables(table: &JointTable) -> Vec<Vec<f64>> {
    let cards = table.cards();
    let mut out = vec![table.probs().to_vec()];
    for l in (1..cards.len()).rev() {
        let last = out.last().expect("nonempty");
        let c = cards[l];
        out.push(last.chunks(c).map(|ch| ch.iter().sum()).collect());
    }
    out.reverse();
    out
}

struct GWalk<'a> {
    steps: &'a [Step],
    prefixes: &'a [Vec<f64>],
    out: Vec<f64>,
    strict: bool,
    names: Vec<String>,
    history: Vec<usize>,
}

impl GWalk<'_> {
    /// `idx_a`/`idx_star` index the current prefix with the treatment set to `a`/`a_star`.
    fn go(&mut self, depth: usize, idx_a: usize, idx_star: usize, weight: f64) -> Result<(), ScmError> {
        let Some(step) = self.steps.get(depth) else { return Ok(()) };
        let (den_table, num_table) = (&self.prefixes[depth], &self.prefixes[depth + 1]);
        let states: Vec<usize> = match step.survival_index {
            Some(_) => vec![ALIVE],
            None => (0..step.card).collect(),
        };
        for s in states {
            let idx = if step.regime_star { idx_star } else { idx_a };
            let (num, den) = (num_table[idx * step.card + s], den_table[idx]);
            if den == 0.0 {
                if self.strict {
                    return Err(ScmError::ZeroProbability(self.describe(depth, step.regime_star)));
                }
                continue;
            }
            if num == 0.0 {
                continue;
            }
            let w = weight * (num / den);
            if let Some(k) = step.survival_index {
                self.out[k] += w;
            }
            self.history.push(s);
            self.go(depth + 1, idx_a * step.card + s, idx_star * step.card + s, w)?;
            self.history.pop();
        }
        Ok(())
    }

    fn describe(&self, depth: usize, star: bool) -> String {
        let mut parts = vec![format!("{} = {}", self.names[0], if star { "a*" } else { "a" })];
        parts.extend(self.history.iter().take(depth).enumerate().map(|(k, s)| format!("{} = {s}", self.names[k + 1])));
        parts.join(", ")
    }
}

/// A model whose treatment is split into direct and mediated components.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedScm(DiscreteScm);

/// Outcome of the exact checks, per assumption and lag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactAssumptions {
    pub a1: bool,
    pub a2_discrete: bool,
    pub a3: bool,
    /// Largest conditional-probability discrepancy per lag.
    pub a1_violation: Vec<f64>,
    pub a2_violation: Vec<f64>,
    pub a3_violation: Vec<f64>,
    /// Conditioning strata of probability zero that were skipped.
    pub skipped_strata: usize,
    pub tolerance: f64,
}

impl SeparatedScm {
    pub fn new(scm: DiscreteScm) -> Result<Self, ScmError> {
        match scm.layout.treatment {
            Treatment::Separated { direct, mediated } if direct != mediated => Ok(SeparatedScm(scm)),
            _ => Err(ScmError::Layout("a separated model needs distinct direct and mediated treatments".into())),
        }
    }

    pub fn scm(&self) -> &DiscreteScm {
        &self.0
    }

    fn components(&self) -> (usize, usize) {
        match self.0.layout.treatment {
            Treatment::Separated { direct, mediated } => (direct, mediated),
            Treatment::Single(_) => unreachable!("checked on construction"),
        }
    }

    /// The observational model: both components replaced by one treatment `A` with the
    /// direct component's distribution, feeding every child of either component.
    pub fn observational(&self) -> Result<DiscreteScm, ScmError> {
        let (direct, mediated) = self.components();
        let net = &self.0.net;
        if net.var(direct).card() != net.var(mediated).card() {
            return Err(ScmError::Layout("treatment components must have the same states".into()));
        }
        // New index of each old variable; the mediated component disappears.
        let remap = |v: usize| if v > mediated { v - 1 } else { v };
        let merged = |v: usize| if v == mediated { remap(direct) } else { remap(v) };
        let mut vars = Vec::with_capacity(net.len() - 1);
        for (v, var) in net.vars().iter().enumerate() {
            if v == mediated {
                continue;
            }
            if v == direct {
                vars.push(Variable { name: "A".into(), ..var.clone() });
                continue;
            }
            let mut parents: Vec<usize> = Vec::new();
            for &p in &var.parents {
                if !parents.contains(&merged(p)) {
                    parents.push(merged(p));
                }
            }
            let cards: Vec<usize> = parents.iter().map(|&q| net.var(q + usize::from(q >= mediated)).card()).collect();
            let rows: usize = cards.iter().product();
            let mut cpt = Vec::with_capacity(rows);
            for r in 0..rows {
                let mut rem = r;
                let mut new_values = vec![0; parents.len()];
                for k in (0..parents.len()).rev() {
                    new_values[k] = rem % cards[k];
                    rem /= cards[k];
                }
                let old_row = var.parents.iter().fold(0, |acc, &p| {
                    let slot = parents.iter().position(|&q| q == merged(p)).expect("parent kept");
                    acc * net.var(p).card() + new_values[slot]
                });
                cpt.push(var.cpt[old_row].clone());
            }
            vars.push(Variable { parents, cpt, ..var.clone() });
        }
        let l = &self.0.layout;
        let layout = MediationLayout {
            grid: l.grid.clone(),
            treatment: Treatment::Single(remap(direct)),
            survival: l.survival.iter().map(|&v| remap(v)).collect(),
            mediators: l.mediators.iter().map(|m| m.iter().map(|&v| remap(v)).collect()).collect(),
            covariates: l.covariates.iter().map(|m| m.iter().map(|&v| remap(v)).collect()).collect(),
        };
        DiscreteScm::new(DiscreteNetwork::new(vars)?, layout)
    }

    /// `P(T > t_k | do(A^D = a, A^M = a_star))` for `k = 1..K`.
    pub fn interventional_survival(&self, a: usize, a_star: usize) -> Result<Vec<f64>, ScmError> {
        let (direct, mediated) = self.components();
        for x in [a, a_star] {
            if x >= self.0.net.var(direct).card() || x >= self.0.net.var(mediated).card() {
                return Err(ScmError::TreatmentValue(x));
            }
        }
        self.0.intervene(&[(direct, a), (mediated, a_star)])?.survival_curve()
    }

    /// Exact conditional-independence checks of the three assumptions at every lag, with
    /// both treatment components varying independently (their own root distributions).
    pub fn verify_assumptions_exact(&self) -> Result<ExactAssumptions, ScmError> {
        let l = &self.0.layout;
        let order = l.time_order();
        let table = self.0.net.marginal(&order)?;
        let pos = |v: usize| order.iter().position(|&o| o == v).expect("observed");
        let (ad, am) = (0, 1);
        let k_max = l.lag_count();
        let lagged =
            |lists: &Vec<Vec<usize>>, upto: usize| -> Vec<usize> { lists.iter().take(upto).flatten().map(|&v| pos(v)).collect() };
        let mut skipped = 0;
        let mut run = |x: usize, y: Vec<usize>, z: Vec<usize>, k: usize| -> f64 {
            let filters: Vec<(usize, usize)> = if k > 0 { vec![(pos(l.survival[k - 1]), ALIVE)] } else { vec![] };
            let (v, s) = table.ci_check(&[x], &y, &z, &filters);
            skipped += s;
            v
        };
        let (mut a1v, mut a2v, mut a3v) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..k_max {
            let mut z1 = vec![am];
            z1.extend(lagged(&l.mediators, k));
            z1.extend(lagged(&l.covariates, k));
            a1v.push(run(ad, l.mediators[k].iter().map(|&v| pos(v)).collect(), z1, k));

            let mut z3 = vec![ad];
            z3.extend(lagged(&l.mediators, k + 1));
            z3.extend(lagged(&l.covariates, k));
            let covs: Vec<usize> = l.covariates[k].iter().map(|&v| pos(v)).collect();
            a3v.push(if covs.is_empty() { 0.0 } else { run(am, covs, z3, k) });

            let mut z2 = vec![ad];
            z2.extend(lagged(&l.mediators, k + 1));
            z2.extend(lagged(&l.covariates, k + 1));
            a2v.push(run(am, vec![pos(l.survival[k])], z2, k));
        }
        let ok = |v: &[f64]| v.iter().all(|&x| x <= EXACT_TOL);
        Ok(ExactAssumptions {
            a1: ok(&a1v),
            a2_discrete: ok(&a2v),
            a3: ok(&a3v),
            a1_violation: a1v,
            a2_violation: a2v,
            a3_violation: a3v,
            skipped_strata: skipped,
            tolerance: EXACT_TOL,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(name: &str, states: &[&str], parents: Vec<usize>, cpt: Vec<Vec<f64>>) -> Variable {
        Variable { name: name.into(), states: states.iter().map(|s| s.to_string()).collect(), parents, cpt }
    }

    const BIN: &[&str] = &["0", "1"];
    const TRI: &[&str] = &["0", "1", "NA"];

    /// One lag: AD, AM, M0 <- AM, S1 <- (AD, M0). No covariates.
    fn one_lag(direct_into_mediator: bool) -> SeparatedScm {
        let m0 = if direct_into_mediator {
            var("M0", TRI, vec![0, 1], vec![vec![0.8, 0.2, 0.0], vec![0.4, 0.6, 0.0], vec![0.5, 0.5, 0.0], vec![0.1, 0.9, 0.0]])
        } else {
            var("M0", TRI, vec![1], vec![vec![0.7, 0.3, 0.0], vec![0.2, 0.8, 0.0]])
        };
        let vars = vec![
            var("AD", BIN, vec![], vec![vec![0.5, 0.5]]),
            var("AM", BIN, vec![], vec![vec![0.5, 0.5]]),
            m0,
            var(
                "S1",
                BIN,
                vec![0, 2],
                vec![vec![0.1, 0.9], vec![0.3, 0.7], vec![0.5, 0.5], vec![0.2, 0.8], vec![0.6, 0.4], vec![0.5, 0.5]],
            ),
        ];
        let layout = MediationLayout {
            grid: vec![0.0, 1.0],
            treatment: Treatment::Separated { direct: 0, mediated: 1 },
            survival: vec![3],
            mediators: vec![vec![2]],
            covariates: vec![vec![]],
        };
        SeparatedScm::new(DiscreteScm::new(DiscreteNetwork::new(vars).unwrap(), layout).unwrap()).unwrap()
    }

    #[test]
    fn hand_computed_interventional_survival() {
        let scm = one_lag(false);
        // do(AD=1, AM=0): M0 ~ (0.7, 0.3); S1 alive given AD=1: 0.8 (M0=0), 0.4 (M0=1).
        let v = scm.interventional_survival(1, 0).unwrap();
        assert!((v[0] - (0.7 * 0.8 + 0.3 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn g_formula_identifies_when_assumptions_hold() {
        let scm = one_lag(false);
        let exact = scm.verify_assumptions_exact().unwrap();
        assert!(exact.a1 && exact.a2_discrete && exact.a3, "{exact:?}");
        let obs = scm.observational().unwrap();
        for a in 0..2 {
            for a_star in 0..2 {
                let g = obs.mediational_g_formula(a, a_star, true).unwrap();
                let truth = scm.interventional_survival(a, a_star).unwrap();
                assert!((g[0] - truth[0]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn direct_effect_on_mediator_breaks_a1_and_identification() {
        let scm = one_lag(true);
        let exact = scm.verify_assumptions_exact().unwrap();
        assert!(!exact.a1);
        assert!(exact.a2_discrete);
        let obs = scm.observational().unwrap();
        let g = obs.mediational_g_formula(1, 0, false).unwrap();
        let truth = scm.interventional_survival(1, 0).unwrap();
        assert!((g[0] - truth[0]).abs() > 1e-6);
    }

    #[test]
    fn paired_intervention_matches_observational_model() {
        let scm = one_lag(true);
        let obs = scm.observational().unwrap();
        for a in 0..2 {
            let sep = scm.interventional_survival(a, a).unwrap();
            let single = obs.survival_under_treatment(a).unwrap();
            assert!((sep[0] - single[0]).abs() < 1e-15);
            let g = obs.g_computation(a, true).unwrap();
            let cond = obs.survival_given_treatment(a).unwrap();
            assert!((g[0] - cond[0]).abs() < 1e-12);
            assert_eq!(g, obs.mediational_g_formula(a, a, true).unwrap());
        }
    }

    #[test]
    fn layout_rejects_resurrection_and_na_survival() {
        let vars = vec![
            var("A", BIN, vec![], vec![vec![0.5, 0.5]]),
            var("S1", BIN, vec![0], vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
            var("M1", TRI, vec![1], vec![vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.0]]),
            var("S2", BIN, vec![1], vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
        ];
        let layout = MediationLayout {
            grid: vec![0.0, 1.0, 2.0],
            treatment: Treatment::Single(0),
            survival: vec![1, 3],
            mediators: vec![vec![], vec![2]],
            covariates: vec![vec![], vec![]],
        };
        let err = DiscreteScm::new(DiscreteNetwork::new(vars.clone()).unwrap(), layout.clone()).unwrap_err();
        assert!(matches!(err, ScmError::Layout(ref m) if m.contains("back to life")), "{err}");

        let mut fixed = vars;
        fixed[3].cpt = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let scm = DiscreteScm::new(DiscreteNetwork::new(fixed).unwrap(), layout).unwrap();
        let curve = scm.survival_under_treatment(1).unwrap();
        assert!(curve[1] <= curve[0]);
        assert!(scm.intervene(&[(1, 0)]).is_ok());
        assert_eq!(scm.intervene_named(&[("S1", "NA")]), Err(ScmError::NaSurvival("S1".into())));
        assert!(scm.latent().is_empty());
    }
}
