//! Exact local-independence tests on tables whose coordinates are named `name@lag`.

use serde::Serialize;

use super::{JointTable, ScmError};

/// Default tolerance for exact tests.
pub const GRANGER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrangerCheck {
    pub holds: bool,
    /// Largest conditional-probability discrepancy at each `t = 1..=t_prime`.
    pub violation: Vec<f64>,
    pub skipped_strata: usize,
}

fn split(label: &str) -> Option<(&str, usize)> {
    let (name, lag) = label.rsplit_once('@')?;
    Some((name, lag.parse().ok()?))
}

/// Coordinates of `sources` at lags `0..=upto`.
fn history(table: &JointTable, sources: &[&str], upto: usize) -> Vec<usize> {
    table
        .names()
        .iter()
        .enumerate()
        .filter(|(_, n)| split(n).is_some_and(|(s, l)| l <= upto && sources.contains(&s)))
        .map(|(k, _)| k)
        .collect()
}

fn slice(table: &JointTable, sources: &[&str], lag: usize) -> Result<Vec<usize>, ScmError> {
    sources
        .iter()
        .map(|s| {
            let label = format!("{s}@{lag}");
            table.index_of(&label).ok_or(ScmError::UnknownVariable(label))
        })
        .collect()
}

fn run(
    table: &JointTable,
    from: &[&str],
    target: &[&str],
    given_sources: &[&str],
    extra_current: &[&str],
    t_prime: usize,
    tol: f64,
) -> Result<GrangerCheck, ScmError> {
    let mut violation = Vec::with_capacity(t_prime);
    let mut skipped_strata = 0;
    for t in 1..=t_prime {
        let y = slice(table, target, t)?;
        let mut z = history(table, given_sources, t - 1);
        z.extend(slice(table, extra_current, t)?);
        let x: Vec<usize> = history(table, from, t - 1).into_iter().filter(|k| !z.contains(k)).collect();
        let (v, s) = table.ci_check(&x, &y, &z, &[]);
        violation.push(v);
        skipped_strata += s;
    }
    Ok(GrangerCheck { holds: violation.iter().all(|&v| v <= tol), violation, skipped_strata })
}

fn check_disjoint(sets: &[&[&str]]) -> Result<(), ScmError> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(x) = a.iter().find(|x| b.contains(x)) {
                return Err(ScmError::Layout(format!("`{x}` appears in two of the query sets")));
            }
        }
    }
    Ok(())
}

/// `from` is Granger non-causal for `target` given `given`: for each `t = 1..=t_prime`,
/// the past of `from` and `target@t` are independent given the past of `target ∪ given`.
pub fn granger_noncausal_exact(
    table: &JointTable,
    from: &[&str],
    target: &[&str],
    given: &[&str],
    t_prime: usize,
    tol: f64,
) -> Result<GrangerCheck, ScmError> {
    check_disjoint(&[from, target, given])?;
    let cond: Vec<&str> = target.iter().chain(given).copied().collect();
    run(table, from, target, &cond, &[], t_prime, tol)
}

/// Like [`granger_noncausal_exact`] with `current@t` added to the conditioning set.
pub fn granger_noncausal_exact_with_current(
    table: &JointTable,
    from: &[&str],
    target: &[&str],
    given: &[&str],
    current: &[&str],
    t_prime: usize,
    tol: f64,
) -> Result<GrangerCheck, ScmError> {
    check_disjoint(&[from, target, given])?;
    let cond: Vec<&str> = target.iter().chain(given).copied().collect();
    run(table, from, target, &cond, current, t_prime, tol)
}

/// The same notion parameterized by a reference set: `from` is Granger non-causal for
/// `target` relative to `reference` when the past of `from` and `target@t` are independent
/// given the past of `reference \ from`.
pub fn granger_noncausal_relative(
    table: &JointTable,
    from: &[&str],
    target: &[&str],
    reference: &[&str],
    t_prime: usize,
    tol: f64,
) -> Result<GrangerCheck, ScmError> {
    check_disjoint(&[from, target])?;
    if let Some(x) = from.iter().chain(target).find(|x| !reference.contains(x)) {
        return Err(ScmError::Layout(format!("`{x}` is not in the reference set")));
    }
    let cond: Vec<&str> = reference.iter().filter(|x| !from.contains(x)).copied().collect();
    run(table, from, target, &cond, &[], t_prime, tol)
}
