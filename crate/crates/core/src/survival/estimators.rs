//! Kaplan–Meier, Nelson–Aalen, time-dependent Cox with Breslow ties, the Breslow
//! baseline, the cumulative added-hazard estimator and survival-scale effect curves.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Row, StepFunction, SurvivalDataset, SurvivalError};

/// Weighted risk-set sums at one time `u` over rows with `start < u <= stop`.
#[derive(Debug, Clone)]
pub(crate) struct RiskSums {
    pub count: usize,
    pub s0: f64,
    pub s1: Vec<f64>,
    /// Row-major `p × p`; empty unless second moments were requested.
    pub s2: Vec<f64>,
}

/// Risk-set sums at each of `times` (ascending) by a single descending sweep.
pub(crate) fn risk_sums(rows: &[Row], weights: &[f64], times: &[f64], p: usize, second: bool) -> Vec<RiskSums> {
    let mut by_stop: Vec<usize> = (0..rows.len()).collect();
    by_stop.sort_by(|&a, &b| rows[b].stop.total_cmp(&rows[a].stop));
    let mut by_start = by_stop.clone();
    by_start.sort_by(|&a, &b| rows[b].start.total_cmp(&rows[a].start));
    // Rows enter and leave the running sums, so plain accumulation drifts once the risk set
    // has turned over many times. Slot 0 is s0, then s1, then s2.
    let width = 1 + p + if second { p * p } else { 0 };
    let mut acc = vec![Neumaier::default(); width];
    let mut count = 0usize;
    let update = |acc: &mut [Neumaier], i: usize, sign: f64| {
        let w = weights[i] * sign;
        let z = &rows[i].z;
        acc[0].add(w);
        for a in 0..p {
            acc[1 + a].add(w * z[a]);
            if second {
                for b in 0..p {
                    acc[1 + p + a * p + b].add(w * z[a] * z[b]);
                }
            }
        }
    };
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(times.len());
    for &u in times.iter().rev() {
        while i < by_stop.len() && rows[by_stop[i]].stop >= u {
            update(&mut acc, by_stop[i], 1.0);
            count += 1;
            i += 1;
        }
        while j < by_start.len() && rows[by_start[j]].start >= u {
            update(&mut acc, by_start[j], -1.0);
            count -= 1;
            j += 1;
        }
        let v: Vec<f64> = acc.iter().map(Neumaier::value).collect();
        out.push(RiskSums { count, s0: v[0], s1: v[1..1 + p].to_vec(), s2: v[1 + p..].to_vec() });
    }
    out.reverse();
    out
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() { (self.sum - t) + x } else { (x - t) + self.sum };
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Distinct event times (ascending) with the indices of the rows that end in an event there.
pub(crate) fn event_times(rows: &[Row]) -> Vec<(f64, Vec<usize>)> {
    let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].event).collect();
    idx.sort_by(|&a, &b| rows[a].stop.total_cmp(&rows[b].stop));
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some((t, members)) if *t == rows[i].stop => members.push(i),
            _ => out.push((rows[i].stop, vec![i])),
        }
    }
    out
}

fn linear_weights(rows: &[Row], gamma: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.z.iter().zip(gamma).map(|(z, g)| z * g).sum::<f64>().exp()).collect()
}

/// `Σ d(u) / S0(u)` over event times, with `S0` the weighted risk-set size.
fn cumulative_hazard(rows: &[Row], weights: &[f64]) -> Result<StepFunction, SurvivalError> {
    let events = event_times(rows);
    let times: Vec<f64> = events.iter().map(|e| e.0).collect();
    let sums = risk_sums(rows, weights, &times, 0, false);
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(times.len());
    for ((t, members), s) in events.iter().zip(&sums) {
        if s.s0 <= 0.0 {
            return Err(SurvivalError::EmptyRiskSet(*t));
        }
        acc += members.len() as f64 / s.s0;
        values.push(acc);
    }
    Ok(StepFunction { initial: 0.0, times, values })
}

fn group_rows(ds: &SurvivalDataset, group: Option<u8>) -> Result<Vec<Row<'_>>, SurvivalError> {
    if let Some(g) = group {
        if !ds.has_group(g) {
            return Err(SurvivalError::EmptyGroup(g));
        }
    }
    Ok(ds.rows(group))
}

/// Product-limit survival estimate for one arm (or everyone).
pub fn kaplan_meier(ds: &SurvivalDataset, group: Option<u8>) -> Result<StepFunction, SurvivalError> {
    let rows = group_rows(ds, group)?;
    let events = event_times(&rows);
    let times: Vec<f64> = events.iter().map(|e| e.0).collect();
    let sums = risk_sums(&rows, &vec![1.0; rows.len()], &times, 0, false);
    let mut surv = 1.0;
    let values = events
        .iter()
        .zip(&sums)
        .map(|((_, members), s)| {
            surv *= 1.0 - members.len() as f64 / s.count as f64;
            surv
        })
        .collect();
    Ok(StepFunction { initial: 1.0, times, values })
}

/// Nelson–Aalen cumulative hazard for one arm (or everyone).
pub fn nelson_aalen(ds: &SurvivalDataset, group: Option<u8>) -> Result<StepFunction, SurvivalError> {
    let rows = group_rows(ds, group)?;
    cumulative_hazard(&rows, &vec![1.0; rows.len()])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxOptions {
    /// Convergence threshold on the Newton decrement `sᵀ I⁻¹ s / 2`, the log-likelihood
    /// gain still available from a full step.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest step fraction tried by step halving.
    pub min_step: f64,
    /// Coefficients larger than this in absolute value signal a monotone likelihood.
    pub max_abs_coef: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions { tol: 1e-9, max_iter: 50, min_step: 1e-10, max_abs_coef: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxFit {
    pub covariate_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub score_norm: f64,
    /// Observed information at the solution, row-major.
    pub information: Vec<Vec<f64>>,
    pub events: usize,
    pub group: Option<u8>,
}

/// Breslow log partial likelihood, score and observed information at `gamma`.
fn partial_likelihood(rows: &[Row], gamma: &[f64], second: bool) -> (f64, Vec<f64>, DMatrix<f64>) {
    let p = gamma.len();
    let weights = linear_weights(rows, gamma);
    let events = event_times(rows);
    let times: Vec<f64> = events.iter().map(|e| e.0).collect();
    let sums = risk_sums(rows, &weights, &times, p, second);
    let mut ll = 0.0;
    let mut score = vec![0.0; p];
    let mut info = DMatrix::zeros(p, p);
    for ((_, members), s) in events.iter().zip(&sums) {
        let d = members.len() as f64;
        ll -= d * s.s0.ln();
        for &i in members {
            ll += weights[i].ln();
            for a in 0..p {
                score[a] += rows[i].z[a];
            }
        }
        for a in 0..p {
            let ma = s.s1[a] / s.s0;
            score[a] -= d * ma;
            if second {
                for b in 0..p {
                    info[(a, b)] += d * (s.s2[a * p + b] / s.s0 - ma * s.s1[b] / s.s0);
                }
            }
        }
    }
    (ll, score, info)
}

/// Log partial likelihood and score at `gamma`, for diagnostics and tests.
pub fn cox_log_likelihood(ds: &SurvivalDataset, group: Option<u8>, gamma: &[f64]) -> Result<(f64, Vec<f64>), SurvivalError> {
    if gamma.len() != ds.covariate_names().len() {
        return Err(SurvivalError::Invalid(format!("expected {} coefficients", ds.covariate_names().len())));
    }
    let rows = group_rows(ds, group)?;
    let (ll, score, _) = partial_likelihood(&rows, gamma, false);
    Ok((ll, score))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton maximization of the time-dependent Cox partial likelihood.
pub fn fit_cox(ds: &SurvivalDataset, group: Option<u8>, opts: &CoxOptions) -> Result<CoxFit, SurvivalError> {
    let rows = group_rows(ds, group)?;
    let events = rows.iter().filter(|r| r.event).count();
    if events == 0 {
        return Err(SurvivalError::NoEvents);
    }
    let p = ds.covariate_names().len();
    let mut gamma = vec![0.0; p];
    let (mut ll, mut score, mut info) = partial_likelihood(&rows, &gamma, true);
    let mut iterations = 0;
    loop {
        if norm(&score) == 0.0 {
            break;
        }
        let chol = info.clone().cholesky().ok_or(SurvivalError::SingularInformation)?;
        let step = chol.solve(&DVector::from_column_slice(&score));
        let decrement = 0.5 * score.iter().zip(step.iter()).map(|(s, d)| s * d).sum::<f64>();
        if decrement <= opts.tol {
            // Within the quadratic region the likelihood change is below its rounding, so the
            // last step is taken without a line search.
            let last: Vec<f64> = gamma.iter().zip(step.iter()).map(|(g, s)| g + s).collect();
            let (lll, lscore, linfo) = partial_likelihood(&rows, &last, true);
            if lll.is_finite() && norm(&lscore) <= norm(&score) {
                gamma = last;
                (ll, score, info) = (lll, lscore, linfo);
            }
            break;
        }
        if iterations == opts.max_iter {
            return Err(SurvivalError::NonConvergence { iterations, score_norm: norm(&score) });
        }
        iterations += 1;
        let mut h = 1.0;
        loop {
            let trial: Vec<f64> = gamma.iter().zip(step.iter()).map(|(g, s)| g + h * s).collect();
            let (tll, tscore, tinfo) = partial_likelihood(&rows, &trial, true);
            if tll.is_finite() && tll >= ll {
                gamma = trial;
                (ll, score, info) = (tll, tscore, tinfo);
                break;
            }
            h *= 0.5;
            if h < opts.min_step {
                return Err(SurvivalError::NonConvergence { iterations, score_norm: norm(&score) });
            }
        }
        if let Some(index) = gamma.iter().position(|g| g.abs() > opts.max_abs_coef) {
            return Err(SurvivalError::MonotoneLikelihood { index });
        }
    }
    let std_errors = if p == 0 {
        vec![]
    } else {
        let inv = info.clone().try_inverse().ok_or(SurvivalError::SingularInformation)?;
        (0..p).map(|a| inv[(a, a)].max(0.0).sqrt()).collect::<Vec<_>>()
    };
    // A flat likelihood far from the origin means the maximum is at infinity.
    if let Some(index) = (0..p).find(|&a| gamma[a].abs() > 10.0 && std_errors[a] > 1e3) {
        return Err(SurvivalError::MonotoneLikelihood { index });
    }
    Ok(CoxFit {
        covariate_names: ds.covariate_names().to_vec(),
        coefficients: gamma,
        std_errors,
        log_likelihood: ll,
        iterations,
        score_norm: norm(&score),
        information: (0..p).map(|a| (0..p).map(|b| info[(a, b)]).collect()).collect(),
        events,
        group,
    })
}

/// Breslow cumulative baseline hazard `Σ d(u) / Σ_{at risk} exp(γ·z)` for one arm.
pub fn breslow_baseline(ds: &SurvivalDataset, group: Option<u8>, gamma: &[f64]) -> Result<StepFunction, SurvivalError> {
    if gamma.len() != ds.covariate_names().len() {
        return Err(SurvivalError::Invalid(format!("expected {} coefficients", ds.covariate_names().len())));
    }
    let rows = group_rows(ds, group)?;
    cumulative_hazard(&rows, &linear_weights(&rows, gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub curve: StepFunction,
    /// First needed time at which a risk set was empty; the curve stops before it.
    pub truncated_at: Option<f64>,
    pub warnings: Vec<String>,
}

/// Cumulative added treatment hazard: Nelson–Aalen of arm 1 minus, at each arm-0 event
/// time, `d0 · Σ_{arm 1 at risk} exp(γ·z) / (Y1 · Σ_{arm 0 at risk} exp(γ·z))`.
pub fn estimate_rho(ds: &SurvivalDataset, gamma: &[f64]) -> Result<RhoEstimate, SurvivalError> {
    if gamma.len() != ds.covariate_names().len() {
        return Err(SurvivalError::Invalid(format!("expected {} coefficients", ds.covariate_names().len())));
    }
    let rows1 = group_rows(ds, Some(1))?;
    let rows0 = group_rows(ds, Some(0))?;
    let (w1, w0) = (linear_weights(&rows1, gamma), linear_weights(&rows0, gamma));
    let (ev1, ev0) = (event_times(&rows1), event_times(&rows0));
    let mut times: Vec<f64> = ev1.iter().chain(&ev0).map(|e| e.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let sums1 = risk_sums(&rows1, &w1, &times, 0, false);
    let sums0 = risk_sums(&rows0, &w0, &times, 0, false);
    let count_at = |events: &[(f64, Vec<usize>)], t: f64| {
        events.binary_search_by(|e| e.0.total_cmp(&t)).map(|k| events[k].1.len()).unwrap_or(0)
    };
    let mut acc = 0.0;
    let mut out = StepFunction { initial: 0.0, times: Vec::new(), values: Vec::new() };
    let mut truncated_at = None;
    let mut warnings = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let (d1, d0) = (count_at(&ev1, t), count_at(&ev0, t));
        let (y1, s0) = (sums1[k].count as f64, sums0[k].s0);
        if y1 == 0.0 || (d0 > 0 && s0 <= 0.0) {
            truncated_at = Some(t);
            warnings.push(format!("risk set empty at t = {t}; estimate truncated"));
            break;
        }
        acc += d1 as f64 / y1;
        if d0 > 0 {
            acc -= d0 as f64 * sums1[k].s0 / (y1 * s0);
        }
        out.times.push(t);
        out.values.push(acc);
    }
    if out.last_value() < 0.0 {
        warnings.push("estimate ends below zero; the arms may be labelled the other way round".into());
    }
    Ok(RhoEstimate { curve: out, truncated_at, warnings })
}

/// Survival-scale effects of treatment `a` against `a_star` on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectCurves {
    pub a: u8,
    pub a_star: u8,
    pub times: Vec<f64>,
    pub sde: Vec<f64>,
    pub sie: Vec<f64>,
    pub total: Vec<f64>,
    /// First grid time at which a survival curve reached zero; the curves stop before it.
    pub truncated_at: Option<f64>,
}

impl EffectCurves {
    /// Values on an arbitrary grid by right-continuous evaluation; times past the
    /// truncation point give `NaN`.
    pub fn eval_on(&self, grid: &[f64]) -> [Vec<f64>; 3] {
        let step = |vals: &[f64], init: f64| StepFunction { initial: init, times: self.times.clone(), values: vals.to_vec() };
        let (sde, sie, tot) = (step(&self.sde, 1.0), step(&self.sie, 1.0), step(&self.total, 1.0));
        let cut = |t: f64, v: f64| if self.truncated_at.is_some_and(|c| t >= c) { f64::NAN } else { v };
        [
            grid.iter().map(|&t| cut(t, sde.eval(t))).collect(),
            grid.iter().map(|&t| cut(t, sie.eval(t))).collect(),
            grid.iter().map(|&t| cut(t, tot.eval(t))).collect(),
        ]
    }
}

/// `SDE = exp((a*−a)·R)`, `total = KM_a / KM_a*`, `SIE = total / SDE`, on the union of
/// the jump times of the three inputs.
pub fn effect_curves(rho: &StepFunction, km_a: &StepFunction, km_a_star: &StepFunction, a: u8, a_star: u8) -> EffectCurves {
    let mut grid: Vec<f64> = rho.times.iter().chain(&km_a.times).chain(&km_a_star.times).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let diff = a_star as f64 - a as f64;
    let mut out = EffectCurves { a, a_star, times: vec![], sde: vec![], sie: vec![], total: vec![], truncated_at: None };
    for t in grid {
        let (sa, sb) = (km_a.eval(t), km_a_star.eval(t));
        if sa <= 0.0 || sb <= 0.0 {
            out.truncated_at = Some(t);
            break;
        }
        let r = rho.eval(t);
        let total = sa / sb;
        out.times.push(t);
        out.sde.push((diff * r).exp());
        out.sie.push((-diff * r).exp() * total);
        out.total.push(total);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{Interval, Subject};
    use super::*;

    fn subject(id: &str, a: u8, stop: f64, event: bool, z: f64) -> Subject {
        Subject { id: id.into(), treatment: a, intervals: vec![Interval { start: 0.0, stop, event, z: vec![z], mediator: None }] }
    }

    /// Four subjects: events at 1 and 3, censored at 2, last one followed to 4.
    fn four() -> SurvivalDataset {
        let subjects = vec![
            subject("a", 0, 1.0, true, 0.0),
            subject("b", 0, 2.0, false, 1.0),
            subject("c", 0, 3.0, true, 0.0),
            subject("d", 0, 4.0, false, 1.0),
        ];
        SurvivalDataset::new(vec!["z".into()], None, subjects).unwrap()
    }

    #[test]
    fn product_limit_by_hand() {
        let km = kaplan_meier(&four(), Some(0)).unwrap();
        assert_eq!(km.eval(1.0), 0.75);
        assert_eq!(km.eval(2.5), 0.75);
        assert_eq!(km.eval(3.0), 0.375);
    }

    #[test]
    fn nelson_aalen_jumps_are_reciprocal_risk_sets() {
        let na = nelson_aalen(&four(), None).unwrap();
        assert_eq!(na.jumps(), vec![0.25, 0.5]);
        assert!(matches!(nelson_aalen(&four(), Some(1)), Err(SurvivalError::EmptyGroup(1))));
    }

    #[test]
    fn no_events_give_flat_curves() {
        let ds = SurvivalDataset::new(vec!["z".into()], None, vec![subject("a", 0, 2.0, false, 0.0)]).unwrap();
        assert_eq!(kaplan_meier(&ds, None).unwrap().last_value(), 1.0);
        assert_eq!(nelson_aalen(&ds, None).unwrap().last_value(), 0.0);
        assert!(matches!(fit_cox(&ds, None, &CoxOptions::default()), Err(SurvivalError::NoEvents)));
    }

    #[test]
    fn breslow_at_zero_is_nelson_aalen() {
        let ds = four();
        assert_eq!(breslow_baseline(&ds, Some(0), &[0.0]).unwrap(), nelson_aalen(&ds, Some(0)).unwrap());
    }

    #[test]
    fn risk_sets_respect_left_open_intervals() {
        // Subject split at 1: (0,1] and (1,2] with an event at 1 for another subject.
        let split = Subject {
            id: "s".into(),
            treatment: 0,
            intervals: vec![
                Interval { start: 0.0, stop: 1.0, event: false, z: vec![0.0], mediator: None },
                Interval { start: 1.0, stop: 2.0, event: true, z: vec![1.0], mediator: None },
            ],
        };
        let ds = SurvivalDataset::new(vec!["z".into()], None, vec![split, subject("o", 0, 1.0, true, 0.0)]).unwrap();
        let na = nelson_aalen(&ds, None).unwrap();
        assert_eq!(na.jumps(), vec![0.5, 1.0]);
    }

    #[test]
    fn score_matches_finite_differences() {
        let ds = four();
        let g = 0.3;
        let (_, score) = cox_log_likelihood(&ds, None, &[g]).unwrap();
        let h = 1e-5;
        let up = cox_log_likelihood(&ds, None, &[g + h]).unwrap().0;
        let down = cox_log_likelihood(&ds, None, &[g - h]).unwrap().0;
        let fd = (up - down) / (2.0 * h);
        assert!((score[0] - fd).abs() <= 1e-6 * fd.abs().max(1e-12), "{} vs {fd}", score[0]);
    }

    #[test]
    fn fit_solves_the_score_equation() {
        let subjects = vec![
            subject("a", 0, 1.0, true, 1.0),
            subject("b", 0, 2.0, true, 0.0),
            subject("c", 0, 3.0, true, 1.0),
            subject("d", 0, 4.0, false, 0.0),
            subject("e", 0, 2.5, true, 0.0),
        ];
        let ds = SurvivalDataset::new(vec!["z".into()], None, subjects).unwrap();
        let fit = fit_cox(&ds, Some(0), &CoxOptions::default()).unwrap();
        assert!(fit.score_norm <= 1e-8);
        assert!(fit.information[0][0] > 0.0);
        let (_, score) = cox_log_likelihood(&ds, Some(0), &fit.coefficients).unwrap();
        assert!(score[0].abs() <= 1e-8);
    }

    #[test]
    fn perfect_separation_is_monotone() {
        // Higher z always fails first.
        let subjects = vec![subject("a", 0, 1.0, true, 1.0), subject("b", 0, 2.0, true, 0.0)];
        let ds = SurvivalDataset::new(vec!["z".into()], None, subjects).unwrap();
        let err = fit_cox(&ds, None, &CoxOptions::default()).unwrap_err();
        assert!(matches!(err, SurvivalError::MonotoneLikelihood { .. } | SurvivalError::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn zero_rho_gives_unit_direct_effect() {
        let rho = StepFunction::constant(0.0);
        let km1 = StepFunction { initial: 1.0, times: vec![1.0, 2.0], values: vec![0.8, 0.5] };
        let km0 = StepFunction { initial: 1.0, times: vec![1.5], values: vec![0.6] };
        let e = effect_curves(&rho, &km1, &km0, 1, 0);
        assert_eq!(e.times, vec![1.0, 1.5, 2.0]);
        assert!(e.sde.iter().all(|&v| v == 1.0));
        assert_eq!(e.sie, e.total);
        let same = effect_curves(&StepFunction { initial: 0.0, times: vec![1.0], values: vec![0.4] }, &km1, &km1, 1, 1);
        assert!(same.sde.iter().chain(&same.sie).chain(&same.total).all(|&v| v == 1.0));
    }

    #[test]
    fn rho_jumps_at_union_of_event_times() {
        let subjects = vec![
            subject("a", 1, 1.0, true, 0.0),
            subject("b", 1, 3.0, false, 0.0),
            subject("c", 0, 2.0, true, 0.0),
            subject("d", 0, 3.0, false, 0.0),
        ];
        let ds = SurvivalDataset::new(vec!["z".into()], None, subjects).unwrap();
        let r = estimate_rho(&ds, &[0.0]).unwrap();
        assert_eq!(r.curve.times, vec![1.0, 2.0]);
        // 1/2 at t=1; at t=2 subtract 1 · 1 / (1 · 2).
        assert_eq!(r.curve.values, vec![0.5, 0.0]);
        let none = SurvivalDataset::new(vec!["z".into()], None, vec![subject("c", 0, 2.0, true, 0.0)]).unwrap();
        assert!(matches!(estimate_rho(&none, &[0.0]), Err(SurvivalError::EmptyGroup(1))));
    }
}
