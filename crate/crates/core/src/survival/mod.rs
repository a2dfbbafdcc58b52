//! Survival estimation for the additive-treatment Cox model
//! `λ(t) = ρ_t·a + ψ(t)·exp(γ·z_t)`.
//!
//! Data are in counting-process form: each subject has ordered, non-overlapping
//! intervals `(start, stop]` with covariates constant inside an interval and at most one
//! event, at the end of the last interval. Ties follow the Breslow convention everywhere.

pub mod bootstrap;
pub mod estimators;
pub mod ingest;
pub mod simulate;
pub mod summary;

use serde::Serialize;
use thiserror::Error;

pub use estimators::{
    breslow_baseline, effect_curves, estimate_rho, fit_cox, kaplan_meier, nelson_aalen, CoxFit, CoxOptions, EffectCurves,
    RhoEstimate,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurvivalError {
    #[error("dataset is empty")]
    Empty,
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("subject `{subject}`: {message}")]
    Subject { subject: String, message: String },
    #[error("group a={0} has no subjects")]
    EmptyGroup(u8),
    #[error("no events to fit")]
    NoEvents,
    #[error("Cox fit did not converge after {iterations} iterations (score norm {score_norm:e})")]
    NonConvergence { iterations: usize, score_norm: f64 },
    #[error("information matrix is singular; covariates may be collinear")]
    SingularInformation,
    #[error("monotone likelihood: coefficient {index} diverges")]
    MonotoneLikelihood { index: usize },
    #[error("empty risk set at event time {0}")]
    EmptyRiskSet(f64),
    #[error("mediator summary: {0}")]
    Summary(String),
    #[error("bootstrap: {dropped} of {total} replicates failed")]
    TooManyDrops { dropped: usize, total: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
}

/// One interval `(start, stop]` of a subject's follow-up.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub start: f64,
    pub stop: f64,
    pub event: bool,
    /// Covariates in force during the interval.
    pub z: Vec<f64>,
    /// Raw mediator value measured at `start`, if any.
    pub mediator: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subject {
    pub id: String,
    pub treatment: u8,
    pub intervals: Vec<Interval>,
}

/// Validated counting-process dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalDataset {
    covariate_names: Vec<String>,
    mediator_name: Option<String>,
    subjects: Vec<Subject>,
}

/// Subject and event counts, overall and per arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetCounts {
    pub subjects: usize,
    pub subjects_by_arm: [usize; 2],
    pub events: usize,
    pub events_by_arm: [usize; 2],
    pub intervals: usize,
}

/// A flattened interval used by the estimators.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Row<'a> {
    pub start: f64,
    pub stop: f64,
    pub event: bool,
    pub z: &'a [f64],
}

impl SurvivalDataset {
    pub fn new(
        covariate_names: Vec<String>,
        mediator_name: Option<String>,
        mut subjects: Vec<Subject>,
    ) -> Result<Self, SurvivalError> {
        if subjects.is_empty() {
            return Err(SurvivalError::Empty);
        }
        let p = covariate_names.len();
        for s in &mut subjects {
            let fail = |message: String| SurvivalError::Subject { subject: s.id.clone(), message };
            if s.treatment > 1 {
                return Err(fail(format!("treatment must be 0 or 1, found {}", s.treatment)));
            }
            if s.intervals.is_empty() {
                return Err(fail("no intervals".into()));
            }
            s.intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
            for (k, iv) in s.intervals.iter().enumerate() {
                if !(iv.start.is_finite() && iv.stop.is_finite()) || iv.start >= iv.stop {
                    return Err(fail(format!("interval ({}, {}] is empty or not finite", iv.start, iv.stop)));
                }
                if iv.z.len() != p || iv.z.iter().any(|v| !v.is_finite()) {
                    return Err(fail(format!("interval starting at {} has bad covariates", iv.start)));
                }
                if iv.event && k + 1 != s.intervals.len() {
                    return Err(fail("event is not in the last interval".into()));
                }
                if k > 0 && s.intervals[k - 1].stop > iv.start {
                    return Err(fail(format!("intervals overlap at {}", iv.start)));
                }
            }
        }
        Ok(SurvivalDataset { covariate_names, mediator_name, subjects })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn mediator_name(&self) -> Option<&str> {
        self.mediator_name.as_deref()
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn counts(&self) -> DatasetCounts {
        let mut c = DatasetCounts { subjects: 0, subjects_by_arm: [0; 2], events: 0, events_by_arm: [0; 2], intervals: 0 };
        for s in &self.subjects {
            let arm = s.treatment as usize;
            c.subjects += 1;
            c.subjects_by_arm[arm] += 1;
            c.intervals += s.intervals.len();
            if s.intervals.last().is_some_and(|iv| iv.event) {
                c.events += 1;
                c.events_by_arm[arm] += 1;
            }
        }
        c
    }

    /// Dataset built from the subjects at the given positions, repeats allowed. Repeated
    /// subjects get distinct ids.
    pub fn resample(&self, picks: &[usize]) -> SurvivalDataset {
        let subjects = picks
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut s = self.subjects[i].clone();
                s.id = format!("{}#{k}", s.id);
                s
            })
            .collect();
        SurvivalDataset { covariate_names: self.covariate_names.clone(), mediator_name: self.mediator_name.clone(), subjects }
    }

    /// Same subjects with covariates replaced.
    pub fn with_covariates(&self, names: Vec<String>, z: impl Fn(&Subject, usize) -> Vec<f64>) -> Result<Self, SurvivalError> {
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                let mut out = s.clone();
                for (k, iv) in out.intervals.iter_mut().enumerate() {
                    iv.z = z(s, k);
                }
                out
            })
            .collect();
        SurvivalDataset::new(names, self.mediator_name.clone(), subjects)
    }

    pub(crate) fn rows(&self, group: Option<u8>) -> Vec<Row<'_>> {
        self.subjects
            .iter()
            .filter(|s| group.is_none_or(|g| s.treatment == g))
            .flat_map(|s| s.intervals.iter().map(|iv| Row { start: iv.start, stop: iv.stop, event: iv.event, z: &iv.z }))
            .collect()
    }

    pub fn has_group(&self, group: u8) -> bool {
        self.subjects.iter().any(|s| s.treatment == group)
    }

    /// Largest follow-up time.
    pub fn max_time(&self) -> f64 {
        self.subjects.iter().filter_map(|s| s.intervals.last()).map(|iv| iv.stop).fold(0.0, f64::max)
    }

    /// Number of subjects of `group` at risk just before `t`.
    pub fn at_risk(&self, group: u8, t: f64) -> usize {
        self.rows(Some(group)).iter().filter(|r| r.start < t && t <= r.stop).count()
    }
}

/// Right-continuous step function: `initial` before the first jump, `values[k]` on
/// `[times[k], times[k+1])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    pub initial: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        StepFunction { initial: value, times: Vec::new(), values: Vec::new() }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => self.initial,
            k => self.values[k - 1],
        }
    }

    pub fn eval_all(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }

    /// Jump sizes, aligned with `times`.
    pub fn jumps(&self) -> Vec<f64> {
        let mut prev = self.initial;
        self.values
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn iv(start: f64, stop: f64, event: bool) -> Interval {
        Interval { start, stop, event, z: vec![], mediator: None }
    }

    #[test]
    fn step_function_is_right_continuous() {
        let f = StepFunction { initial: 1.0, times: vec![1.0, 3.0], values: vec![0.75, 0.375] };
        assert_eq!(f.eval(0.999), 1.0);
        assert_eq!(f.eval(1.0), 0.75);
        assert_eq!(f.eval(2.0), 0.75);
        assert_eq!(f.eval(3.0), 0.375);
        assert_eq!(f.jumps(), vec![-0.25, -0.375]);
    }

    #[test]
    fn validation_catches_bad_layouts() {
        let subj = |intervals| vec![Subject { id: "s".into(), treatment: 0, intervals }];
        assert!(matches!(SurvivalDataset::new(vec![], None, vec![]), Err(SurvivalError::Empty)));
        let overlap = subj(vec![iv(0.0, 2.0, false), iv(1.0, 3.0, false)]);
        assert!(SurvivalDataset::new(vec![], None, overlap).is_err());
        let early_event = subj(vec![iv(0.0, 1.0, true), iv(1.0, 3.0, false)]);
        assert!(SurvivalDataset::new(vec![], None, early_event).is_err());
        let empty = subj(vec![iv(1.0, 1.0, false)]);
        assert!(SurvivalDataset::new(vec![], None, empty).is_err());
        let ok = SurvivalDataset::new(vec![], None, subj(vec![iv(1.0, 3.0, true), iv(0.0, 1.0, false)])).unwrap();
        assert_eq!(ok.subjects()[0].intervals[0].start, 0.0);
        assert_eq!(ok.counts().events, 1);
    }
}
