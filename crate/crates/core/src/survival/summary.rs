//! Time-dependent covariates derived from a repeatedly measured mediator.
//!
//! A measurement is the mediator value recorded at an interval start. Each summary is
//! recomputed at every interval start from the measurements taken up to then.

use serde::{Deserialize, Serialize};

use super::{Subject, SurvivalDataset, SurvivalError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum SummaryScheme {
    /// Most recent measurement.
    Last,
    /// Mean of all measurements so far.
    MeanAll,
    /// Weighted mean with weight `exp(-decay · age)` for a measurement of age `age`.
    Weighted { decay: f64 },
    /// Two covariates: mean of the measurements before `split` and mean of those at or
    /// after it. A part with no measurements yet takes the value of the other part.
    TwoPart { split: f64 },
}

impl SummaryScheme {
    /// Parses `last`, `mean_all`, `weighted` and `two_part`, taking the parameter of the
    /// last two from `param`.
    pub fn parse(name: &str, param: Option<f64>) -> Result<Self, SurvivalError> {
        let need = |what: &str| param.ok_or_else(|| SurvivalError::Summary(format!("`{name}` needs a {what}")));
        match name {
            "last" => Ok(SummaryScheme::Last),
            "mean_all" => Ok(SummaryScheme::MeanAll),
            "weighted" => {
                let decay = need("decay rate")?;
                if !(decay.is_finite() && decay >= 0.0) {
                    return Err(SurvivalError::Summary("decay rate must be finite and nonnegative".into()));
                }
                Ok(SummaryScheme::Weighted { decay })
            }
            "two_part" => Ok(SummaryScheme::TwoPart { split: need("split time")? }),
            other => Err(SurvivalError::Summary(format!("unknown scheme `{other}`"))),
        }
    }

    pub fn column_names(&self, mediator: &str) -> Vec<String> {
        match self {
            SummaryScheme::Last => vec![format!("{mediator}_last")],
            SummaryScheme::MeanAll => vec![format!("{mediator}_mean")],
            SummaryScheme::Weighted { .. } => vec![format!("{mediator}_weighted")],
            SummaryScheme::TwoPart { .. } => vec![format!("{mediator}_early"), format!("{mediator}_late")],
        }
    }

    fn summarize(&self, history: &[(f64, f64)], now: f64) -> Vec<f64> {
        let mean = |vals: &mut dyn Iterator<Item = f64>| {
            let (s, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            (n > 0).then(|| s / n as f64)
        };
        match *self {
            SummaryScheme::Last => vec![history.last().expect("nonempty").1],
            SummaryScheme::MeanAll => vec![mean(&mut history.iter().map(|h| h.1)).expect("nonempty")],
            SummaryScheme::Weighted { decay } => {
                let (num, den) = history.iter().fold((0.0, 0.0), |(n, d), &(t, v)| {
                    let w = (-decay * (now - t)).exp();
                    (n + w * v, d + w)
                });
                vec![num / den]
            }
            SummaryScheme::TwoPart { split } => {
                let early = mean(&mut history.iter().filter(|h| h.0 < split).map(|h| h.1));
                let late = mean(&mut history.iter().filter(|h| h.0 >= split).map(|h| h.1));
                let e = early.or(late).expect("nonempty");
                vec![e, late.unwrap_or(e)]
            }
        }
    }
}

/// Optional transform applied to each raw measurement before summarizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "transform")]
pub enum MediatorTransform {
    Identity,
    /// `v >= cut → 0`, otherwise `v - cut`.
    BelowThreshold {
        cut: f64,
    },
}

impl MediatorTransform {
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            MediatorTransform::Identity => v,
            MediatorTransform::BelowThreshold { cut } => {
                if v >= cut {
                    0.0
                } else {
                    v - cut
                }
            }
        }
    }
}

/// Appends the summary columns to each interval's covariates. With `replace`, the
/// existing covariates are dropped first.
pub fn apply_summary(
    ds: &SurvivalDataset,
    scheme: &SummaryScheme,
    transform: MediatorTransform,
    replace: bool,
) -> Result<SurvivalDataset, SurvivalError> {
    let mediator = ds.mediator_name().ok_or_else(|| SurvivalError::Summary("no mediator column designated".into()))?;
    for s in ds.subjects() {
        if s.intervals[0].mediator.is_none() {
            return Err(SurvivalError::Summary(format!("subject `{}` has no mediator value at entry", s.id)));
        }
    }
    let mut names = if replace { Vec::new() } else { ds.covariate_names().to_vec() };
    names.extend(scheme.column_names(mediator));
    ds.with_covariates(names, |s: &Subject, k: usize| {
        let history: Vec<(f64, f64)> =
            s.intervals[..=k].iter().filter_map(|iv| iv.mediator.map(|m| (iv.start, transform.apply(m)))).collect();
        let mut z = if replace { Vec::new() } else { s.intervals[k].z.clone() };
        z.extend(scheme.summarize(&history, s.intervals[k].start));
        z
    })
}

#[cfg(test)]
mod tests {
    use super::super::Interval;
    use super::*;

    fn visits(values: &[f64]) -> SurvivalDataset {
        let intervals = values
            .iter()
            .enumerate()
            .map(|(k, &m)| Interval { start: k as f64, stop: k as f64 + 1.0, event: false, z: vec![], mediator: Some(m) })
            .collect();
        let s = Subject { id: "s".into(), treatment: 0, intervals };
        SurvivalDataset::new(vec![], Some("m".into()), vec![s]).unwrap()
    }

    fn third(ds: &SurvivalDataset) -> Vec<f64> {
        ds.subjects()[0].intervals[2].z.clone()
    }

    #[test]
    fn constant_mediator_is_a_fixed_point() {
        let ds = visits(&[4.0, 4.0, 4.0]);
        for scheme in [
            SummaryScheme::Last,
            SummaryScheme::MeanAll,
            SummaryScheme::Weighted { decay: 0.7 },
            SummaryScheme::TwoPart { split: 1.5 },
        ] {
            let out = apply_summary(&ds, &scheme, MediatorTransform::Identity, true).unwrap();
            assert!(out.subjects()[0].intervals.iter().all(|iv| iv.z.iter().all(|&v| v == 4.0)), "{scheme:?}");
        }
    }

    #[test]
    fn arithmetic_on_three_visits() {
        let ds = visits(&[10.0, 20.0, 30.0]);
        let s = |scheme| third(&apply_summary(&ds, &scheme, MediatorTransform::Identity, true).unwrap());
        assert_eq!(s(SummaryScheme::MeanAll), vec![20.0]);
        assert_eq!(s(SummaryScheme::Last), vec![30.0]);
        assert_eq!(s(SummaryScheme::TwoPart { split: 1.5 }), vec![15.0, 30.0]);
        let w = s(SummaryScheme::Weighted { decay: 1.0 })[0];
        let (e1, e2) = ((-1.0f64).exp(), (-2.0f64).exp());
        assert!((w - (30.0 + 20.0 * e1 + 10.0 * e2) / (1.0 + e1 + e2)).abs() < 1e-12);
    }

    #[test]
    fn threshold_transform() {
        let t = MediatorTransform::BelowThreshold { cut: 70.0 };
        assert_eq!((t.apply(85.0), t.apply(70.0), t.apply(52.0)), (0.0, 0.0, -18.0));
    }

    #[test]
    fn missing_parameters_and_mediator_are_errors() {
        assert!(SummaryScheme::parse("weighted", None).is_err());
        assert!(SummaryScheme::parse("two_part", None).is_err());
        assert!(SummaryScheme::parse("median", None).is_err());
        let plain = SurvivalDataset::new(vec![], None, visits(&[1.0]).subjects().to_vec()).unwrap();
        assert!(apply_summary(&plain, &SummaryScheme::Last, MediatorTransform::Identity, true).is_err());
    }
}
