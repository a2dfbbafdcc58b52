//! The full estimation pipeline and subject-level bootstrap bands.
//!
//! Replicate `k` draws from its own ChaCha stream `(seed, k)`, so results do not depend
//! on scheduling and replicates run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    effect_curves, estimate_rho, fit_cox, kaplan_meier, CoxFit, CoxOptions, DatasetCounts, EffectCurves, RhoEstimate,
    StepFunction, SurvivalDataset, SurvivalError,
};

/// Largest fraction of failed replicates tolerated.
pub const MAX_DROP_FRACTION: f64 = 0.2;

/// Everything estimated from one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub counts: DatasetCounts,
    /// Cox fit on the untreated arm.
    pub fit: CoxFit,
    pub rho: RhoEstimate,
    pub km_treated: StepFunction,
    pub km_untreated: StepFunction,
    pub effects: EffectCurves,
}

/// Cox fit on arm 0, the cumulative added hazard, Kaplan–Meier per arm and effect curves
/// for `a` against `a_star`.
pub fn analyze(ds: &SurvivalDataset, a: u8, a_star: u8, opts: &CoxOptions) -> Result<Analysis, SurvivalError> {
    if a > 1 || a_star > 1 {
        return Err(SurvivalError::Invalid("treatment levels are 0 and 1".into()));
    }
    let fit = fit_cox(ds, Some(0), opts)?;
    let rho = estimate_rho(ds, &fit.coefficients)?;
    let km_treated = kaplan_meier(ds, Some(1))?;
    let km_untreated = kaplan_meier(ds, Some(0))?;
    let km = |g: u8| if g == 1 { &km_treated } else { &km_untreated };
    let effects = effect_curves(&rho.curve, km(a), km(a_star), a, a_star);
    Ok(Analysis { counts: ds.counts(), fit, rho, km_treated, km_untreated, effects })
}

impl Analysis {
    /// `R̂`, SDE, SIE and total on `grid`, concatenated. Points past a truncation are `NaN`.
    pub fn on_grid(&self, grid: &[f64]) -> Vec<f64> {
        let cut = self.rho.truncated_at;
        let mut out: Vec<f64> =
            grid.iter().map(|&t| if cut.is_some_and(|c| t >= c) { f64::NAN } else { self.rho.curve.eval(t) }).collect();
        for curve in self.effects.eval_on(grid) {
            out.extend(curve);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bands {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub replicates: usize,
    pub dropped: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise 2.5% / 97.5% percentile bands of `statistic` over `n_boot` subject-level
/// resamples. Failing replicates are dropped and counted; `NaN` entries are ignored
/// pointwise.
pub fn bootstrap<F>(ds: &SurvivalDataset, n_boot: usize, seed: u64, statistic: F) -> Result<Bands, SurvivalError>
where
    F: Fn(&SurvivalDataset) -> Result<Vec<f64>, SurvivalError> + Sync,
{
    if n_boot < 2 {
        return Err(SurvivalError::Invalid("need at least two bootstrap replicates".into()));
    }
    let n = ds.subjects().len();
    let results: Vec<Option<Vec<f64>>> = (0..n_boot)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            statistic(&ds.resample(&picks)).ok()
        })
        .collect();
    let dropped = results.iter().filter(|r| r.is_none()).count();
    if dropped as f64 > MAX_DROP_FRACTION * n_boot as f64 {
        return Err(SurvivalError::TooManyDrops { dropped, total: n_boot });
    }
    let kept: Vec<Vec<f64>> = results.into_iter().flatten().collect();
    let width = kept.iter().map(Vec::len).max().unwrap_or(0);
    let (mut lower, mut upper) = (Vec::with_capacity(width), Vec::with_capacity(width));
    for j in 0..width {
        let mut col: Vec<f64> = kept.iter().filter_map(|r| r.get(j).copied()).filter(|v| !v.is_nan()).collect();
        col.sort_by(f64::total_cmp);
        lower.push(quantile(&col, 0.025));
        upper.push(quantile(&col, 0.975));
    }
    Ok(Bands { lower, upper, replicates: kept.len(), dropped })
}

/// Bands for `R̂`, SDE, SIE and total on `grid`, in that order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisBands {
    pub grid: Vec<f64>,
    pub rho: [Vec<f64>; 2],
    pub sde: [Vec<f64>; 2],
    pub sie: [Vec<f64>; 2],
    pub total: [Vec<f64>; 2],
    pub replicates: usize,
    pub dropped: usize,
}

pub fn bootstrap_analysis(
    ds: &SurvivalDataset,
    a: u8,
    a_star: u8,
    opts: &CoxOptions,
    grid: &[f64],
    n_boot: usize,
    seed: u64,
) -> Result<AnalysisBands, SurvivalError> {
    let bands = bootstrap(ds, n_boot, seed, |rep| Ok(analyze(rep, a, a_star, opts)?.on_grid(grid)))?;
    let g = grid.len();
    let part = |k: usize| [bands.lower[k * g..(k + 1) * g].to_vec(), bands.upper[k * g..(k + 1) * g].to_vec()];
    Ok(AnalysisBands {
        grid: grid.to_vec(),
        rho: part(0),
        sde: part(1),
        sie: part(2),
        total: part(3),
        replicates: bands.replicates,
        dropped: bands.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::super::simulate::{simulate, SimConfig};
    use super::*;

    fn small() -> SurvivalDataset {
        simulate(&SimConfig { n: 300, ..SimConfig::default() }, &mut ChaCha8Rng::seed_from_u64(2)).unwrap()
    }

    #[test]
    fn constant_statistic_has_zero_width() {
        let b = bootstrap(&small(), 20, 1, |_| Ok(vec![1.5, -2.0])).unwrap();
        assert_eq!(b.lower, b.upper);
        assert_eq!(b.lower, vec![1.5, -2.0]);
    }

    #[test]
    fn same_seed_same_bands() {
        let ds = small();
        let stat = |d: &SurvivalDataset| Ok(vec![d.counts().events as f64]);
        assert_eq!(bootstrap(&ds, 30, 9, stat).unwrap(), bootstrap(&ds, 30, 9, stat).unwrap());
        assert_ne!(bootstrap(&ds, 30, 9, stat).unwrap(), bootstrap(&ds, 30, 10, stat).unwrap());
    }

    #[test]
    fn failures_are_counted_and_bounded() {
        let ds = small();
        let err = bootstrap(&ds, 10, 0, |_| Err::<Vec<f64>, _>(SurvivalError::NoEvents)).unwrap_err();
        assert_eq!(err, SurvivalError::TooManyDrops { dropped: 10, total: 10 });
        assert!(bootstrap(&ds, 1, 0, |_| Ok(vec![])).is_err());
    }

    #[test]
    fn analysis_identity_holds_on_simulated_data() {
        let an = analyze(&small(), 1, 0, &CoxOptions::default()).unwrap();
        let e = &an.effects;
        for k in 0..e.times.len() {
            assert!((e.sde[k] * e.sie[k] - e.total[k]).abs() <= 1e-12);
            assert!(e.sde[k] > 0.0 && e.sie[k] > 0.0);
        }
    }

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
        assert!(quantile(&[], 0.5).is_nan());
    }
}
