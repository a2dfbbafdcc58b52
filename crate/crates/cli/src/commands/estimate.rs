//! `estimate`: direct and indirect survival effects from counting-process CSV data.
//!
//! Writes three files into `--out`:
//!
//! * `effects.csv`: `t, sde, sde_lower, sde_upper, sie, sie_lower, sie_upper, total,
//!   total_lower, total_upper` on the union of event times.
//! * `rho.csv`: `t, rho, rho_lower, rho_upper` at the jump times of the cumulative
//!   added treatment hazard.
//! * `fit.json`: the Cox fit on the untreated arm, dataset counts, warnings and settings.
//!
//! Bounds are 2.5% and 97.5% bootstrap percentiles, `NaN` without a bootstrap or past a
//! truncation point.

use std::path::PathBuf;

use clap::Args;
use medgraph_core::survival::bootstrap::{analyze, bootstrap_analysis, AnalysisBands};
use medgraph_core::survival::ingest::{read_csv, ColumnMap};
use medgraph_core::survival::summary::{apply_summary, MediatorTransform, SummaryScheme};
use medgraph_core::survival::{CoxFit, CoxOptions, DatasetCounts, SurvivalError};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{read_input, sig17, Artifact, Envelope, OutDir};
use crate::{Format, Global};

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Counting-process CSV: one row per subject interval.
    #[arg(long)]
    pub data: PathBuf,
    /// Column with the repeatedly measured mediator; empty cells mean no measurement.
    #[arg(long)]
    pub mediator_col: String,
    /// How the measurement history becomes a time-dependent covariate.
    #[arg(long, default_value = "last", value_parser = ["last", "mean_all", "weighted", "two_part"])]
    pub summary: String,
    /// Decay rate for `weighted`, split time for `two_part`.
    #[arg(long)]
    pub summary_param: Option<f64>,
    /// Transform each measurement `v` to `min(v - cut, 0)` before summarizing.
    #[arg(long)]
    pub below: Option<f64>,
    #[arg(long, default_value = "treatment")]
    pub treatment_col: String,
    #[arg(long, default_value = "id")]
    pub id_col: String,
    #[arg(long, default_value = "start")]
    pub start_col: String,
    #[arg(long, default_value = "stop")]
    pub stop_col: String,
    #[arg(long, default_value = "event")]
    pub event_col: String,
    /// Extra baseline or time-dependent covariates for the Cox model.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Treatment level for the outcome regime.
    #[arg(long, default_value_t = 1)]
    pub a: u8,
    /// Treatment level for the mediator regime.
    #[arg(long, default_value_t = 0)]
    pub astar: u8,
    /// Bootstrap replicates; 0 skips the bands.
    #[arg(long, default_value_t = 1000)]
    pub boot: usize,
    /// Convergence threshold of the Cox fit.
    #[arg(long)]
    pub cox_tol: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

const FILES: [&str; 3] = ["effects.csv", "rho.csv", "fit.json"];

#[derive(Serialize)]
struct FitReport<'a> {
    counts: DatasetCounts,
    summary: &'a SummaryScheme,
    transform: MediatorTransform,
    a: u8,
    a_star: u8,
    fit: &'a CoxFit,
    rho_truncated_at: Option<f64>,
    effects_truncated_at: Option<f64>,
    warnings: &'a [String],
    bootstrap: BootstrapReport,
    cox_options: &'a CoxOptions,
}

#[derive(Serialize)]
struct BootstrapReport {
    requested: usize,
    kept: usize,
    dropped: usize,
}

#[derive(Serialize)]
struct EstimateResult {
    artifacts: Vec<Artifact>,
    gamma: Vec<f64>,
    rho_at_end: f64,
}

fn survival_error(e: SurvivalError, location: &str) -> CliError {
    let code = match e {
        SurvivalError::Row { .. } | SurvivalError::MissingColumn(_) | SurvivalError::Empty => "data",
        _ => "estimate",
    };
    let at = match &e {
        SurvivalError::Row { row, .. } => format!("{location}:{row}"),
        _ => location.to_string(),
    };
    CliError::domain(code, e).at(at)
}

pub fn estimate(args: &EstimateArgs, g: &Global) -> CliResult<i32> {
    g.format(&[Format::Json])?;
    if args.a > 1 || args.astar > 1 {
        return Err(CliError::usage("flag", "treatment levels are 0 and 1").at("--a"));
    }
    let out = OutDir::prepare(&args.out, &FILES, g.force)?;
    let scheme = SummaryScheme::parse(&args.summary, args.summary_param)
        .map_err(|e| CliError::usage("flag", e.to_string()).at("--summary-param"))?;
    let transform = args.below.map_or(MediatorTransform::Identity, |cut| MediatorTransform::BelowThreshold { cut });
    let seed = g.seed.unwrap_or(0);
    let location = args.data.display().to_string();

    let mut inputs = Vec::new();
    let text = read_input(&args.data, &mut inputs)?;
    let map = ColumnMap {
        id: args.id_col.clone(),
        start: args.start_col.clone(),
        stop: args.stop_col.clone(),
        event: args.event_col.clone(),
        treatment: args.treatment_col.clone(),
        covariates: args.covariates.clone(),
        mediator: Some(args.mediator_col.clone()),
    };
    let raw = read_csv(text.as_bytes(), &map).map_err(|e| survival_error(e, &location))?;
    let ds = apply_summary(&raw, &scheme, transform, false).map_err(|e| survival_error(e, &location))?;
    let mut opts = CoxOptions::default();
    if let Some(tol) = args.cox_tol {
        opts.tol = tol;
    }
    log::info!("fitting {} subjects with covariates {:?}", ds.subjects().len(), ds.covariate_names());
    let an = analyze(&ds, args.a, args.astar, &opts).map_err(|e| survival_error(e, &location))?;

    let mut grid: Vec<f64> = an.effects.times.iter().chain(&an.rho.curve.times).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let bands: Option<AnalysisBands> = if args.boot > 0 {
        log::info!("bootstrap with {} replicates", args.boot);
        Some(
            bootstrap_analysis(&ds, args.a, args.astar, &opts, &grid, args.boot, seed)
                .map_err(|e| survival_error(e, &location))?,
        )
    } else {
        None
    };
    let band = |pick: fn(&AnalysisBands) -> &[Vec<f64>; 2], t: f64| -> (f64, f64) {
        match &bands {
            Some(b) => {
                let k = grid.binary_search_by(|x| x.total_cmp(&t)).expect("grid holds every reported time");
                let pair = pick(b);
                (pair[0][k], pair[1][k])
            }
            None => (f64::NAN, f64::NAN),
        }
    };

    let mut effects = String::from("t,sde,sde_lower,sde_upper,sie,sie_lower,sie_upper,total,total_lower,total_upper\n");
    let e = &an.effects;
    for k in 0..e.times.len() {
        let t = e.times[k];
        let mut cells = vec![sig17(t)];
        for (v, pick) in [
            (e.sde[k], (|b: &AnalysisBands| &b.sde) as fn(&AnalysisBands) -> &[Vec<f64>; 2]),
            (e.sie[k], |b: &AnalysisBands| &b.sie),
            (e.total[k], |b: &AnalysisBands| &b.total),
        ] {
            let (lo, hi) = band(pick, t);
            cells.extend([sig17(v), sig17(lo), sig17(hi)]);
        }
        effects.push_str(&cells.join(","));
        effects.push('\n');
    }

    let mut rho = String::from("t,rho,rho_lower,rho_upper\n");
    for (&t, &v) in an.rho.curve.times.iter().zip(&an.rho.curve.values) {
        let (lo, hi) = band(|b| &b.rho, t);
        rho.push_str(&format!("{},{},{},{}\n", sig17(t), sig17(v), sig17(lo), sig17(hi)));
    }

    let report = FitReport {
        counts: an.counts,
        summary: &scheme,
        transform,
        a: args.a,
        a_star: args.astar,
        fit: &an.fit,
        rho_truncated_at: an.rho.truncated_at,
        effects_truncated_at: an.effects.truncated_at,
        warnings: &an.rho.warnings,
        bootstrap: BootstrapReport {
            requested: args.boot,
            kept: bands.as_ref().map_or(0, |b| b.replicates),
            dropped: bands.as_ref().map_or(0, |b| b.dropped),
        },
        cox_options: &opts,
    };
    let fit_json = Envelope::new("estimate", Some(seed), &inputs, report).to_json();
    let artifacts = vec![out.write("effects.csv", &effects)?, out.write("rho.csv", &rho)?, out.write("fit.json", &fit_json)?];
    for w in &an.rho.warnings {
        log::warn!("{w}");
    }
    let result = EstimateResult { artifacts, gamma: an.fit.coefficients.clone(), rho_at_end: an.rho.curve.last_value() };
    g.sink().emit(&Envelope::new("estimate", Some(seed), &inputs, result).to_json())?;
    Ok(0)
}
