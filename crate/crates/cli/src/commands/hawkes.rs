//! `hawkes`: simulate a multivariate Hawkes model and identify its mediation effects.
//!
//! With `--simulate T` the events on `[0, T]` go to `events.csv` (`time, process`) and
//! identification uses the binned empirical covariance of that realization. Without it,
//! identification uses the exact integrated covariance. `identify.json` holds the
//! covariance, the recovered quantities, the true ones from the model and their errors.

use std::path::PathBuf;

use clap::Args;
use medgraph_core::hawkes::covariance::{default_max_lag, DEFAULT_BIN_WIDTH, DEFAULT_TAIL};
use medgraph_core::hawkes::{
    identify, integrated_cov_empirical, integrated_cov_exact, simulate, CovMatrix, Diagnostics, HawkesError, HawkesFile,
    HawkesModel, Identified, IdentifyOptions, MediationRoles,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{read_input, sig17, Artifact, Envelope, OutDir};
use crate::{Format, Global};

/// Default `--structure-tol` for empirical covariances, where sampling noise makes
/// `C_AL` small but not zero.
pub const EMPIRICAL_STRUCTURE_TOL: f64 = 0.1;

#[derive(Debug, Args)]
pub struct HawkesArgs {
    /// Model file: JSON with `processes`, `mu`, `g`, `beta` and optional `observed`, `roles`.
    #[arg(long)]
    pub model: PathBuf,
    /// Simulate on `[0, T]` and write `events.csv`.
    #[arg(long, value_name = "T")]
    pub simulate: Option<f64>,
    /// Identify direct and mediated effects and write `identify.json`.
    #[arg(long)]
    pub identify: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Bin width of the empirical covariance.
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    /// Largest lag in bins; by default where the slowest kernel has decayed to 1e-3.
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Largest accepted `|C_AL| / sqrt(C_AA C_LL)`; 0.1 for simulated data, 1e-6 otherwise.
    #[arg(long)]
    pub structure_tol: Option<f64>,
}

#[derive(Serialize)]
struct Truth {
    g_ma: f64,
    g_da: f64,
    g_dm: f64,
    r_da: f64,
    direct: f64,
    mediated: f64,
}

#[derive(Serialize)]
struct Errors {
    direct: f64,
    mediated: f64,
    r_da: f64,
}

#[derive(Serialize)]
struct IdentifyReport<'a> {
    source: &'static str,
    roles: &'a MediationRoles,
    observed: &'a [String],
    options: IdentifyOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    bin_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_lag: Option<usize>,
    covariance: &'a CovMatrix,
    identified: Identified,
    truth: Truth,
    abs_error: Errors,
    model: &'a Diagnostics,
}

#[derive(Serialize)]
struct HawkesResult {
    model: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    event_counts: Option<Vec<(String, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identified: Option<Identified>,
    artifacts: Vec<Artifact>,
}

fn hawkes_error(e: HawkesError) -> CliError {
    let code = match e {
        HawkesError::File(_) | HawkesError::Dimension(_) | HawkesError::Invalid(_) | HawkesError::UnknownProcess(_) => "model",
        HawkesError::Budget { .. } => "budget",
        _ => "identify",
    };
    CliError::domain(code, e)
}

fn truth(model: &HawkesModel, roles: &MediationRoles) -> Result<Truth, HawkesError> {
    let (a, m, d) = (model.index_of(&roles.treatment)?, model.index_of(&roles.mediator)?, model.index_of(&roles.outcome)?);
    let g = model.g();
    let r = model.cluster_matrix()?.r;
    Ok(Truth {
        g_ma: g[(m, a)],
        g_da: g[(d, a)],
        g_dm: g[(d, m)],
        r_da: r[(d, a)],
        direct: g[(d, a)],
        mediated: g[(d, m)] * g[(m, a)],
    })
}

pub fn hawkes(args: &HawkesArgs, g: &Global) -> CliResult<i32> {
    g.format(&[Format::Json])?;
    if args.simulate.is_none() && !args.identify {
        return Err(CliError::usage("flag", "nothing to do: give --simulate T, --identify or both").at("--simulate"));
    }
    let mut names = Vec::new();
    if args.simulate.is_some() {
        names.push("events.csv");
    }
    if args.identify {
        names.push("identify.json");
    }
    let out = OutDir::prepare(&args.out, &names, g.force)?;
    let location = args.model.display().to_string();
    let mut inputs = Vec::new();
    let text = read_input(&args.model, &mut inputs)?;
    let file = HawkesFile::parse(&text).map_err(|e| hawkes_error(e).at(location.clone()))?;
    let model = file.model().map_err(|e| hawkes_error(e).at(location.clone()))?;
    let diagnostics = model.validate();
    if !diagnostics.valid() {
        return Err(hawkes_error(HawkesError::Invalid(diagnostics.problems)).at(location));
    }
    let roles = file.roles.clone().unwrap_or_default();
    let observed: Vec<String> = file.observed.clone().unwrap_or_else(|| model.names().to_vec());
    let observed_refs: Vec<&str> = observed.iter().map(String::as_str).collect();
    let seed = args.simulate.map(|_| g.seed.unwrap_or(0));

    let mut artifacts = Vec::new();
    let mut stream = None;
    if let Some(horizon) = args.simulate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.expect("set when simulating"));
        let s = simulate(&model, horizon, &mut rng).map_err(hawkes_error)?;
        log::info!("simulated {} events on [0, {horizon}]", s.events.len());
        let mut csv = String::from("time,process\n");
        for e in &s.events {
            csv.push_str(&format!("{},{}\n", sig17(e.time), s.names[e.process]));
        }
        artifacts.push(out.write("events.csv", &csv)?);
        stream = Some(s);
    }

    let mut identified = None;
    if args.identify {
        let (source, cov, bin_width, max_lag) = match &stream {
            Some(s) => {
                let lag = args.max_lag.unwrap_or_else(|| default_max_lag(&model, args.bin_width, DEFAULT_TAIL));
                let c = integrated_cov_empirical(s, &observed_refs, args.bin_width, lag).map_err(hawkes_error)?;
                ("empirical", c, Some(args.bin_width), Some(lag))
            }
            None => ("exact", integrated_cov_exact(&model, Some(&observed_refs)).map_err(hawkes_error)?, None, None),
        };
        let default_tol = if stream.is_some() { EMPIRICAL_STRUCTURE_TOL } else { IdentifyOptions::default().structure_tol };
        let options = IdentifyOptions { structure_tol: args.structure_tol.unwrap_or(default_tol), ..IdentifyOptions::default() };
        let found = identify(&cov, &roles, &options).map_err(hawkes_error)?;
        let truth = truth(&model, &roles).map_err(hawkes_error)?;
        let abs_error = Errors {
            direct: (found.direct - truth.direct).abs(),
            mediated: (found.mediated - truth.mediated).abs(),
            r_da: (found.r_da - truth.r_da).abs(),
        };
        let report = IdentifyReport {
            source,
            roles: &roles,
            observed: &observed,
            options,
            bin_width,
            max_lag,
            covariance: &cov,
            identified: found,
            truth,
            abs_error,
            model: &diagnostics,
        };
        artifacts.push(out.write("identify.json", &Envelope::new("hawkes", seed, &inputs, report).to_json())?);
        identified = Some(found);
    }

    let event_counts = stream.as_ref().map(|s| s.names.iter().cloned().zip(s.counts()).collect());
    let result = HawkesResult { model: diagnostics, event_counts, identified, artifacts };
    g.sink().emit(&Envelope::new("hawkes", seed, &inputs, result).to_json())?;
    Ok(0)
}
