//! `simulate`: exact evaluation on small discrete models.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use medgraph_core::discrete_scm::generate::random_mediation_scm;
use medgraph_core::discrete_scm::model::{DiscreteScm, SeparatedScm, Treatment};
use medgraph_core::discrete_scm::spec::ScmSpec;
use medgraph_core::discrete_scm::ScmError;
use medgraph_core::graph_core::dsl::parse_lig;
use medgraph_core::mediation::MediationGraph;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{read_input, sig17, write_guarded, Envelope, InputDigest};
use crate::{Format, Global};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Query {
    /// Mediational g-formula, mediators under `astar` and the rest under `a`.
    Gformula,
    /// Single-regime g-computation under `a`.
    Gcomp,
    /// True survival under the split intervention; needs separated treatment components.
    Interventional,
    /// Survival conditional on observed treatment `a`.
    Observed,
    /// Exact conditional-independence checks of the three assumptions.
    Assumptions,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model file (JSON with grid, treatment, survival, mediators, covariates, variables).
    #[arg(long, required_unless_present = "graph", conflicts_with = "graph")]
    pub scm: Option<PathBuf>,
    /// Draw a random model on the unrolling of this mediation graph instead, from `--seed`.
    #[arg(long, requires = "lags")]
    pub graph: Option<PathBuf>,
    /// Lags for `--graph`.
    #[arg(long)]
    pub lags: Option<usize>,
    #[arg(long, value_enum, default_value = "gformula")]
    pub query: Query,
    #[arg(long, default_value_t = 1)]
    pub a: usize,
    #[arg(long, default_value_t = 0)]
    pub astar: usize,
    /// Report only this grid time; all grid points after the first otherwise.
    #[arg(long)]
    pub t: Option<f64>,
    /// Fail on histories of probability zero instead of skipping them.
    #[arg(long)]
    pub strict: bool,
    /// Agreement tolerance between the g-formula and the interventional truth.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Also write the evaluated model to this file.
    #[arg(long, value_name = "FILE")]
    pub emit_scm: Option<PathBuf>,
}

#[derive(Serialize)]
struct ModelInfo {
    variables: usize,
    lags: usize,
    treatment: &'static str,
    joint_cells: u128,
}

#[derive(Serialize)]
struct Diagnostics {
    model: ModelInfo,
    strict: bool,
    /// For separated models: the interventional survival the g-formula should match.
    #[serde(skip_serializing_if = "Option::is_none")]
    interventional: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_tol: Option<bool>,
    tol: f64,
}

#[derive(Serialize)]
struct CurveResult {
    query: Query,
    a: usize,
    a_star: usize,
    grid: Vec<f64>,
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    diagnostics: Diagnostics,
}

fn scm_error(e: ScmError) -> CliError {
    CliError::domain("model", e)
}

fn load(args: &SimulateArgs, seed: Option<u64>, inputs: &mut Vec<InputDigest>) -> CliResult<(DiscreteScm, Option<u64>)> {
    if let Some(path) = &args.scm {
        let text = read_input(path, inputs)?;
        let spec = ScmSpec::parse(&text).map_err(|e| CliError::domain("parse", e).at(path.display().to_string()))?;
        let scm = spec.build().map_err(|e| scm_error(e).at(path.display().to_string()))?;
        return Ok((scm, seed));
    }
    let path = args.graph.as_ref().expect("clap requires --scm or --graph");
    let text = read_input(path, inputs)?;
    let doc = parse_lig(&text).map_err(|e| CliError::domain("parse", &e.message).at(format!("{}:{}", path.display(), e.line)))?;
    let mg = MediationGraph::from_document(&doc).map_err(|e| CliError::domain("roles", e).at(path.display().to_string()))?;
    let seed = seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lags = args.lags.expect("clap requires --lags with --graph");
    let scm = random_mediation_scm(&mg, lags, &mut rng).map_err(|e| CliError::domain("generate", e))?;
    Ok((scm.scm().clone(), Some(seed)))
}

pub fn simulate(args: &SimulateArgs, g: &Global) -> CliResult<i32> {
    let format = g.format(&[Format::Json, Format::Csv])?;
    let mut inputs = Vec::new();
    let (scm, seed) = load(args, g.seed, &mut inputs)?;
    if let Some(path) = &args.emit_scm {
        let mut text = ScmSpec::from_scm(&scm).to_json();
        text.push('\n');
        write_guarded(path, text.as_bytes(), g.force)?;
    }
    let separated = match scm.layout().treatment {
        Treatment::Separated { .. } => Some(SeparatedScm::new(scm.clone()).map_err(scm_error)?),
        Treatment::Single(_) => None,
    };
    if args.query == Query::Assumptions {
        if format == Format::Csv {
            return Err(CliError::usage("format", "the assumptions query has no CSV form").at("--format"));
        }
        let sep =
            separated.ok_or_else(|| CliError::domain("model", "exact assumption checks need separated treatment components"))?;
        let report = sep.verify_assumptions_exact().map_err(scm_error)?;
        g.sink().emit(&Envelope::new("simulate", seed, &inputs, report).to_json())?;
        return Ok(0);
    }
    let observational = match &separated {
        Some(sep) => sep.observational().map_err(scm_error)?,
        None => scm.clone(),
    };
    let values = match args.query {
        Query::Gformula => observational.mediational_g_formula(args.a, args.astar, args.strict),
        Query::Gcomp => observational.g_computation(args.a, args.strict),
        Query::Observed => observational.survival_given_treatment(args.a),
        Query::Interventional => match &separated {
            Some(sep) => sep.interventional_survival(args.a, args.astar),
            None => return Err(CliError::domain("model", "interventional survival needs separated treatment components")),
        },
        Query::Assumptions => unreachable!("handled above"),
    }
    .map_err(scm_error)?;
    let truth = match (&separated, args.query) {
        (Some(sep), Query::Gformula) => Some(sep.interventional_survival(args.a, args.astar).map_err(scm_error)?),
        (Some(sep), Query::Gcomp) => Some(sep.interventional_survival(args.a, args.a).map_err(scm_error)?),
        _ => None,
    };
    let gap = truth.as_ref().map(|t| t.iter().zip(&values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    let grid: Vec<f64> = scm.layout().grid[1..].to_vec();
    let picked = match args.t {
        None => None,
        Some(t) => {
            let k = grid
                .iter()
                .position(|&x| (x - t).abs() <= 1e-12 * x.abs().max(1.0))
                .ok_or_else(|| CliError::usage("flag", format!("--t {t} is not one of the grid times {grid:?}")).at("--t"))?;
            Some((t, values[k]))
        }
    };
    let text = match format {
        Format::Csv => {
            let mut s = String::from("t,value\n");
            let rows: Vec<(f64, f64)> = match picked {
                Some(p) => vec![p],
                None => grid.iter().copied().zip(values.iter().copied()).collect(),
            };
            for (t, v) in rows {
                s.push_str(&format!("{},{}\n", sig17(t), sig17(v)));
            }
            s
        }
        _ => {
            let diagnostics = Diagnostics {
                model: ModelInfo {
                    variables: scm.network().len(),
                    lags: scm.lag_count(),
                    treatment: if separated.is_some() { "separated" } else { "single" },
                    joint_cells: scm.network().joint_cells(),
                },
                strict: args.strict,
                interventional: truth,
                max_abs_gap: gap,
                within_tol: gap.map(|x| x <= args.tol),
                tol: args.tol,
            };
            let result = CurveResult {
                query: args.query,
                a: args.a,
                a_star: if args.query == Query::Gcomp { args.a } else { args.astar },
                grid,
                values,
                t: picked.map(|p| p.0),
                value: picked.map(|p| p.1),
                diagnostics,
            };
            Envelope::new("simulate", seed, &inputs, result).to_json()
        }
    };
    g.sink().emit(&text)?;
    Ok(0)
}
