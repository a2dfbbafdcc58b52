//! `check`, `sep` and `unroll`: commands on `.lig` graph files.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use medgraph_core::graph_core::dsl::{parse_lig, write_unrolled, GraphDocument};
use medgraph_core::graph_core::{Adjacency, NodeSet};
use medgraph_core::mediation::{check_assumptions, check_extended_example, MediationGraph, MediationReport};
use medgraph_core::separation::{
    d_separated_in, d_witness, dag_query_by_label, delta_separated, delta_witness, granger_noncausal_graphical, query_by_name,
    GrangerVerdict, Inconclusive, QueryError, SeparationQuery, Witness,
};
use medgraph_core::transform::unroll as unroll_graph;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{read_input, Envelope, InputDigest, TOOL, VERSION};
use crate::{Format, Global};

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Graph with `role` statements for the treatment components, mediators, covariates and outcome.
    pub file: PathBuf,
    /// Record that treatment was randomized.
    #[arg(long)]
    pub randomized: bool,
    /// Require and note a covariate process driven by the direct treatment component.
    #[arg(long)]
    pub treatment_driven_covariate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SepFlavor {
    /// d-separation in a DAG: the file itself, or its unrolling with `--lags`.
    D,
    /// δ-separation in the rolled graph.
    Delta,
    /// The extended criterion for graphs with same-lag effects.
    DeltaExt,
}

#[derive(Debug, Args)]
pub struct SepArgs {
    #[arg(long, value_enum, default_value = "delta")]
    pub flavor: SepFlavor,
    /// Source nodes, comma-separated or repeated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub from: Vec<String>,
    /// Target nodes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub target: Vec<String>,
    /// Conditioning nodes.
    #[arg(long, value_delimiter = ',')]
    pub given: Vec<String>,
    /// With `--flavor d`, unroll first and name nodes `name@lag`.
    #[arg(long)]
    pub lags: Option<usize>,
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct UnrollArgs {
    #[arg(long)]
    pub lags: usize,
    pub file: PathBuf,
}

fn load(path: &Path, inputs: &mut Vec<InputDigest>) -> CliResult<GraphDocument> {
    let text = read_input(path, inputs)?;
    parse_lig(&text).map_err(|e| CliError::domain("parse", &e.message).at(format!("{}:{}", path.display(), e.line)))
}

fn query_error(e: QueryError) -> CliError {
    CliError::domain("query", e)
}

#[derive(Serialize)]
struct CheckResult {
    all_verified: bool,
    #[serde(flatten)]
    report: MediationReport,
}

pub fn check(args: &CheckArgs, g: &Global) -> CliResult<i32> {
    g.format(&[Format::Json])?;
    let mut inputs = Vec::new();
    let doc = load(&args.file, &mut inputs)?;
    let location = args.file.display().to_string();
    let mg = MediationGraph::from_document(&doc)
        .map_err(|e| CliError::domain("roles", e).at(location.clone()))?
        .with_randomized(args.randomized);
    let report = if args.treatment_driven_covariate { check_extended_example(&mg) } else { check_assumptions(&mg) }
        .map_err(|e| CliError::domain("check", e).at(location))?;
    let result = CheckResult { all_verified: report.all_verified(), report };
    g.sink().emit(&Envelope::new("check", g.seed, &inputs, result).to_json())?;
    Ok(0)
}

#[derive(Serialize)]
struct NamedSets {
    from: Vec<String>,
    target: Vec<String>,
    given: Vec<String>,
}

#[derive(Serialize)]
struct SepResult {
    flavor: &'static str,
    lags: Option<usize>,
    query: NamedSets,
    /// `separated` or `connected`; for the extended criterion `holds` or `inconclusive`.
    result: &'static str,
    separated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_path: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<Inconclusive>,
}

fn names_of(set: &NodeSet, name: impl Fn(usize) -> String) -> Vec<String> {
    set.iter().map(|&v| name(v)).collect()
}

pub fn sep(args: &SepArgs, g: &Global) -> CliResult<i32> {
    g.format(&[Format::Json])?;
    if args.lags.is_some() && args.flavor != SepFlavor::D {
        return Err(CliError::usage("flag", "--lags applies only to --flavor d").at("--lags"));
    }
    let mut inputs = Vec::new();
    let doc = load(&args.file, &mut inputs)?;
    let graph = &doc.graph;
    let result = match args.flavor {
        SepFlavor::D => {
            let (adj, names, q): (Adjacency, Vec<String>, SeparationQuery) = match args.lags {
                Some(k) => {
                    let dag = unroll_graph(graph, k).map_err(|e| CliError::domain("unroll", e))?;
                    let q = dag_query_by_label(&dag, &args.from, &args.target, &args.given).map_err(query_error)?;
                    let names = (0..dag.len()).map(|v| dag.var_name(v)).collect();
                    (dag.adjacency().clone(), names, q)
                }
                None => {
                    // Both edge kinds are plain edges of the DAG here.
                    let adj = Adjacency::from_edges(graph.len(), graph.edges().map(|(i, j, _)| (i, j)));
                    if let Err(cycle) = adj.topological_order() {
                        let names = cycle.iter().map(|&v| graph.name(v).to_string()).collect();
                        return Err(query_error(QueryError::Cyclic(names)).at(args.file.display().to_string()));
                    }
                    let q = query_by_name(graph, &args.from, &args.target, &args.given).map_err(query_error)?;
                    (adj, (0..graph.len()).map(|v| graph.name(v).to_string()).collect(), q)
                }
            };
            let name = |v: usize| names[v].clone();
            let separated = d_separated_in(&adj, &q).map_err(query_error)?;
            let witness = if separated { None } else { d_witness(&adj, &q, name).map_err(query_error)? };
            sep_result("d", args.lags, &q, &name, separated, witness, None)
        }
        SepFlavor::Delta => {
            let q = query_by_name(graph, &args.from, &args.target, &args.given).map_err(query_error)?;
            let separated = delta_separated(graph, &q).map_err(query_error)?;
            let witness = if separated { None } else { delta_witness(graph, &q).map_err(query_error)? };
            sep_result("delta", None, &q, &|v| graph.name(v).to_string(), separated, witness, None)
        }
        SepFlavor::DeltaExt => {
            let q = query_by_name(graph, &args.from, &args.target, &args.given).map_err(query_error)?;
            let verdict = granger_noncausal_graphical(graph, &q).map_err(query_error)?;
            let name = |v: usize| graph.name(v).to_string();
            match verdict {
                GrangerVerdict::Holds => sep_result("delta_ext", None, &q, &name, true, None, None),
                GrangerVerdict::Inconclusive(reason) => {
                    let witness = match &reason {
                        Inconclusive::Connected { witness } => witness.clone(),
                        Inconclusive::TailedAncestorInFrom { .. } => None,
                    };
                    sep_result("delta_ext", None, &q, &name, false, witness, Some(reason))
                }
            }
        }
    };
    g.sink().emit(&Envelope::new("sep", g.seed, &inputs, result).to_json())?;
    Ok(0)
}

fn sep_result(
    flavor: &'static str,
    lags: Option<usize>,
    q: &SeparationQuery,
    name: &dyn Fn(usize) -> String,
    separated: bool,
    witness: Option<Witness>,
    reason: Option<Inconclusive>,
) -> SepResult {
    let result = match (flavor, separated) {
        ("delta_ext", true) => "holds",
        ("delta_ext", false) => "inconclusive",
        (_, true) => "separated",
        (_, false) => "connected",
    };
    SepResult {
        flavor,
        lags,
        query: NamedSets { from: names_of(&q.from, name), target: names_of(&q.target, name), given: names_of(&q.given, name) },
        result,
        separated,
        witness: witness.as_ref().map(|w| w.to_string()),
        witness_path: witness,
        reason,
    }
}

#[derive(Serialize)]
struct UnrollResult {
    lags: usize,
    nodes: Vec<String>,
    edges: Vec<[String; 2]>,
}

pub fn unroll(args: &UnrollArgs, g: &Global) -> CliResult<i32> {
    let format = g.format(&[Format::Lig, Format::Json])?;
    let mut inputs = Vec::new();
    let doc = load(&args.file, &mut inputs)?;
    let dag =
        unroll_graph(&doc.graph, args.lags).map_err(|e| CliError::domain("unroll", e).at(args.file.display().to_string()))?;
    let text = match format {
        Format::Json => {
            let result = UnrollResult {
                lags: args.lags,
                nodes: (0..dag.len()).map(|v| dag.var_name(v)).collect(),
                edges: dag.edges().map(|(i, j)| [dag.var_name(i), dag.var_name(j)]).collect(),
            };
            Envelope::new("unroll", g.seed, &inputs, result).to_json()
        }
        _ => {
            let mut header = format!("# {TOOL} {VERSION} unroll --lags {}\n", args.lags);
            for input in &inputs {
                header.push_str(&format!("# input {} sha256 {}\n", input.path, input.sha256));
            }
            header + &write_unrolled(&dag)
        }
    };
    g.sink().emit(&text)?;
    Ok(0)
}
