//! `selftest`: the seeded property suites with a pass/fail line per suite.

use clap::{Args, ValueEnum};
use medgraph_core::selftest::{run_all, Scale, SuiteReport};
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{Envelope, TOOL, VERSION};
use crate::{Format, Global};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleArg {
    /// A few seconds.
    Quick,
    /// The sizes of the acceptance run; several minutes.
    Full,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub scale: ScaleArg,
}

#[derive(Serialize)]
struct SelftestResult {
    scale: ScaleArg,
    sizes: Scale,
    passed: bool,
    suites: Vec<SuiteReport>,
}

fn table(seed: u64, scale: ScaleArg, suites: &[SuiteReport]) -> String {
    let width = suites.iter().map(|s| s.name.len()).max().unwrap_or(0).max("suite".len());
    let scale = match scale {
        ScaleArg::Quick => "quick",
        ScaleArg::Full => "full",
    };
    let mut s = format!("{TOOL} {VERSION} selftest seed={seed} scale={scale}\n");
    s.push_str(&format!("{:<width$}  {:>7}  {:>8}  {:>7}  status\n", "suite", "cases", "failures", "allowed"));
    for r in suites {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:<width$}  {:>7}  {:>8}  {:>7}  {status}\n", r.name, r.cases, r.failures, r.allowed_failures));
        if let (false, Some(first)) = (r.passed(), &r.first_failure) {
            s.push_str(&format!("  first failure: {first}\n"));
        }
    }
    s
}

pub fn selftest(args: &SelftestArgs, g: &Global) -> CliResult<i32> {
    let format = g.format(&[Format::Table, Format::Json])?;
    let seed = g.seed.unwrap_or(0);
    let sizes = match args.scale {
        ScaleArg::Quick => Scale::QUICK,
        ScaleArg::Full => Scale::FULL,
    };
    let suites = run_all(seed, sizes);
    let passed = suites.iter().all(SuiteReport::passed);
    let text = match format {
        Format::Json => {
            Envelope::new("selftest", Some(seed), &[], SelftestResult { scale: args.scale, sizes, passed, suites }).to_json()
        }
        _ => table(seed, args.scale, &suites),
    };
    g.sink().emit(&text)?;
    Ok(if passed { 0 } else { crate::error::EXIT_DOMAIN })
}
