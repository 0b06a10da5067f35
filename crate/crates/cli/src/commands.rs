use std::fmt::Write as _;
use std::path::Path;

use eahm_core::analyzers::{
    check_ifr_dfr, check_ilr_dlr, check_lr_order, check_st_order, Direction, MonotonicityVerdict, OrderVerdict,
};
use eahm_core::theorem::{
    search_counterexample, verify_sampling_consistency, verify_theorem_4_1, SamplingReport, SearchOutcome, TheoremReport,
};
use eahm_core::{EahmError, EahmModel, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output::{csv_float, to_csv, to_json, write_atomic};
use crate::scenario::Scenario;

/// Bumped whenever the verdict layout changes.
pub const FORMAT_VERSION: u32 = 1;

pub const EVAL_HEADER: [&str; 6] = [
    "x",
    "baseline_survival",
    "overall_survival",
    "overall_density",
    "baseline_hazard",
    "overall_hazard",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eval,
    Classify,
    Verify,
    Search,
    Sample,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Classify => "classify",
            Command::Verify => "verify",
            Command::Search => "search",
            Command::Sample => "sample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictDocument {
    pub format_version: u32,
    pub tool_version: String,
    pub command: Command,
    /// The scenario as run, defaults and command-line overrides applied.
    pub scenario: Scenario,
    pub result: CommandResult,
    /// Side-effect files, relative to the output directory.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CommandResult {
    Eval(EvalResult),
    Classify(ClassifyResult),
    Verify(TheoremReport),
    Search(SearchResult),
    Sample(SamplingReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub rows: usize,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingClass {
    /// `ifr`, `dfr`, `constant` or `non-monotone` for hazards;
    /// `ilr`, `dlr`, `log-linear` or `neither` for densities; `undefined` otherwise.
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<MonotonicityVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableAging {
    pub failure_rate: AgingClass,
    pub likelihood_ratio: AgingClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderComparison {
    /// Always `overall <= baseline`: `X` is the overall variable, `Y` the baseline.
    pub claim: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<OrderVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResult {
    pub x_points: usize,
    pub excluded_x: Vec<f64>,
    pub baseline: VariableAging,
    pub overall: VariableAging,
    pub st_order: OrderComparison,
    pub lr_order: OrderComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    /// Scenario file written for a match, relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_file: Option<String>,
}

/// Result of one command: the verdict plus a human-readable summary.
pub struct Run {
    pub document: VerdictDocument,
    pub summary: String,
}

pub fn run_command(command: Command, scenario: &Scenario, out_dir: &Path) -> Result<Run> {
    let model = scenario.build_model()?;
    let mut files = Vec::new();
    let mut summary = String::new();
    let result = match command {
        Command::Eval => CommandResult::Eval(eval(scenario, &model, out_dir, &mut files, &mut summary)?),
        Command::Classify => CommandResult::Classify(classify(scenario, &model, &mut summary)?),
        Command::Verify => CommandResult::Verify(verify(scenario, &model, &mut summary)?),
        Command::Search => CommandResult::Search(search(scenario, out_dir, &mut files, &mut summary)?),
        Command::Sample => CommandResult::Sample(sample(scenario, &model, out_dir, &mut files, &mut summary)?),
    };
    let json_name = format!("{}.json", command.as_str());
    let document = VerdictDocument {
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        scenario: scenario.clone(),
        result,
        files: files.clone(),
    };
    write_atomic(out_dir, &json_name, &to_json(&document)?)?;
    let _ = writeln!(summary, "wrote {json_name}{}", files.iter().map(|f| format!(", {f}")).collect::<String>());
    Ok(Run { document, summary })
}

fn eval(scenario: &Scenario, model: &EahmModel, out: &Path, files: &mut Vec<String>, summary: &mut String) -> Result<EvalResult> {
    let grid = scenario.x_grid.build()?;
    let quad = scenario.tolerances.quadrature();
    let mut rows = Vec::with_capacity(grid.len());
    for &x in grid.points() {
        let at = |e: EahmError| CliError::Model(e);
        rows.push(vec![
            csv_float(x),
            csv_float(model.baseline.survival(x)),
            csv_float(model.overall_survival(x, &quad).map_err(at)?),
            csv_float(model.overall_density(x, &quad).map_err(at)?),
            csv_float(model.baseline.hazard(x)),
            csv_float(model.overall_hazard(x, &quad).map_err(at)?),
        ]);
    }
    write_atomic(out, "eval.csv", &to_csv(&EVAL_HEADER, &rows)?)?;
    files.push("eval.csv".into());
    let _ = writeln!(summary, "evaluated S, S*, f*, h, h* at {} points", rows.len());
    Ok(EvalResult {
        rows: rows.len(),
        columns: EVAL_HEADER.iter().map(|s| s.to_string()).collect(),
    })
}

fn hazard_class(d: Direction) -> &'static str {
    match d {
        Direction::Increasing => "ifr",
        Direction::Decreasing => "dfr",
        Direction::Constant => "constant",
        Direction::Mixed => "non-monotone",
    }
}

fn density_class(d: Direction) -> &'static str {
    match d {
        Direction::Increasing => "dlr",
        Direction::Decreasing => "ilr",
        Direction::Constant => "log-linear",
        Direction::Mixed => "neither",
    }
}

fn aging(
    verdict: eahm_core::Result<MonotonicityVerdict>,
    label: fn(Direction) -> &'static str,
) -> Result<AgingClass> {
    match verdict {
        Ok(v) => Ok(AgingClass {
            class: label(v.direction).into(),
            verdict: Some(v),
            note: None,
        }),
        Err(e @ (EahmError::NonPositive { .. } | EahmError::Shape(_))) => Ok(AgingClass {
            class: "undefined".into(),
            verdict: None,
            note: Some(e.to_string()),
        }),
        Err(e) => Err(e.into()),
    }
}

fn classify(scenario: &Scenario, model: &EahmModel, summary: &mut String) -> Result<ClassifyResult> {
    let full = scenario.x_grid.build()?;
    let tol = scenario.tolerances.profile();
    let quad = scenario.tolerances.quadrature();
    let finite = |x: f64| model.baseline.hazard(x).is_finite();
    let excluded_x: Vec<f64> = full.points().iter().copied().filter(|&x| !finite(x)).collect();
    let grid: Grid = full
        .filtered(finite)
        .ok_or_else(|| CliError::Config("the baseline hazard is infinite on every x-grid point".into()))?;
    let xs = grid.points();

    let mut base_s = Vec::with_capacity(xs.len());
    let mut base_f = Vec::with_capacity(xs.len());
    let mut base_h = Vec::with_capacity(xs.len());
    let mut over_s = Vec::with_capacity(xs.len());
    let mut over_f = Vec::with_capacity(xs.len());
    let mut over_h = Vec::with_capacity(xs.len());
    for &x in xs {
        let h = model.baseline.hazard(x);
        base_h.push(h);
        base_s.push(model.baseline.survival(x));
        base_f.push((-model.baseline.cumulative_hazard(x) + h.ln()).exp());
        over_s.push(model.overall_survival(x, &quad)?);
        over_f.push(model.overall_density(x, &quad)?);
        over_h.push(model.overall_hazard(x, &quad)?);
    }

    let baseline = VariableAging {
        failure_rate: aging(check_ifr_dfr(&grid, &base_h, &tol), hazard_class)?,
        likelihood_ratio: aging(check_ilr_dlr(&grid, &base_f, &tol), density_class)?,
    };
    let overall = VariableAging {
        failure_rate: aging(check_ifr_dfr(&grid, &over_h, &tol), hazard_class)?,
        likelihood_ratio: aging(check_ilr_dlr(&grid, &over_f, &tol), density_class)?,
    };
    let order = |v: eahm_core::Result<OrderVerdict>| -> Result<OrderComparison> {
        let claim = "overall <= baseline".to_string();
        match v {
            Ok(v) => Ok(OrderComparison {
                claim,
                verdict: Some(v),
                note: None,
            }),
            Err(e @ (EahmError::NonPositive { .. } | EahmError::Shape(_))) => Ok(OrderComparison {
                claim,
                verdict: None,
                note: Some(e.to_string()),
            }),
            Err(e) => Err(e.into()),
        }
    };
    let st_order = order(check_st_order(&grid, &over_s, &base_s, &tol))?;
    let lr_order = order(check_lr_order(&grid, &over_f, &base_f, &tol))?;

    let _ = writeln!(
        summary,
        "baseline: {} / {}\noverall:  {} / {}",
        baseline.failure_rate.class, baseline.likelihood_ratio.class, overall.failure_rate.class, overall.likelihood_ratio.class
    );
    for (name, o) in [("st", &st_order), ("lr", &lr_order)] {
        let holds = o
            .verdict
            .as_ref()
            .map(|v| format!("{:?}", v.holds).to_lowercase())
            .unwrap_or_else(|| "undefined".into());
        let _ = writeln!(summary, "{name} order, {}: {holds}", o.claim);
    }
    Ok(ClassifyResult {
        x_points: xs.len(),
        excluded_x,
        baseline,
        overall,
        st_order,
        lr_order,
    })
}

fn verify(scenario: &Scenario, model: &EahmModel, summary: &mut String) -> Result<TheoremReport> {
    let x = scenario.x_grid.build()?;
    let z = scenario.z_grid.build(&scenario.covariate)?;
    let report = verify_theorem_4_1(model, &x, &z, &scenario.tolerances.profile(), &scenario.tolerances.quadrature())?;
    write_report_summary(&report, summary);
    Ok(report)
}

fn write_report_summary(report: &TheoremReport, summary: &mut String) {
    let _ = writeln!(summary, "status: {}", report.status.as_str());
    for h in report.hypotheses.iter().chain(std::iter::once(&report.conclusion)) {
        let margin = h.margin.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "undefined".into());
        let _ = writeln!(
            summary,
            "  {:<10} {:<24} {:<6} {:<14} margin {margin}",
            h.id,
            h.name,
            if h.holds { "holds" } else { "FAILS" },
            h.verdict
        );
    }
}

fn search(scenario: &Scenario, out: &Path, files: &mut Vec<String>, summary: &mut String) -> Result<SearchResult> {
    let section = scenario
        .search
        .as_ref()
        .ok_or_else(|| CliError::Config("the search command needs a [search] section".into()))?;
    let spec = scenario.search_spec(section)?;
    let outcome = search_counterexample(&spec, &scenario.tolerances.profile(), &scenario.tolerances.quadrature())?;
    let mut scenario_file = None;
    match &outcome {
        SearchOutcome::Found { index, spec, report, .. } => {
            let found = scenario.with_model(spec.clone());
            write_atomic(out, "search-found.toml", found.to_toml()?.as_bytes())?;
            files.push("search-found.toml".into());
            scenario_file = Some("search-found.toml".into());
            let _ = writeln!(summary, "match at sample {index}");
            write_report_summary(report, summary);
        }
        SearchOutcome::Exhausted { evaluated, rejected } => {
            let _ = writeln!(summary, "exhausted: {evaluated} samples evaluated, {rejected} rejected as invalid models");
        }
    }
    Ok(SearchResult { outcome, scenario_file })
}

fn sample(scenario: &Scenario, model: &EahmModel, out: &Path, files: &mut Vec<String>, summary: &mut String) -> Result<SamplingReport> {
    let (report, samples) = verify_sampling_consistency(
        model,
        scenario.seed,
        scenario.sample.n,
        scenario.sample.alpha,
        &scenario.tolerances.quadrature(),
    )?;
    let rows: Vec<Vec<String>> = samples.iter().map(|&t| vec![csv_float(t)]).collect();
    write_atomic(out, "samples.csv", &to_csv(&["lifetime"], &rows)?)?;
    files.push("samples.csv".into());
    let _ = writeln!(
        summary,
        "{} lifetimes, sup |S_n - S*| = {:.5} (DKW bound {:.5} at alpha {}): {}",
        report.n,
        report.sup_distance,
        report.dkw_bound,
        report.alpha,
        if report.passes { "consistent" } else { "INCONSISTENT" }
    );
    Ok(report)
}
