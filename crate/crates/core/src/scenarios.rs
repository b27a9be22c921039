//! Analyses run over settings: single runs, congestion statistics, routing
//! overhead and single-link failure robustness.

use std::fmt;
use std::io;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::io::ReportWriter;
use crate::mcf::{lp_lower_bound, McfParams};
use crate::model::{
    validate_setting, FailureRecord, OverheadCounters, RoutingConfiguration, RunStatus, ScenarioRecord,
    ScenarioReport, Setting, SummaryLine,
};
use crate::routing::total_load;
use crate::solvers::{Budget, Solver};

/// Utilization above which a link counts as congested.
pub const CONGESTION_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SingleSolverRun,
    MaxCongestion,
    Overhead,
    Robustness,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] =
        [ScenarioKind::SingleSolverRun, ScenarioKind::MaxCongestion, ScenarioKind::Overhead, ScenarioKind::Robustness];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::SingleSolverRun => "SingleSolverRun",
            ScenarioKind::MaxCongestion => "MaxCongestion",
            ScenarioKind::Overhead => "Overhead",
            ScenarioKind::Robustness => "Robustness",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scenario {0:?}")]
pub struct UnknownScenario(pub String);

impl FromStr for ScenarioKind {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub solver_name: String,
    pub budget: Budget,
    pub output_path: Option<PathBuf>,
    pub mcf: McfParams,
    /// Settings evaluated concurrently.
    pub jobs: usize,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, solver_name: impl Into<String>, budget: Budget) -> Self {
        ScenarioSpec {
            kind,
            solver_name: solver_name.into(),
            budget,
            output_path: None,
            mcf: McfParams::default(),
            jobs: 1,
        }
    }
}

/// Result of one budgeted solver invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub routing: RoutingConfiguration,
    pub status: RunStatus,
    pub time_ms: u64,
    pub error: Option<String>,
}

/// Runs `solver` under `budget`. Failures and configurations that do not
/// validate fall back to the input routing with a failed status.
pub fn enforce_budget(solver: &dyn Solver, setting: &Setting, budget: &Budget) -> RunOutcome {
    let started = Instant::now();
    let result = solver.solve(setting, budget);
    let measured = started.elapsed().as_millis() as u64;
    let failed = |error: String| RunOutcome {
        routing: setting.routing.clone(),
        status: RunStatus::Failed,
        time_ms: measured,
        error: Some(error),
    };
    match result {
        Ok(out) => {
            let problems = validate_setting(&setting.with_routing(out.routing.clone()));
            if !problems.is_empty() {
                return failed(problems.join("; "));
            }
            RunOutcome {
                routing: out.routing,
                status: out.status,
                time_ms: out.reported_time_ms.unwrap_or(measured),
                error: None,
            }
        }
        Err(e) => failed(e.to_string()),
    }
}

fn bound_of(setting: &Setting, mcf: &McfParams) -> f64 {
    lp_lower_bound(&setting.topology, &setting.traffic, mcf).map_or(f64::NAN, |s| s.lower_bound)
}

fn max_util(setting: &Setting) -> Option<f64> {
    total_load(setting).ok().map(|l| l.max_utilization)
}

/// Base record of a solver run, with the configuration it produced.
fn evaluate(spec: &ScenarioSpec, solver: &dyn Solver, setting: &Setting) -> (ScenarioRecord, RoutingConfiguration) {
    let pre = max_util(setting).unwrap_or(f64::NAN);
    let bound = bound_of(setting, &spec.mcf);
    let mut outcome = enforce_budget(solver, setting, &spec.budget);
    let mut post = if solver.is_fractional_bound() {
        Some(bound)
    } else {
        max_util(&setting.with_routing(outcome.routing.clone()))
    };
    if post.is_none() {
        outcome.routing = setting.routing.clone();
        outcome.status = RunStatus::Failed;
        post = Some(pre);
    }
    if let Some(e) = &outcome.error {
        log::warn!("{} on {}: {e}", solver.name(), setting.name);
    }
    let record = ScenarioRecord {
        scenario: spec.kind.to_string(),
        solver: solver.name().to_string(),
        setting: setting.name.clone(),
        pre_max_utilization: pre,
        post_max_utilization: post.unwrap_or(pre),
        lower_bound: bound,
        solve_time_ms: outcome.time_ms,
        status: outcome.status,
        overhead: None,
        failures: None,
    };
    (record, outcome.routing)
}

/// Routing changes between two configurations of the same setting.
pub fn overhead_counters(pre: &RoutingConfiguration, post: &RoutingConfiguration, demand_count: usize) -> OverheadCounters {
    let changed_weights = pre.weights.iter().zip(&post.weights).filter(|(a, b)| a != b).count()
        + pre.weights.len().abs_diff(post.weights.len());
    let rerouted_sr_demands = post
        .sr_segments
        .iter()
        .filter(|(d, s)| s.len() > 2 && pre.sr_segments.get(d) != Some(s))
        .count();
    let modified_explicit_paths = post
        .explicit_paths
        .iter()
        .filter(|(d, p)| !p.is_empty() && pre.explicit_paths.get(d) != Some(p))
        .count();
    OverheadCounters {
        changed_weights,
        rerouted_sr_demands,
        rerouted_sr_fraction: if demand_count == 0 { 0.0 } else { rerouted_sr_demands as f64 / demand_count as f64 },
        modified_explicit_paths,
    }
}

/// The setting with both directions of a physical link removed, carrying
/// `routing` over: weights and explicit paths are re-indexed, explicit paths
/// through the failed link are dropped, segment lists are kept.
pub fn fail_link(setting: &Setting, routing: &RoutingConfiguration, removed: &[usize]) -> Setting {
    let (topology, map) = setting.topology.without_edges(removed);
    let mut failed = RoutingConfiguration {
        weights: routing.weights.iter().enumerate().filter(|(e, _)| map[*e].is_some()).map(|(_, &w)| w).collect(),
        sr_segments: routing.sr_segments.clone(),
        explicit_paths: Default::default(),
    };
    for (&d, paths) in &routing.explicit_paths {
        let kept: Vec<Vec<usize>> = paths
            .iter()
            .filter_map(|p| p.iter().map(|&e| map.get(e).copied().flatten()).collect::<Option<Vec<usize>>>())
            .collect();
        if !kept.is_empty() {
            failed.explicit_paths.insert(d, kept);
        }
    }
    Setting { name: setting.name.clone(), topology, traffic: setting.traffic.clone(), routing: failed }
}

/// Evaluates `routing` under every single physical-link failure that keeps
/// the topology strongly connected.
pub fn failure_records(
    setting: &Setting,
    routing: &RoutingConfiguration,
    mcf: &McfParams,
    bound_only: bool,
) -> Vec<FailureRecord> {
    let mut records = Vec::new();
    for link in setting.topology.physical_links() {
        let removed: Vec<usize> = link.edges().collect();
        let failed = fail_link(setting, routing, &removed);
        if !failed.topology.is_strongly_connected() {
            continue;
        }
        let bound = bound_of(&failed, mcf);
        let u = if bound_only { bound } else { max_util(&failed).unwrap_or(f64::NAN) };
        let label = removed.iter().map(|&e| setting.topology.edges[e].label.as_str()).collect::<Vec<_>>().join("/");
        records.push(FailureRecord {
            link: label,
            post_failure_utilization: u,
            post_failure_bound: bound,
            congested: u > CONGESTION_THRESHOLD,
        });
    }
    records
}

fn record_for(spec: &ScenarioSpec, solver: &dyn Solver, setting: &Setting) -> ScenarioRecord {
    let (mut record, routing) = evaluate(spec, solver, setting);
    match spec.kind {
        ScenarioKind::SingleSolverRun | ScenarioKind::MaxCongestion => {}
        ScenarioKind::Overhead => {
            record.overhead = Some(overhead_counters(&setting.routing, &routing, setting.traffic.len()));
        }
        ScenarioKind::Robustness => {
            record.failures = Some(failure_records(setting, &routing, &spec.mcf, solver.is_fractional_bound()));
        }
    }
    record
}

/// Linear interpolation between order statistics; `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn distribution(metric: &str, values: &[f64]) -> SummaryLine {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let stats = [("min", 0.0), ("p25", 0.25), ("median", 0.5), ("p75", 0.75), ("p95", 0.95), ("max", 1.0)];
    SummaryLine {
        metric: metric.to_string(),
        values: stats.iter().map(|&(k, q)| (k.to_string(), percentile(&sorted, q))).collect(),
    }
}

fn summaries(kind: ScenarioKind, records: &[ScenarioRecord]) -> Vec<SummaryLine> {
    match kind {
        ScenarioKind::SingleSolverRun => Vec::new(),
        ScenarioKind::MaxCongestion => {
            let post: Vec<f64> = records.iter().map(|r| r.post_max_utilization).collect();
            vec![distribution("post_max_util", &post)]
        }
        ScenarioKind::Overhead => {
            let total = |f: fn(&OverheadCounters) -> usize| records.iter().filter_map(|r| r.overhead.as_ref()).map(f).sum::<usize>() as f64;
            let fractions: Vec<f64> = records.iter().filter_map(|r| r.overhead.map(|o| o.rerouted_sr_fraction)).collect();
            let mut line = distribution("rerouted_sr_fraction", &fractions);
            line.values.push(("changed_weights".to_string(), total(|o| o.changed_weights)));
            line.values.push(("rerouted_sr_demands".to_string(), total(|o| o.rerouted_sr_demands)));
            line.values.push(("modified_explicit_paths".to_string(), total(|o| o.modified_explicit_paths)));
            vec![line]
        }
        ScenarioKind::Robustness => {
            let failures: Vec<&FailureRecord> = records.iter().filter_map(|r| r.failures.as_ref()).flatten().collect();
            let count = |f: &dyn Fn(&FailureRecord) -> bool| failures.iter().filter(|r| f(r)).count() as f64;
            vec![SummaryLine {
                metric: "failures".to_string(),
                values: vec![
                    ("evaluated".to_string(), failures.len() as f64),
                    ("congested".to_string(), count(&|r| r.congested)),
                    ("bound_congested".to_string(), count(&|r| r.post_failure_bound > CONGESTION_THRESHOLD)),
                ],
            }]
        }
    }
}

/// Runs the scenario over `settings`, streaming every record to `out` as
/// soon as it and all earlier ones are done, then the summaries.
pub fn run_scenario<W: io::Write>(
    spec: &ScenarioSpec,
    solver: &dyn Solver,
    settings: &[Setting],
    out: &mut ReportWriter<W>,
) -> io::Result<ScenarioReport> {
    let mut report = ScenarioReport::default();
    for chunk in settings.chunks(spec.jobs.max(1)) {
        let records: Vec<ScenarioRecord> = if chunk.len() == 1 {
            vec![record_for(spec, solver, &chunk[0])]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> =
                    chunk.iter().map(|s| scope.spawn(move || record_for(spec, solver, s))).collect();
                handles.into_iter().map(|h| h.join().expect("scenario worker panicked")).collect()
            })
        };
        for r in records {
            out.write_record(&r)?;
            report.records.push(r);
        }
    }
    report.summaries = summaries(spec.kind, &report.records);
    for s in &report.summaries {
        out.write_summary(s)?;
    }
    Ok(report)
}

fn collect(spec: &ScenarioSpec, solver: &dyn Solver, settings: &[Setting]) -> ScenarioReport {
    let mut sink = ReportWriter::new(io::sink());
    run_scenario(spec, solver, settings, &mut sink).expect("writing to a sink cannot fail")
}

fn with_kind(spec: &ScenarioSpec, kind: ScenarioKind) -> ScenarioSpec {
    ScenarioSpec { kind, ..spec.clone() }
}

pub fn run_single_solver(spec: &ScenarioSpec, solver: &dyn Solver, setting: &Setting) -> ScenarioReport {
    collect(&with_kind(spec, ScenarioKind::SingleSolverRun), solver, std::slice::from_ref(setting))
}

pub fn run_max_congestion(spec: &ScenarioSpec, solver: &dyn Solver, settings: &[Setting]) -> ScenarioReport {
    collect(&with_kind(spec, ScenarioKind::MaxCongestion), solver, settings)
}

pub fn run_overhead(spec: &ScenarioSpec, solver: &dyn Solver, setting: &Setting) -> ScenarioReport {
    collect(&with_kind(spec, ScenarioKind::Overhead), solver, std::slice::from_ref(setting))
}

pub fn run_robustness(spec: &ScenarioSpec, solver: &dyn Solver, setting: &Setting) -> ScenarioReport {
    collect(&with_kind(spec, ScenarioKind::Robustness), solver, std::slice::from_ref(setting))
}
