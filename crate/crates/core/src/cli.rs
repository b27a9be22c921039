//! Command-line front end of the `repetita` binary.
//!
//! ```text
//! repetita -graph Abilene.graph -demands Abilene.demands -solver defoCP -t 1 -scenario SingleSolverRun
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::external::{self, ExternalSolver};
use crate::io::{assign_weights, parse_demands, parse_raw_topology, preprocess_topology, ReportWriter, WeightHeuristic};
use crate::mcf::McfParams;
use crate::model::{RoutingConfiguration, Setting};
use crate::scenarios::{run_scenario, ScenarioKind, ScenarioSpec};
use crate::solvers::{builtin, Budget, MilpExport, Solver, BUILTIN_NAMES};

pub const DEFAULT_TIME_LIMIT_S: f64 = 30.0;

pub const USAGE: &str = "usage: repetita -graph <file> -demands <file|dir> -solver <name> -scenario <name> [options]

  -graph <file>       topology file
  -demands <path>     demand file, or a directory of demand files (batch mode)
  -solver <name>      igpwo, sr2seg-exact, sr2seg-heur, srlns (defoCP), milp-export,
                      lpbound, noop, or an external solver from the specs file
  -scenario <name>    SingleSolverRun, MaxCongestion, Overhead, Robustness
  -t <seconds>        time limit per solver run (default 30)
  -iterations <n>     iteration budget instead of a time limit (reproducible runs)
  -out <file>         report file (default: standard output)
  -seed <n>           random seed (default 0)
  -weights <name>     reassign IGP weights: unit, invcap, optimized
  -epsilon <x>        accuracy of the flow lower bound (default 0.01)
  -jobs <n>           settings evaluated concurrently (default 1)

External solvers are read from $REPETITA_SOLVERS_SPECS, or
external_solvers/solvers-specs.txt when it is unset.";

#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub graph: PathBuf,
    pub demands: PathBuf,
    pub solver: String,
    pub time_limit_s: f64,
    pub iterations: Option<u64>,
    pub scenario: ScenarioKind,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub weights: Option<WeightHeuristic>,
    pub epsilon: Option<f64>,
    pub jobs: usize,
}

impl CliInvocation {
    pub fn budget(&self) -> Budget {
        match self.iterations {
            Some(n) => Budget::iterations(n, self.seed),
            None => Budget::wall_clock_ms((self.time_limit_s * 1000.0).round() as u64, self.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}\n\n{USAGE}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn value<T: std::str::FromStr>(flag: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Usage(format!("invalid value for -{flag}: {v:?}")))
}

/// Parses the arguments after the program name. `Ok(None)` means help was
/// requested.
pub fn parse_args<S: AsRef<str>>(args: &[S]) -> Result<Option<CliInvocation>, CliError> {
    let mut graph = None;
    let mut demands = None;
    let mut solver = None;
    let mut scenario = None;
    let mut time_limit_s = DEFAULT_TIME_LIMIT_S;
    let mut iterations = None;
    let mut out = None;
    let mut seed = 0;
    let mut weights = None;
    let mut epsilon = None;
    let mut jobs = 1;
    let mut it = args.iter().map(AsRef::as_ref);
    while let Some(arg) = it.next() {
        let flag = arg.strip_prefix("--").or_else(|| arg.strip_prefix('-'));
        let Some(flag) = flag.filter(|f| !f.is_empty()) else {
            return Err(CliError::Usage(format!("unexpected argument {arg:?}")));
        };
        if matches!(flag, "h" | "help") {
            return Ok(None);
        }
        let known = ["graph", "demands", "solver", "t", "iterations", "scenario", "out", "seed", "weights", "epsilon", "jobs"];
        if !known.contains(&flag) {
            return Err(CliError::Usage(format!("unknown flag {arg}")));
        }
        let v = it.next().ok_or_else(|| CliError::Usage(format!("missing value for {arg}")))?;
        match flag {
            "graph" => graph = Some(PathBuf::from(v)),
            "demands" => demands = Some(PathBuf::from(v)),
            "solver" => solver = Some(v.to_string()),
            "scenario" => {
                scenario = Some(v.parse::<ScenarioKind>().map_err(|e| CliError::Usage(e.to_string()))?)
            }
            "t" => {
                time_limit_s = value(flag, v)?;
                if !(time_limit_s > 0.0 && time_limit_s.is_finite()) {
                    return Err(CliError::Usage(format!("-t must be a positive number of seconds, got {v}")));
                }
            }
            "iterations" => iterations = Some(value(flag, v)?),
            "out" => out = Some(PathBuf::from(v)),
            "seed" => seed = value(flag, v)?,
            "weights" => weights = Some(v.parse::<WeightHeuristic>().map_err(CliError::Usage)?),
            "epsilon" => {
                let e: f64 = value(flag, v)?;
                if !(e > 0.0 && e <= 0.1) {
                    return Err(CliError::Usage(format!("-epsilon must be in (0, 0.1], got {v}")));
                }
                epsilon = Some(e);
            }
            "jobs" => {
                jobs = value(flag, v)?;
                if jobs == 0 {
                    return Err(CliError::Usage("-jobs must be at least 1".to_string()));
                }
            }
            _ => unreachable!(),
        }
    }
    let missing: Vec<&str> = [
        ("-graph", graph.is_none()),
        ("-demands", demands.is_none()),
        ("-solver", solver.is_none()),
        ("-scenario", scenario.is_none()),
    ]
    .into_iter()
    .filter_map(|(f, m)| m.then_some(f))
    .collect();
    if !missing.is_empty() {
        return Err(CliError::Usage(format!("missing mandatory flags: {}", missing.join(", "))));
    }
    Ok(Some(CliInvocation {
        graph: graph.unwrap(),
        demands: demands.unwrap(),
        solver: solver.unwrap(),
        time_limit_s,
        iterations,
        scenario: scenario.unwrap(),
        out,
        seed,
        weights,
        epsilon,
        jobs,
    }))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn demand_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("{}: no demand files", path.display())));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Reads, preprocesses and weights every setting of an invocation.
pub fn load_settings(inv: &CliInvocation) -> Result<Vec<Setting>, CliError> {
    let graph_text = read(&inv.graph)?;
    let raw = parse_raw_topology(&graph_text).map_err(|e| CliError::Config(format!("{}: {e}", inv.graph.display())))?;
    let pre = preprocess_topology(&raw).map_err(|e| CliError::Config(format!("{}: {e}", inv.graph.display())))?;
    let mut settings = Vec::new();
    for file in demand_files(&inv.demands)? {
        let text = read(&file)?;
        let traffic = parse_demands(&text).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
        if let Some(bad) = traffic.demands.iter().find(|d| d.src >= raw.nodes.len() || d.dst >= raw.nodes.len()) {
            return Err(CliError::Config(format!("{}: demand {} references an unknown node", file.display(), bad.label)));
        }
        let traffic = pre.remap_demands(&traffic);
        let mut setting = Setting::new(stem(&file), pre.topology.clone(), traffic);
        if let Some(h) = inv.weights {
            setting.routing = RoutingConfiguration::with_weights(assign_weights(&setting.topology, h, &setting.traffic));
        }
        settings.push(setting);
    }
    Ok(settings)
}

/// Built-in solver by name, else the external solver of that name.
pub fn resolve_solver(name: &str) -> Result<Box<dyn Solver>, CliError> {
    if name == "milp-export" {
        return Ok(Box::new(MilpExport { path: None }));
    }
    if let Some(s) = builtin(name) {
        return Ok(s);
    }
    let specs = external::load_solver_specs().map_err(|e| CliError::Config(e.to_string()))?;
    match specs.into_iter().find(|s| s.name == name) {
        Some(spec) => Ok(Box::new(ExternalSolver { spec })),
        None => Err(CliError::Config(format!(
            "unknown solver {name:?}; built-in solvers: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

/// Runs a parsed invocation, writing the report to `-out` or `stdout`.
pub fn execute(inv: &CliInvocation, stdout: &mut dyn Write) -> Result<(), CliError> {
    let settings = load_settings(inv)?;
    let solver = resolve_solver(&inv.solver)?;
    let mut spec = ScenarioSpec::new(inv.scenario, inv.solver.clone(), inv.budget());
    spec.output_path = inv.out.clone();
    spec.jobs = inv.jobs;
    if let Some(e) = inv.epsilon {
        spec.mcf = McfParams::with_epsilon(e);
    }
    let runtime = |e: io::Error| CliError::Runtime(e.to_string());
    match &inv.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            let mut writer = ReportWriter::new(io::BufWriter::new(file));
            run_scenario(&spec, solver.as_ref(), &settings, &mut writer).map_err(runtime)?;
        }
        None => {
            let mut writer = ReportWriter::new(stdout);
            run_scenario(&spec, solver.as_ref(), &settings, &mut writer).map_err(runtime)?;
        }
    }
    Ok(())
}

/// Entry point: returns the process exit code.
pub fn run<S: AsRef<str>>(args: &[S], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = parse_args(args).and_then(|inv| match inv {
        Some(inv) => execute(&inv, stdout),
        None => {
            let _ = writeln!(stdout, "{USAGE}");
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "repetita: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn reference_command_line() {
        let inv = parse_args(&args(
            "-graph Abilene.graph -demands Abilene.demands -solver defoCP -t 1 -scenario SingleSolverRun",
        ))
        .unwrap()
        .unwrap();
        assert_eq!(inv.solver, "defoCP");
        assert_eq!(inv.time_limit_s, 1.0);
        assert_eq!(inv.scenario, ScenarioKind::SingleSolverRun);
        assert_eq!(inv.budget(), Budget::wall_clock_ms(1000, 0));
        assert_eq!(resolve_solver(&inv.solver).unwrap().name(), "srlns");
    }

    #[test]
    fn missing_graph_lists_mandatory_flags() {
        let e = parse_args(&args("-demands d -solver noop -scenario SingleSolverRun")).unwrap_err();
        assert!(matches!(&e, CliError::Usage(m) if m.contains("-graph")));
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn rejects_bad_values() {
        let base = "-graph g -demands d -solver noop -scenario SingleSolverRun";
        for extra in ["-t 0", "-t -1", "-epsilon 0", "-jobs 0", "-seed x", "-weights heavy", "-frobnicate 1"] {
            assert!(parse_args(&args(&format!("{base} {extra}"))).is_err(), "{extra}");
        }
        assert!(parse_args(&args("-graph g -demands d -solver noop -scenario Sideways")).is_err());
        assert!(parse_args(&args(base)).unwrap().is_some());
        assert!(parse_args(&args("-h")).unwrap().is_none());
    }

    #[test]
    fn unknown_solver_is_a_configuration_error() {
        let e = resolve_solver("no-such-solver").err().unwrap();
        assert_eq!(e.exit_code(), 1);
    }
}
