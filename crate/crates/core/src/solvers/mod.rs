//! Built-in traffic-engineering solvers and the budget they run under.
//!
//! Every solver returns the best configuration it found, never one with a
//! higher maximum utilization than its input, and stops cooperatively when
//! its [`Budget`] runs out.

pub mod eval;
pub mod igpwo;
pub mod lns;
pub mod milp;
pub mod sr2seg;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::mcf::McfError;
use crate::model::{RoutingConfiguration, RunStatus, Setting};
use crate::routing::RoutingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    WallClock(Duration),
    /// A solver-specific count of search iterations, for reproducible runs.
    Iterations(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub limit: Limit,
    pub seed: u64,
}

impl Budget {
    pub fn wall_clock_ms(ms: u64, seed: u64) -> Self {
        Budget { limit: Limit::WallClock(Duration::from_millis(ms)), seed }
    }

    pub fn iterations(count: u64, seed: u64) -> Self {
        Budget { limit: Limit::Iterations(count), seed }
    }

    pub fn start(&self) -> Deadline {
        Deadline { started: Instant::now(), limit: self.limit, iterations: 0 }
    }
}

/// Running budget of one solver invocation.
#[derive(Debug, Clone)]
pub struct Deadline {
    started: Instant,
    limit: Limit,
    iterations: u64,
}

impl Deadline {
    /// True once the wall-clock limit has passed or the iteration budget is
    /// spent.
    pub fn expired(&self) -> bool {
        match self.limit {
            Limit::WallClock(d) => self.started.elapsed() >= d,
            Limit::Iterations(n) => self.iterations >= n,
        }
    }

    /// Counts one search iteration.
    pub fn tick(&mut self) {
        self.iterations += 1;
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn wall_clock(&self) -> Option<Duration> {
        match self.limit {
            Limit::WallClock(d) => Some(d),
            Limit::Iterations(_) => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Mcf(#[from] McfError),
    #[error("instance too large for exhaustive search: {nodes} nodes, {demands} demands (max {max_nodes}, {max_demands})")]
    TooLarge { nodes: usize, demands: usize, max_nodes: usize, max_demands: usize },
    #[error("external solver failed: {0}")]
    External(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    pub routing: RoutingConfiguration,
    pub status: RunStatus,
    /// Solve time reported by the solver itself, when it has its own clock.
    pub reported_time_ms: Option<u64>,
}

impl SolverOutput {
    pub fn ok(routing: RoutingConfiguration) -> Self {
        SolverOutput { routing, status: RunStatus::Ok, reported_time_ms: None }
    }
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, setting: &Setting, budget: &Budget) -> Result<SolverOutput, SolverError>;

    /// Whether the solver's result is the fractional flow bound itself rather
    /// than an implementable configuration.
    fn is_fractional_bound(&self) -> bool {
        false
    }
}

/// Returns the input configuration unchanged.
pub struct Identity;

impl Solver for Identity {
    fn name(&self) -> &str {
        "noop"
    }

    fn solve(&self, setting: &Setting, _: &Budget) -> Result<SolverOutput, SolverError> {
        Ok(SolverOutput::ok(setting.routing.clone()))
    }
}

/// The multi-commodity flow bound used as a pseudo-solver: routing is left
/// untouched and scenarios report the bound as its utilization.
pub struct LpBound;

impl Solver for LpBound {
    fn name(&self) -> &str {
        "lpbound"
    }

    fn solve(&self, setting: &Setting, _: &Budget) -> Result<SolverOutput, SolverError> {
        Ok(SolverOutput::ok(setting.routing.clone()))
    }

    fn is_fractional_bound(&self) -> bool {
        true
    }
}

/// Writes the two-segment MILP model of the setting and leaves routing as is.
pub struct MilpExport {
    pub path: Option<PathBuf>,
}

impl Solver for MilpExport {
    fn name(&self) -> &str {
        "milp-export"
    }

    fn solve(&self, setting: &Setting, _: &Budget) -> Result<SolverOutput, SolverError> {
        let text = milp::export_milp(setting)?;
        let path = self.path.clone().unwrap_or_else(|| PathBuf::from(format!("{}.lp", setting.name)));
        std::fs::write(&path, text)?;
        Ok(SolverOutput::ok(setting.routing.clone()))
    }
}

pub struct IgpWo(pub igpwo::IgpWoParams);

impl Solver for IgpWo {
    fn name(&self) -> &str {
        "igpwo"
    }

    fn solve(&self, setting: &Setting, budget: &Budget) -> Result<SolverOutput, SolverError> {
        let routing = igpwo::try_solve_igp_wo(setting, budget, &self.0)?;
        Ok(SolverOutput::ok(routing))
    }
}

pub struct SrTwoSegment(pub sr2seg::Mode);

impl Solver for SrTwoSegment {
    fn name(&self) -> &str {
        match self.0 {
            sr2seg::Mode::ExactTiny => "sr2seg-exact",
            sr2seg::Mode::Heuristic => "sr2seg-heur",
        }
    }

    fn solve(&self, setting: &Setting, budget: &Budget) -> Result<SolverOutput, SolverError> {
        Ok(SolverOutput::ok(sr2seg::solve_sr_two_segment(setting, budget, self.0)?))
    }
}

pub struct SrLns(pub lns::LnsParams);

impl Solver for SrLns {
    fn name(&self) -> &str {
        "srlns"
    }

    fn solve(&self, setting: &Setting, budget: &Budget) -> Result<SolverOutput, SolverError> {
        Ok(SolverOutput::ok(lns::solve_sr_lns(setting, budget, &self.0)?))
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 8] =
    ["igpwo", "sr2seg-exact", "sr2seg-heur", "srlns", "defoCP", "milp-export", "lpbound", "noop"];

/// Built-in solver by registry name. `defoCP` is an alias of `srlns`.
pub fn builtin(name: &str) -> Option<Box<dyn Solver>> {
    Some(match name {
        "igpwo" => Box::new(IgpWo(igpwo::IgpWoParams::default())),
        "sr2seg-exact" => Box::new(SrTwoSegment(sr2seg::Mode::ExactTiny)),
        "sr2seg-heur" => Box::new(SrTwoSegment(sr2seg::Mode::Heuristic)),
        "srlns" | "defoCP" => Box::new(SrLns(lns::LnsParams::default())),
        "milp-export" => Box::new(MilpExport { path: None }),
        "lpbound" => Box::new(LpBound),
        "noop" => Box::new(Identity),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_name_resolves() {
        for name in BUILTIN_NAMES {
            assert!(builtin(name).is_some(), "{name}");
        }
        assert_eq!(builtin("defoCP").unwrap().name(), "srlns");
        assert!(builtin("gurobi").is_none());
    }

    #[test]
    fn iteration_deadline() {
        let mut d = Budget::iterations(2, 0).start();
        assert!(!d.expired());
        d.tick();
        d.tick();
        assert!(d.expired());
        assert!(Budget::wall_clock_ms(0, 0).start().expired());
    }
}
