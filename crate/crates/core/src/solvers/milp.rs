//! Two-segment routing as a mixed-integer program, written in CPLEX LP text
//! format for external MILP solvers.
//!
//! Each commodity `(i, j)` picks one binary `path_i_k_j`: `k = j` is the
//! plain IGP path, any other `k` a detour through `k`. Traffic is aggregated
//! into step variables `s1_i_k` (first leg, or the whole route without
//! detour) and `s2_k_j` (second leg), so capacity rows stay `O(|V|^2)` wide:
//!
//! ```text
//! min U
//!   sum_k path_i_k_j = 1                                  for every (i, j)
//!   s1_i_k - sum_j T_ij path_i_k_j = 0                    for every (i, k)
//!   s2_k_j - sum_{i, k != j} T_ij path_i_k_j = 0          for every (k, j)
//!   sum_ij ecmp_ij(e) (s1_i_j + s2_i_j) - c(e) U <= -f(e) for every edge e
//! ```
//!
//! `f(e)` is the fixed load of explicit-path demands. Several demands with the
//! same endpoints become separate commodities; the second one of a pair is
//! suffixed `_1`, the third `_2`, and so on.

use std::fmt::Write as _;

use super::SolverError;
use crate::model::{Forwarding, Setting};
use crate::routing::{compute_forwarding_state, explicit_load, RoutingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// One routing decision: a demand, or a node pair without demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub src: usize,
    pub dst: usize,
    pub volume: f64,
    pub demand: Option<usize>,
    /// Variable name stem, `i_?_j` plus an optional duplicate suffix.
    suffix: String,
}

impl Commodity {
    pub fn path_var(&self, detour: usize) -> String {
        format!("path_{}_{}_{}{}", self.src, detour, self.dst, self.suffix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub commodities: Vec<Commodity>,
    pub rows: Vec<Row>,
    pub binaries: Vec<String>,
    pub continuous: Vec<String>,
}

pub fn s1_var(i: usize, k: usize) -> String {
    format!("s1_{i}_{k}")
}

pub fn s2_var(k: usize, j: usize) -> String {
    format!("s2_{k}_{j}")
}

impl MilpModel {
    pub fn build(setting: &Setting) -> Result<Self, RoutingError> {
        let topology = &setting.topology;
        let n = topology.node_count();
        let state = compute_forwarding_state(topology, &setting.routing.weights)?;
        let fixed = explicit_load(topology, &setting.traffic, &setting.routing)?.load;

        let mut by_pair: Vec<Vec<usize>> = vec![Vec::new(); n * n];
        for (id, d) in setting.traffic.demands.iter().enumerate() {
            if matches!(setting.routing.forwarding(id), Forwarding::Explicit(_)) || d.src == d.dst {
                continue;
            }
            by_pair[d.src * n + d.dst].push(id);
        }
        let mut commodities = Vec::new();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let ids = &by_pair[i * n + j];
                if ids.is_empty() {
                    commodities.push(Commodity { src: i, dst: j, volume: 0.0, demand: None, suffix: String::new() });
                }
                for (dup, &id) in ids.iter().enumerate() {
                    let suffix = if dup == 0 { String::new() } else { format!("_{dup}") };
                    let volume = setting.traffic.demands[id].volume;
                    commodities.push(Commodity { src: i, dst: j, volume, demand: Some(id), suffix });
                }
            }
        }

        let mut rows = Vec::new();
        let mut binaries = Vec::new();
        for c in &commodities {
            let vars: Vec<String> = (0..n).filter(|&k| k != c.src).map(|k| c.path_var(k)).collect();
            rows.push(Row {
                name: format!("choice_{}", &c.path_var(c.dst)["path_".len()..]),
                terms: vars.iter().map(|v| (1.0, v.clone())).collect(),
                sense: Sense::Eq,
                rhs: 1.0,
            });
            binaries.extend(vars);
        }
        for i in 0..n {
            for k in (0..n).filter(|&k| k != i) {
                let mut terms = vec![(1.0, s1_var(i, k))];
                for c in commodities.iter().filter(|c| c.src == i && c.volume != 0.0) {
                    terms.push((-c.volume, c.path_var(k)));
                }
                rows.push(Row { name: format!("step1_{i}_{k}"), terms, sense: Sense::Eq, rhs: 0.0 });
            }
        }
        for k in 0..n {
            for j in (0..n).filter(|&j| j != k) {
                let mut terms = vec![(1.0, s2_var(k, j))];
                for c in commodities.iter().filter(|c| c.dst == j && c.src != k && c.volume != 0.0) {
                    terms.push((-c.volume, c.path_var(k)));
                }
                rows.push(Row { name: format!("step2_{k}_{j}"), terms, sense: Sense::Eq, rhs: 0.0 });
            }
        }
        for (e, edge) in topology.edges.iter().enumerate() {
            let mut terms = Vec::new();
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    let f = state.fraction(i, j, e);
                    if f > 0.0 {
                        terms.push((f, s1_var(i, j)));
                        terms.push((f, s2_var(i, j)));
                    }
                }
            }
            terms.push((-edge.capacity, "U".to_string()));
            rows.push(Row { name: format!("cap_{e}"), terms, sense: Sense::Le, rhs: -fixed[e] });
        }
        let mut continuous = vec!["U".to_string()];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                continuous.push(s1_var(i, j));
                continuous.push(s2_var(i, j));
            }
        }
        Ok(MilpModel { commodities, rows, binaries, continuous })
    }

    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ two-segment routing, minimize maximum utilization\n");
        out.push_str("Minimize\n obj: U\nSubject To\n");
        for row in &self.rows {
            let mut line = format!(" {}:", row.name);
            for (coef, var) in &row.terms {
                let term = if *coef == 1.0 {
                    format!(" + {var}")
                } else if *coef == -1.0 {
                    format!(" - {var}")
                } else if *coef < 0.0 {
                    format!(" - {} {var}", -coef)
                } else {
                    format!(" + {coef} {var}")
                };
                if line.len() + term.len() > 250 {
                    out.push_str(&line);
                    out.push('\n');
                    line = String::from(" ");
                }
                line.push_str(&term);
            }
            let op = match row.sense {
                Sense::Eq => "=",
                Sense::Le => "<=",
            };
            let rhs = if row.rhs == 0.0 { 0.0 } else { row.rhs };
            let _ = writeln!(out, "{line} {op} {rhs}");
        }
        out.push_str("Bounds\n");
        for v in &self.continuous {
            let _ = writeln!(out, " {v} >= 0");
        }
        out.push_str("Binaries\n");
        for chunk in self.binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

pub fn export_milp(setting: &Setting) -> Result<String, SolverError> {
    Ok(MilpModel::build(setting)?.to_lp())
}
