//! Domain types shared by every other module: topologies, traffic matrices,
//! routing configurations, settings and scenario result records.
//!
//! All types are plain data. They are never mutated in place by the library;
//! solvers and scenarios build modified copies.

use std::collections::{BTreeMap, BTreeSet};

/// Default upper bound for IGP link weights.
pub const DEFAULT_MAX_WEIGHT: u32 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// A directed edge. Capacities and demand volumes share the same unit (kbps),
/// delays are in microseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub label: String,
    pub src: usize,
    pub dst: usize,
    pub weight: u32,
    pub capacity: f64,
    pub delay: f64,
}

/// Directed network graph. Undirected physical links are stored as two
/// directed edges, one per direction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// A physical link: one or two directed edges between the same pair of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhysicalLink {
    pub forward: usize,
    pub reverse: Option<usize>,
}

impl PhysicalLink {
    pub fn edges(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.forward).chain(self.reverse)
    }
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> Vec<u32> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    /// Outgoing edge indices per node, in edge order.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (id, e) in self.edges.iter().enumerate() {
            out[e.src].push(id);
        }
        out
    }

    /// Incoming edge indices per node, in edge order.
    pub fn in_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (id, e) in self.edges.iter().enumerate() {
            inc[e.dst].push(id);
        }
        inc
    }

    /// Lowest-index edge from `src` to `dst`, if any.
    pub fn edge_between(&self, src: usize, dst: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.src == src && e.dst == dst)
    }

    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    pub fn edge_by_label(&self, label: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.label == label)
    }

    /// Groups directed edges into physical links by pairing every edge with
    /// the first unpaired edge running in the opposite direction.
    pub fn physical_links(&self) -> Vec<PhysicalLink> {
        let mut paired = vec![false; self.edges.len()];
        let mut links = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            if paired[id] {
                continue;
            }
            paired[id] = true;
            let reverse = (id + 1..self.edges.len())
                .find(|&r| !paired[r] && self.edges[r].src == e.dst && self.edges[r].dst == e.src);
            if let Some(r) = reverse {
                paired[r] = true;
            }
            links.push(PhysicalLink { forward: id, reverse });
        }
        links
    }

    /// Copy of the topology without the given edges. The second element maps
    /// every original edge index to its index in the copy.
    pub fn without_edges(&self, removed: &[usize]) -> (Topology, Vec<Option<usize>>) {
        let removed: BTreeSet<usize> = removed.iter().copied().collect();
        let mut map = vec![None; self.edges.len()];
        let mut edges = Vec::with_capacity(self.edges.len());
        for (id, e) in self.edges.iter().enumerate() {
            if !removed.contains(&id) {
                map[id] = Some(edges.len());
                edges.push(e.clone());
            }
        }
        (Topology { nodes: self.nodes.clone(), edges }, map)
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 {
            return false;
        }
        let reach = |adj: &[Vec<usize>], forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &e in &adj[u] {
                    let v = if forward { self.edges[e].dst } else { self.edges[e].src };
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(&self.out_edges(), true) && reach(&self.in_edges(), false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub label: String,
    pub src: usize,
    pub dst: usize,
    pub volume: f64,
}

/// Point-to-point demands. Demands are identified by their position in
/// `demands`. Parsing from a file sums duplicate (src, dst) rows, but a
/// matrix built in memory may hold several demands for the same pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrafficMatrix {
    pub demands: Vec<Demand>,
}

impl TrafficMatrix {
    pub fn new(demands: Vec<Demand>) -> Self {
        TrafficMatrix { demands }
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.demands.iter().map(|d| d.volume).sum()
    }

    /// Every volume multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> TrafficMatrix {
        TrafficMatrix {
            demands: self
                .demands
                .iter()
                .map(|d| Demand { volume: d.volume * factor, ..d.clone() })
                .collect(),
        }
    }

    /// Demand indices sorted by volume descending, ties by index.
    pub fn by_volume_desc(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.demands.len()).collect();
        order.sort_by(|&a, &b| {
            self.demands[b].volume.total_cmp(&self.demands[a].volume).then(a.cmp(&b))
        });
        order
    }
}

/// IGP weights plus per-demand Segment Routing lists and explicit paths.
///
/// Segment lists are node sequences that start at the demand source and end at
/// its destination. Explicit paths are edge sequences. For a given demand,
/// explicit paths override segments, which override plain IGP routing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoutingConfiguration {
    pub weights: Vec<u32>,
    pub sr_segments: BTreeMap<usize, Vec<usize>>,
    pub explicit_paths: BTreeMap<usize, Vec<Vec<usize>>>,
}

/// How a single demand is forwarded under a routing configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forwarding<'a> {
    Explicit(&'a [Vec<usize>]),
    Segments(&'a [usize]),
    Igp,
}

impl RoutingConfiguration {
    pub fn with_weights(weights: Vec<u32>) -> Self {
        RoutingConfiguration { weights, ..Default::default() }
    }

    pub fn forwarding(&self, demand: usize) -> Forwarding<'_> {
        if let Some(paths) = self.explicit_paths.get(&demand) {
            if !paths.is_empty() {
                return Forwarding::Explicit(paths);
            }
        }
        match self.sr_segments.get(&demand) {
            Some(segments) => Forwarding::Segments(segments),
            None => Forwarding::Igp,
        }
    }

    /// Number of intermediate segment nodes for a demand.
    pub fn detour_count(&self, demand: usize) -> usize {
        self.sr_segments.get(&demand).map_or(0, |s| s.len().saturating_sub(2))
    }
}

/// A problem instance: topology, traffic and the routing that currently
/// applies to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub name: String,
    pub topology: Topology,
    pub traffic: TrafficMatrix,
    pub routing: RoutingConfiguration,
}

impl Setting {
    /// Setting with plain IGP routing over the topology's own weights.
    pub fn new(name: impl Into<String>, topology: Topology, traffic: TrafficMatrix) -> Self {
        let routing = RoutingConfiguration::with_weights(topology.weights());
        Setting { name: name.into(), topology, traffic, routing }
    }

    pub fn with_routing(&self, routing: RoutingConfiguration) -> Setting {
        Setting { routing, ..self.clone() }
    }
}

/// Lists every broken invariant of a setting. An empty list means valid.
pub fn validate_setting(setting: &Setting) -> Vec<String> {
    let mut violations = Vec::new();
    let topo = &setting.topology;
    let n = topo.node_count();
    let m = topo.edge_count();

    for (id, e) in topo.edges.iter().enumerate() {
        let name = if e.label.is_empty() { format!("#{id}") } else { e.label.clone() };
        if e.src >= n || e.dst >= n {
            violations.push(format!("edge {name}: node index out of range"));
        } else if e.src == e.dst {
            violations.push(format!("edge {name}: src equals dst"));
        }
        if e.weight < 1 {
            violations.push(format!("edge {name}: weight below 1"));
        }
        if !(e.capacity > 0.0) {
            violations.push(format!("edge {name}: capacity not positive"));
        }
        if !(e.delay >= 0.0) {
            violations.push(format!("edge {name}: negative delay"));
        }
    }

    let demand_name = |d: usize| {
        setting
            .traffic
            .demands
            .get(d)
            .map(|dm| dm.label.clone())
            .unwrap_or_else(|| format!("#{d}"))
    };
    for d in &setting.traffic.demands {
        if d.src >= n || d.dst >= n {
            violations.push(format!("demand {}: node index out of range", d.label));
        } else if d.src == d.dst {
            violations.push(format!("demand {}: src equals dst", d.label));
        }
        if !(d.volume >= 0.0) || !d.volume.is_finite() {
            violations.push(format!("demand {}: negative volume", d.label));
        }
    }

    let routing = &setting.routing;
    if routing.weights.len() != m {
        violations.push(format!(
            "routing: {} weights for {} edges",
            routing.weights.len(),
            m
        ));
    }
    if routing.weights.iter().any(|&w| w < 1) {
        violations.push("routing: weight below 1".to_string());
    }

    let demand_count = setting.traffic.len();
    for (&d, segments) in &routing.sr_segments {
        let name = demand_name(d);
        if d >= demand_count {
            violations.push(format!("demand {name}: segment list for unknown demand"));
            continue;
        }
        let dm = &setting.traffic.demands[d];
        if routing.explicit_paths.contains_key(&d) {
            violations.push(format!("demand {name}: both segments and explicit paths"));
        }
        if segments.len() < 2 {
            violations.push(format!("demand {name}: segment list shorter than 2"));
            continue;
        }
        if segments[0] != dm.src || segments[segments.len() - 1] != dm.dst {
            violations.push(format!("demand {name}: segment list endpoints differ from demand"));
        }
        if segments.iter().any(|&s| s >= n) {
            violations.push(format!("demand {name}: segment node out of range"));
        }
        if segments.windows(2).any(|w| w[0] == w[1]) {
            violations.push(format!("demand {name}: consecutive segments coincide"));
        }
    }

    for (&d, paths) in &routing.explicit_paths {
        let name = demand_name(d);
        if d >= demand_count {
            violations.push(format!("demand {name}: explicit paths for unknown demand"));
            continue;
        }
        let dm = &setting.traffic.demands[d];
        if paths.is_empty() {
            violations.push(format!("demand {name}: empty explicit path set"));
        }
        for path in paths {
            if let Some(problem) = explicit_path_problem(topo, dm.src, dm.dst, path) {
                violations.push(format!("demand {name}: {problem}"));
            }
        }
    }
    violations
}

/// Checks that `path` is an acyclic edge sequence from `src` to `dst`.
pub(crate) fn explicit_path_problem(
    topo: &Topology,
    src: usize,
    dst: usize,
    path: &[usize],
) -> Option<&'static str> {
    if path.is_empty() {
        return Some("empty explicit path");
    }
    if path.iter().any(|&e| e >= topo.edge_count()) {
        return Some("explicit path edge out of range");
    }
    let mut at = src;
    let mut visited = BTreeSet::from([src]);
    for &e in path {
        let edge = &topo.edges[e];
        if edge.src != at {
            return Some("explicit path is not connected");
        }
        at = edge.dst;
        if !visited.insert(at) {
            return Some("explicit path is not acyclic");
        }
    }
    if at != dst {
        return Some("explicit path does not end at destination");
    }
    None
}

/// Routing changes caused by a solver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OverheadCounters {
    pub changed_weights: usize,
    pub rerouted_sr_demands: usize,
    pub rerouted_sr_fraction: f64,
    pub modified_explicit_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureRecord {
    /// Labels of the failed directed edges joined by `/`.
    pub link: String,
    pub post_failure_utilization: f64,
    pub post_failure_bound: f64,
    pub congested: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunStatus {
    #[default]
    Ok,
    /// The solver was stopped at its deadline; its best configuration was used.
    Truncated,
    /// The solver produced nothing usable; the input configuration was kept.
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Truncated => "truncated",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    pub scenario: String,
    pub solver: String,
    pub setting: String,
    pub pre_max_utilization: f64,
    pub post_max_utilization: f64,
    pub lower_bound: f64,
    pub solve_time_ms: u64,
    pub status: RunStatus,
    pub overhead: Option<OverheadCounters>,
    pub failures: Option<Vec<FailureRecord>>,
}

/// Aggregate statistics over a column of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub metric: String,
    pub values: Vec<(String, f64)>,
}

impl SummaryLine {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioReport {
    pub records: Vec<ScenarioRecord>,
    pub summaries: Vec<SummaryLine>,
}
