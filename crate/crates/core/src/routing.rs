//! IGP shortest paths with ECMP splitting, and the link loads induced by a
//! routing configuration.
//!
//! ECMP splits per node: at each node on a shortest path toward a
//! destination, incoming traffic is divided equally among every outgoing edge
//! that lies on a shortest path to that destination.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::{explicit_path_problem, Forwarding, RoutingConfiguration, Setting, Topology, TrafficMatrix};

pub const UNREACHABLE: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RoutingError {
    #[error("{weights} weights given for {edges} edges")]
    WeightCount { weights: usize, edges: usize },
    #[error("node {dst} is unreachable from node {src}")]
    Unreachable { src: usize, dst: usize },
    #[error("demand {demand}: consecutive segments coincide")]
    SegmentsCoincide { demand: String },
    #[error("demand {demand}: segment node {node} out of range")]
    SegmentOutOfRange { demand: String, node: usize },
    #[error("demand {demand}: {reason}")]
    InvalidExplicitPath { demand: String, reason: &'static str },
}

/// Shortest-path distances toward `dst` from every node, following edges
/// forward. Unreachable nodes hold [`UNREACHABLE`].
pub fn distances_to(topology: &Topology, in_edges: &[Vec<usize>], weights: &[u32], dst: usize) -> Vec<u64> {
    let mut dist = vec![UNREACHABLE; topology.node_count()];
    let mut heap = BinaryHeap::new();
    dist[dst] = 0;
    heap.push(Reverse((0u64, dst)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &e in &in_edges[v] {
            let u = topology.edges[e].src;
            let nd = d + weights[e] as u64;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    dist
}

/// Outgoing edges of each node that lie on a shortest path toward the
/// destination whose distances are `dist`.
fn next_hops(topology: &Topology, out_edges: &[Vec<usize>], weights: &[u32], dist: &[u64]) -> Vec<Vec<usize>> {
    out_edges
        .iter()
        .enumerate()
        .map(|(u, edges)| {
            if dist[u] == UNREACHABLE || dist[u] == 0 {
                return Vec::new();
            }
            edges
                .iter()
                .copied()
                .filter(|&e| {
                    let v = topology.edges[e].dst;
                    dist[v] != UNREACHABLE && dist[v] + weights[e] as u64 == dist[u]
                })
                .collect()
        })
        .collect()
}

/// Pushes per-node injected traffic down the shortest-path DAG of one
/// destination, accumulating into `edge_load`.
fn propagate(
    topology: &Topology,
    hops: &[Vec<usize>],
    order: &[usize],
    node_flow: &mut [f64],
    edge_load: &mut [f64],
) {
    for &u in order {
        let flow = node_flow[u];
        if flow == 0.0 || hops[u].is_empty() {
            continue;
        }
        let share = flow / hops[u].len() as f64;
        for &e in &hops[u] {
            edge_load[e] += share;
            node_flow[topology.edges[e].dst] += share;
        }
        node_flow[u] = 0.0;
    }
}

/// Reachable nodes sorted by decreasing distance, so that every node is
/// processed after all of its DAG predecessors.
fn topological_order(dist: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist.len()).filter(|&u| dist[u] != UNREACHABLE).collect();
    order.sort_by_key(|&u| Reverse(dist[u]));
    order
}

/// Distances and per-pair ECMP edge fractions for one weight assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardingState {
    nodes: usize,
    edges: usize,
    distance: Vec<u64>,
    fractions: Vec<Vec<(usize, f64)>>,
}

impl ForwardingState {
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Shortest-path distance from `src` to `dst`.
    pub fn distance(&self, src: usize, dst: usize) -> u64 {
        self.distance[src * self.nodes + dst]
    }

    /// Sparse `edge -> fraction` map of one unit routed `src -> dst`, sorted
    /// by edge index. Empty when `src == dst`.
    pub fn fractions(&self, src: usize, dst: usize) -> Result<&[(usize, f64)], RoutingError> {
        if src != dst && self.distance(src, dst) == UNREACHABLE {
            return Err(RoutingError::Unreachable { src, dst });
        }
        Ok(&self.fractions[src * self.nodes + dst])
    }

    /// Fraction of one unit `src -> dst` placed on `edge`.
    pub fn fraction(&self, src: usize, dst: usize, edge: usize) -> f64 {
        let list = &self.fractions[src * self.nodes + dst];
        list.binary_search_by_key(&edge, |&(e, _)| e).map_or(0.0, |i| list[i].1)
    }

    /// Edge fractions of one unit following a segment list: the sum of the
    /// ECMP fractions of each consecutive pair of segments.
    pub fn segment_fractions(&self, segments: &[usize]) -> Result<Vec<(usize, f64)>, RoutingError> {
        let mut dense = vec![0.0; self.edges];
        let mut touched = Vec::new();
        for pair in segments.windows(2) {
            for &(e, f) in self.fractions(pair[0], pair[1])? {
                if dense[e] == 0.0 {
                    touched.push(e);
                }
                dense[e] += f;
            }
        }
        touched.sort_unstable();
        Ok(touched.into_iter().map(|e| (e, dense[e])).collect())
    }
}

pub fn compute_forwarding_state(topology: &Topology, weights: &[u32]) -> Result<ForwardingState, RoutingError> {
    let n = topology.node_count();
    let m = topology.edge_count();
    if weights.len() != m {
        return Err(RoutingError::WeightCount { weights: weights.len(), edges: m });
    }
    let out_edges = topology.out_edges();
    let in_edges = topology.in_edges();
    let mut distance = vec![UNREACHABLE; n * n];
    let mut fractions = vec![Vec::new(); n * n];
    let mut node_flow = vec![0.0; n];
    let mut edge_load = vec![0.0; m];

    for dst in 0..n {
        let dist = distances_to(topology, &in_edges, weights, dst);
        let hops = next_hops(topology, &out_edges, weights, &dist);
        let order = topological_order(&dist);
        for src in 0..n {
            distance[src * n + dst] = dist[src];
            if src == dst || dist[src] == UNREACHABLE {
                continue;
            }
            node_flow[src] = 1.0;
            propagate(topology, &hops, &order, &mut node_flow, &mut edge_load);
            node_flow[dst] = 0.0;
            let list = &mut fractions[src * n + dst];
            for (e, load) in edge_load.iter_mut().enumerate() {
                if *load > 0.0 {
                    list.push((e, *load));
                    *load = 0.0;
                }
            }
        }
    }
    Ok(ForwardingState { nodes: n, edges: m, distance, fractions })
}

/// Per-edge loads and the utilizations they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub load: Vec<f64>,
    pub utilization: Vec<f64>,
    pub max_utilization: f64,
}

impl LoadVector {
    pub fn new(load: Vec<f64>, capacities: &[f64]) -> Self {
        let utilization: Vec<f64> = load.iter().zip(capacities).map(|(l, c)| l / c).collect();
        let max_utilization = utilization.iter().copied().fold(0.0, f64::max);
        LoadVector { load, utilization, max_utilization }
    }

    /// Most utilized edge, lowest index on ties.
    pub fn most_utilized_edge(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (e, &u) in self.utilization.iter().enumerate() {
            if best.is_none_or(|b| u > self.utilization[b]) {
                best = Some(e);
            }
        }
        best
    }

    /// Edge-wise sum of two load vectors over the same capacities.
    pub fn plus(&self, other: &LoadVector, capacities: &[f64]) -> LoadVector {
        LoadVector::new(self.load.iter().zip(&other.load).map(|(a, b)| a + b).collect(), capacities)
    }
}

/// Loads when every demand follows plain IGP shortest paths.
pub fn igp_load(topology: &Topology, state: &ForwardingState, traffic: &TrafficMatrix) -> Result<LoadVector, RoutingError> {
    let mut load = vec![0.0; state.edge_count()];
    for d in &traffic.demands {
        for &(e, f) in state.fractions(d.src, d.dst)? {
            load[e] += d.volume * f;
        }
    }
    Ok(LoadVector::new(load, &topology.capacities()))
}

/// Plain-IGP loads computed per destination in a single DAG pass, without
/// materializing per-pair fractions. Equivalent to [`igp_load`] on the state
/// built from `weights`.
pub fn igp_load_by_destination(
    topology: &Topology,
    weights: &[u32],
    traffic: &TrafficMatrix,
) -> Result<LoadVector, RoutingError> {
    let n = topology.node_count();
    let m = topology.edge_count();
    if weights.len() != m {
        return Err(RoutingError::WeightCount { weights: weights.len(), edges: m });
    }
    let mut by_dst: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for d in &traffic.demands {
        if d.src != d.dst {
            by_dst[d.dst].push((d.src, d.volume));
        }
    }
    let out_edges = topology.out_edges();
    let in_edges = topology.in_edges();
    let mut load = vec![0.0; m];
    let mut node_flow = vec![0.0; n];
    for (dst, sources) in by_dst.iter().enumerate() {
        if sources.is_empty() {
            continue;
        }
        let dist = distances_to(topology, &in_edges, weights, dst);
        for &(src, volume) in sources {
            if dist[src] == UNREACHABLE {
                return Err(RoutingError::Unreachable { src, dst });
            }
            node_flow[src] += volume;
        }
        let hops = next_hops(topology, &out_edges, weights, &dist);
        propagate(topology, &hops, &topological_order(&dist), &mut node_flow, &mut load);
        node_flow[dst] = 0.0;
    }
    Ok(LoadVector::new(load, &topology.capacities()))
}

fn check_segments(topology: &Topology, name: &str, segments: &[usize]) -> Result<(), RoutingError> {
    if let Some(&node) = segments.iter().find(|&&s| s >= topology.node_count()) {
        return Err(RoutingError::SegmentOutOfRange { demand: name.to_string(), node });
    }
    if segments.windows(2).any(|w| w[0] == w[1]) {
        return Err(RoutingError::SegmentsCoincide { demand: name.to_string() });
    }
    Ok(())
}

/// Loads of every demand not pinned to explicit paths: demands with a
/// segment list follow the stitched shortest paths between consecutive
/// segments, the others follow plain IGP.
pub fn sr_load(
    topology: &Topology,
    state: &ForwardingState,
    traffic: &TrafficMatrix,
    routing: &RoutingConfiguration,
) -> Result<LoadVector, RoutingError> {
    let mut load = vec![0.0; state.edge_count()];
    for (id, d) in traffic.demands.iter().enumerate() {
        let direct = [d.src, d.dst];
        let segments: &[usize] = match routing.forwarding(id) {
            Forwarding::Explicit(_) => continue,
            Forwarding::Segments(s) => s,
            Forwarding::Igp => &direct,
        };
        check_segments(topology, &d.label, segments)?;
        for pair in segments.windows(2) {
            for &(e, f) in state.fractions(pair[0], pair[1])? {
                load[e] += d.volume * f;
            }
        }
    }
    Ok(LoadVector::new(load, &topology.capacities()))
}

/// Loads of demands pinned to explicit paths, split evenly among the paths.
pub fn explicit_load(
    topology: &Topology,
    traffic: &TrafficMatrix,
    routing: &RoutingConfiguration,
) -> Result<LoadVector, RoutingError> {
    let mut load = vec![0.0; topology.edge_count()];
    for (id, d) in traffic.demands.iter().enumerate() {
        let Forwarding::Explicit(paths) = routing.forwarding(id) else {
            continue;
        };
        let share = d.volume / paths.len() as f64;
        for path in paths {
            if let Some(reason) = explicit_path_problem(topology, d.src, d.dst, path) {
                return Err(RoutingError::InvalidExplicitPath { demand: d.label.clone(), reason });
            }
            for &e in path {
                load[e] += share;
            }
        }
    }
    Ok(LoadVector::new(load, &topology.capacities()))
}

/// Loads of a whole setting: segment/IGP demands plus explicit-path demands.
pub fn total_load(setting: &Setting) -> Result<LoadVector, RoutingError> {
    let state = compute_forwarding_state(&setting.topology, &setting.routing.weights)?;
    total_load_with(setting, &state)
}

/// [`total_load`] over a forwarding state already computed for the
/// setting's weights.
pub fn total_load_with(setting: &Setting, state: &ForwardingState) -> Result<LoadVector, RoutingError> {
    let sr = sr_load(&setting.topology, state, &setting.traffic, &setting.routing)?;
    let explicit = explicit_load(&setting.topology, &setting.traffic, &setting.routing)?;
    Ok(sr.plus(&explicit, &setting.topology.capacities()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn triangle_unique_shortest_path() {
        let t = fixtures::triangle(10_000.0);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        let ac = t.edge_between(0, 2).unwrap();
        assert_eq!(st.fractions(0, 2).unwrap(), &[(ac, 1.0)]);
        assert_eq!(st.fraction(0, 2, t.edge_between(0, 1).unwrap()), 0.0);
        assert_eq!(st.distance(0, 2), 1);
    }

    #[test]
    fn diamond_even_split() {
        let t = fixtures::diamond(10_000.0);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        let f = st.fractions(0, 3).unwrap();
        assert_eq!(f.len(), 4);
        assert!(f.iter().all(|&(_, x)| x == 0.5));
    }

    #[test]
    fn igp_loads_on_fixtures() {
        let t = fixtures::triangle(10_000.0);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        let l = igp_load(&t, &st, &fixtures::demands(&[(0, 2, 9000.0)])).unwrap();
        assert_eq!(l.max_utilization, 0.9);

        let t = fixtures::diamond(10_000.0);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        let l = igp_load(&t, &st, &fixtures::demands(&[(0, 3, 8000.0)])).unwrap();
        let used: Vec<f64> = l.utilization.iter().copied().filter(|&u| u > 0.0).collect();
        assert_eq!(used, vec![0.4; 4]);
    }

    #[test]
    fn loads_are_linear_in_demands() {
        let t = fixtures::ring(10_000.0, [1, 2, 1, 1]);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        let d1 = fixtures::demands(&[(0, 2, 3000.0)]);
        let d2 = fixtures::demands(&[(1, 3, 1700.0)]);
        let both = fixtures::demands(&[(0, 2, 3000.0), (1, 3, 1700.0)]);
        let sum = igp_load(&t, &st, &d1).unwrap().plus(&igp_load(&t, &st, &d2).unwrap(), &t.capacities());
        let l = igp_load(&t, &st, &both).unwrap();
        for (a, b) in l.load.iter().zip(&sum.load) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn detour_through_b_on_triangle() {
        let mut s = fixtures::triangle_setting(&[(0, 2, 9000.0), (0, 2, 9000.0)]);
        let before = total_load(&s).unwrap();
        assert!((before.max_utilization - 1.8).abs() < 1e-12);
        s.routing.sr_segments.insert(1, vec![0, 1, 2]);
        let after = total_load(&s).unwrap();
        assert_eq!(after.max_utilization, 0.9);
        for (u, v) in [(0, 1), (1, 2), (0, 2)] {
            assert_eq!(after.utilization[s.topology.edge_between(u, v).unwrap()], 0.9);
        }
    }

    #[test]
    fn direct_segment_list_equals_igp() {
        let t = fixtures::ring(10_000.0, [1, 1, 1, 1]);
        let tm = fixtures::demands(&[(0, 2, 5000.0), (3, 1, 700.0)]);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        let mut r = RoutingConfiguration::with_weights(t.weights());
        assert_eq!(sr_load(&t, &st, &tm, &r).unwrap(), igp_load(&t, &st, &tm).unwrap());
        r.sr_segments.insert(0, vec![0, 2]);
        assert_eq!(sr_load(&t, &st, &tm, &r).unwrap(), igp_load(&t, &st, &tm).unwrap());
    }

    #[test]
    fn coinciding_segments_rejected() {
        let t = fixtures::triangle(10_000.0);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        let mut r = RoutingConfiguration::with_weights(t.weights());
        r.sr_segments.insert(0, vec![0, 0, 2]);
        let tm = fixtures::demands(&[(0, 2, 1.0)]);
        assert!(matches!(sr_load(&t, &st, &tm, &r), Err(RoutingError::SegmentsCoincide { .. })));
    }

    #[test]
    fn explicit_paths_split_evenly() {
        let t = fixtures::diamond(10_000.0);
        let tm = fixtures::demands(&[(0, 3, 8000.0)]);
        let e = |u, v| t.edge_between(u, v).unwrap();
        let mut r = RoutingConfiguration::with_weights(t.weights());
        r.explicit_paths.insert(0, vec![vec![e(0, 1), e(1, 3)]]);
        let l = explicit_load(&t, &tm, &r).unwrap();
        assert_eq!((l.load[e(0, 1)], l.load[e(1, 3)]), (8000.0, 8000.0));

        r.explicit_paths.insert(0, vec![vec![e(0, 1), e(1, 3)], vec![e(0, 2), e(2, 3)]]);
        let l = explicit_load(&t, &tm, &r).unwrap();
        assert_eq!(l.load[e(0, 1)], 4000.0);
        assert_eq!(l.load[e(2, 3)], 4000.0);

        r.explicit_paths.insert(0, vec![vec![e(0, 1), e(2, 3)]]);
        assert!(matches!(explicit_load(&t, &tm, &r), Err(RoutingError::InvalidExplicitPath { .. })));
    }

    #[test]
    fn total_is_sum_of_classes() {
        let t = fixtures::diamond(10_000.0);
        let tm = fixtures::demands(&[(0, 3, 8000.0), (1, 3, 1000.0)]);
        let mut s = Setting::new("d", t.clone(), tm.clone());
        let plain = total_load(&s).unwrap();
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        assert_eq!(plain, igp_load(&t, &st, &tm).unwrap());

        let e = |u, v| t.edge_between(u, v).unwrap();
        s.routing.explicit_paths.insert(0, vec![vec![e(0, 2), e(2, 3)]]);
        let mixed = total_load(&s).unwrap();
        assert_eq!(mixed.load[e(0, 2)], 8000.0);
        assert_eq!(mixed.load[e(0, 1)], 0.0);
    }

    #[test]
    fn unreachable_pair_is_an_error() {
        let mut t = fixtures::triangle(1.0);
        t.edges.retain(|e| e.dst != 2);
        let st = compute_forwarding_state(&t, &t.weights()).unwrap();
        assert_eq!(st.fractions(0, 2), Err(RoutingError::Unreachable { src: 0, dst: 2 }));
    }
}
