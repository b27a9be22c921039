//! Multi-commodity flow lower bound on the maximum link utilization, and
//! traffic-matrix scaling against it.
//!
//! The bound solves the destination-aggregated flow LP
//!
//! ```text
//! minimize U
//!   sum_{e out of i} load_t(e) - sum_{e into i} load_t(e) = T(i, t)   for all t, i != t
//!   sum_t load_t(e) <= c(e) * U                                       for all e
//! ```
//!
//! approximately, with a multiplicative-weights scheme for maximum concurrent
//! flow: every phase routes the full demand of each destination along
//! shortest-path trees under exponential edge lengths, the time-averaged flow
//! is a feasible primal solution and every length function yields a dual
//! bound. The scheme stops once the primal value is within `1 + epsilon` of
//! the best dual bound, so `lower_bound` is a certified lower bound.

mod exact;

pub use exact::{exact_lower_bound, EXACT_MAX_NODES};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{Topology, TrafficMatrix};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_TARGET_UTILIZATION: f64 = 0.9;
const DEFAULT_MAX_PHASES: usize = 500_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McfError {
    #[error("epsilon {0} outside ]0, 0.1]")]
    Epsilon(f64),
    #[error("node {dst} is unreachable from node {src}")]
    Unreachable { src: usize, dst: usize },
    #[error("demand references node {0} outside the topology")]
    NodeOutOfRange(usize),
    #[error("traffic matrix has no volume to scale")]
    ZeroVolume,
    #[error("target utilization {0} outside ]0, 1]")]
    Target(f64),
    #[error("exact solver limited to {max} nodes, got {nodes}")]
    TooLarge { nodes: usize, max: usize },
    #[error("exact solver did not reach an optimum")]
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McfParams {
    /// Requested relative accuracy.
    pub epsilon: f64,
    /// Phase cap. Reaching it reports the achieved gap instead of failing.
    pub max_phases: usize,
}

impl Default for McfParams {
    fn default() -> Self {
        McfParams { epsilon: DEFAULT_EPSILON, max_phases: DEFAULT_MAX_PHASES }
    }
}

impl McfParams {
    pub fn with_epsilon(epsilon: f64) -> Self {
        McfParams { epsilon, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McfSolution {
    /// Certified lower bound on the optimal maximum utilization.
    pub lower_bound: f64,
    /// Maximum utilization of `flow`.
    pub upper_bound: f64,
    /// Requested relative accuracy.
    pub epsilon: f64,
    /// `upper_bound / lower_bound - 1`; at most `epsilon` unless the phase
    /// cap was hit.
    pub achieved_gap: f64,
    pub phases: usize,
    /// `flow[t][e]`: traffic destined to node `t` carried by edge `e`.
    pub flow: Vec<Vec<f64>>,
}

impl McfSolution {
    pub fn converged(&self) -> bool {
        self.achieved_gap <= self.epsilon
    }
}

/// `demand[t][i]`: total volume from `i` to `t`, with the row list of
/// destinations that have any demand.
pub(crate) fn demands_by_destination(
    n: usize,
    traffic: &TrafficMatrix,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), McfError> {
    let mut demand = vec![vec![0.0; n]; n];
    for d in &traffic.demands {
        for node in [d.src, d.dst] {
            if node >= n {
                return Err(McfError::NodeOutOfRange(node));
            }
        }
        if d.src != d.dst {
            demand[d.dst][d.src] += d.volume;
        }
    }
    let active = (0..n).filter(|&t| demand[t].iter().any(|&v| v > 0.0)).collect();
    Ok((demand, active))
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Shortest-path tree toward `t` under real-valued lengths: distance and the
/// tree edge leaving each node (`usize::MAX` at `t` and unreachable nodes).
fn tree_to(topology: &Topology, in_edges: &[Vec<usize>], length: &[f64], t: usize, dist: &mut [f64], next: &mut [usize]) {
    dist.fill(f64::INFINITY);
    next.fill(usize::MAX);
    dist[t] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Candidate(0.0, t));
    while let Some(Candidate(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &e in &in_edges[v] {
            let u = topology.edges[e].src;
            let nd = d + length[e];
            if nd < dist[u] {
                dist[u] = nd;
                next[u] = e;
                heap.push(Candidate(nd, u));
            }
        }
    }
}

/// Approximates the minimum maximum utilization of the fractional
/// multi-commodity flow within a relative factor `1 + epsilon`.
pub fn lp_lower_bound(topology: &Topology, traffic: &TrafficMatrix, params: &McfParams) -> Result<McfSolution, McfError> {
    let eps = params.epsilon;
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(McfError::Epsilon(eps));
    }
    let n = topology.node_count();
    let m = topology.edge_count();
    let (demand, active) = demands_by_destination(n, traffic)?;
    let capacity = topology.capacities();
    let in_edges = topology.in_edges();

    let mut dist = vec![0.0; n];
    let mut next = vec![usize::MAX; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    if active.is_empty() {
        return Ok(McfSolution {
            lower_bound: 0.0,
            upper_bound: 0.0,
            epsilon: eps,
            achieved_gap: 0.0,
            phases: 0,
            flow: vec![vec![0.0; m]; n],
        });
    }

    // Lengths start at 1/c, which also gives the first dual bound.
    let mut length: Vec<f64> = capacity.iter().map(|c| 1.0 / c).collect();
    let dual_bound = |length: &[f64], dist: &mut [f64], next: &mut [usize]| -> Result<f64, McfError> {
        let mut alpha = 0.0;
        for &t in &active {
            tree_to(topology, &in_edges, length, t, dist, next);
            for (i, &v) in demand[t].iter().enumerate() {
                if v > 0.0 {
                    if dist[i].is_infinite() {
                        return Err(McfError::Unreachable { src: i, dst: t });
                    }
                    alpha += v * dist[i];
                }
            }
        }
        let volume: f64 = length.iter().zip(&capacity).map(|(l, c)| l * c).sum();
        Ok(alpha / volume)
    };
    let mut best_dual = dual_bound(&length, &mut dist, &mut next)?;

    let step = eps / 2.0;
    let mut cumulative = vec![vec![0.0; m]; n];
    let mut phase_flow = vec![vec![0.0; m]; n];
    let mut best_flow: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut edge_total = vec![0.0; m];
    let mut remaining = vec![0.0; n];
    let mut node_flow = vec![0.0; n];
    let mut step_flow = vec![0.0; m];
    let mut phases = 0;

    while phases < params.max_phases {
        phases += 1;
        let scale = best_dual;
        for row in phase_flow.iter_mut() {
            row.fill(0.0);
        }
        for &t in &active {
            remaining.copy_from_slice(&demand[t]);
            let mut left: f64 = remaining.iter().sum();
            let total = left;
            while left > total * 1e-12 {
                tree_to(topology, &in_edges, &length, t, &mut dist, &mut next);
                order.clear();
                order.extend((0..n).filter(|&u| dist[u].is_finite()));
                order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]));
                node_flow.copy_from_slice(&remaining);
                step_flow.fill(0.0);
                for &u in &order {
                    if u == t || node_flow[u] == 0.0 {
                        continue;
                    }
                    let e = next[u];
                    step_flow[e] += node_flow[u];
                    node_flow[topology.edges[e].dst] += node_flow[u];
                }
                let congestion = step_flow
                    .iter()
                    .zip(&capacity)
                    .map(|(f, c)| f / (c * scale))
                    .fold(0.0, f64::max);
                let fraction = if congestion > 1.0 { 1.0 / congestion } else { 1.0 };
                for e in 0..m {
                    if step_flow[e] > 0.0 {
                        let f = step_flow[e] * fraction;
                        phase_flow[t][e] += f;
                        length[e] *= (step * f / (capacity[e] * scale)).exp();
                    }
                }
                if fraction >= 1.0 {
                    break;
                }
                for r in remaining.iter_mut() {
                    *r *= 1.0 - fraction;
                }
                left *= 1.0 - fraction;
            }
        }

        // Keep lengths in a safe floating range; ratios are all that matter.
        let max_len = length.iter().copied().fold(0.0, f64::max);
        for l in length.iter_mut() {
            *l /= max_len;
        }

        edge_total.fill(0.0);
        for t in &active {
            for e in 0..m {
                cumulative[*t][e] += phase_flow[*t][e];
                edge_total[e] += cumulative[*t][e];
            }
        }
        let averaged = utilization_of(&edge_total, &capacity) / phases as f64;
        if best_flow.as_ref().is_none_or(|(u, _)| averaged < *u) {
            let flow = cumulative.iter().map(|row| row.iter().map(|f| f / phases as f64).collect()).collect();
            best_flow = Some((averaged, flow));
        }
        edge_total.fill(0.0);
        for t in &active {
            for e in 0..m {
                edge_total[e] += phase_flow[*t][e];
            }
        }
        let single = utilization_of(&edge_total, &capacity);
        if single < best_flow.as_ref().unwrap().0 {
            best_flow = Some((single, phase_flow.clone()));
        }

        best_dual = best_dual.max(dual_bound(&length, &mut dist, &mut next)?);
        if best_flow.as_ref().unwrap().0 <= best_dual * (1.0 + eps) {
            break;
        }
    }

    let (upper_bound, flow) = best_flow.expect("at least one phase");
    Ok(McfSolution {
        lower_bound: best_dual,
        upper_bound,
        epsilon: eps,
        achieved_gap: upper_bound / best_dual - 1.0,
        phases,
        flow,
    })
}

fn utilization_of(load: &[f64], capacity: &[f64]) -> f64 {
    load.iter().zip(capacity).map(|(l, c)| l / c).fold(0.0, f64::max)
}

/// Scales all volumes so that the certified lower bound of the result equals
/// `target`. The true optimum of the scaled matrix is therefore at least
/// `target` and at most `target * (1 + epsilon)`.
pub fn scale_traffic_matrix(
    topology: &Topology,
    traffic: &TrafficMatrix,
    target: f64,
    params: &McfParams,
) -> Result<TrafficMatrix, McfError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(McfError::Target(target));
    }
    let bound = lp_lower_bound(topology, traffic, params)?.lower_bound;
    if !(bound > 0.0) {
        return Err(McfError::ZeroVolume);
    }
    Ok(traffic.scaled(target / bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn bound(t: &Topology, tm: &TrafficMatrix) -> McfSolution {
        lp_lower_bound(t, tm, &McfParams::default()).unwrap()
    }

    #[test]
    fn single_edge() {
        let t = fixtures::bidirectional(&["a", "b"], &[(0, 1, 1, 10_000.0)]);
        let s = bound(&t, &fixtures::demands(&[(0, 1, 9000.0)]));
        assert!((s.lower_bound - 0.9).abs() <= 0.9 * 0.01 + 1e-12, "{s:?}");
        assert!(s.lower_bound <= 0.9 + 1e-12);
    }

    #[test]
    fn triangle_splits_half_and_half() {
        let s = bound(&fixtures::triangle(10_000.0), &fixtures::demands(&[(0, 2, 9000.0)]));
        assert!(s.lower_bound <= 0.45 + 1e-12 && s.lower_bound >= 0.45 / 1.01, "{s:?}");
        assert!(s.converged());
    }

    #[test]
    fn diamond_symmetric() {
        let s = bound(&fixtures::diamond(10_000.0), &fixtures::demands(&[(0, 3, 8000.0)]));
        assert!(s.lower_bound <= 0.4 + 1e-12 && s.lower_bound >= 0.4 / 1.01, "{s:?}");
    }

    #[test]
    fn flows_satisfy_both_constraint_families() {
        let t = fixtures::ring(7000.0, [1, 1, 1, 1]);
        let tm = fixtures::demands(&[(0, 2, 9000.0), (1, 3, 4000.0), (3, 0, 2500.0)]);
        let s = bound(&t, &tm);
        let (demand, _) = demands_by_destination(4, &tm).unwrap();
        for target in 0..4 {
            for i in 0..4 {
                if i == target {
                    continue;
                }
                let out: f64 = t.edges.iter().enumerate().filter(|(_, e)| e.src == i).map(|(e, _)| s.flow[target][e]).sum();
                let inc: f64 = t.edges.iter().enumerate().filter(|(_, e)| e.dst == i).map(|(e, _)| s.flow[target][e]).sum();
                assert!((out - inc - demand[target][i]).abs() < 1e-6);
            }
        }
        for (e, edge) in t.edges.iter().enumerate() {
            let total: f64 = s.flow.iter().map(|row| row[e]).sum();
            assert!(total <= edge.capacity * s.lower_bound * (1.0 + s.epsilon) + 1e-6);
        }
    }

    #[test]
    fn scaling_hits_target() {
        let t = fixtures::triangle(10_000.0);
        let tm = fixtures::demands(&[(0, 2, 9000.0)]);
        let scaled = scale_traffic_matrix(&t, &tm, 0.9, &McfParams::default()).unwrap();
        let factor = scaled.demands[0].volume / 9000.0;
        assert!((factor - 2.0).abs() <= 2.0 * 0.02, "{factor}");
        let again = bound(&t, &scaled).lower_bound;
        assert!((again - 0.9).abs() <= 0.9 * 0.02);
        let fixpoint = scale_traffic_matrix(&t, &scaled, 0.9, &McfParams::default()).unwrap();
        assert!((fixpoint.demands[0].volume / scaled.demands[0].volume - 1.0).abs() <= 0.02);
    }

    #[test]
    fn errors() {
        let t = fixtures::triangle(1.0);
        assert_eq!(lp_lower_bound(&t, &TrafficMatrix::default(), &McfParams::with_epsilon(0.5)), Err(McfError::Epsilon(0.5)));
        assert_eq!(
            scale_traffic_matrix(&t, &fixtures::demands(&[(0, 1, 0.0)]), 0.9, &McfParams::default()),
            Err(McfError::ZeroVolume)
        );
        let mut cut = t.clone();
        cut.edges.retain(|e| e.dst != 2);
        assert!(matches!(
            lp_lower_bound(&cut, &fixtures::demands(&[(0, 2, 1.0)]), &McfParams::default()),
            Err(McfError::Unreachable { .. })
        ));
    }
}
