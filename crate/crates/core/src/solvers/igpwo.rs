//! IGP weight optimization: tabu local search over single-edge weight
//! changes, minimizing the maximum link utilization under plain IGP routing.
//!
//! Demands with segment lists keep them; each segment pair is routed on the
//! current shortest paths. Explicit-path demands contribute a fixed load.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::Objective;
use super::{Budget, Deadline, SolverError};
use crate::model::{Demand, Forwarding, RoutingConfiguration, Setting, Topology, TrafficMatrix, DEFAULT_MAX_WEIGHT};
use crate::routing::{distances_to, explicit_load, igp_load_by_destination, RoutingError, UNREACHABLE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgpWoParams {
    pub max_weight: u32,
    /// Number of steps a changed edge stays frozen.
    pub tabu_tenure: u64,
    /// Steps without a new best before restarting from a perturbed best.
    pub stagnation: u64,
    /// Random candidates evaluated per step on top of the targeted ones.
    pub random_moves: usize,
}

impl Default for IgpWoParams {
    fn default() -> Self {
        IgpWoParams { max_weight: DEFAULT_MAX_WEIGHT, tabu_tenure: 10, stagnation: 60, random_moves: 4 }
    }
}

struct Problem<'a> {
    topology: &'a Topology,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    /// Segment pairs of every non-explicit demand.
    pairs: TrafficMatrix,
    fixed: Vec<f64>,
    capacity: Vec<f64>,
    destinations: Vec<usize>,
}

impl Problem<'_> {
    fn objective(&self, weights: &[u32]) -> Result<(Objective, Vec<f64>), RoutingError> {
        let lv = igp_load_by_destination(self.topology, weights, &self.pairs)?;
        let mut max = 0.0f64;
        let mut sum_sq = 0.0;
        let mut util = Vec::with_capacity(lv.load.len());
        for ((l, f), c) in lv.load.iter().zip(&self.fixed).zip(&self.capacity) {
            let u = (l + f) / c;
            max = max.max(u);
            sum_sq += u * u;
            util.push(u);
        }
        Ok((Objective { max, sum_sq }, util))
    }

    /// Weights for `edge` that make it tie with, or just lose to, the best
    /// alternative out of its tail toward some destination.
    fn targeted_values(&self, weights: &[u32], edge: usize, max_weight: u32, out: &mut Vec<u32>) {
        let e = &self.topology.edges[edge];
        for &t in &self.destinations {
            let dist = distances_to(self.topology, &self.in_edges, weights, t);
            if dist[e.dst] == UNREACHABLE || e.src == t {
                continue;
            }
            let alternative = self.out_edges[e.src]
                .iter()
                .filter(|&&f| f != edge && dist[self.topology.edges[f].dst] != UNREACHABLE)
                .map(|&f| weights[f] as u64 + dist[self.topology.edges[f].dst])
                .min();
            let Some(alt) = alternative else { continue };
            if alt > dist[e.dst] {
                let tie = alt - dist[e.dst];
                for v in [tie, tie + 1] {
                    if v >= 1 && v <= max_weight as u64 {
                        out.push(v as u32);
                    }
                }
            }
        }
    }
}

fn expand(setting: &Setting) -> Result<(TrafficMatrix, Vec<f64>), RoutingError> {
    let mut pairs = Vec::new();
    for (id, d) in setting.traffic.demands.iter().enumerate() {
        let segments: Vec<usize> = match setting.routing.forwarding(id) {
            Forwarding::Explicit(_) => continue,
            Forwarding::Segments(s) => s.to_vec(),
            Forwarding::Igp => vec![d.src, d.dst],
        };
        for w in segments.windows(2) {
            if w[0] == w[1] {
                return Err(RoutingError::SegmentsCoincide { demand: d.label.clone() });
            }
            if w[0] >= setting.topology.node_count() || w[1] >= setting.topology.node_count() {
                return Err(RoutingError::SegmentOutOfRange { demand: d.label.clone(), node: w[0].max(w[1]) });
            }
            pairs.push(Demand { label: d.label.clone(), src: w[0], dst: w[1], volume: d.volume });
        }
    }
    let fixed = explicit_load(&setting.topology, &setting.traffic, &setting.routing)?.load;
    Ok((TrafficMatrix::new(pairs), fixed))
}

/// Optimized weights; on any error the input configuration is returned.
pub fn solve_igp_wo(setting: &Setting, budget: &Budget, params: &IgpWoParams) -> RoutingConfiguration {
    try_solve_igp_wo(setting, budget, params).unwrap_or_else(|_| setting.routing.clone())
}

pub fn try_solve_igp_wo(
    setting: &Setting,
    budget: &Budget,
    params: &IgpWoParams,
) -> Result<RoutingConfiguration, SolverError> {
    let topology = &setting.topology;
    let m = topology.edge_count();
    if setting.routing.weights.len() != m {
        return Err(RoutingError::WeightCount { weights: setting.routing.weights.len(), edges: m }.into());
    }
    let (pairs, fixed) = expand(setting)?;
    let mut destinations: Vec<usize> = pairs.demands.iter().filter(|d| d.volume > 0.0).map(|d| d.dst).collect();
    destinations.sort_unstable();
    destinations.dedup();
    let problem = Problem {
        topology,
        in_edges: topology.in_edges(),
        out_edges: topology.out_edges(),
        pairs,
        fixed,
        capacity: topology.capacities(),
        destinations,
    };
    let initial = setting.routing.weights.clone();
    let (initial_obj, initial_util) = problem.objective(&initial)?;
    let mut deadline = budget.start();
    if deadline.expired() || m == 0 {
        return Ok(setting.routing.clone());
    }
    let best = search(&problem, &mut deadline, budget.seed, params, initial.clone(), initial_obj, initial_util)?;
    let mut routing = setting.routing.clone();
    if best != initial {
        routing.weights = best;
    }
    Ok(routing)
}

fn search(
    problem: &Problem,
    deadline: &mut Deadline,
    seed: u64,
    params: &IgpWoParams,
    start: Vec<u32>,
    start_obj: Objective,
    start_util: Vec<f64>,
) -> Result<Vec<u32>, SolverError> {
    let m = start.len();
    let max_weight = params.max_weight.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = start.clone();
    let mut current_util = start_util;
    let mut best = start;
    let mut best_obj = start_obj;
    let mut tabu_until = vec![0u64; m];
    let mut since_best = 0u64;
    let mut step = 0u64;
    let mut values = Vec::new();
    let wall_clock = deadline.wall_clock().is_some();
    'outer: while !deadline.expired() {
        deadline.tick();
        step += 1;
        // Candidate moves: targeted values on the most utilized edges, then
        // random edges with random or targeted values.
        let mut ranked: Vec<usize> = (0..m).collect();
        ranked.sort_by(|&a, &b| current_util[b].total_cmp(&current_util[a]).then(a.cmp(&b)));
        let mut moves: Vec<(usize, u32)> = Vec::new();
        for &e in ranked.iter().take(2) {
            values.clear();
            problem.targeted_values(&current, e, max_weight, &mut values);
            values.push((current[e].saturating_add(1)).min(max_weight));
            moves.extend(values.iter().map(|&v| (e, v)));
        }
        for _ in 0..params.random_moves {
            let e = rng.random_range(0..m);
            if rng.random_bool(0.5) {
                moves.push((e, rng.random_range(1..=max_weight)));
            } else {
                values.clear();
                problem.targeted_values(&current, e, max_weight, &mut values);
                if !values.is_empty() {
                    moves.push((e, values[rng.random_range(0..values.len())]));
                }
            }
        }
        moves.sort_unstable();
        moves.dedup();
        let mut chosen: Option<(Objective, Vec<f64>, usize, u32)> = None;
        for (e, v) in moves {
            if v == current[e] {
                continue;
            }
            if wall_clock && deadline.expired() {
                break 'outer;
            }
            let old = current[e];
            current[e] = v;
            let (obj, util) = problem.objective(&current)?;
            current[e] = old;
            let allowed = tabu_until[e] <= step || obj.better_than(&best_obj);
            if allowed && chosen.as_ref().is_none_or(|c| obj.better_than(&c.0)) {
                chosen = Some((obj, util, e, v));
            }
        }
        match chosen {
            Some((obj, util, e, v)) => {
                current[e] = v;
                current_util = util;
                tabu_until[e] = step + params.tabu_tenure;
                if obj.better_than(&best_obj) {
                    best_obj = obj;
                    best.clone_from(&current);
                    since_best = 0;
                } else {
                    since_best += 1;
                }
            }
            None => since_best += 1,
        }
        if since_best >= params.stagnation {
            // Restart from the best weights with a few random changes.
            current.clone_from(&best);
            for _ in 0..(m / 10).max(1) {
                let e = rng.random_range(0..m);
                current[e] = rng.random_range(1..=max_weight);
            }
            current_util = problem.objective(&current)?.1;
            tabu_until.iter_mut().for_each(|t| *t = 0);
            since_best = 0;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::routing::total_load;

    fn ring_setting(weights: [u32; 4]) -> Setting {
        Setting::new("ring", fixtures::ring(10_000.0, weights), fixtures::demands(&[(0, 2, 10_000.0)]))
    }

    fn max_util(setting: &Setting, routing: RoutingConfiguration) -> f64 {
        total_load(&setting.with_routing(routing)).unwrap().max_utilization
    }

    // Ring A-B-C-D-A with AB=1, BC=1, DC=2, AD=1.
    const RING: [u32; 4] = [1, 1, 2, 1];

    #[test]
    fn ring_reaches_even_split() {
        let s = ring_setting(RING);
        assert_eq!(max_util(&s, s.routing.clone()), 1.0);
        let r = solve_igp_wo(&s, &Budget::iterations(200, 3), &IgpWoParams::default());
        assert!((max_util(&s, r) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ring_optimum_matches_exhaustive_symmetric_weights() {
        let mut best = f64::INFINITY;
        for mask in 0..16u32 {
            let w: [u32; 4] = std::array::from_fn(|i| 1 + (mask >> i & 1));
            best = best.min(max_util(&ring_setting(w), ring_setting(w).routing));
        }
        assert_eq!(best, 0.5);
    }

    #[test]
    fn already_optimal_is_kept() {
        let s = ring_setting([1, 1, 1, 1]);
        let r = solve_igp_wo(&s, &Budget::iterations(50, 0), &IgpWoParams::default());
        assert_eq!(max_util(&s, r), 0.5);
    }

    #[test]
    fn zero_budget_returns_input() {
        let s = ring_setting(RING);
        assert_eq!(solve_igp_wo(&s, &Budget::wall_clock_ms(0, 0), &IgpWoParams::default()), s.routing);
    }

    #[test]
    fn deterministic_in_iteration_mode() {
        let t = fixtures::diamond(1000.0);
        let tm = fixtures::demands(&[(0, 3, 900.0), (1, 2, 300.0), (3, 0, 50.0)]);
        let s = Setting::new("diamond", t, tm);
        let a = solve_igp_wo(&s, &Budget::iterations(100, 9), &IgpWoParams::default());
        let b = solve_igp_wo(&s, &Budget::iterations(100, 9), &IgpWoParams::default());
        assert_eq!(a, b);
        assert!(max_util(&s, a) <= max_util(&s, s.routing.clone()));
    }

    #[test]
    fn segments_are_kept_and_followed() {
        let mut s = ring_setting(RING);
        s.routing.sr_segments.insert(0, vec![0, 1, 2]);
        let r = solve_igp_wo(&s, &Budget::iterations(100, 1), &IgpWoParams::default());
        assert_eq!(r.sr_segments, s.routing.sr_segments);
        assert!(max_util(&s, r) <= 1.0);
    }
}
