//! Two-segment Segment Routing: every demand follows either its IGP path or
//! two IGP shortest paths stitched at one detour node.

use super::eval::{Objective, SrEvaluator};
use super::{Budget, SolverError};
use crate::model::{RoutingConfiguration, Setting};

pub const EXACT_MAX_NODES: usize = 6;
pub const EXACT_MAX_DEMANDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exhaustive branch and bound. Limited to tiny instances.
    ExactTiny,
    /// Best-improvement local search over per-demand detours.
    Heuristic,
}

/// Candidate segment lists of a demand: no detour first, then every detour
/// node in index order.
pub fn detour_choices(node_count: usize, src: usize, dst: usize) -> Vec<Vec<usize>> {
    std::iter::once(vec![src, dst])
        .chain((0..node_count).filter(|&k| k != src && k != dst).map(|k| vec![src, k, dst]))
        .collect()
}

pub fn solve_sr_two_segment(setting: &Setting, budget: &Budget, mode: Mode) -> Result<RoutingConfiguration, SolverError> {
    let n = setting.topology.node_count();
    if mode == Mode::ExactTiny && (n > EXACT_MAX_NODES || setting.traffic.len() > EXACT_MAX_DEMANDS) {
        return Err(SolverError::TooLarge {
            nodes: n,
            demands: setting.traffic.len(),
            max_nodes: EXACT_MAX_NODES,
            max_demands: EXACT_MAX_DEMANDS,
        });
    }
    let mut ev = SrEvaluator::new(setting)?;
    let initial = ev.objective();
    let deadline = budget.start();
    if deadline.expired() {
        return Ok(setting.routing.clone());
    }
    match mode {
        Mode::ExactTiny => exact(&mut ev, budget)?,
        Mode::Heuristic => heuristic(&mut ev, budget)?,
    }
    if ev.objective().max > initial.max {
        return Ok(setting.routing.clone());
    }
    Ok(ev.routing(&setting.routing))
}

struct Search<'a> {
    order: &'a [usize],
    choices: &'a [Vec<Vec<(usize, f64)>>],
    capacity: Vec<f64>,
    load: Vec<f64>,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    nodes: u64,
    deadline: super::Deadline,
    stopped: bool,
}

impl Search<'_> {
    fn incumbent(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    fn descend(&mut self, depth: usize, partial_max: f64) {
        if depth == self.order.len() {
            if partial_max < self.incumbent() {
                self.best = Some((partial_max, self.current.clone()));
            }
            return;
        }
        for c in 0..self.choices[depth].len() {
            self.nodes += 1;
            if self.nodes.is_multiple_of(4096) && self.best.is_some() && self.deadline.expired() {
                self.stopped = true;
            }
            if self.stopped {
                return;
            }
            let mut max = partial_max;
            for &(e, l) in &self.choices[depth][c] {
                self.load[e] += l;
                max = max.max(self.load[e] / self.capacity[e]);
            }
            if max < self.incumbent() {
                self.current[depth] = c;
                self.descend(depth + 1, max);
            }
            for &(e, l) in &self.choices[depth][c] {
                self.load[e] -= l;
            }
        }
    }
}

fn exact(ev: &mut SrEvaluator, budget: &Budget) -> Result<(), SolverError> {
    let n = ev.state.node_count();
    // Demands in volume-descending order, so heavy ones prune early.
    let mut order = ev.movable.clone();
    order.sort_by(|&a, &b| ev.volume(b).total_cmp(&ev.volume(a)).then(a.cmp(&b)));
    let mut lists = Vec::with_capacity(order.len());
    let mut choices = Vec::with_capacity(order.len());
    for &d in &order {
        let (src, dst) = (ev.segments[d][0], *ev.segments[d].last().unwrap());
        let options = detour_choices(n, src, dst);
        choices.push(options.iter().map(|s| ev.contribution_of(d, s)).collect::<Result<Vec<_>, _>>()?);
        lists.push(options);
    }
    // Background load: everything the search does not place.
    let mut load = ev.load().to_vec();
    for &d in &order {
        for &(e, l) in ev.current_contribution(d) {
            load[e] -= l;
        }
    }
    let capacity = ev.capacities().to_vec();
    let background_max = load.iter().zip(&capacity).map(|(l, c)| l / c).fold(0.0, f64::max);
    let mut search = Search {
        order: &order,
        choices: &choices,
        capacity,
        load,
        current: vec![0; order.len()],
        best: None,
        nodes: 0,
        deadline: budget.start(),
        stopped: false,
    };
    search.descend(0, background_max);
    if let Some((_, picks)) = search.best {
        for (i, &d) in order.iter().enumerate() {
            let segments = lists[i][picks[i]].clone();
            let contribution = choices[i][picks[i]].clone();
            ev.assign(d, segments, contribution);
        }
    }
    Ok(())
}

fn heuristic(ev: &mut SrEvaluator, budget: &Budget) -> Result<(), SolverError> {
    let n = ev.state.node_count();
    let mut order = ev.movable.clone();
    order.sort_by(|&a, &b| ev.volume(b).total_cmp(&ev.volume(a)).then(a.cmp(&b)));
    let mut deadline = budget.start();
    let mut current = ev.objective();
    while !deadline.expired() {
        deadline.tick();
        let mut best: Option<(Objective, usize, Vec<usize>, Vec<(usize, f64)>)> = None;
        'demands: for &d in &order {
            if ev.volume(d) == 0.0 {
                continue;
            }
            let (src, dst) = (ev.segments[d][0], *ev.segments[d].last().unwrap());
            for segments in detour_choices(n, src, dst) {
                if segments == ev.segments[d] {
                    continue;
                }
                if deadline.wall_clock().is_some() && deadline.expired() {
                    break 'demands;
                }
                let c = ev.contribution_of(d, &segments)?;
                let obj = ev.objective_with(d, &c);
                let reference = best.as_ref().map_or(current, |b| b.0);
                if obj.better_than(&reference) {
                    best = Some((obj, d, segments, c));
                }
            }
        }
        match best {
            Some((obj, d, segments, c)) => {
                ev.assign(d, segments, c);
                current = obj;
            }
            None => break,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::routing::total_load;

    fn post(setting: &Setting, mode: Mode) -> (RoutingConfiguration, f64) {
        let r = solve_sr_two_segment(setting, &Budget::iterations(1000, 0), mode).unwrap();
        let u = total_load(&setting.with_routing(r.clone())).unwrap().max_utilization;
        (r, u)
    }

    #[test]
    fn triangle_detours_one_demand() {
        let s = fixtures::triangle_setting(&[(0, 2, 9000.0), (0, 2, 9000.0)]);
        for mode in [Mode::ExactTiny, Mode::Heuristic] {
            let (r, u) = post(&s, mode);
            assert_eq!(u, 0.9);
            assert_eq!(r.sr_segments.len(), 1);
            assert_eq!(r.sr_segments.values().next().unwrap(), &vec![0, 1, 2]);
        }
    }

    #[test]
    fn zero_volume_demands_stay_put() {
        let s = fixtures::triangle_setting(&[(0, 2, 0.0), (1, 2, 0.0)]);
        for mode in [Mode::ExactTiny, Mode::Heuristic] {
            let (r, u) = post(&s, mode);
            assert!(r.sr_segments.is_empty());
            assert_eq!(u, 0.0);
        }
    }

    #[test]
    fn exact_rejects_large_instances() {
        let labels = ["n"; 7];
        let links: Vec<_> = (0..7).map(|i| (i, (i + 1) % 7, 1, 1.0)).collect();
        let s = Setting::new("big", fixtures::bidirectional(&labels, &links), fixtures::demands(&[(0, 3, 1.0)]));
        assert!(matches!(
            solve_sr_two_segment(&s, &Budget::iterations(1, 0), Mode::ExactTiny),
            Err(SolverError::TooLarge { .. })
        ));
    }

    #[test]
    fn zero_budget_returns_input() {
        let s = fixtures::triangle_setting(&[(0, 2, 9000.0), (0, 2, 9000.0)]);
        let r = solve_sr_two_segment(&s, &Budget::wall_clock_ms(0, 0), Mode::Heuristic).unwrap();
        assert_eq!(r, s.routing);
    }

    #[test]
    fn choices_cover_every_detour() {
        assert_eq!(detour_choices(4, 0, 2), vec![vec![0, 2], vec![0, 1, 2], vec![0, 3, 2]]);
    }
}
