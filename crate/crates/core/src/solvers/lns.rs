//! Large neighborhood search over unconstrained segment lists.
//!
//! Each iteration relaxes a random subset of demands, biased toward those
//! crossing the most utilized edge, resets them to plain IGP and rebuilds
//! them from the biggest to the smallest: a demand's list grows one detour
//! at a time (inserted before the destination) while some detour improves
//! the objective, up to `|V|` segments. The rebuilt state is kept if its
//! maximum utilization is no worse.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{Objective, SrEvaluator};
use super::{Budget, Deadline, SolverError};
use crate::model::{RoutingConfiguration, Setting};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnsParams {
    /// Largest number of demands relaxed in one iteration.
    pub max_relaxed: usize,
    /// Probability of drawing each relaxed demand among those crossing the
    /// most utilized edge.
    pub bias: f64,
    /// Stop after this many consecutive iterations without a new best.
    /// `None` runs until the budget is spent.
    pub stall_iterations: Option<u64>,
}

impl Default for LnsParams {
    fn default() -> Self {
        LnsParams { max_relaxed: 8, bias: 0.75, stall_iterations: None }
    }
}

const MAX_TOL: f64 = 1e-12;

pub fn solve_sr_lns(setting: &Setting, budget: &Budget, params: &LnsParams) -> Result<RoutingConfiguration, SolverError> {
    let mut ev = SrEvaluator::new(setting)?;
    let mut deadline = budget.start();
    if deadline.expired() || ev.movable.is_empty() {
        return Ok(setting.routing.clone());
    }
    let initial = ev.objective();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut best_obj = initial;
    let mut best_segments = ev.segments.clone();
    let mut current = initial;
    let mut stalled = 0u64;
    let mut first = true;
    while !deadline.expired() {
        deadline.tick();
        let relaxed = if first { ev.movable.clone() } else { pick_relaxed(&ev, &mut rng, params) };
        first = false;
        let saved: Vec<(usize, Vec<usize>, Vec<(usize, f64)>)> = relaxed
            .iter()
            .map(|&d| (d, ev.segments[d].clone(), ev.current_contribution(d).to_vec()))
            .collect();
        for &d in &relaxed {
            let direct = vec![ev.segments[d][0], *ev.segments[d].last().unwrap()];
            let c = ev.contribution_of(d, &direct)?;
            ev.assign(d, direct, c);
        }
        let mut order = relaxed;
        order.sort_by(|&a, &b| ev.volume(b).total_cmp(&ev.volume(a)).then(a.cmp(&b)));
        let complete = rebuild(&mut ev, &order, &deadline)?;
        let obj = ev.objective();
        if complete && obj.max <= current.max + MAX_TOL * current.max.max(1e-300) {
            current = obj;
        } else {
            for (d, segments, contribution) in saved {
                ev.assign(d, segments, contribution);
            }
        }
        if current.better_than(&best_obj) {
            best_obj = current;
            best_segments.clone_from(&ev.segments);
            stalled = 0;
        } else {
            stalled += 1;
            if params.stall_iterations.is_some_and(|s| stalled >= s) {
                break;
            }
        }
    }
    if best_obj.max > initial.max {
        return Ok(setting.routing.clone());
    }
    for d in ev.movable.clone() {
        let c = ev.contribution_of(d, &best_segments[d])?;
        ev.assign(d, best_segments[d].clone(), c);
    }
    Ok(ev.routing(&setting.routing))
}

fn pick_relaxed(ev: &SrEvaluator, rng: &mut ChaCha8Rng, params: &LnsParams) -> Vec<usize> {
    let hot = (0..ev.load().len())
        .max_by(|&a, &b| ev.utilization(a).total_cmp(&ev.utilization(b)).then(b.cmp(&a)))
        .unwrap_or(0);
    let (mut crossing, mut others): (Vec<usize>, Vec<usize>) =
        ev.movable.iter().partition(|&&d| ev.current_contribution(d).iter().any(|&(e, l)| e == hot && l > 0.0));
    crossing.shuffle(rng);
    others.shuffle(rng);
    let limit = params.max_relaxed.max(1).min(ev.movable.len());
    let count = rng.random_range(1..=limit);
    let mut relaxed = Vec::with_capacity(count);
    while relaxed.len() < count {
        let from_hot = !crossing.is_empty() && (others.is_empty() || rng.random_bool(params.bias));
        let pool = if from_hot { &mut crossing } else { &mut others };
        match pool.pop() {
            Some(d) => relaxed.push(d),
            None => break,
        }
    }
    relaxed
}

/// Greedy extension of every demand in `order`. Returns false if the
/// deadline cut the rebuild short.
fn rebuild(ev: &mut SrEvaluator, order: &[usize], deadline: &Deadline) -> Result<bool, SolverError> {
    let n = ev.state.node_count();
    let wall_clock = deadline.wall_clock().is_some();
    for &d in order {
        if ev.volume(d) == 0.0 {
            continue;
        }
        let mut current = ev.objective();
        while ev.segments[d].len() < n {
            if wall_clock && deadline.expired() {
                return Ok(false);
            }
            let segments = ev.segments[d].clone();
            let (last, dst) = (segments[segments.len() - 2], segments[segments.len() - 1]);
            let mut best: Option<(Objective, Vec<usize>, Vec<(usize, f64)>)> = None;
            for k in (0..n).filter(|&k| k != last && k != dst) {
                let mut candidate = segments.clone();
                candidate.insert(candidate.len() - 1, k);
                let c = ev.contribution_of(d, &candidate)?;
                let obj = ev.objective_with(d, &c);
                if obj.better_than(best.as_ref().map_or(&current, |b| &b.0)) {
                    best = Some((obj, candidate, c));
                }
            }
            match best {
                Some((obj, candidate, c)) => {
                    ev.assign(d, candidate, c);
                    current = obj;
                }
                None => break,
            }
        }
    }
    Ok(true)
}
