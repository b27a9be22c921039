//! Incremental load bookkeeping shared by the Segment Routing solvers.

use crate::model::{Forwarding, RoutingConfiguration, Setting};
use crate::routing::{compute_forwarding_state, explicit_load, ForwardingState, RoutingError};

const TOL: f64 = 1e-12;

/// Maximum utilization, with the sum of squared utilizations to rank
/// configurations sharing the same maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub max: f64,
    pub sum_sq: f64,
}

impl Objective {
    pub fn better_than(&self, other: &Objective) -> bool {
        let scale = other.max.abs().max(1e-300);
        if self.max < other.max - TOL * scale {
            return true;
        }
        if self.max > other.max + TOL * scale {
            return false;
        }
        self.sum_sq < other.sum_sq - TOL * other.sum_sq.abs().max(1e-300)
    }
}

/// Segment lists of every demand not pinned to explicit paths, with the loads
/// they induce on top of the fixed explicit-path load.
pub struct SrEvaluator {
    pub state: ForwardingState,
    capacity: Vec<f64>,
    volume: Vec<f64>,
    load: Vec<f64>,
    /// Demands whose segments a solver may change.
    pub movable: Vec<usize>,
    /// Current segment list per demand (`[src, dst]` for plain IGP).
    pub segments: Vec<Vec<usize>>,
    contribution: Vec<Vec<(usize, f64)>>,
    delta: Vec<f64>,
}

impl SrEvaluator {
    pub fn new(setting: &Setting) -> Result<Self, RoutingError> {
        let state = compute_forwarding_state(&setting.topology, &setting.routing.weights)?;
        let capacity = setting.topology.capacities();
        let mut load = explicit_load(&setting.topology, &setting.traffic, &setting.routing)?.load;
        let demands = &setting.traffic.demands;
        let mut movable = Vec::new();
        let mut segments = Vec::with_capacity(demands.len());
        let mut contribution = Vec::with_capacity(demands.len());
        for (id, d) in demands.iter().enumerate() {
            let list = match setting.routing.forwarding(id) {
                Forwarding::Explicit(_) => {
                    segments.push(Vec::new());
                    contribution.push(Vec::new());
                    continue;
                }
                Forwarding::Segments(s) => s.to_vec(),
                Forwarding::Igp => vec![d.src, d.dst],
            };
            movable.push(id);
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(RoutingError::SegmentsCoincide { demand: d.label.clone() });
            }
            let c: Vec<(usize, f64)> =
                state.segment_fractions(&list)?.into_iter().map(|(e, f)| (e, f * d.volume)).collect();
            for &(e, l) in &c {
                load[e] += l;
            }
            segments.push(list);
            contribution.push(c);
        }
        let m = capacity.len();
        Ok(SrEvaluator {
            state,
            capacity,
            volume: demands.iter().map(|d| d.volume).collect(),
            load,
            movable,
            segments,
            contribution,
            delta: vec![0.0; m],
        })
    }

    pub fn volume(&self, demand: usize) -> f64 {
        self.volume[demand]
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacity
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn utilization(&self, edge: usize) -> f64 {
        self.load[edge] / self.capacity[edge]
    }

    /// Volume-scaled edge loads of `demand` if it followed `segments`.
    pub fn contribution_of(&self, demand: usize, segments: &[usize]) -> Result<Vec<(usize, f64)>, RoutingError> {
        let v = self.volume[demand];
        Ok(self.state.segment_fractions(segments)?.into_iter().map(|(e, f)| (e, f * v)).collect())
    }

    pub fn current_contribution(&self, demand: usize) -> &[(usize, f64)] {
        &self.contribution[demand]
    }

    pub fn objective(&self) -> Objective {
        let mut max = 0.0f64;
        let mut sum_sq = 0.0;
        for (l, c) in self.load.iter().zip(&self.capacity) {
            let u = l / c;
            max = max.max(u);
            sum_sq += u * u;
        }
        Objective { max, sum_sq }
    }

    /// Objective if `demand` switched to the given contribution.
    pub fn objective_with(&mut self, demand: usize, contribution: &[(usize, f64)]) -> Objective {
        for &(e, l) in &self.contribution[demand] {
            self.delta[e] -= l;
        }
        for &(e, l) in contribution {
            self.delta[e] += l;
        }
        let mut max = 0.0f64;
        let mut sum_sq = 0.0;
        for ((l, c), d) in self.load.iter().zip(&self.capacity).zip(self.delta.iter_mut()) {
            let u = (l + *d).max(0.0) / c;
            *d = 0.0;
            max = max.max(u);
            sum_sq += u * u;
        }
        Objective { max, sum_sq }
    }

    /// Switches `demand` to `segments`, whose contribution was computed by
    /// [`Self::contribution_of`].
    pub fn assign(&mut self, demand: usize, segments: Vec<usize>, contribution: Vec<(usize, f64)>) {
        for &(e, l) in &self.contribution[demand] {
            self.load[e] -= l;
        }
        for &(e, l) in &contribution {
            self.load[e] += l;
        }
        self.segments[demand] = segments;
        self.contribution[demand] = contribution;
    }

    /// Copy of `base` whose segment lists are the current ones. Demands on
    /// their plain IGP path get no entry.
    pub fn routing(&self, base: &RoutingConfiguration) -> RoutingConfiguration {
        let mut routing = base.clone();
        for &d in &self.movable {
            if self.segments[d].len() > 2 {
                routing.sr_segments.insert(d, self.segments[d].clone());
            } else {
                routing.sr_segments.remove(&d);
            }
        }
        routing
    }
}
