//! Movement models. Mobile groups walk shortest paths between random road
//! vertices; stationary groups sit on the vertex nearest their configured
//! location.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Debug;

use rand::Rng;
use thiserror::Error;

use crate::map::{Point, RoadGraph, VertexId};
use crate::rng::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("invalid speed range [{0}, {1}]: need 0 < min <= max")]
    Speed(f64, f64),
    #[error("invalid wait range [{0}, {1}]: need 0 <= min <= max")]
    Wait(f64, f64),
    #[error("unknown movement model `{0}`")]
    Unknown(String),
    #[error("movement model `{model}` requires {what}")]
    Missing { model: String, what: &'static str },
}

/// Leg speed bounds in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedRange {
    pub min: f64,
    pub max: f64,
}

impl SpeedRange {
    pub fn new(min: f64, max: f64) -> Result<Self, MobilityError> {
        if min > 0.0 && min <= max && max.is_finite() {
            Ok(Self { min, max })
        } else {
            Err(MobilityError::Speed(min, max))
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        rng.gen_range(self.min..=self.max)
    }
}

/// Pause bounds in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitRange {
    pub min: f64,
    pub max: f64,
}

impl WaitRange {
    pub const ZERO: WaitRange = WaitRange { min: 0.0, max: 0.0 };

    pub fn new(min: f64, max: f64) -> Result<Self, MobilityError> {
        if min >= 0.0 && min <= max && max.is_finite() {
            Ok(Self { min, max })
        } else {
            Err(MobilityError::Wait(min, max))
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Moving,
    Waiting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    pub position: Point,
    pub mode: Mode,
    /// Last vertex reached (or the placement vertex).
    pub last_vertex: VertexId,
    /// Vertices still to visit on the current leg; the front is the next one.
    pub waypoints: VecDeque<VertexId>,
    pub leg_speed: f64,
    /// Simulation time at which a waiting node starts its next leg.
    pub wait_until: f64,
}

impl MobilityState {
    fn parked(graph: &RoadGraph, v: VertexId) -> Self {
        Self {
            position: graph.vertex(v),
            mode: Mode::Waiting,
            last_vertex: v,
            waypoints: VecDeque::new(),
            leg_speed: 0.0,
            wait_until: f64::INFINITY,
        }
    }
}

/// Samples a destination uniformly among the other vertices of `current`'s
/// component and returns the shortest path to it, starting at `current`.
/// A single-vertex component yields `[current]`.
pub fn choose_destination(graph: &RoadGraph, current: VertexId, rng: &mut SimRng) -> Vec<VertexId> {
    let comp = graph.component(graph.component_of(current));
    if comp.len() < 2 {
        return vec![current];
    }
    // draw from the component minus `current`
    let mut i = rng.gen_range(0..comp.len() - 1);
    if comp[i] >= current {
        i += 1;
    }
    let dst = comp[i];
    graph
        .shortest_path(current, dst)
        .expect("destination drawn from the same component")
        .vertices
}

/// A mobility strategy for one host group.
pub trait MovementModel: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Initial state of the `index`-th node of the group.
    fn initial_placement(&self, graph: &RoadGraph, index: usize, rng: &mut SimRng) -> MobilityState;

    /// Advances `state` over `[now, now + dt)`.
    fn advance(&self, state: &mut MobilityState, graph: &RoadGraph, dt: f64, now: f64, rng: &mut SimRng);

    /// Upper bound on speed, m/s.
    fn max_speed(&self) -> f64;

    fn is_stationary(&self) -> bool {
        false
    }
}

/// Random destination vertex, shortest path, pause, repeat.
#[derive(Debug, Clone)]
pub struct ShortestPathMapMovement {
    pub speed: SpeedRange,
    pub wait: WaitRange,
}

impl ShortestPathMapMovement {
    fn start_leg(&self, state: &mut MobilityState, graph: &RoadGraph, rng: &mut SimRng) -> bool {
        let path = choose_destination(graph, state.last_vertex, rng);
        if path.len() < 2 {
            state.mode = Mode::Waiting;
            state.wait_until = f64::INFINITY;
            return false;
        }
        state.waypoints = path[1..].iter().copied().collect();
        state.leg_speed = self.speed.sample(rng);
        state.mode = Mode::Moving;
        true
    }
}

impl MovementModel for ShortestPathMapMovement {
    fn name(&self) -> &'static str {
        "MapBasedMovement"
    }

    fn initial_placement(&self, graph: &RoadGraph, _index: usize, rng: &mut SimRng) -> MobilityState {
        // Mobile hosts populate the main road network only; detached
        // fragments (footpaths to hilltop sites and the like) stay empty.
        let comp = graph.component(graph.largest_component());
        let v = comp[rng.gen_range(0..comp.len())];
        let mut state = MobilityState::parked(graph, v);
        self.start_leg(&mut state, graph, rng);
        state
    }

    fn advance(&self, state: &mut MobilityState, graph: &RoadGraph, dt: f64, now: f64, rng: &mut SimRng) {
        let end = now + dt;
        let mut t = now;
        loop {
            match state.mode {
                Mode::Waiting => {
                    if state.wait_until >= end {
                        return;
                    }
                    t = t.max(state.wait_until);
                    if !self.start_leg(state, graph, rng) {
                        return;
                    }
                }
                Mode::Moving => {
                    let mut budget = (end - t) * state.leg_speed;
                    while let Some(&next) = state.waypoints.front() {
                        let target = graph.vertex(next);
                        let d = state.position.dist(target);
                        if d <= budget {
                            budget -= d;
                            state.position = target;
                            state.last_vertex = next;
                            state.waypoints.pop_front();
                        } else {
                            state.position = state.position.lerp(target, budget / d);
                            return;
                        }
                    }
                    // arrived with `budget` metres of travel left over
                    let arrival = end - budget / state.leg_speed;
                    state.mode = Mode::Waiting;
                    state.wait_until = arrival + self.wait.sample(rng);
                    t = arrival;
                }
            }
        }
    }

    fn max_speed(&self) -> f64 {
        self.speed.max
    }
}

/// Fixed hosts snapped to the road vertex nearest each configured location.
#[derive(Debug, Clone)]
pub struct StationaryMovement {
    pub locations: Vec<Point>,
}

impl MovementModel for StationaryMovement {
    fn name(&self) -> &'static str {
        "StationaryMovement"
    }

    fn initial_placement(&self, graph: &RoadGraph, index: usize, _rng: &mut SimRng) -> MobilityState {
        let v = graph
            .nearest_vertex(self.locations[index])
            .expect("graph is non-empty");
        MobilityState::parked(graph, v)
    }

    fn advance(&self, _: &mut MobilityState, _: &RoadGraph, _: f64, _: f64, _: &mut SimRng) {}

    fn max_speed(&self) -> f64 {
        0.0
    }

    fn is_stationary(&self) -> bool {
        true
    }
}

/// Parameters a movement factory may draw on.
#[derive(Debug, Clone, Default)]
pub struct MovementSpec {
    pub speed: Option<SpeedRange>,
    pub wait: Option<WaitRange>,
    pub locations: Vec<Point>,
}

type MovementFactory = fn(&MovementSpec) -> Result<Box<dyn MovementModel>, MobilityError>;

/// Movement models by scenario name.
pub struct MovementRegistry {
    factories: BTreeMap<&'static str, MovementFactory>,
}

impl Default for MovementRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("MapBasedMovement", |spec| {
            let speed = spec.speed.ok_or(MobilityError::Missing {
                model: "MapBasedMovement".into(),
                what: "a speed range",
            })?;
            Ok(Box::new(ShortestPathMapMovement {
                speed,
                wait: spec.wait.unwrap_or(WaitRange::ZERO),
            }))
        });
        r.register("ShortestPathMapBasedMovement", |spec| {
            let speed = spec.speed.ok_or(MobilityError::Missing {
                model: "ShortestPathMapBasedMovement".into(),
                what: "a speed range",
            })?;
            Ok(Box::new(ShortestPathMapMovement {
                speed,
                wait: spec.wait.unwrap_or(WaitRange::ZERO),
            }))
        });
        r.register("StationaryMovement", |spec| {
            Ok(Box::new(StationaryMovement {
                locations: spec.locations.clone(),
            }))
        });
        r
    }
}

impl MovementRegistry {
    pub fn register(&mut self, name: &'static str, factory: MovementFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, spec: &MovementSpec) -> Result<Box<dyn MovementModel>, MobilityError> {
        let f = self
            .factories
            .get(name)
            .ok_or_else(|| MobilityError::Unknown(name.to_string()))?;
        f(spec)
    }
}
