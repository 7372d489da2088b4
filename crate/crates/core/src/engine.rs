//! The per-tick simulation loop.
//!
//! Each tick runs, in this order: release due message events, advance every
//! node by one update interval, detect contacts, step in-flight transfers,
//! start at most one new transfer per free link, then sweep expired copies.
//! A run is a pure function of (scenario, map, seed).

use std::path::Path;
use std::sync::Arc;

use log::{debug, trace};
use thiserror::Error;

use crate::config::{load_config, ConfigError, ScenarioConfig};
use crate::events::{generate_events, MessageEvent};
use crate::map::{load_map, MapError, Point, RoadGraph};
use crate::mobility::{MobilityError, MobilityState, MovementModel, MovementRegistry, MovementSpec};
use crate::radio::{step_transfers, transfer_time, ContactDetector, InterfaceKind, InterfaceSpec, LinkKey, Transfer};
use crate::report::{DeliveryRecord, RunReport};
use crate::rng::{RngStreams, SimRng, StreamKind};
use crate::routing::{NodeView, Router, RouterRegistry, RouterSpec, RoutingError};
use crate::store::{Buffer, Message, MessageCopy, MessageIdx};
use crate::NodeId;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("{group}: {source}")]
    Mobility {
        group: String,
        #[source]
        source: MobilityError,
    },
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("invalid event: {0}")]
    Event(String),
}

/// Per-message copy accounting. At every tick
/// `resident + delivered + dropped + discarded == completed + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CopyLedger {
    pub completed: u64,
    pub delivered: bool,
    pub dropped_overflow: u64,
    pub dropped_ttl: u64,
    pub discarded: u64,
    pub aborted: u64,
}

#[derive(Debug)]
struct Node {
    group: usize,
    buffer: Buffer,
    delivered: Vec<MessageIdx>,
    mobility: MobilityState,
    /// Bumped whenever anything a plan depends on changes.
    version: u64,
}

#[derive(Debug, Clone)]
struct LinkState {
    key: LinkKey,
    /// Node versions at which planning last found nothing to send.
    idle_at: Option<(u64, u64)>,
}

pub struct Simulation<'g> {
    graph: &'g RoadGraph,
    dt: f64,
    n_ticks: u64,
    tick: u64,
    nodes: Vec<Node>,
    node_kinds: Vec<Vec<InterfaceKind>>,
    interfaces: Vec<InterfaceSpec>,
    n_kinds: usize,
    ttl_by_group: Vec<Option<f64>>,
    movements: Vec<Box<dyn MovementModel>>,
    routers: Vec<Box<dyn Router>>,
    rngs: Vec<SimRng>,
    positions: Vec<Point>,
    schedule: Vec<MessageEvent>,
    next_event: usize,
    messages: Vec<Arc<Message>>,
    ledger: Vec<CopyLedger>,
    links: Vec<LinkState>,
    transfers: Vec<Transfer>,
    busy: Vec<bool>,
    detector: ContactDetector,
    report: RunReport,
}

fn two_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = v.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

impl<'g> Simulation<'g> {
    /// Builds a run whose traffic comes from the scenario's generators.
    pub fn new(config: &ScenarioConfig, graph: &'g RoadGraph) -> Result<Self, EngineError> {
        let streams = RngStreams::new(config.rng_seed);
        let mut schedule = Vec::new();
        for (gi, gen) in config.events.iter().enumerate() {
            let mut rng = streams.stream(StreamKind::Events, gi);
            schedule.extend(generate_events(gen, &mut rng, config.end_time));
        }
        // stable: generator order breaks time ties
        schedule.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self::with_events(config, graph, schedule)
    }

    /// Builds a run with an explicit message schedule.
    pub fn with_events(
        config: &ScenarioConfig,
        graph: &'g RoadGraph,
        schedule: Vec<MessageEvent>,
    ) -> Result<Self, EngineError> {
        let n = config.node_count();
        for e in &schedule {
            if e.source >= n || e.destination >= n || e.source == e.destination || e.size == 0 {
                return Err(EngineError::Event(format!("{e:?}")));
            }
        }
        let streams = RngStreams::new(config.rng_seed);
        let movement_registry = MovementRegistry::default();
        let router_registry = RouterRegistry::default();
        let router_spec = RouterSpec {
            node_count: n,
            prophet: config.prophet,
        };

        let mut movements = Vec::with_capacity(config.groups.len());
        for g in &config.groups {
            let spec = MovementSpec {
                speed: g.speed,
                wait: g.wait,
                locations: g.locations.clone(),
            };
            let m = movement_registry
                .create(&g.movement, &spec)
                .map_err(|source| EngineError::Mobility {
                    group: g.name.clone(),
                    source,
                })?;
            movements.push(m);
        }

        let mut protocols: Vec<&'static str> = Vec::new();
        let mut nodes = Vec::with_capacity(n);
        let mut routers = Vec::with_capacity(n);
        let mut rngs = Vec::with_capacity(n);
        let mut node_kinds = Vec::with_capacity(n);
        for (gi, g) in config.groups.iter().enumerate() {
            let canonical = router_registry.resolve(&g.router)?;
            if !protocols.contains(&canonical) {
                protocols.push(canonical);
            }
            for (k, id) in g.ids().enumerate() {
                let mobility = movements[gi].initial_placement(graph, k, &mut streams.placement(id));
                nodes.push(Node {
                    group: gi,
                    buffer: Buffer::new(g.buffer_size),
                    delivered: Vec::new(),
                    mobility,
                    version: 0,
                });
                routers.push(router_registry.create(canonical, &router_spec)?);
                rngs.push(streams.mobility(id));
                node_kinds.push(g.interfaces.clone());
            }
        }
        let positions = nodes.iter().map(|n| n.mobility.position).collect();
        let n_kinds = config.interfaces.len();
        let n_ticks = ((config.end_time / config.update_interval) - 1e-9).ceil().max(1.0) as u64;

        debug!(
            "run `{}` seed {}: {} nodes, {} events, {} ticks",
            config.name,
            config.rng_seed,
            n,
            schedule.len(),
            n_ticks
        );

        Ok(Self {
            graph,
            dt: config.update_interval,
            n_ticks,
            tick: 0,
            nodes,
            node_kinds,
            interfaces: config.interfaces.clone(),
            n_kinds,
            ttl_by_group: config.groups.iter().map(|g| g.msg_ttl).collect(),
            movements,
            routers,
            rngs,
            positions,
            schedule,
            next_event: 0,
            messages: Vec::new(),
            ledger: Vec::new(),
            links: Vec::new(),
            transfers: Vec::new(),
            busy: vec![false; n * n_kinds],
            detector: ContactDetector::new(),
            report: RunReport {
                scenario: config.name.clone(),
                protocol: protocols.join("+"),
                seed: config.rng_seed,
                ..Default::default()
            },
        })
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.n_ticks
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Simulation time at the end of the last completed tick.
    pub fn now(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn buffer(&self, node: NodeId) -> &Buffer {
        &self.nodes[node].buffer
    }

    pub fn router(&self, node: NodeId) -> &dyn Router {
        self.routers[node].as_ref()
    }

    pub fn mobility(&self, node: NodeId) -> &MobilityState {
        &self.nodes[node].mobility
    }

    pub fn messages(&self) -> &[Arc<Message>] {
        &self.messages
    }

    pub fn ledger(&self) -> &[CopyLedger] {
        &self.ledger
    }

    pub fn active_transfers(&self) -> &[Transfer] {
        &self.transfers
    }

    pub fn live_links(&self) -> impl Iterator<Item = &LinkKey> {
        self.links.iter().map(|l| &l.key)
    }

    pub fn report(&self) -> &RunReport {
        &self.report
    }

    /// Checks the per-message copy ledger against the buffers.
    pub fn check_conservation(&self) -> Result<(), String> {
        let mut resident = vec![0u64; self.messages.len()];
        for n in &self.nodes {
            for m in n.buffer.ids() {
                resident[m] += 1;
            }
        }
        for (m, l) in self.ledger.iter().enumerate() {
            let lhs = resident[m] + l.delivered as u64 + l.dropped_overflow + l.dropped_ttl + l.discarded;
            let rhs = l.completed + 1;
            if lhs != rhs {
                return Err(format!(
                    "message {}: resident {} + delivered {} + dropped {} + discarded {} != completed {} + 1",
                    self.messages[m].id,
                    resident[m],
                    l.delivered,
                    l.dropped_overflow + l.dropped_ttl,
                    l.discarded,
                    l.completed
                ));
            }
        }
        Ok(())
    }

    pub fn run_to_end(mut self) -> RunReport {
        while !self.is_finished() {
            self.step();
        }
        self.report
    }

    fn busy_slot(&self, node: NodeId, kind: InterfaceKind) -> usize {
        node * self.n_kinds + kind
    }

    fn drop_copies(&mut self, dropped: Vec<Arc<Message>>, ttl: bool) {
        for m in dropped {
            if ttl {
                self.report.n_dropped_ttl += 1;
                self.ledger[m.idx].dropped_ttl += 1;
            } else {
                self.report.n_dropped_overflow += 1;
                self.ledger[m.idx].dropped_overflow += 1;
            }
        }
    }

    fn store_copy(&mut self, node: NodeId, copy: MessageCopy) {
        let idx = copy.idx();
        let outcome = self.nodes[node].buffer.insert(copy);
        if !outcome.accepted {
            self.report.n_dropped_overflow += 1;
            self.ledger[idx].dropped_overflow += 1;
        }
        self.drop_copies(outcome.dropped, false);
        self.nodes[node].version += 1;
    }

    fn release_events(&mut self, t: f64) {
        while let Some(e) = self.schedule.get(self.next_event) {
            if e.time > t {
                break;
            }
            let e = e.clone();
            self.next_event += 1;
            let idx = self.messages.len();
            let msg = Arc::new(Message {
                idx,
                id: e.id,
                source: e.source,
                destination: e.destination,
                size: e.size,
                created_at: e.time,
                ttl: self.ttl_by_group[self.nodes[e.source].group],
            });
            trace!("t={t}: create {} {} -> {}", msg.id, msg.source, msg.destination);
            self.messages.push(msg.clone());
            self.ledger.push(CopyLedger::default());
            self.report.n_created += 1;
            self.store_copy(
                e.source,
                MessageCopy {
                    message: msg,
                    hop_count: 0,
                    received_at: t,
                },
            );
        }
    }

    fn update_links(&mut self, keys: Vec<LinkKey>, now: f64) {
        let old = std::mem::take(&mut self.links);
        let mut merged = Vec::with_capacity(keys.len());
        let mut fresh = Vec::new();
        let mut oi = old.into_iter().peekable();
        for key in keys {
            while oi.peek().is_some_and(|l| l.key < key) {
                oi.next();
            }
            match oi.peek() {
                Some(l) if l.key == key => merged.push(oi.next().expect("peeked")),
                _ => {
                    fresh.push(key);
                    merged.push(LinkState {
                        key,
                        idle_at: None,
                    });
                }
            }
        }
        self.links = merged;
        for key in fresh {
            let (ra, rb) = two_mut(&mut self.routers, key.a, key.b);
            ra.on_link_up(key.a, key.b, rb.as_ref(), now);
            rb.on_link_up(key.b, key.a, ra.as_ref(), now);
            self.nodes[key.a].version += 1;
            self.nodes[key.b].version += 1;
        }
    }

    fn finish_transfers(&mut self, now: f64) {
        let active = std::mem::take(&mut self.transfers);
        let live: Vec<LinkKey> = self.links.iter().map(|l| l.key).collect();
        let step = step_transfers(active, &live, now);
        self.transfers = step.active;
        for t in step.aborted {
            for n in [t.sender, t.receiver] {
                let s = self.busy_slot(n, t.link.kind);
                self.busy[s] = false;
            }
            self.report.n_aborted += 1;
            self.ledger[t.message].aborted += 1;
        }
        for t in step.completed {
            for n in [t.sender, t.receiver] {
                let s = self.busy_slot(n, t.link.kind);
                self.busy[s] = false;
            }
            self.report.n_relayed += 1;
            self.ledger[t.message].completed += 1;
            let msg = self.messages[t.message].clone();
            let r = t.receiver;
            if msg.destination == r {
                if self.nodes[r].delivered.contains(&msg.idx) {
                    self.report.n_discarded += 1;
                    self.ledger[msg.idx].discarded += 1;
                } else {
                    self.nodes[r].delivered.push(msg.idx);
                    self.nodes[r].version += 1;
                    self.ledger[msg.idx].delivered = true;
                    self.report.n_delivered += 1;
                    self.report.deliveries.push(DeliveryRecord {
                        message_id: msg.id.clone(),
                        created_at: msg.created_at,
                        delivered_at: now,
                        hops: t.hop_count + 1,
                    });
                    trace!("t={now}: delivered {} at {r} in {} hops", msg.id, t.hop_count + 1);
                }
            } else if self.nodes[r].buffer.contains(msg.idx) {
                self.report.n_discarded += 1;
                self.ledger[msg.idx].discarded += 1;
            } else {
                self.store_copy(
                    r,
                    MessageCopy {
                        message: msg,
                        hop_count: t.hop_count + 1,
                        received_at: now,
                    },
                );
            }
        }
    }

    /// Plans `from → to`; returns the first message to send, if any.
    fn first_offer(&self, from: NodeId, to: NodeId) -> Option<MessageIdx> {
        let a = &self.nodes[from];
        let b = &self.nodes[to];
        if a.buffer.is_empty() {
            return None;
        }
        let me = NodeView {
            id: from,
            buffer: &a.buffer,
            delivered: &a.delivered,
        };
        let peer = NodeView {
            id: to,
            buffer: &b.buffer,
            delivered: &b.delivered,
        };
        self.routers[from]
            .plan(&me, &peer, self.routers[to].as_ref())
            .first()
            .copied()
    }

    fn start_transfers(&mut self, now: f64) {
        for li in 0..self.links.len() {
            let key = self.links[li].key;
            let (sa, sb) = (self.busy_slot(key.a, key.kind), self.busy_slot(key.b, key.kind));
            if self.busy[sa] || self.busy[sb] {
                continue;
            }
            for n in [key.a, key.b] {
                if self.routers[n].refresh(now) {
                    self.nodes[n].version += 1;
                }
            }
            let versions = (self.nodes[key.a].version, self.nodes[key.b].version);
            if self.links[li].idle_at == Some(versions) {
                continue;
            }
            let choice = self
                .first_offer(key.a, key.b)
                .map(|m| (key.a, key.b, m))
                .or_else(|| self.first_offer(key.b, key.a).map(|m| (key.b, key.a, m)));
            let Some((from, to, m)) = choice else {
                self.links[li].idle_at = Some(versions);
                continue;
            };
            let copy = self.nodes[from].buffer.get(m).expect("planned from own buffer");
            let t = Transfer {
                message: m,
                hop_count: copy.hop_count,
                sender: from,
                receiver: to,
                link: key,
                started_at: now,
                completes_at: now + transfer_time(copy.size(), self.interfaces[key.kind].transmit_speed),
            };
            self.busy[sa] = true;
            self.busy[sb] = true;
            self.transfers.push(t);
        }
    }

    fn expire(&mut self, now: f64) {
        for n in 0..self.nodes.len() {
            let dropped = self.nodes[n].buffer.expire(now);
            if !dropped.is_empty() {
                self.nodes[n].version += 1;
                self.drop_copies(dropped, true);
            }
        }
    }

    /// Executes one tick.
    pub fn step(&mut self) {
        let t = self.tick as f64 * self.dt;
        let now = (self.tick + 1) as f64 * self.dt;

        self.release_events(t);

        for (i, node) in self.nodes.iter_mut().enumerate() {
            self.movements[node.group].advance(&mut node.mobility, self.graph, self.dt, t, &mut self.rngs[i]);
            self.positions[i] = node.mobility.position;
        }

        let keys = self.detector.detect(&self.positions, &self.node_kinds, &self.interfaces);
        self.update_links(keys, now);
        self.finish_transfers(now);
        self.start_transfers(now);
        self.expire(now);
        self.tick += 1;
    }

}

/// Runs a scenario end to end.
pub fn run(config: &ScenarioConfig, graph: &RoadGraph) -> Result<RunReport, EngineError> {
    Ok(Simulation::new(config, graph)?.run_to_end())
}

/// Loads scenario and map from disk, then runs.
pub fn run_scenario(path: &Path, overrides: &[(String, String)]) -> Result<RunReport, EngineError> {
    let config = load_config(path, overrides)?;
    let graph = load_map(&config.map_file)?;
    run(&config, &graph)
}
