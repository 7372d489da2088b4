//! Delivery-predictability routing: encounters raise P(a,b), transitivity
//! propagates it, aging decays it, and a message moves only to a peer with a
//! strictly higher predictability for its destination.

use super::{ordered_offers, NodeView, Router, RoutingError};
use crate::store::MessageIdx;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProphetParams {
    pub p_init: f64,
    pub beta: f64,
    pub gamma: f64,
    pub seconds_in_time_unit: f64,
}

impl Default for ProphetParams {
    fn default() -> Self {
        Self {
            p_init: 0.75,
            beta: 0.25,
            gamma: 0.98,
            seconds_in_time_unit: 30.0,
        }
    }
}

impl ProphetParams {
    pub fn validate(&self) -> Result<(), RoutingError> {
        for (name, value) in [("pInit", self.p_init), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(RoutingError::Param { name, value });
            }
        }
        if !(self.seconds_in_time_unit > 0.0 && self.seconds_in_time_unit.is_finite()) {
            return Err(RoutingError::Param {
                name: "secondsInTimeUnit",
                value: self.seconds_in_time_unit,
            });
        }
        Ok(())
    }
}

/// Per-node map destination → P. Dense storage plus the list of
/// destinations ever set, so updates touch only known entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictabilityTable {
    values: Vec<f64>,
    known: Vec<NodeId>,
    last_aged_at: f64,
}

impl PredictabilityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, dest: NodeId) -> f64 {
        self.values.get(dest).copied().unwrap_or(0.0)
    }

    pub fn last_aged_at(&self) -> f64 {
        self.last_aged_at
    }

    /// `(destination, P)` pairs in first-seen order.
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.known.iter().map(|&d| (d, self.values[d]))
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }

    fn slot(&mut self, dest: NodeId) -> &mut f64 {
        if dest >= self.values.len() {
            self.values.resize(dest + 1, 0.0);
        }
        if self.values[dest] == 0.0 && !self.known.contains(&dest) {
            self.known.push(dest);
        }
        &mut self.values[dest]
    }

    /// Sets P directly; used to build fixtures.
    pub fn set(&mut self, dest: NodeId, p: f64) {
        *self.slot(dest) = p.clamp(0.0, 1.0);
    }

    /// P(a,peer) ← P + (1 − P)·p_init
    pub fn encounter(&mut self, peer: NodeId, params: &ProphetParams) {
        let p = self.slot(peer);
        *p += (1.0 - *p) * params.p_init;
    }

    /// Decays every entry by gamma^k for the k whole time units elapsed since
    /// the last aging. Returns k.
    pub fn age(&mut self, now: f64, params: &ProphetParams) -> u64 {
        let elapsed = now - self.last_aged_at;
        if elapsed < params.seconds_in_time_unit {
            return 0;
        }
        let k = (elapsed / params.seconds_in_time_unit).floor();
        let mult = params.gamma.powf(k);
        for &d in &self.known {
            self.values[d] *= mult;
        }
        self.last_aged_at += k * params.seconds_in_time_unit;
        k as u64
    }

    /// For every c ≠ me known to the peer:
    /// P(a,c) ← P(a,c) + (1 − P(a,c))·P(a,peer)·P(peer,c)·beta
    pub fn transitivity(&mut self, me: NodeId, peer: NodeId, peer_table: &PredictabilityTable, params: &ProphetParams) {
        let p_ab = self.get(peer);
        for (c, p_bc) in peer_table.entries() {
            if c == me || p_bc == 0.0 {
                continue;
            }
            let p = self.slot(c);
            *p += (1.0 - *p) * p_ab * p_bc * params.beta;
        }
    }
}

/// Offers messages for the peer itself, and those whose destination the peer
/// predicts strictly better than we do.
pub fn prophet_plan(
    me: &NodeView<'_>,
    mine: &PredictabilityTable,
    peer: &NodeView<'_>,
    theirs: &PredictabilityTable,
) -> Vec<MessageIdx> {
    ordered_offers(me, peer, |_, d| theirs.get(d) > mine.get(d))
}

#[derive(Debug, Clone)]
pub struct ProphetRouter {
    params: ProphetParams,
    table: PredictabilityTable,
}

impl ProphetRouter {
    pub fn new(node_count: usize, params: ProphetParams) -> Self {
        let mut table = PredictabilityTable::new();
        table.values.reserve(node_count);
        Self { params, table }
    }

    pub fn params(&self) -> &ProphetParams {
        &self.params
    }
}

impl Router for ProphetRouter {
    fn name(&self) -> &'static str {
        "ProphetRouter"
    }

    fn refresh(&mut self, now: f64) -> bool {
        self.table.age(now, &self.params) > 0 && !self.table.is_empty()
    }

    fn on_link_up(&mut self, me: NodeId, peer: NodeId, peer_router: &dyn Router, now: f64) {
        self.table.age(now, &self.params);
        self.table.encounter(peer, &self.params);
        if let Some(theirs) = peer_router.predictability() {
            self.table.transitivity(me, peer, theirs, &self.params);
        }
    }

    fn plan(&self, me: &NodeView<'_>, peer: &NodeView<'_>, peer_router: &dyn Router) -> Vec<MessageIdx> {
        let empty = PredictabilityTable::new();
        let theirs = peer_router.predictability().unwrap_or(&empty);
        prophet_plan(me, &self.table, peer, theirs)
    }

    fn predictability(&self) -> Option<&PredictabilityTable> {
        Some(&self.table)
    }
}
