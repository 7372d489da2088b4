//! Forwarding strategies run at every contact.
//!
//! Each protocol implements [`Router`] and is registered by its scenario name
//! (`EpidemicRouter`, `ProphetRouter`) in a [`RouterRegistry`]; groups pick
//! one at runtime through `GroupX.router`.

mod epidemic;
mod prophet;

pub use epidemic::{epidemic_plan, EpidemicRouter};
pub use prophet::{prophet_plan, PredictabilityTable, ProphetParams, ProphetRouter};

use std::collections::BTreeMap;
use std::fmt::Debug;

use thiserror::Error;

use crate::store::{Buffer, MessageIdx};
use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("unknown router `{0}` (known: {1})")]
    Unknown(String, String),
    #[error("invalid PROPHET parameter {name} = {value}")]
    Param { name: &'static str, value: f64 },
}

/// What a router may see of a node during an exchange.
#[derive(Debug, Clone, Copy)]
pub struct NodeView<'a> {
    pub id: NodeId,
    pub buffer: &'a Buffer,
    /// Messages this node has already received as their destination.
    pub delivered: &'a [MessageIdx],
}

impl NodeView<'_> {
    /// Summary-vector membership: buffered or already delivered here.
    pub fn holds(&self, m: MessageIdx) -> bool {
        self.delivered.contains(&m) || self.buffer.contains(m)
    }
}

/// Buffered messages of `me` matching `eligible` and not held by `peer`,
/// peer-destined first, then oldest-received first.
pub(crate) fn ordered_offers(
    me: &NodeView<'_>,
    peer: &NodeView<'_>,
    mut eligible: impl FnMut(MessageIdx, NodeId) -> bool,
) -> Vec<MessageIdx> {
    let mut direct = Vec::new();
    let mut relay = Vec::new();
    for c in me.buffer.iter() {
        let m = c.idx();
        let dest = c.message.destination;
        if peer.holds(m) {
            continue;
        }
        if dest == peer.id {
            direct.push(m);
        } else if eligible(m, dest) {
            relay.push(m);
        }
    }
    direct.extend(relay);
    direct
}

pub trait Router: Debug + Send {
    fn name(&self) -> &'static str;

    /// Brings time-dependent state up to `now`. Returns whether anything
    /// changed.
    fn refresh(&mut self, _now: f64) -> bool {
        false
    }

    /// A new link to `peer` came up. `peer_router` is the peer's router as it
    /// stands at this moment.
    fn on_link_up(&mut self, _me: NodeId, _peer: NodeId, _peer_router: &dyn Router, _now: f64) {}

    /// Messages to offer `peer`, in offer order.
    fn plan(&self, me: &NodeView<'_>, peer: &NodeView<'_>, peer_router: &dyn Router) -> Vec<MessageIdx>;

    fn predictability(&self) -> Option<&PredictabilityTable> {
        None
    }
}

/// Construction parameters shared by all router factories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouterSpec {
    pub node_count: usize,
    pub prophet: ProphetParams,
}

type RouterFactory = fn(&RouterSpec) -> Box<dyn Router>;

/// Routers by scenario name.
pub struct RouterRegistry {
    factories: BTreeMap<&'static str, RouterFactory>,
    aliases: BTreeMap<&'static str, &'static str>,
}

impl Default for RouterRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
            aliases: BTreeMap::new(),
        };
        r.register("EpidemicRouter", |_| Box::new(EpidemicRouter));
        r.register("ProphetRouter", |spec| {
            Box::new(ProphetRouter::new(spec.node_count, spec.prophet))
        });
        r.alias("epidemic", "EpidemicRouter");
        r.alias("prophet", "ProphetRouter");
        r
    }
}

impl RouterRegistry {
    pub fn register(&mut self, name: &'static str, factory: RouterFactory) {
        self.factories.insert(name, factory);
    }

    pub fn alias(&mut self, alias: &'static str, name: &'static str) {
        self.aliases.insert(alias, name);
    }

    /// Canonical scenario name for `name` or one of its aliases.
    pub fn resolve(&self, name: &str) -> Result<&'static str, RoutingError> {
        if let Some((&k, _)) = self.factories.get_key_value(name) {
            return Ok(k);
        }
        let lower = name.to_ascii_lowercase();
        self.aliases.get(lower.as_str()).copied().ok_or_else(|| {
            RoutingError::Unknown(
                name.to_string(),
                self.factories.keys().copied().collect::<Vec<_>>().join(", "),
            )
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, spec: &RouterSpec) -> Result<Box<dyn Router>, RoutingError> {
        let canonical = self.resolve(name)?;
        Ok(self.factories[canonical](spec))
    }
}
