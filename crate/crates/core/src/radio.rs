//! Range-based contact detection and finite-bandwidth transfers.

use crate::map::Point;
use crate::store::MessageIdx;
use crate::NodeId;

/// Index of an interface class in the scenario's interface table.
pub type InterfaceKind = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSpec {
    pub name: String,
    /// Bytes per second.
    pub transmit_speed: f64,
    /// Meters.
    pub transmit_range: f64,
}

/// Unordered node pair linked over one interface kind; always `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkKey {
    pub a: NodeId,
    pub b: NodeId,
    pub kind: InterfaceKind,
}

impl LinkKey {
    pub fn new(x: NodeId, y: NodeId, kind: InterfaceKind) -> Self {
        debug_assert_ne!(x, y);
        Self {
            a: x.min(y),
            b: x.max(y),
            kind,
        }
    }

    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub key: LinkKey,
    pub established_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub message: MessageIdx,
    /// Hop count of the sender's copy when the transfer was staged.
    pub hop_count: u32,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub link: LinkKey,
    pub started_at: f64,
    pub completes_at: f64,
}

pub fn transfer_time(size: u64, speed: f64) -> f64 {
    size as f64 / speed
}

/// Uniform spatial hash over one tick's positions, reused across ticks.
#[derive(Debug, Default)]
pub struct ContactDetector {
    /// (cell key, node) sorted by key
    cells: Vec<(u64, NodeId)>,
    members: Vec<NodeId>,
}

impl ContactDetector {
    pub fn new() -> Self {
        Self::default()
    }

    /// All links at the current positions, sorted by key. Nodes `a`, `b` are
    /// linked on kind `k` iff both carry `k` and their distance is at most
    /// `min(range_a, range_b)`; ranges are per kind, so that is the kind's
    /// range.
    pub fn detect(
        &mut self,
        positions: &[Point],
        node_kinds: &[Vec<InterfaceKind>],
        specs: &[InterfaceSpec],
    ) -> Vec<LinkKey> {
        let mut out = Vec::new();
        for (kind, spec) in specs.iter().enumerate() {
            self.members.clear();
            self.members
                .extend((0..positions.len()).filter(|&n| node_kinds[n].contains(&kind)));
            self.detect_kind(positions, kind, spec.transmit_range, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn detect_kind(&mut self, positions: &[Point], kind: InterfaceKind, range: f64, out: &mut Vec<LinkKey>) {
        if self.members.len() < 2 {
            return;
        }
        let cell = range;
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let mut max_x = f64::NEG_INFINITY;
        for &n in &self.members {
            let p = positions[n];
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
        }
        // one spare column each side keeps neighbour keys non-negative and unwrapped
        let width = ((max_x - min_x) / cell).floor() as u64 + 3;
        let coords = |p: Point| {
            (
                ((p.x - min_x) / cell).floor() as u64 + 1,
                ((p.y - min_y) / cell).floor() as u64 + 1,
            )
        };
        self.cells.clear();
        for &n in &self.members {
            let (cx, cy) = coords(positions[n]);
            self.cells.push((cy * width + cx, n));
        }
        self.cells.sort_unstable();

        let r2 = range * range;
        for &(_, a) in &self.cells {
            let pa = positions[a];
            let (cx, cy) = coords(pa);
            for row in cy - 1..=cy + 1 {
                let lo = row * width + cx - 1;
                let hi = row * width + cx + 1;
                let start = self.cells.partition_point(|&(k, _)| k < lo);
                for &(k, b) in &self.cells[start..] {
                    if k > hi {
                        break;
                    }
                    if b > a && pa.dist_sq(positions[b]) <= r2 {
                        out.push(LinkKey { a, b, kind });
                    }
                }
            }
        }
    }
}

/// Reference all-pairs contact check.
pub fn detect_contacts_naive(
    positions: &[Point],
    node_kinds: &[Vec<InterfaceKind>],
    specs: &[InterfaceSpec],
) -> Vec<LinkKey> {
    let mut out = Vec::new();
    for a in 0..positions.len() {
        for b in a + 1..positions.len() {
            for &k in &node_kinds[a] {
                if node_kinds[b].contains(&k) {
                    let r = specs[k].transmit_range;
                    if positions[a].dist(positions[b]) <= r {
                        out.push(LinkKey { a, b, kind: k });
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Default, PartialEq)]
pub struct TransferStep {
    pub completed: Vec<Transfer>,
    pub aborted: Vec<Transfer>,
    pub active: Vec<Transfer>,
}

/// Slack for comparing a completion time against the tick clock, which is
/// accumulated in floating point.
pub const TIME_EPS: f64 = 1e-9;

/// Splits `active` by outcome at `now`. `live` must be sorted. A transfer
/// whose link is gone is aborted even if it would also have completed.
pub fn step_transfers(active: Vec<Transfer>, live: &[LinkKey], now: f64) -> TransferStep {
    let mut step = TransferStep::default();
    for t in active {
        if live.binary_search(&t.link).is_err() {
            step.aborted.push(t);
        } else if t.completes_at <= now + TIME_EPS {
            step.completed.push(t);
        } else {
            step.active.push(t);
        }
    }
    step
}
