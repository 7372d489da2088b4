//! Message creation schedule.

use rand::Rng;

use crate::config::EventGeneratorConfig;
use crate::rng::SimRng;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct MessageEvent {
    pub time: f64,
    pub source: NodeId,
    pub destination: NodeId,
    pub size: u64,
    pub id: String,
}

/// `t₁ ~ U(interval)`, `tₙ₊₁ = tₙ + U(interval)`, stopping before `end_time`.
/// Sources and destinations are uniform over their half-open id ranges.
pub fn generate_events(cfg: &EventGeneratorConfig, rng: &mut SimRng, end_time: f64) -> Vec<MessageEvent> {
    let draw_interval = |rng: &mut SimRng| {
        let (lo, hi) = cfg.interval;
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..=hi)
        }
    };
    let mut out = Vec::new();
    let mut t = draw_interval(rng);
    let mut seq = 1;
    while t < end_time {
        let source = rng.gen_range(cfg.hosts.clone());
        let destination = rng.gen_range(cfg.to_hosts.clone());
        let size = rng.gen_range(cfg.size.0..=cfg.size.1);
        out.push(MessageEvent {
            time: t,
            source,
            destination,
            size,
            id: format!("{}_{}", cfg.prefix, seq),
        });
        seq += 1;
        t += draw_interval(rng);
    }
    out
}
