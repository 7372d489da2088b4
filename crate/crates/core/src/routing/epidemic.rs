use super::{ordered_offers, NodeView, Router};
use crate::store::MessageIdx;

/// Offers everything the peer's summary vector lacks.
pub fn epidemic_plan(me: &NodeView<'_>, peer: &NodeView<'_>) -> Vec<MessageIdx> {
    ordered_offers(me, peer, |_, _| true)
}

/// Pure flooding; no per-node state.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpidemicRouter;

impl Router for EpidemicRouter {
    fn name(&self) -> &'static str {
        "EpidemicRouter"
    }

    fn plan(&self, me: &NodeView<'_>, peer: &NodeView<'_>, _: &dyn Router) -> Vec<MessageIdx> {
        epidemic_plan(me, peer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Buffer, Message, MessageCopy};
    use std::sync::Arc;

    fn put(b: &mut Buffer, idx: usize, dest: usize, t: f64) {
        let m = Arc::new(Message {
            idx,
            id: format!("M{idx}"),
            source: 0,
            destination: dest,
            size: 1000,
            created_at: t,
            ttl: None,
        });
        b.insert(MessageCopy {
            message: m,
            hop_count: 0,
            received_at: t,
        });
    }

    fn view<'a>(id: usize, b: &'a Buffer) -> NodeView<'a> {
        NodeView {
            id,
            buffer: b,
            delivered: &[],
        }
    }

    #[test]
    fn offers_set_difference() {
        let (mut a, mut b) = (Buffer::new(1 << 20), Buffer::new(1 << 20));
        put(&mut a, 1, 9, 0.0);
        put(&mut a, 2, 9, 1.0);
        put(&mut b, 2, 9, 0.5);
        assert_eq!(epidemic_plan(&view(0, &a), &view(1, &b)), vec![1]);
    }

    #[test]
    fn identical_vectors_offer_nothing() {
        let (mut a, mut b) = (Buffer::new(1 << 20), Buffer::new(1 << 20));
        for i in 0..3 {
            put(&mut a, i, 9, i as f64);
            put(&mut b, i, 9, i as f64);
        }
        assert!(epidemic_plan(&view(0, &a), &view(1, &b)).is_empty());
    }

    #[test]
    fn peer_destined_first_then_oldest() {
        // received order: M3, M2, M1(dest = peer)
        let (mut a, b) = (Buffer::new(1 << 20), Buffer::new(1 << 20));
        put(&mut a, 3, 9, 0.0);
        put(&mut a, 2, 9, 1.0);
        put(&mut a, 1, 1, 2.0);
        assert_eq!(epidemic_plan(&view(0, &a), &view(1, &b)), vec![1, 3, 2]);
    }

    #[test]
    fn delivered_messages_are_not_reoffered() {
        let (mut a, b) = (Buffer::new(1 << 20), Buffer::new(1 << 20));
        put(&mut a, 4, 1, 0.0);
        let peer = NodeView {
            id: 1,
            buffer: &b,
            delivered: &[4],
        };
        assert!(epidemic_plan(&view(0, &a), &peer).is_empty());
    }
}
