//! Per-node message buffers: capacity enforcement, FIFO eviction, TTL expiry.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::NodeId;

/// Dense index of a message within one run.
pub type MessageIdx = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub idx: MessageIdx,
    pub id: String,
    pub source: NodeId,
    pub destination: NodeId,
    /// Bytes.
    pub size: u64,
    pub created_at: f64,
    /// Minutes; `None` never expires.
    pub ttl: Option<f64>,
}

impl Message {
    /// Expired once strictly more than `ttl` minutes have elapsed.
    pub fn is_expired(&self, now: f64) -> bool {
        self.ttl.is_some_and(|ttl| now - self.created_at > ttl * 60.0)
    }
}

#[derive(Debug, Clone)]
pub struct MessageCopy {
    pub message: Arc<Message>,
    /// Relay transmissions from the source to this copy.
    pub hop_count: u32,
    pub received_at: f64,
}

impl MessageCopy {
    pub fn origin(message: Arc<Message>) -> Self {
        let received_at = message.created_at;
        Self {
            message,
            hop_count: 0,
            received_at,
        }
    }

    pub fn idx(&self) -> MessageIdx {
        self.message.idx
    }

    pub fn size(&self) -> u64 {
        self.message.size
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct InsertOutcome {
    pub accepted: bool,
    /// Copies evicted to make room, oldest first.
    pub dropped: Vec<Arc<Message>>,
}

/// Byte-bounded buffer ordered by arrival.
#[derive(Debug, Clone)]
pub struct Buffer {
    capacity: u64,
    occupied: u64,
    copies: VecDeque<MessageCopy>,
}

impl Buffer {
    pub fn new(capacity: u64) -> Self {
        Self {
            capacity,
            occupied: 0,
            copies: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn occupied(&self) -> u64 {
        self.occupied
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn contains(&self, idx: MessageIdx) -> bool {
        self.copies.iter().any(|c| c.idx() == idx)
    }

    pub fn get(&self, idx: MessageIdx) -> Option<&MessageCopy> {
        self.copies.iter().find(|c| c.idx() == idx)
    }

    /// Copies, oldest-received first.
    pub fn iter(&self) -> impl Iterator<Item = &MessageCopy> {
        self.copies.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = MessageIdx> + '_ {
        self.copies.iter().map(MessageCopy::idx)
    }

    /// Admits `copy`, evicting oldest-received copies until it fits. A copy
    /// larger than the whole buffer is refused and nothing is evicted.
    pub fn insert(&mut self, copy: MessageCopy) -> InsertOutcome {
        debug_assert!(!self.contains(copy.idx()), "duplicate offers are filtered upstream");
        let size = copy.size();
        if size > self.capacity {
            return InsertOutcome::default();
        }
        let mut dropped = Vec::new();
        while self.capacity - self.occupied < size {
            let old = self.copies.pop_front().expect("occupied > 0 implies a resident copy");
            self.occupied -= old.size();
            dropped.push(old.message);
        }
        self.occupied += size;
        // arrivals are monotone in time, so appending keeps the order
        self.copies.push_back(copy);
        InsertOutcome {
            accepted: true,
            dropped,
        }
    }

    /// Removes every expired copy.
    pub fn expire(&mut self, now: f64) -> Vec<Arc<Message>> {
        let mut dropped = Vec::new();
        let occupied = &mut self.occupied;
        self.copies.retain(|c| {
            if c.message.is_expired(now) {
                *occupied -= c.size();
                dropped.push(c.message.clone());
                false
            } else {
                true
            }
        });
        dropped
    }

    pub fn remove(&mut self, idx: MessageIdx) -> Option<MessageCopy> {
        let pos = self.copies.iter().position(|c| c.idx() == idx)?;
        let c = self.copies.remove(pos)?;
        self.occupied -= c.size();
        Some(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn msg(idx: usize, size: u64, created_at: f64, ttl: Option<f64>) -> Arc<Message> {
        Arc::new(Message {
            idx,
            id: format!("M{idx}"),
            source: 0,
            destination: 1,
            size,
            created_at,
            ttl,
        })
    }

    fn copy(idx: usize, size: u64, t: f64) -> MessageCopy {
        MessageCopy {
            message: msg(idx, size, t, Some(30.0)),
            hop_count: 0,
            received_at: t,
        }
    }

    #[test]
    fn fits_without_drops() {
        let mut b = Buffer::new(5_000_000);
        let out = b.insert(copy(0, 500_000, 0.0));
        assert!(out.accepted);
        assert!(out.dropped.is_empty());
        assert_eq!(b.occupied(), 500_000);
    }

    #[test]
    fn evicts_oldest_until_room() {
        // 4.8M of 5M used by twelve 400k copies; a 500k arrival needs 300k
        // more room, which one eviction of 400k provides.
        let mut b = Buffer::new(5_000_000);
        for i in 0..12 {
            assert!(b.insert(copy(i, 400_000, i as f64)).dropped.is_empty());
        }
        assert_eq!(b.occupied(), 4_800_000);
        let out = b.insert(copy(99, 500_000, 20.0));
        assert!(out.accepted);
        assert_eq!(out.dropped.iter().map(|m| m.idx).collect::<Vec<_>>(), vec![0]);
        assert_eq!(b.occupied(), 4_900_000);
        assert!(!b.contains(0));
        assert!(b.contains(99));
    }

    #[test]
    fn oversized_copy_rejected() {
        let mut b = Buffer::new(100_000);
        b.insert(copy(0, 50_000, 0.0));
        let out = b.insert(copy(1, 200_000, 1.0));
        assert!(!out.accepted);
        assert!(out.dropped.is_empty());
        assert_eq!(b.len(), 1);
        assert_eq!(b.occupied(), 50_000);
    }

    #[test]
    fn ttl_boundary_is_strict() {
        let mut b = Buffer::new(1_000_000);
        b.insert(MessageCopy::origin(msg(0, 10, 0.0, Some(30.0))));
        assert!(b.expire(1800.0).is_empty());
        assert_eq!(b.expire(1800.1).len(), 1);
        assert!(b.is_empty());
        assert_eq!(b.occupied(), 0);
        assert!(b.expire(5000.0).is_empty());
    }

    #[test]
    fn no_ttl_never_expires() {
        let mut b = Buffer::new(10);
        b.insert(MessageCopy::origin(msg(0, 10, 0.0, None)));
        assert!(b.expire(1e12).is_empty());
    }

    #[derive(Debug, Clone)]
    enum Op {
        Insert(u64),
        Expire(f64),
        Remove(usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (1u64..700_000).prop_map(Op::Insert),
            (0.0f64..4000.0).prop_map(Op::Expire),
            (0usize..64).prop_map(Op::Remove),
        ]
    }

    proptest! {
        #[test]
        fn capacity_and_uniqueness_hold(cap in 1u64..6_000_000, ops in prop::collection::vec(op(), 1..80)) {
            let mut b = Buffer::new(cap);
            let mut t = 0.0;
            let mut next = 0usize;
            for op in ops {
                t += 7.0;
                match op {
                    Op::Insert(size) => {
                        let c = MessageCopy { message: msg(next, size, t, Some(30.0)), hop_count: 0, received_at: t };
                        next += 1;
                        let before = b.occupied();
                        let out = b.insert(c);
                        if !out.accepted {
                            prop_assert!(size > cap);
                            prop_assert_eq!(b.occupied(), before);
                        }
                    }
                    Op::Expire(now) => { b.expire(now); }
                    Op::Remove(i) => { b.remove(i); }
                }
                prop_assert!(b.occupied() <= b.capacity());
                prop_assert_eq!(b.occupied(), b.iter().map(|c| c.size()).sum::<u64>());
                let mut ids: Vec<_> = b.ids().collect();
                let n = ids.len();
                ids.sort_unstable();
                ids.dedup();
                prop_assert_eq!(ids.len(), n);
                let times: Vec<f64> = b.iter().map(|c| c.received_at).collect();
                prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
