use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::time::Millis;

struct Entry<E> {
    t: Millis,
    class: u8,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap
        other.key().cmp(&self.key())
    }
}

impl<E> Entry<E> {
    fn key(&self) -> (Millis, u8, u64) {
        (self.t, self.class, self.seq)
    }
}

/// Pending events ordered by (time, priority class, insertion order), so
/// equal-time events pop in a fixed order regardless of heap internals.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    seq: u64,
    now: Millis,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), seq: 0, now: Millis::ZERO }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    /// Schedules `event`. Panics if `t` lies in the past: that is a kernel bug.
    pub fn push(&mut self, t: Millis, class: u8, event: E) {
        assert!(t >= self.now, "event scheduled at {t} before now {}", self.now);
        self.seq += 1;
        self.heap.push(Entry { t, class, seq: self.seq, event });
    }

    pub fn pop(&mut self) -> Option<(Millis, E)> {
        let e = self.heap.pop()?;
        self.now = e.t;
        Some((e.t, e.event))
    }

    pub fn peek_time(&self) -> Option<Millis> {
        self.heap.peek().map(|e| e.t)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
