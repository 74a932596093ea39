use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    CamGeneration { vehicle: usize },
    /// AIFS plus backoff countdown of an ITS-G5 station expired.
    AccessTimer { vehicle: usize, token: u64 },
    TxEnd { tx: usize },
    TtiBoundary { tti: u64 },
    MobilityUpdate,
    RunEnd,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::CamGeneration { .. } => "CamGeneration",
            EventKind::AccessTimer { .. } => "AccessTimer",
            EventKind::TxEnd { .. } => "TxEnd",
            EventKind::TtiBoundary { .. } => "TtiBoundary",
            EventKind::MobilityUpdate => "MobilityUpdate",
            EventKind::RunEnd => "RunEnd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time_us: Micros,
    pub sequence: u64,
    pub kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        (other.time_us, other.sequence).cmp(&(self.time_us, self.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Future event set ordered by `(time, insertion sequence)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_sequence: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time_us: Micros, kind: EventKind) {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Event { time_us, sequence, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn pops_in_time_then_insertion_order(times in proptest::collection::vec(0u64..50, 0..200)) {
            let mut q = EventQueue::new();
            for &t in &times {
                q.schedule(t, EventKind::MobilityUpdate);
            }
            let mut prev: Option<Event> = None;
            while let Some(e) = q.pop() {
                if let Some(p) = prev {
                    prop_assert!((p.time_us, p.sequence) < (e.time_us, e.sequence));
                }
                prev = Some(e);
            }
        }
    }
}
