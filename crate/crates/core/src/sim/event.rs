use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use super::mac::Frame;
use crate::model::{NodeId, SimTime};

#[derive(Debug, Clone)]
pub enum EventKind {
    HelloTimer(NodeId),
    TcTimer(NodeId),
    TrafficGen(usize),
    TxStart(NodeId),
    TxEnd(NodeId, Arc<Frame>),
    Delivery(NodeId, Arc<Frame>),
    MobilityUpdate(NodeId),
    MetricSample,
    End,
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap and we pop the earliest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pending events ordered by `(time, seq)`; `seq` is assigned at scheduling.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn schedule(&mut self, time: SimTime, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.heap.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_time_then_seq_order() {
        let mut q = EventQueue::default();
        q.schedule(2.0, EventKind::MetricSample);
        q.schedule(1.0, EventKind::HelloTimer(NodeId(1)));
        q.schedule(1.0, EventKind::HelloTimer(NodeId(0)));
        q.schedule(0.5, EventKind::End);
        let order: Vec<(f64, u64)> = std::iter::from_fn(|| q.pop()).map(|e| (e.time, e.seq)).collect();
        assert_eq!(order, vec![(0.5, 3), (1.0, 1), (1.0, 2), (2.0, 0)]);
    }
}
