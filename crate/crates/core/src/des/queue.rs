use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use super::signal::Signal;
use super::time::SimTime;
use super::DesError;

/// One signal arriving at one input port.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: SimTime,
    pub target: usize,
    pub port: String,
    pub signal: Signal,
    pub sequence: u64,
}

impl SimEvent {
    fn key(&self) -> (SimTime, usize, u64) {
        (self.time, self.target, self.sequence)
    }
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All signals delivered to one device at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedEvent {
    pub time: SimTime,
    pub target: usize,
    pub inputs: BTreeMap<String, Signal>,
    /// Sequence number of the earliest constituent event.
    pub sequence: u64,
}

/// Min-queue ordered by `(time, target device, sequence)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<SimEvent>>,
    next_sequence: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: SimTime, target: usize, port: String, signal: Signal) -> u64 {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Reverse(SimEvent { time, target, port, signal, sequence }));
        sequence
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    /// Pops the next event together with every other event sharing its
    /// `(time, target)`.
    pub fn merge_simultaneous(&mut self) -> Result<Option<MergedEvent>, DesError> {
        let Some(Reverse(first)) = self.heap.pop() else {
            return Ok(None);
        };
        let mut merged = MergedEvent {
            time: first.time,
            target: first.target,
            inputs: BTreeMap::from([(first.port, first.signal)]),
            sequence: first.sequence,
        };
        while let Some(Reverse(next)) = self.heap.peek() {
            if next.time != merged.time || next.target != merged.target {
                break;
            }
            let Reverse(next) = self.heap.pop().expect("peeked");
            if merged.inputs.contains_key(&next.port) {
                return Err(DesError::PortConflict { device: format!("#{}", merged.target), port: next.port, time: merged.time });
            }
            merged.inputs.insert(next.port, next.signal);
        }
        Ok(Some(merged))
    }
}
