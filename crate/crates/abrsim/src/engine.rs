//! Deterministic discrete-event core.
//!
//! A priority queue of timestamped events executed in (fire_at, insertion
//! sequence) order. The FIFO tie-break on equal timestamps makes the full
//! event trace reproducible, which in turn makes queue maxima and CSV output
//! bit-identical across runs of the same scenario.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::time::SimTime;

/// Identifies a scheduled event so it can be cancelled later.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EventHandle {
    seq: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CancelOutcome {
    Cancelled,
    /// The event already executed (or was already cancelled); cancelling is
    /// idempotent.
    AlreadyFired,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ExecutionStats {
    pub executed: u64,
    pub final_time: SimTime,
}

struct Entry<E> {
    fire_at: SimTime,
    seq: u64,
    event: E,
}

// BinaryHeap is a max-heap; invert the ordering so the earliest
// (fire_at, seq) pair pops first.
impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

/// The simulated-time event queue. `E` is the event payload type; the engine
/// never inspects it.
pub struct Engine<E> {
    now: SimTime,
    heap: BinaryHeap<Entry<E>>,
    pending: HashSet<u64>,
    next_seq: u64,
    scheduled: u64,
    executed: u64,
    cancelled: u64,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            heap: BinaryHeap::new(),
            pending: HashSet::new(),
            next_seq: 0,
            scheduled: 0,
            executed: 0,
            cancelled: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Schedules `event` at absolute time `fire_at`.
    ///
    /// Scheduling in the past is a contract violation and panics.
    pub fn schedule_at(&mut self, fire_at: SimTime, event: E) -> EventHandle {
        assert!(
            fire_at >= self.now,
            "event scheduled in the past: fire_at={} now={}",
            fire_at,
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.scheduled += 1;
        self.pending.insert(seq);
        self.heap.push(Entry {
            fire_at,
            seq,
            event,
        });
        EventHandle { seq }
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> EventHandle {
        self.schedule_at(self.now + delay, event)
    }

    /// Cancels a pending event. A cancelled event never executes; cancelling
    /// an event that already fired (or was already cancelled) reports
    /// `AlreadyFired`.
    pub fn cancel(&mut self, handle: EventHandle) -> CancelOutcome {
        if self.pending.remove(&handle.seq) {
            self.cancelled += 1;
            CancelOutcome::Cancelled
        } else {
            CancelOutcome::AlreadyFired
        }
    }

    /// Pops the next live event with fire_at <= t_end, advancing `now`.
    fn pop_due(&mut self, t_end: SimTime) -> Option<(SimTime, E)> {
        loop {
            let head_due = match self.heap.peek() {
                Some(entry) => entry.fire_at <= t_end,
                None => false,
            };
            if !head_due {
                return None;
            }
            let entry = self.heap.pop().expect("peeked entry");
            if self.pending.remove(&entry.seq) {
                debug_assert!(entry.fire_at >= self.now, "time went backwards");
                self.now = entry.fire_at;
                self.executed += 1;
                return Some((entry.fire_at, entry.event));
            }
            // Cancelled entry: discard and keep looking.
        }
    }

    /// Executes all events with fire_at <= t_end in (fire_at, seq) order,
    /// handing each to `handler` together with the engine so the handler can
    /// schedule follow-ups. Leaves `now` at t_end.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> ExecutionStats
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        let before = self.executed;
        while let Some((at, event)) = self.pop_due(t_end) {
            handler(self, at, event);
        }
        if t_end > self.now {
            self.now = t_end;
        }
        ExecutionStats {
            executed: self.executed - before,
            final_time: self.now,
        }
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// (scheduled, executed, cancelled, pending) counters; scheduled is
    /// always the sum of the other three.
    pub fn counters(&self) -> (u64, u64, u64, u64) {
        (
            self.scheduled,
            self.executed,
            self.cancelled,
            self.pending.len() as u64,
        )
    }

    /// Iterates over the payloads of still-pending (not cancelled) events,
    /// in no particular order. Used by conservation audits at end of run.
    pub fn pending_events(&self) -> impl Iterator<Item = &E> {
        self.heap
            .iter()
            .filter(|entry| self.pending.contains(&entry.seq))
            .map(|entry| &entry.event)
    }
}
