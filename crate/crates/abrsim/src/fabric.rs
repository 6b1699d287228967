//! ATM-layer pieces: cells, virtual circuits, link timing, and switch output
//! ports with FIFO queues. The bottleneck port's queue is where the buffer
//! bound under study is measured.

use std::collections::VecDeque;

use crate::tcp::Segment;
use crate::time::SimTime;

pub const CELL_BYTES: u32 = 53;
pub const CELL_BITS: u64 = 424;
pub const CELL_PAYLOAD_BYTES: u32 = 48;
/// One in-rate forward RM cell per this many cells sent on a VC.
pub const NRM: u32 = 32;

/// Cell rate in cells per second.
pub type CellRate = f64;

/// Cells per second a link of `bps` bits/s can carry.
pub fn link_cell_rate(bps: f64) -> CellRate {
    bps / CELL_BITS as f64
}

/// Time to serialize one 53-byte cell onto a link of `bps` bits/s, rounded
/// to whole picoseconds. 155.52 Mbps -> 2,726,337 ps.
pub fn cell_time(bps: f64) -> SimTime {
    SimTime(((CELL_BITS as f64) * 1e12 / bps).round() as u64)
}

/// Propagation delay over `km` of fiber at 5 us/km.
pub fn propagation_delay(km: f64) -> SimTime {
    SimTime((km * 5e6).round() as u64)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct VcId(pub u32);

impl VcId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ties a data cell to its position within an encapsulated segment so the
/// far end can reassemble (and detect frames corrupted by cell loss).
#[derive(Clone, Copy, Debug)]
pub struct SegInfo {
    /// Unique per encapsulated segment instance within a run.
    pub uid: u64,
    pub idx: u16,
    pub of: u16,
    pub seg: Segment,
}

#[derive(Clone, Copy, Debug)]
pub enum CellKind {
    Data(SegInfo),
    ForwardRm { er: CellRate, ccr: CellRate },
    BackwardRm { er: CellRate, ccr: CellRate },
}

/// One 53-byte ATM cell.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub vc: VcId,
    pub kind: CellKind,
}

impl Cell {
    pub fn data(vc: VcId, info: SegInfo) -> Self {
        Cell {
            vc,
            kind: CellKind::Data(info),
        }
    }

    pub fn forward_rm(vc: VcId, er: CellRate, ccr: CellRate) -> Self {
        debug_assert!(er > 0.0 && ccr >= 0.0);
        Cell {
            vc,
            kind: CellKind::ForwardRm { er, ccr },
        }
    }

    pub fn is_backward_rm(&self) -> bool {
        matches!(self.kind, CellKind::BackwardRm { .. })
    }
}

/// Propagation delay seen by a cell on a link; the shared inter-switch link
/// keeps per-VC delays so heterogeneous path lengths share one transmitter.
#[derive(Clone, Debug)]
pub enum PropDelay {
    Uniform(SimTime),
    PerVc(Vec<SimTime>),
}

impl PropDelay {
    pub fn for_vc(&self, vc: VcId) -> SimTime {
        match self {
            PropDelay::Uniform(d) => *d,
            PropDelay::PerVc(v) => v[vc.index()],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EnqueueOutcome {
    /// Port was idle; caller must start serializing the head cell now.
    AcceptedStartTx,
    /// Cell queued behind the one in service.
    AcceptedQueued,
    /// Drop-tail: buffer full, cell discarded.
    Dropped,
}

/// A switch or host output port: one FIFO of whole cells feeding one link
/// transmitter. Depth counts every buffered cell including the one being
/// serialized; `capacity` bounds that same count.
#[derive(Debug)]
pub struct Port {
    queue: VecDeque<Cell>,
    capacity: Option<u32>,
    busy: bool,
    max_depth: u32,
    drops: u64,
    pub ser: SimTime,
    pub prop: PropDelay,
}

impl Port {
    pub fn new(ser: SimTime, prop: PropDelay, capacity: Option<u32>) -> Self {
        Port {
            queue: VecDeque::new(),
            capacity,
            busy: false,
            max_depth: 0,
            drops: 0,
            ser,
            prop,
        }
    }

    pub fn depth(&self) -> u32 {
        self.queue.len() as u32
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn drops(&self) -> u64 {
        self.drops
    }

    pub fn is_busy(&self) -> bool {
        self.busy
    }

    /// Drop-tail enqueue. On `AcceptedStartTx` the caller schedules the
    /// serialization-complete event `ser` from now.
    pub fn enqueue(&mut self, cell: Cell) -> EnqueueOutcome {
        if let Some(cap) = self.capacity {
            if self.depth() >= cap {
                self.drops += 1;
                return EnqueueOutcome::Dropped;
            }
        }
        // Work conservation: an idle transmitter implies an empty queue.
        debug_assert!(self.busy || self.queue.is_empty());
        self.queue.push_back(cell);
        self.max_depth = self.max_depth.max(self.depth());
        if self.busy {
            EnqueueOutcome::AcceptedQueued
        } else {
            self.busy = true;
            EnqueueOutcome::AcceptedStartTx
        }
    }

    /// Serialization of the head cell finished: pop it for propagation and
    /// report whether another transmission starts immediately.
    pub fn tx_done(&mut self) -> (Cell, bool) {
        let done = self.queue.pop_front().expect("tx_done on empty port");
        if self.queue.is_empty() {
            self.busy = false;
            (done, false)
        } else {
            (done, true)
        }
    }
}
