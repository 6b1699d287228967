//! Explicit-rate allocation at a switch output port.
//!
//! Per averaging interval (ending after a fixed time or a fixed cell count,
//! whichever comes first) the port measures its input load and active VC
//! set, then derives an overload factor z = input rate / (target utilization
//! x link rate) and a fair share = target capacity / active VCs. Backward RM
//! cells passing the port in the reverse direction are stamped with
//! min(ER, max(fair share, CCR/z)) capped at the link cell rate, so sources
//! converge to max-min rates at the configured target utilization.

use crate::fabric::{CellRate, VcId};
use crate::time::{SimTime, PS_PER_SEC};

/// Lower clamp on the overload factor; keeps CCR/z finite across idle or
/// nearly idle intervals.
pub const MIN_OVERLOAD: f64 = 0.01;

#[derive(Clone, Copy, Debug)]
pub struct EricaParams {
    pub target_utilization: f64,
    pub interval_time: SimTime,
    pub interval_cells: u64,
}

impl Default for EricaParams {
    fn default() -> Self {
        EricaParams {
            target_utilization: 0.90,
            interval_time: SimTime::from_ms(1),
            interval_cells: 100,
        }
    }
}

/// Per-port allocation state. VC identifiers index the `active`/`last_ccr`
/// tables, so they must be dense within a port.
pub struct EricaPort {
    pub params: EricaParams,
    link_cell_rate: CellRate,
    abr_capacity: CellRate,
    // Current interval accumulator.
    start: SimTime,
    cells_in: u64,
    active: Vec<bool>,
    active_count: u32,
    /// Most recent CCR seen in a forward RM per VC; persists across
    /// intervals so backward RMs can be stamped when the VC sent no forward
    /// RM this interval.
    last_ccr: Vec<Option<CellRate>>,
    // Allocation derived from the last non-empty interval.
    z: f64,
    n_active: u32,
    fair_share: CellRate,
    pub intervals_completed: u64,
}

impl EricaPort {
    pub fn new(n_vcs: usize, link_cell_rate: CellRate, params: EricaParams) -> Self {
        assert!(params.target_utilization > 0.0 && params.target_utilization <= 1.0);
        let abr_capacity = params.target_utilization * link_cell_rate;
        EricaPort {
            params,
            link_cell_rate,
            abr_capacity,
            start: SimTime::ZERO,
            cells_in: 0,
            active: vec![false; n_vcs],
            active_count: 0,
            last_ccr: vec![None; n_vcs],
            z: 1.0,
            n_active: 0,
            fair_share: abr_capacity,
            intervals_completed: 0,
        }
    }

    pub fn abr_capacity(&self) -> CellRate {
        self.abr_capacity
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn n_active(&self) -> u32 {
        self.n_active
    }

    pub fn fair_share(&self) -> CellRate {
        self.fair_share
    }

    pub fn interval_start(&self) -> SimTime {
        self.start
    }

    pub fn cells_this_interval(&self) -> u64 {
        self.cells_in
    }

    /// True once the current interval has run its full length or taken its
    /// full cell budget, whichever happened first.
    pub fn interval_boundary(&self, now: SimTime) -> bool {
        now - self.start >= self.params.interval_time || self.cells_in >= self.params.interval_cells
    }

    /// Accounts one ABR cell (data or RM) arriving for this port. A stale
    /// interval is closed by time before the cell is counted; reaching the
    /// cell budget closes the interval with this cell included. Returns
    /// whether an interval ended.
    pub fn on_cell_arrival(&mut self, vc: VcId, frm_ccr: Option<CellRate>, now: SimTime) -> bool {
        let mut ended = false;
        if self.interval_boundary(now) {
            self.end_interval(now);
            ended = true;
        }
        self.cells_in += 1;
        if !self.active[vc.index()] {
            self.active[vc.index()] = true;
            self.active_count += 1;
        }
        if let Some(ccr) = frm_ccr {
            self.last_ccr[vc.index()] = Some(ccr);
        }
        if self.cells_in >= self.params.interval_cells {
            self.end_interval(now);
            ended = true;
        }
        ended
    }

    /// Closes the measurement interval: recomputes z, the active count and
    /// the fair share, then resets the accumulator. An interval that saw no
    /// traffic retains the previous allocation.
    pub fn end_interval(&mut self, now: SimTime) {
        let dt = now - self.start;
        assert!(!dt.is_zero(), "zero-length averaging interval");
        if self.active_count > 0 {
            let input_rate = self.cells_in as f64 * PS_PER_SEC as f64 / dt.as_ps() as f64;
            self.z = (input_rate / self.abr_capacity).max(MIN_OVERLOAD);
            self.n_active = self.active_count;
            self.fair_share = self.abr_capacity / self.n_active as f64;
        }
        self.start = now;
        self.cells_in = 0;
        self.active.fill(false);
        self.active_count = 0;
        self.intervals_completed += 1;
    }

    /// Explicit rate for a backward RM of `vc` currently carrying `er`:
    /// min(er, min(max(fair share, CCR/z), link rate)). Stamping only ever
    /// lowers the carried ER, so it is non-increasing along the path.
    pub fn stamp_er(&self, vc: VcId, er: CellRate) -> CellRate {
        let vc_share = match self.last_ccr[vc.index()] {
            Some(ccr) => ccr / self.z,
            None => 0.0,
        };
        let er_calc = self.fair_share.max(vc_share).min(self.link_cell_rate);
        er.min(er_calc)
    }
}
