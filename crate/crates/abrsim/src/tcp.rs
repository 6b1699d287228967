//! TCP sender/receiver model: slow start, congestion avoidance, window
//! scaling (via a large static advertised window), an infinite data supply,
//! and the segment-to-cell encapsulation arithmetic.
//!
//! Recovery is timeout-only; with adequately sized switch buffers no loss
//! occurs and the retransmission path never runs, so the fast-retransmit
//! variants would behave identically.

use crate::fabric::{Cell, SegInfo, VcId};
use crate::time::SimTime;

/// TCP (20) + IP (20) + LLC/SNAP (8) + AAL5 trailer (8) bytes around each
/// segment before padding to 48-byte cell payloads.
pub const ENCAP_OVERHEAD_BYTES: u32 = 56;
pub const DEFAULT_MSS: u32 = 512;
pub const DEFAULT_MAX_WINDOW: u64 = 1_048_576; // 16 x 64 kB via window scaling
pub const DEFAULT_TIMER_GRANULARITY: SimTime = SimTime::from_ms(100);
const INITIAL_RTO: SimTime = SimTime::from_secs(1);
const MAX_RTO_BACKOFF: u32 = 6;

/// One TCP segment; `len = 0` with `is_ack` set is a pure ACK.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Segment {
    pub seq: u64,
    pub len: u32,
    pub is_ack: bool,
    pub ack_no: u64,
}

impl Segment {
    pub fn data(seq: u64, len: u32) -> Self {
        Segment {
            seq,
            len,
            is_ack: false,
            ack_no: 0,
        }
    }

    pub fn ack(ack_no: u64) -> Self {
        Segment {
            seq: 0,
            len: 0,
            is_ack: true,
            ack_no,
        }
    }
}

/// Number of 53-byte cells needed to carry a segment of `len` payload bytes:
/// headers + trailer added, then padded up to whole 48-byte cell payloads.
/// 512 bytes -> 12 cells (636 wire bytes); a pure ACK -> 2 cells.
pub fn segment_to_cells(len: u32) -> u32 {
    (len + ENCAP_OVERHEAD_BYTES).div_ceil(48)
}

/// Builds the data cells carrying one segment; `uid` must be unique per
/// encapsulated segment instance so the far end can detect frames corrupted
/// by cell loss.
pub fn encapsulate(vc: VcId, seg: Segment, uid: u64) -> impl Iterator<Item = Cell> {
    let of = segment_to_cells(seg.len) as u16;
    (0..of).map(move |idx| Cell::data(vc, SegInfo { uid, idx, of, seg }))
}

/// Rebuilds segments from in-order cells of one VC direction. A frame whose
/// cells went partially missing is discarded and counted; the stream
/// re-synchronizes at the next frame's first cell.
#[derive(Default)]
pub struct Reassembler {
    cur_uid: Option<u64>,
    got: u16,
    pub resync_drops: u64,
    last_delivered_uid: Option<u64>,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, info: SegInfo) -> Option<Segment> {
        if self.cur_uid != Some(info.uid) {
            if self.cur_uid.is_some() {
                // Previous frame never completed.
                self.resync_drops += 1;
            }
            if info.idx != 0 {
                // Mid-frame cell of a frame whose head was lost.
                self.cur_uid = None;
                self.got = 0;
                self.resync_drops += 1;
                return None;
            }
            self.cur_uid = Some(info.uid);
            self.got = 0;
        }
        self.got += 1;
        if info.idx + 1 == info.of {
            let complete = self.got == info.of;
            self.cur_uid = None;
            self.got = 0;
            if complete {
                // FIFO links deliver frames of one VC in emission order.
                debug_assert!(self.last_delivered_uid.is_none_or(|last| info.uid > last));
                self.last_delivered_uid = Some(info.uid);
                return Some(info.seg);
            }
            self.resync_drops += 1;
        }
        None
    }
}

/// What a sender wants done after processing an ACK.
#[derive(Default, Debug)]
pub struct AckResult {
    pub new_segments: Vec<Segment>,
    pub newly_acked: u64,
    /// A fresh round-trip sample was taken; the retransmission timer should
    /// be restarted (or cancelled when `restart_timer` is false).
    pub restart_timer: bool,
}

pub struct TcpSender {
    mss: u32,
    max_window: u64,
    /// Congestion window in bytes; fractional because congestion avoidance
    /// grows it by mss*mss/cwnd per ACK.
    cwnd: f64,
    ssthresh: f64,
    snd_una: u64,
    snd_nxt: u64,
    // Jacobson round-trip estimation, one timed segment at a time.
    srtt: Option<SimTime>,
    rttvar: SimTime,
    granularity: SimTime,
    rto_backoff: u32,
    timing: Option<(u64, SimTime)>,
    // Counters exported to run metrics.
    pub segments_sent: u64,
    pub retransmits: u64,
    pub timeouts: u64,
    pub dup_acks_seen: u64,
    pub max_flight: u64,
}

impl TcpSender {
    pub fn new(mss: u32, max_window: u64) -> Self {
        assert!(mss > 0);
        TcpSender {
            mss,
            max_window,
            cwnd: mss as f64,
            ssthresh: max_window as f64,
            snd_una: 0,
            snd_nxt: 0,
            srtt: None,
            rttvar: SimTime::ZERO,
            granularity: DEFAULT_TIMER_GRANULARITY,
            rto_backoff: 0,
            timing: None,
            segments_sent: 0,
            retransmits: 0,
            timeouts: 0,
            dup_acks_seen: 0,
            max_flight: 0,
        }
    }

    pub fn mss(&self) -> u32 {
        self.mss
    }

    pub fn cwnd(&self) -> f64 {
        self.cwnd
    }

    pub fn flight(&self) -> u64 {
        self.snd_nxt - self.snd_una
    }

    pub fn bytes_acked(&self) -> u64 {
        self.snd_una
    }

    fn window(&self) -> u64 {
        (self.cwnd.floor() as u64).min(self.max_window)
    }

    /// Emits as many new mss-sized segments as the window allows. The source
    /// is infinite, so there is always data; flight never exceeds
    /// min(cwnd, max_window).
    fn pump(&mut self, now: SimTime) -> Vec<Segment> {
        let mut out = Vec::new();
        while self.flight() + self.mss as u64 <= self.window() {
            let seg = Segment::data(self.snd_nxt, self.mss);
            self.snd_nxt += self.mss as u64;
            self.segments_sent += 1;
            if self.timing.is_none() {
                self.timing = Some((self.snd_nxt, now));
            }
            out.push(seg);
        }
        self.max_flight = self.max_flight.max(self.flight());
        debug_assert!(self.flight() <= self.window().max(self.mss as u64));
        out
    }

    /// The opening transmission (initial cwnd = 1 mss).
    pub fn initial_segments(&mut self, now: SimTime) -> Vec<Segment> {
        self.pump(now)
    }

    /// Cumulative-ACK processing. Duplicate and old ACKs leave the window
    /// unchanged; an ACK beyond snd_nxt is a protocol violation.
    pub fn on_ack(&mut self, ack_no: u64, now: SimTime) -> AckResult {
        assert!(
            ack_no <= self.snd_nxt,
            "ack {} beyond snd_nxt {}",
            ack_no,
            self.snd_nxt
        );
        if ack_no <= self.snd_una {
            self.dup_acks_seen += 1;
            return AckResult::default();
        }
        let newly_acked = ack_no - self.snd_una;
        self.snd_una = ack_no;

        if let Some((timed_end, sent_at)) = self.timing {
            if ack_no >= timed_end {
                self.take_rtt_sample(now - sent_at);
                self.timing = None;
            }
        }

        if self.cwnd < self.ssthresh {
            self.cwnd += self.mss as f64;
        } else {
            self.cwnd += (self.mss as f64) * (self.mss as f64) / self.cwnd;
        }
        self.cwnd = self.cwnd.min(self.max_window as f64);

        let new_segments = self.pump(now);
        AckResult {
            new_segments,
            newly_acked,
            restart_timer: self.flight() > 0,
        }
    }

    fn take_rtt_sample(&mut self, sample: SimTime) {
        match self.srtt {
            None => {
                self.srtt = Some(sample);
                self.rttvar = SimTime(sample.0 / 2);
            }
            Some(srtt) => {
                let err = if sample > srtt {
                    sample - srtt
                } else {
                    srtt - sample
                };
                self.rttvar = SimTime((3 * self.rttvar.0 + err.0) / 4);
                self.srtt = Some(SimTime((7 * srtt.0 + sample.0) / 8));
            }
        }
        self.rto_backoff = 0;
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.srtt
    }

    /// Current retransmission timeout: srtt + max(4*rttvar, granularity),
    /// never below twice the smoothed estimate so spurious timeouts cannot
    /// fire on a lossless path, exponentially backed off after losses.
    pub fn rto(&self) -> SimTime {
        let base = match self.srtt {
            None => INITIAL_RTO,
            Some(srtt) => {
                let var = SimTime((4 * self.rttvar.0).max(self.granularity.0));
                SimTime((srtt + var).0.max(2 * srtt.0))
            }
        };
        base * (1u64 << self.rto_backoff.min(MAX_RTO_BACKOFF))
    }

    /// Retransmission timeout: collapse to one segment and resend from
    /// snd_una. Returns the segment to retransmit.
    pub fn on_rto(&mut self) -> Segment {
        self.timeouts += 1;
        self.retransmits += 1;
        self.rto_backoff += 1;
        let flight = self.flight() as f64;
        self.ssthresh = (flight / 2.0).max(2.0 * self.mss as f64);
        self.cwnd = self.mss as f64;
        self.timing = None; // Karn: never time a retransmitted segment.
        Segment::data(self.snd_una, self.mss)
    }
}

pub struct TcpReceiver {
    rcv_nxt: u64,
    adv_window: u64,
    pub dup_segments: u64,
}

impl TcpReceiver {
    pub fn new(adv_window: u64) -> Self {
        TcpReceiver {
            rcv_nxt: 0,
            adv_window,
            dup_segments: 0,
        }
    }

    pub fn delivered_bytes(&self) -> u64 {
        self.rcv_nxt
    }

    pub fn adv_window(&self) -> u64 {
        self.adv_window
    }

    /// Cumulative ACK per data segment, no delayed ACKs. Out-of-order or
    /// duplicate segments do not advance rcv_nxt and produce a duplicate ACK.
    pub fn on_segment(&mut self, seg: &Segment) -> Segment {
        debug_assert!(!seg.is_ack);
        if seg.seq == self.rcv_nxt {
            self.rcv_nxt += seg.len as u64;
        } else {
            self.dup_segments += 1;
        }
        Segment::ack(self.rcv_nxt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encapsulation_cell_counts() {
        assert_eq!(segment_to_cells(512), 12); // 636 wire bytes
        assert_eq!(segment_to_cells(0), 2); // pure ACK, 56 overhead bytes
        assert_eq!(segment_to_cells(40), 2); // 96 = 2 x 48 exact fit
    }

    proptest! {
        #[test]
        fn encapsulation_padding_bounds(len in 0u32..20_000) {
            let cells = segment_to_cells(len);
            let payload = len + ENCAP_OVERHEAD_BYTES;
            prop_assert!(cells * 48 >= payload);
            prop_assert!((cells - 1) * 48 < payload);
        }
    }

    #[test]
    fn slow_start_doubles_per_round() {
        let mut tx = TcpSender::new(512, DEFAULT_MAX_WINDOW);
        let now = SimTime::ZERO;
        // Force cwnd = 4 mss with 4 segments in flight.
        tx.cwnd = 4.0 * 512.0;
        let segs = tx.pump(now);
        assert_eq!(segs.len(), 4);
        let mut in_flight: Vec<Segment> = segs;
        let mut sent_this_round = Vec::new();
        for seg in in_flight.drain(..) {
            let res = tx.on_ack(seg.seq + seg.len as u64, now + SimTime::from_ms(30));
            sent_this_round.extend(res.new_segments);
        }
        assert_eq!(tx.cwnd(), 8.0 * 512.0);
        assert_eq!(sent_this_round.len(), 8);
    }

    #[test]
    fn congestion_avoidance_linear_growth() {
        let mut tx = TcpSender::new(512, DEFAULT_MAX_WINDOW);
        tx.cwnd = 100.0 * 512.0;
        tx.ssthresh = 100.0 * 512.0;
        tx.snd_nxt = 512;
        let res = tx.on_ack(512, SimTime::from_ms(1));
        assert!(res.newly_acked == 512);
        let expect = 100.0 * 512.0 + 512.0 / 100.0;
        assert!((tx.cwnd() - expect).abs() < 1e-9, "cwnd {}", tx.cwnd());
    }

    #[test]
    fn window_growth_caps_at_max_window() {
        let mut tx = TcpSender::new(512, 4096);
        tx.cwnd = 4096.0;
        let segs = tx.pump(SimTime::ZERO);
        assert_eq!(segs.len(), 8);
        let res = tx.on_ack(512, SimTime::from_ms(1));
        assert!(tx.cwnd() <= 4096.0);
        assert_eq!(res.new_segments.len(), 1);
        assert!(tx.flight() <= 4096);
    }

    #[test]
    fn duplicate_ack_leaves_window_unchanged() {
        let mut tx = TcpSender::new(512, DEFAULT_MAX_WINDOW);
        let _ = tx.initial_segments(SimTime::ZERO);
        let _ = tx.on_ack(512, SimTime::from_ms(1));
        let cwnd = tx.cwnd();
        let res = tx.on_ack(512, SimTime::from_ms(2));
        assert_eq!(tx.cwnd(), cwnd);
        assert!(res.new_segments.is_empty());
        assert_eq!(tx.dup_acks_seen, 1);
    }

    #[test]
    #[should_panic(expected = "beyond snd_nxt")]
    fn ack_beyond_snd_nxt_is_fatal() {
        let mut tx = TcpSender::new(512, DEFAULT_MAX_WINDOW);
        let _ = tx.initial_segments(SimTime::ZERO);
        let _ = tx.on_ack(8192, SimTime::from_ms(1));
    }

    #[test]
    fn rto_collapses_window_and_retransmits_from_una() {
        let mut tx = TcpSender::new(512, DEFAULT_MAX_WINDOW);
        tx.cwnd = 16.0 * 512.0;
        let _ = tx.pump(SimTime::ZERO);
        let flight = tx.flight();
        let seg = tx.on_rto();
        assert_eq!(seg.seq, 0);
        assert_eq!(tx.cwnd(), 512.0);
        assert_eq!(tx.timeouts, 1);
        assert!((tx.ssthresh - (flight as f64 / 2.0).max(1024.0)).abs() < 1e-9);
    }

    #[test]
    fn rto_at_least_twice_steady_state_rtt() {
        let mut tx = TcpSender::new(512, DEFAULT_MAX_WINDOW);
        let rtt = SimTime::from_ms(30);
        let mut now = SimTime::ZERO;
        for _ in 0..50 {
            let segs = if tx.flight() == 0 {
                tx.pump(now)
            } else {
                Vec::new()
            };
            let _ = segs;
            now += rtt;
            let _ = tx.on_ack(tx.snd_nxt, now);
        }
        let srtt = tx.srtt().unwrap();
        assert!(srtt >= SimTime::from_ms(29) && srtt <= SimTime::from_ms(31));
        assert!(tx.rto() >= srtt * 2);
    }

    #[test]
    fn encapsulate_and_reassemble_round_trip() {
        let seg = Segment::data(4096, 512);
        let cells: Vec<_> = encapsulate(VcId(1), seg, 7).collect();
        assert_eq!(cells.len(), 12);
        let mut r = Reassembler::new();
        let mut delivered = None;
        for c in &cells {
            if let crate::fabric::CellKind::Data(info) = c.kind {
                if let Some(s) = r.push(info) {
                    delivered = Some(s);
                }
            }
        }
        assert_eq!(delivered, Some(seg));
        assert_eq!(r.resync_drops, 0);
    }

    #[test]
    fn reassembler_discards_frames_with_missing_cells() {
        let seg_a = Segment::data(0, 512);
        let seg_b = Segment::data(512, 512);
        let cells_a: Vec<_> = encapsulate(VcId(0), seg_a, 1).collect();
        let cells_b: Vec<_> = encapsulate(VcId(0), seg_b, 2).collect();
        let mut r = Reassembler::new();
        let mut delivered = Vec::new();
        // Drop one mid-frame cell of A; B must still come through.
        for (i, c) in cells_a.iter().enumerate() {
            if i == 5 {
                continue;
            }
            if let crate::fabric::CellKind::Data(info) = c.kind {
                if let Some(s) = r.push(info) {
                    delivered.push(s);
                }
            }
        }
        for c in &cells_b {
            if let crate::fabric::CellKind::Data(info) = c.kind {
                if let Some(s) = r.push(info) {
                    delivered.push(s);
                }
            }
        }
        assert_eq!(delivered, vec![seg_b]);
        assert!(r.resync_drops > 0);
    }

    #[test]
    fn receiver_cumulative_acks() {
        let mut rx = TcpReceiver::new(DEFAULT_MAX_WINDOW);
        let ack = rx.on_segment(&Segment::data(0, 512));
        assert_eq!(ack.ack_no, 512);
        assert!(ack.is_ack);
        // Duplicate: same segment again.
        let ack = rx.on_segment(&Segment::data(0, 512));
        assert_eq!(ack.ack_no, 512);
        assert_eq!(rx.dup_segments, 1);
        // 1000 in-order segments => 1000 ACKs, ack-per-segment policy.
        let mut acks = 0;
        for i in 0..1000u64 {
            let a = rx.on_segment(&Segment::data(512 + i * 512, 512));
            assert_eq!(a.ack_no, 1024 + i * 512);
            acks += 1;
        }
        assert_eq!(acks, 1000);
        assert_eq!(rx.delivered_bytes(), 512 + 1000 * 512);
    }
}
