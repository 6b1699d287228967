//! The wired n-source simulation: n TCP/ABR sources feed switch 1, whose
//! output port onto the inter-switch link is the measured bottleneck;
//! switch 2 fans out to n destinations. ACKs and backward RM cells return
//! over reverse ports that are never the bottleneck.
//!
//! Forward path of VC i:   source i -> sw1 [bottleneck port] -> sw2 -> dest i
//! Reverse path of VC i:   dest i -> sw2 [rev port] -> sw1 -> source i
//!
//! The inter-switch link has one shared transmitter but per-VC propagation
//! delay, so heterogeneous path lengths contend for the same capacity.
//! Explicit-rate allocation runs at switch 1's bottleneck port and at each
//! of switch 2's per-destination ports; backward RM cells are stamped at
//! each switch they traverse.

use crate::abr::{AbrDest, AbrSource};
use crate::engine::{Engine, EventHandle};
use crate::erica::EricaPort;
use crate::experiments::{RunDiagnostics, RunMetrics, ScenarioConfig};
use crate::fabric::{
    cell_time, link_cell_rate, propagation_delay, Cell, CellKind, EnqueueOutcome, Port, PropDelay,
    VcId,
};
use crate::tcp::{encapsulate, Reassembler, Segment, TcpReceiver, TcpSender};
use crate::time::SimTime;

/// Per-VC hop lengths and the delays they imply.
pub struct Topology {
    pub n: usize,
    pub hops_km: Vec<[f64; 3]>,
    pub rtt: Vec<SimTime>,
    pub fbd: Vec<SimTime>,
    pub rtt_max: SimTime,
    pub fbd_max: SimTime,
    pub pcr: f64,
    pub cell_rate: f64,
    pub ser: SimTime,
}

impl Topology {
    /// Derives the three-hop path of every VC from the scenario. With
    /// `fbd_km` set, the first hop length is fixed to it and the remaining
    /// distance is split over the other two hops, so feedback delay and RTT
    /// vary independently.
    pub fn build(cfg: &ScenarioConfig) -> Topology {
        let n = cfg.n_sources;
        let mut hops_km = Vec::with_capacity(n);
        for i in 0..n {
            let base = cfg.link_km_for(i);
            let hops = match cfg.fbd_km {
                Some(first) => {
                    let rest = 3.0 * base - first;
                    [first, rest / 2.0, rest / 2.0]
                }
                None => [base, base, base],
            };
            hops_km.push(hops);
        }
        let rtt: Vec<SimTime> = hops_km
            .iter()
            .map(|h| propagation_delay(h[0] + h[1] + h[2]) * 2)
            .collect();
        let fbd: Vec<SimTime> = hops_km.iter().map(|h| propagation_delay(h[0]) * 2).collect();
        let rtt_max = rtt.iter().copied().max().unwrap();
        let fbd_max = fbd.iter().copied().max().unwrap();
        let cell_rate = link_cell_rate(cfg.link_rate_bps);
        Topology {
            n,
            hops_km,
            rtt,
            fbd,
            rtt_max,
            fbd_max,
            pcr: cell_rate,
            cell_rate,
            ser: cell_time(cfg.link_rate_bps),
        }
    }
}

#[derive(Clone, Debug)]
enum Ev {
    Pacing { src: usize },
    TxDone { port: usize },
    Arrive { port: usize, cell: Cell },
    EricaTick { erica: usize },
    Rto { src: usize },
    WarmupSnapshot,
}

/// Where a cell lands when it finishes crossing the link fed by a port.
enum Hop {
    Switch1Fwd,
    Switch2Fwd,
    DestHost(usize),
    Switch2Rev,
    Switch1Rev,
    SourceHost(usize),
}

/// One completed measurement interval at the bottleneck port.
#[derive(Clone, Copy, Debug)]
pub struct EricaIntervalRow {
    pub at: SimTime,
    pub z: f64,
    pub n_active: u32,
    pub fair_share: f64,
    pub queue_depth: u32,
}

pub struct SimOutput {
    pub metrics: RunMetrics,
    pub queue_trace: Vec<(SimTime, u32)>,
    pub erica_trace: Vec<EricaIntervalRow>,
}

struct World {
    n: usize,
    bottleneck: usize,
    rev_mid: usize,
    ports: Vec<Port>,
    /// Index 0: switch 1 bottleneck port; 1 + i: switch 2 port to dest i.
    ericas: Vec<EricaPort>,
    sources: Vec<AbrSource>,
    dests: Vec<AbrDest>,
    senders: Vec<TcpSender>,
    receivers: Vec<TcpReceiver>,
    reasm_fwd: Vec<Reassembler>,
    reasm_rev: Vec<Reassembler>,
    rto_handles: Vec<Option<EventHandle>>,
    next_uid: u64,
    rtt_window: SimTime,
    // Measurement state.
    cells_arrived_dest: Vec<u64>,
    frm_turned: u64,
    delivered_at_warmup: Vec<u64>,
    bottleneck_cells_out: u64,
    bytes_sent_per_window: Vec<u64>,
    first_rate_limited_at: Vec<Option<SimTime>>,
    trace_queue: bool,
    trace_erica: bool,
    queue_trace: Vec<(SimTime, u32)>,
    erica_trace: Vec<EricaIntervalRow>,
}

impl World {
    fn new(cfg: &ScenarioConfig, topo: &Topology) -> World {
        let n = topo.n;
        let mut ports = Vec::with_capacity(4 * n + 2);
        // Forward access links: source i -> switch 1.
        for i in 0..n {
            ports.push(Port::new(
                topo.ser,
                PropDelay::Uniform(propagation_delay(topo.hops_km[i][0])),
                None,
            ));
        }
        // Bottleneck: switch 1 -> switch 2, shared transmitter.
        ports.push(Port::new(
            topo.ser,
            PropDelay::PerVc(
                topo.hops_km
                    .iter()
                    .map(|h| propagation_delay(h[1]))
                    .collect(),
            ),
            cfg.buffer_cells,
        ));
        // Switch 2 -> dest i.
        for i in 0..n {
            ports.push(Port::new(
                topo.ser,
                PropDelay::Uniform(propagation_delay(topo.hops_km[i][2])),
                cfg.buffer_cells,
            ));
        }
        // Reverse: dest i -> switch 2.
        for i in 0..n {
            ports.push(Port::new(
                topo.ser,
                PropDelay::Uniform(propagation_delay(topo.hops_km[i][2])),
                None,
            ));
        }
        // Reverse inter-switch: switch 2 -> switch 1.
        ports.push(Port::new(
            topo.ser,
            PropDelay::PerVc(
                topo.hops_km
                    .iter()
                    .map(|h| propagation_delay(h[1]))
                    .collect(),
            ),
            None,
        ));
        // Reverse access: switch 1 -> source i.
        for i in 0..n {
            ports.push(Port::new(
                topo.ser,
                PropDelay::Uniform(propagation_delay(topo.hops_km[i][0])),
                None,
            ));
        }

        let mut ericas = Vec::with_capacity(n + 1);
        ericas.push(EricaPort::new(n, topo.cell_rate, cfg.erica));
        for _ in 0..n {
            ericas.push(EricaPort::new(n, topo.cell_rate, cfg.erica));
        }

        let icr = cfg.icr.unwrap_or(topo.pcr);
        let sources = (0..n)
            .map(|i| AbrSource::new(VcId(i as u32), topo.pcr, icr, cfg.acr_floor))
            .collect();
        let dests = (0..n).map(|i| AbrDest::new(VcId(i as u32))).collect();
        let senders = (0..n)
            .map(|_| TcpSender::new(cfg.mss, cfg.max_window))
            .collect();
        let receivers = (0..n).map(|_| TcpReceiver::new(cfg.max_window)).collect();

        World {
            n,
            bottleneck: n,
            rev_mid: 3 * n + 1,
            ports,
            ericas,
            sources,
            dests,
            senders,
            receivers,
            reasm_fwd: (0..n).map(|_| Reassembler::new()).collect(),
            reasm_rev: (0..n).map(|_| Reassembler::new()).collect(),
            rto_handles: vec![None; n],
            next_uid: 0,
            rtt_window: topo.rtt_max,
            cells_arrived_dest: vec![0; n],
            frm_turned: 0,
            delivered_at_warmup: vec![0; n],
            bottleneck_cells_out: 0,
            bytes_sent_per_window: Vec::new(),
            first_rate_limited_at: vec![None; n],
            trace_queue: cfg.queue_trace,
            trace_erica: cfg.erica_trace,
            queue_trace: Vec::new(),
            erica_trace: Vec::new(),
        }
    }

    fn src_fwd(&self, i: usize) -> usize {
        i
    }

    fn dest_fwd(&self, i: usize) -> usize {
        self.n + 1 + i
    }

    fn rev_dest(&self, i: usize) -> usize {
        2 * self.n + 1 + i
    }

    fn rev_src(&self, i: usize) -> usize {
        3 * self.n + 2 + i
    }

    fn classify(&self, port: usize) -> Hop {
        let n = self.n;
        if port < n {
            Hop::Switch1Fwd
        } else if port == n {
            Hop::Switch2Fwd
        } else if port < 2 * n + 1 {
            Hop::DestHost(port - (n + 1))
        } else if port < 3 * n + 1 {
            Hop::Switch2Rev
        } else if port == 3 * n + 1 {
            Hop::Switch1Rev
        } else {
            Hop::SourceHost(port - (3 * n + 2))
        }
    }

    /// Seeds the event queue: opening TCP windows, pacing slots, averaging
    /// interval timers, the warmup snapshot.
    fn prime(&mut self, eng: &mut Engine<Ev>, warmup: SimTime) {
        for i in 0..self.n {
            let segs = self.senders[i].initial_segments(SimTime::ZERO);
            for seg in segs {
                self.queue_segment(i, seg, SimTime::ZERO);
            }
            let rto = self.senders[i].rto();
            self.rto_handles[i] = Some(eng.schedule_at(rto, Ev::Rto { src: i }));
            eng.schedule_at(SimTime::ZERO, Ev::Pacing { src: i });
        }
        for k in 0..self.ericas.len() {
            let t = self.ericas[k].params.interval_time;
            eng.schedule_at(t, Ev::EricaTick { erica: k });
        }
        eng.schedule_at(warmup, Ev::WarmupSnapshot);
    }

    /// New data from TCP, encapsulated into the ABR source queue.
    fn queue_segment(&mut self, i: usize, seg: Segment, now: SimTime) {
        let window = (now.as_ps() / self.rtt_window.as_ps().max(1)) as usize;
        if window >= self.bytes_sent_per_window.len() {
            self.bytes_sent_per_window.resize(window + 1, 0);
        }
        self.bytes_sent_per_window[window] += seg.len as u64;
        self.push_segment_cells(i, seg);
    }

    fn push_segment_cells(&mut self, i: usize, seg: Segment) {
        let uid = self.next_uid;
        self.next_uid += 1;
        let vc = VcId(i as u32);
        for cell in encapsulate(vc, seg, uid) {
            self.sources[i].pending.push_back(cell);
        }
    }

    fn port_enqueue(&mut self, eng: &mut Engine<Ev>, now: SimTime, port: usize, cell: Cell) {
        match self.ports[port].enqueue(cell) {
            EnqueueOutcome::AcceptedStartTx => {
                eng.schedule_at(now + self.ports[port].ser, Ev::TxDone { port });
            }
            EnqueueOutcome::AcceptedQueued => {}
            EnqueueOutcome::Dropped => return,
        }
        if self.trace_queue && port == self.bottleneck {
            self.queue_trace.push((now, self.ports[port].depth()));
        }
    }

    /// Stamps the bottleneck trace row after an interval ends at erica 0.
    fn record_erica_row(&mut self, now: SimTime) {
        if !self.trace_erica {
            return;
        }
        let e = &self.ericas[0];
        self.erica_trace.push(EricaIntervalRow {
            at: now,
            z: e.z(),
            n_active: e.n_active(),
            fair_share: e.fair_share(),
            queue_depth: self.ports[self.bottleneck].depth(),
        });
    }

    fn erica_account(&mut self, erica: usize, cell: &Cell, now: SimTime) {
        let frm_ccr = match cell.kind {
            CellKind::ForwardRm { ccr, .. } => Some(ccr),
            _ => None,
        };
        let ended = self.ericas[erica].on_cell_arrival(cell.vc, frm_ccr, now);
        if ended && erica == 0 {
            self.record_erica_row(now);
            self.debug_dump(now);
        }
    }

    // TODO: remove debug instrumentation once transient matches expectations
    fn debug_dump(&self, now: SimTime) {
        if std::env::var_os("ABRSIM_TRACE_SRC").is_none() {
            return;
        }
        let e = &self.ericas[0];
        let acrs: Vec<String> = self
            .sources
            .iter()
            .map(|s| format!("{:.0}", s.acr()))
            .collect();
        let pend: Vec<usize> = self.sources.iter().map(|s| s.pending.len()).collect();
        let cwnd: Vec<String> = self
            .senders
            .iter()
            .map(|s| format!("{:.0}", s.cwnd() / 512.0))
            .collect();
        eprintln!(
            "t={:.3} z={:.3} n={} fs={:.0} q={} acr=[{}] pend={:?} cwnd=[{}]",
            now.as_ms_f64(),
            e.z(),
            e.n_active(),
            e.fair_share(),
            self.ports[self.bottleneck].depth(),
            acrs.join(","),
            pend,
            cwnd.join(",")
        );
    }

    fn handle_ack(&mut self, eng: &mut Engine<Ev>, i: usize, ack_no: u64, now: SimTime) {
        // Rate-limited means the ABR queue still holds a backlog when TCP
        // next gets to decide whether to send.
        if !self.sources[i].pending.is_empty() && self.first_rate_limited_at[i].is_none() {
            self.first_rate_limited_at[i] = Some(now);
        }
        let res = self.senders[i].on_ack(ack_no, now);
        for seg in res.new_segments {
            self.queue_segment(i, seg, now);
        }
        if res.newly_acked > 0 {
            if let Some(h) = self.rto_handles[i].take() {
                eng.cancel(h);
            }
            if res.restart_timer {
                let rto = self.senders[i].rto();
                self.rto_handles[i] = Some(eng.schedule_at(now + rto, Ev::Rto { src: i }));
            }
        }
    }

    fn handle(&mut self, eng: &mut Engine<Ev>, now: SimTime, ev: Ev) {
        match ev {
            Ev::Pacing { src } => {
                if let Some(cell) = self.sources[src].next_transmission() {
                    self.port_enqueue(eng, now, self.src_fwd(src), cell);
                }
                let gap = self.sources[src].pacing_gap();
                eng.schedule_at(now + gap, Ev::Pacing { src });
            }
            Ev::TxDone { port } => {
                let (cell, more) = self.ports[port].tx_done();
                if more {
                    eng.schedule_at(now + self.ports[port].ser, Ev::TxDone { port });
                }
                if port == self.bottleneck {
                    self.bottleneck_cells_out += 1;
                    if self.trace_queue {
                        self.queue_trace.push((now, self.ports[port].depth()));
                    }
                }
                let prop = self.ports[port].prop.for_vc(cell.vc);
                eng.schedule_at(now + prop, Ev::Arrive { port, cell });
            }
            Ev::Arrive { port, cell } => self.arrive(eng, now, port, cell),
            Ev::EricaTick { erica } => {
                if self.ericas[erica].interval_boundary(now) {
                    self.ericas[erica].end_interval(now);
                    if erica == 0 {
                        self.record_erica_row(now);
                    }
                }
                let next = self.ericas[erica].interval_start() + self.ericas[erica].params.interval_time;
                eng.schedule_at(next, Ev::EricaTick { erica });
            }
            Ev::Rto { src } => {
                self.rto_handles[src] = None;
                let seg = self.senders[src].on_rto();
                // Retransmission joins the tail of the ABR queue.
                self.push_segment_cells(src, seg);
                let rto = self.senders[src].rto();
                self.rto_handles[src] = Some(eng.schedule_at(now + rto, Ev::Rto { src }));
            }
            Ev::WarmupSnapshot => {
                for i in 0..self.n {
                    self.delivered_at_warmup[i] = self.receivers[i].delivered_bytes();
                }
            }
        }
    }

    fn arrive(&mut self, eng: &mut Engine<Ev>, now: SimTime, port: usize, cell: Cell) {
        match self.classify(port) {
            Hop::Switch1Fwd => {
                self.erica_account(0, &cell, now);
                self.port_enqueue(eng, now, self.bottleneck, cell);
            }
            Hop::Switch2Fwd => {
                let vc = cell.vc.index();
                self.erica_account(1 + vc, &cell, now);
                self.port_enqueue(eng, now, self.dest_fwd(vc), cell);
            }
            Hop::DestHost(i) => match cell.kind {
                CellKind::ForwardRm { .. } => {
                    self.frm_turned += 1;
                    let brm = self.dests[i].turnaround(&cell);
                    self.port_enqueue(eng, now, self.rev_dest(i), brm);
                }
                CellKind::Data(info) => {
                    self.cells_arrived_dest[i] += 1;
                    if let Some(seg) = self.reasm_fwd[i].push(info) {
                        let ack = self.receivers[i].on_segment(&seg);
                        let uid = self.next_uid;
                        self.next_uid += 1;
                        let cells: Vec<Cell> = encapsulate(cell.vc, ack, uid).collect();
                        for c in cells {
                            self.port_enqueue(eng, now, self.rev_dest(i), c);
                        }
                    }
                }
                CellKind::BackwardRm { .. } => unreachable!("backward RM on forward path"),
            },
            Hop::Switch2Rev => {
                let mut cell = cell;
                if let CellKind::BackwardRm { er, ccr } = cell.kind {
                    let stamped = self.ericas[1 + cell.vc.index()].stamp_er(cell.vc, er);
                    cell.kind = CellKind::BackwardRm { er: stamped, ccr };
                }
                self.port_enqueue(eng, now, self.rev_mid, cell);
            }
            Hop::Switch1Rev => {
                let mut cell = cell;
                if let CellKind::BackwardRm { er, ccr } = cell.kind {
                    let stamped = self.ericas[0].stamp_er(cell.vc, er);
                    cell.kind = CellKind::BackwardRm { er: stamped, ccr };
                }
                let i = cell.vc.index();
                self.port_enqueue(eng, now, self.rev_src(i), cell);
            }
            Hop::SourceHost(i) => match cell.kind {
                CellKind::BackwardRm { .. } => self.sources[i].on_backward_rm(&cell),
                CellKind::Data(info) => {
                    if let Some(seg) = self.reasm_rev[i].push(info) {
                        debug_assert!(seg.is_ack);
                        self.handle_ack(eng, i, seg.ack_no, now);
                    }
                }
                CellKind::ForwardRm { .. } => unreachable!("forward RM on reverse path"),
            },
        }
    }
}

/// Cell population snapshot for the end-of-run conservation audit.
pub struct CellCensus {
    pub emitted_by_source: u64,
    pub arrived_at_dest: u64,
    pub dropped: u64,
    pub queued_in_ports: u64,
    pub in_flight_events: u64,
    pub pending_at_sources: u64,
}

/// Runs one scenario to completion. The configuration must already be
/// validated.
pub fn run(cfg: &ScenarioConfig) -> SimOutput {
    run_internal(cfg).0
}

/// Like `run`, but also returns the forward-path cell census used by
/// conservation tests.
pub fn run_with_census(cfg: &ScenarioConfig) -> (SimOutput, CellCensus) {
    run_internal(cfg)
}

fn run_internal(cfg: &ScenarioConfig) -> (SimOutput, CellCensus) {
    let topo = Topology::build(cfg);
    let warmup = cfg.effective_warmup(topo.rtt_max);
    assert!(cfg.duration > warmup, "duration must exceed warmup");

    let mut engine: Engine<Ev> = Engine::new();
    let mut world = World::new(cfg, &topo);
    world.prime(&mut engine, warmup);
    engine.run_until(cfg.duration, |eng, now, ev| world.handle(eng, now, ev));

    let census = census(&world, &engine);
    let metrics = collect_metrics(cfg, &topo, &world, warmup);
    (
        SimOutput {
            metrics,
            queue_trace: world.queue_trace,
            erica_trace: world.erica_trace,
        },
        census,
    )
}

fn census(world: &World, engine: &Engine<Ev>) -> CellCensus {
    let n = world.n;
    // Forward-path ports: access links, the bottleneck, switch 2 fan-out.
    let forward_port = |p: usize| p <= 2 * n;
    let mut queued = 0u64;
    for p in 0..=2 * n {
        queued += world.ports[p].depth() as u64;
    }
    let mut in_flight = 0u64;
    for ev in engine.pending_events() {
        if let Ev::Arrive { port, .. } = ev {
            if forward_port(*port) {
                in_flight += 1;
            }
        }
    }
    // A cell whose TxDone is pending still sits at the head of its port
    // queue, so it is already counted under `queued_in_ports`.
    CellCensus {
        emitted_by_source: world.sources.iter().map(|s| s.cells_emitted).sum(),
        arrived_at_dest: world.cells_arrived_dest.iter().sum::<u64>() + world.frm_turned,
        dropped: (0..=2 * n).map(|p| world.ports[p].drops()).sum(),
        queued_in_ports: queued,
        in_flight_events: in_flight,
        pending_at_sources: world.sources.iter().map(|s| s.pending.len() as u64).sum(),
    }
}

fn collect_metrics(
    cfg: &ScenarioConfig,
    topo: &Topology,
    world: &World,
    warmup: SimTime,
) -> RunMetrics {
    let n = topo.n;
    let window_secs = (cfg.duration - warmup).as_secs_f64();
    let per_source_mbps: Vec<f64> = (0..n)
        .map(|i| {
            let bytes = world.receivers[i].delivered_bytes() - world.delivered_at_warmup[i];
            bytes as f64 * 8.0 / window_secs / 1e6
        })
        .collect();
    let total_mbps: f64 = per_source_mbps.iter().sum();
    let ceiling = crate::experiments::max_tcp_throughput_mbps(cfg.mss, cfg.link_rate_bps);

    let drops: u64 = world.ports.iter().map(|p| p.drops()).sum();
    let timeouts: u64 = world.senders.iter().map(|s| s.timeouts).sum();
    let max_q = world.ports[world.bottleneck].max_depth() as u64;
    let rtt_cells = topo.rtt_max.as_secs_f64() * topo.cell_rate;
    let steady_state = world.first_rate_limited_at.iter().all(|t| t.is_some())
        && world
            .first_rate_limited_at
            .iter()
            .map(|t| t.unwrap())
            .max()
            .unwrap()
            .as_ps()
            <= cfg.duration.as_ps() / 2;

    // Sequence conservation: everything the receiver delivered was sent, and
    // acknowledgements never outran delivery.
    for i in 0..n {
        debug_assert!(world.senders[i].bytes_acked() <= world.receivers[i].delivered_bytes());
    }

    let mut other_max_queues = Vec::new();
    other_max_queues.push((
        "sw2_fwd_max".to_string(),
        (0..n)
            .map(|i| world.ports[world.dest_fwd(i)].max_depth() as u64)
            .max()
            .unwrap_or(0),
    ));
    other_max_queues.push((
        "rev_mid_max".to_string(),
        world.ports[world.rev_mid].max_depth() as u64,
    ));
    other_max_queues.push((
        "src_access_max".to_string(),
        (0..n)
            .map(|i| world.ports[world.src_fwd(i)].max_depth() as u64)
            .max()
            .unwrap_or(0),
    ));

    RunMetrics {
        scenario: cfg.name.clone(),
        n,
        rtt_ms: topo.rtt_max.as_ms_f64(),
        fbd_ms: topo.fbd_max.as_ms_f64(),
        interval_ms: cfg.erica.interval_time.as_ms_f64(),
        interval_cells: cfg.erica.interval_cells,
        max_queue_cells: max_q,
        max_queue_rtt_multiple: max_q as f64 / rtt_cells,
        per_source_mbps,
        total_mbps,
        efficiency: total_mbps / ceiling,
        drops,
        timeouts,
        steady_state,
        diag: RunDiagnostics {
            ceiling_mbps: ceiling,
            rm_adjusted_ceiling_mbps: ceiling * 31.0 / 32.0,
            rm_six_percent_ceiling_mbps: ceiling * 0.94,
            other_max_queues,
            bottleneck_cells_out: world.bottleneck_cells_out,
            final_z: world.ericas[0].z(),
            final_fair_share: world.ericas[0].fair_share(),
            final_n_active: world.ericas[0].n_active(),
            acr: world.sources.iter().map(|s| s.acr()).collect(),
            bytes_sent_per_rtt_window: world.bytes_sent_per_window.clone(),
            first_rate_limited_at: world.first_rate_limited_at.clone(),
            reassembly_resyncs: world.reasm_fwd.iter().map(|r| r.resync_drops).sum(),
            dup_segments: world.receivers.iter().map(|r| r.dup_segments).sum(),
            retransmits: world.senders.iter().map(|s| s.retransmits).sum(),
            max_flight: world.senders.iter().map(|s| s.max_flight).max().unwrap_or(0),
            delivered_bytes: world
                .receivers
                .iter()
                .map(|r| r.delivered_bytes())
                .collect(),
        },
    }
}
