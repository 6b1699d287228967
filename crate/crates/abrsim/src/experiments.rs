//! Scenario construction, metric computation, the buffer-bound predictor,
//! table presets, and sweep orchestration.
//!
//! Individual runs are strictly single-threaded and deterministic; a batch
//! of runs has no shared mutable state, so with the `parallel` feature
//! enabled batches fan out across a rayon pool. Results always come back in
//! scenario order regardless of completion order.

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::erica::EricaParams;
use crate::fabric::{link_cell_rate, CellRate};
use crate::netsim::{self, SimOutput, Topology};
use crate::tcp::segment_to_cells;
use crate::time::SimTime;

pub const DEFAULT_LINK_RATE_BPS: f64 = 155.52e6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("n_sources must be at least 1")]
    NoSources,
    #[error("link length must be positive, got {0} km")]
    NonPositiveLength(f64),
    #[error("per-source link list has {got} entries for {want} sources")]
    LengthListMismatch { got: usize, want: usize },
    #[error("fbd_km ({fbd}) must be positive and below the one-way path length ({path} km)")]
    BadFeedbackHop { fbd: f64, path: f64 },
    #[error("link rate must be positive")]
    BadLinkRate,
    #[error("target_utilization must be in (0, 1], got {0}")]
    BadTarget(f64),
    #[error("averaging interval must have positive time and cell count")]
    BadInterval,
    #[error("mss must be positive")]
    BadMss,
    #[error("duration ({duration_ms} ms) must exceed warmup ({warmup_ms} ms)")]
    DurationTooShort { duration_ms: f64, warmup_ms: f64 },
}

/// Per-source link lengths: every VC's three hops are scaled from its entry.
#[derive(Clone, Debug)]
pub enum LinkSpec {
    Uniform(f64),
    PerSource(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub name: String,
    pub n_sources: usize,
    pub link_km: LinkSpec,
    /// When set, pins the source<->switch hop to this length and stretches
    /// the rest of the path to keep RTT, so feedback delay varies
    /// independently of RTT.
    pub fbd_km: Option<f64>,
    pub link_rate_bps: f64,
    pub erica: EricaParams,
    /// Bottleneck and switch fan-out buffer size in cells; None = unbounded.
    pub buffer_cells: Option<u32>,
    pub mss: u32,
    pub max_window: u64,
    /// Initial cell rate; None means start at the peak (link) cell rate.
    pub icr: Option<CellRate>,
    pub acr_floor: CellRate,
    pub duration: SimTime,
    /// None defaults to 3 x the largest RTT.
    pub warmup: Option<SimTime>,
    pub queue_trace: bool,
    pub erica_trace: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "run".to_string(),
            n_sources: 5,
            link_km: LinkSpec::Uniform(1000.0),
            fbd_km: None,
            link_rate_bps: DEFAULT_LINK_RATE_BPS,
            erica: EricaParams::default(),
            buffer_cells: None,
            mss: crate::tcp::DEFAULT_MSS,
            max_window: crate::tcp::DEFAULT_MAX_WINDOW,
            icr: None,
            acr_floor: crate::abr::DEFAULT_ACR_FLOOR,
            duration: SimTime::from_ms(2000),
            warmup: None,
            queue_trace: false,
            erica_trace: false,
        }
    }
}

impl ScenarioConfig {
    pub fn named(name: &str) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            ..ScenarioConfig::default()
        }
    }

    pub fn link_km_for(&self, i: usize) -> f64 {
        match &self.link_km {
            LinkSpec::Uniform(km) => *km,
            LinkSpec::PerSource(v) => v[i],
        }
    }

    pub fn effective_warmup(&self, rtt_max: SimTime) -> SimTime {
        self.warmup.unwrap_or(rtt_max * 3)
    }

    /// Largest per-source RTT implied by the configuration.
    pub fn rtt_max(&self) -> SimTime {
        Topology::build(self).rtt_max
    }

    pub fn fbd_max(&self) -> SimTime {
        Topology::build(self).fbd_max
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_sources == 0 {
            return Err(ConfigError::NoSources);
        }
        if let LinkSpec::PerSource(v) = &self.link_km {
            if v.len() != self.n_sources {
                return Err(ConfigError::LengthListMismatch {
                    got: v.len(),
                    want: self.n_sources,
                });
            }
        }
        for i in 0..self.n_sources {
            let km = self.link_km_for(i);
            if km <= 0.0 || !km.is_finite() {
                return Err(ConfigError::NonPositiveLength(km));
            }
            if let Some(fbd) = self.fbd_km {
                let path = 3.0 * km;
                if fbd <= 0.0 || fbd >= path {
                    return Err(ConfigError::BadFeedbackHop { fbd, path });
                }
            }
        }
        if !(self.link_rate_bps > 0.0) {
            return Err(ConfigError::BadLinkRate);
        }
        if !(self.erica.target_utilization > 0.0 && self.erica.target_utilization <= 1.0) {
            return Err(ConfigError::BadTarget(self.erica.target_utilization));
        }
        if self.erica.interval_time.is_zero() || self.erica.interval_cells == 0 {
            return Err(ConfigError::BadInterval);
        }
        if self.mss == 0 {
            return Err(ConfigError::BadMss);
        }
        let warmup = self.effective_warmup(self.rtt_max());
        if self.duration <= warmup {
            return Err(ConfigError::DurationTooShort {
                duration_ms: self.duration.as_ms_f64(),
                warmup_ms: warmup.as_ms_f64(),
            });
        }
        Ok(())
    }
}

/// Multipliers for the RTT, averaging-interval, and feedback-delay terms of
/// the buffer bound.
#[derive(Clone, Copy, Debug)]
pub struct BoundCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for BoundCoefficients {
    fn default() -> Self {
        BoundCoefficients {
            a: 3.0,
            b: 1.0,
            c: 1.0,
        }
    }
}

/// Zero-loss buffer bound in whole cells:
/// (a*RTT + b*averaging interval + c*feedback delay) x link cell rate.
pub fn predict_q_bound(
    rtt: SimTime,
    fbd: SimTime,
    avg_interval: SimTime,
    link_rate_bps: f64,
    k: &BoundCoefficients,
) -> u64 {
    let secs = k.a * rtt.as_secs_f64() + k.b * avg_interval.as_secs_f64() + k.c * fbd.as_secs_f64();
    (secs * link_cell_rate(link_rate_bps)).ceil() as u64
}

/// Encapsulation-limited TCP ceiling in Mbps: mss payload bytes out of every
/// 53 x cells wire bytes. (512, 155.52 Mbps) -> 125.2 Mbps.
pub fn max_tcp_throughput_mbps(mss: u32, link_rate_bps: f64) -> f64 {
    let cells = segment_to_cells(mss);
    link_rate_bps * mss as f64 / (53.0 * cells as f64) / 1e6
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BoundCheck {
    Pass,
    Fail,
}

/// Pass iff the observed maximum queue fits the bound (inclusive).
pub fn check_bound(metrics: &RunMetrics, bound_cells: u64) -> BoundCheck {
    if metrics.max_queue_cells <= bound_cells {
        BoundCheck::Pass
    } else {
        BoundCheck::Fail
    }
}

/// Extra per-run observations that do not appear in the CSV row.
#[derive(Clone, Debug, Default)]
pub struct RunDiagnostics {
    pub ceiling_mbps: f64,
    /// Ceiling after the 1-in-32 in-rate RM overhead.
    pub rm_adjusted_ceiling_mbps: f64,
    /// Ceiling after a flat 6% RM deduction, the other published figure.
    pub rm_six_percent_ceiling_mbps: f64,
    pub other_max_queues: Vec<(String, u64)>,
    pub bottleneck_cells_out: u64,
    pub final_z: f64,
    pub final_fair_share: f64,
    pub final_n_active: u32,
    pub acr: Vec<f64>,
    pub bytes_sent_per_rtt_window: Vec<u64>,
    pub first_rate_limited_at: Vec<Option<SimTime>>,
    pub reassembly_resyncs: u64,
    pub dup_segments: u64,
    pub retransmits: u64,
    pub max_flight: u64,
    pub delivered_bytes: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct RunMetrics {
    pub scenario: String,
    pub n: usize,
    pub rtt_ms: f64,
    pub fbd_ms: f64,
    pub interval_ms: f64,
    pub interval_cells: u64,
    pub max_queue_cells: u64,
    pub max_queue_rtt_multiple: f64,
    pub per_source_mbps: Vec<f64>,
    pub total_mbps: f64,
    pub efficiency: f64,
    pub drops: u64,
    pub timeouts: u64,
    pub steady_state: bool,
    pub diag: RunDiagnostics,
}

pub const CSV_HEADER: &str = "scenario,n,rtt_ms,fbd_ms,interval_ms,interval_cells,max_q_cells,max_q_rtt_mult,throughput_mbps,efficiency_pct,drops,timeouts,steady_state";

impl RunMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.3},{:.3},{:.3},{},{},{:.4},{:.3},{:.2},{},{},{}",
            self.scenario,
            self.n,
            self.rtt_ms,
            self.fbd_ms,
            self.interval_ms,
            self.interval_cells,
            self.max_queue_cells,
            self.max_queue_rtt_multiple,
            self.total_mbps,
            self.efficiency * 100.0,
            self.drops,
            self.timeouts,
            self.steady_state
        )
    }
}

pub fn csv_report(rows: &[RunMetrics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Validates and runs a single scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics, ConfigError> {
    cfg.validate()?;
    Ok(netsim::run(cfg).metrics)
}

/// Validates and runs a single scenario, keeping traces.
pub fn run_scenario_with_traces(cfg: &ScenarioConfig) -> Result<SimOutput, ConfigError> {
    cfg.validate()?;
    Ok(netsim::run(cfg))
}

/// Runs a batch sequentially, in scenario order.
pub fn run_batch_sequential(cfgs: &[ScenarioConfig]) -> Result<Vec<RunMetrics>, ConfigError> {
    cfgs.iter().map(run_scenario).collect()
}

/// Runs a batch, fanning independent runs across threads when the `parallel`
/// feature is enabled. Output order follows input order either way.
#[cfg(feature = "parallel")]
pub fn run_batch(cfgs: &[ScenarioConfig]) -> Result<Vec<RunMetrics>, ConfigError> {
    cfgs.par_iter().map(run_scenario).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_batch(cfgs: &[ScenarioConfig]) -> Result<Vec<RunMetrics>, ConfigError> {
    run_batch_sequential(cfgs)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TablePreset {
    Table1,
    Table2,
    Table3,
    Table4,
}

impl TablePreset {
    pub fn from_index(i: u32) -> Option<TablePreset> {
        match i {
            1 => Some(TablePreset::Table1),
            2 => Some(TablePreset::Table2),
            3 => Some(TablePreset::Table3),
            4 => Some(TablePreset::Table4),
            _ => None,
        }
    }

    /// The scenario list behind each published table.
    pub fn scenarios(self) -> Vec<ScenarioConfig> {
        match self {
            // Source-count sweep at RTT 30 ms / feedback delay 10 ms. The
            // published table starts at n = 5; the smaller counts round out
            // the sweep.
            TablePreset::Table1 => [1usize, 2, 5, 10, 15]
                .iter()
                .map(|&n| ScenarioConfig {
                    name: format!("t1_n{n}"),
                    n_sources: n,
                    link_km: LinkSpec::Uniform(1000.0),
                    duration: SimTime::from_ms(2000),
                    ..ScenarioConfig::default()
                })
                .collect(),
            // RTT sweep at n = 15: 1000/500/200/50 km uniform links.
            TablePreset::Table2 => [
                (1000.0, 2000u64),
                (500.0, 1000),
                (200.0, 500),
                (50.0, 300),
            ]
            .iter()
            .map(|&(km, dur_ms)| ScenarioConfig {
                name: format!("t2_km{km:.0}"),
                n_sources: 15,
                link_km: LinkSpec::Uniform(km),
                duration: SimTime::from_ms(dur_ms),
                ..ScenarioConfig::default()
            })
            .collect(),
            // Averaging-interval sweep on LAN-scale paths at n = 15.
            TablePreset::Table3 => {
                let mut out = Vec::new();
                for &(km, rtt_tag) in &[(50.0, "1500us"), (1.0, "30us")] {
                    for &cells in &[500u64, 1000] {
                        out.push(ScenarioConfig {
                            name: format!("t3_rtt{rtt_tag}_c{cells}"),
                            n_sources: 15,
                            link_km: LinkSpec::Uniform(km),
                            erica: EricaParams {
                                interval_time: SimTime::from_ms(10),
                                interval_cells: cells,
                                ..EricaParams::default()
                            },
                            duration: SimTime::from_ms(500),
                            warmup: Some(SimTime::from_ms(100)),
                            ..ScenarioConfig::default()
                        });
                    }
                }
                out
            }
            // 3x3 factorial: RTT {15, 30, 550} ms x feedback delay
            // {0.01, 1, 10} ms, n = 15. Feedback delay decouples from RTT
            // via the asymmetric first hop.
            TablePreset::Table4 => {
                let mut out = Vec::new();
                for &(rtt_ms, dur_ms) in &[(15.0, 1200u64), (30.0, 2000), (550.0, 6000)] {
                    for &fbd_ms in &[0.01, 1.0, 10.0] {
                        out.push(ScenarioConfig {
                            name: format!("t4_rtt{rtt_ms}_fbd{fbd_ms}"),
                            n_sources: 15,
                            link_km: LinkSpec::Uniform(rtt_ms * 100.0 / 3.0),
                            fbd_km: Some(fbd_ms * 100.0),
                            duration: SimTime::from_ms(dur_ms),
                            ..ScenarioConfig::default()
                        });
                    }
                }
                out
            }
        }
    }
}

/// Runs every scenario of a table preset and renders the CSV report.
pub fn run_table(preset: TablePreset) -> Result<String, ConfigError> {
    let rows = run_batch(&preset.scenarios())?;
    Ok(csv_report(&rows))
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown sweep parameter '{0}'")]
    UnknownParam(String),
    #[error("bad value '{value}' for parameter '{param}'")]
    BadValue { param: String, value: String },
}

/// Clones the base scenario once per value of the swept parameter. The
/// parameter names match the config-file keys.
pub fn sweep(
    base: &ScenarioConfig,
    param: &str,
    values: &[String],
) -> Result<Vec<RunMetrics>, SweepError> {
    let mut cfgs = Vec::with_capacity(values.len());
    for v in values {
        let mut cfg = base.clone();
        crate::config::apply_key(&mut cfg, param, v).map_err(|e| match e {
            crate::config::ParseError::UnknownKey(_) => SweepError::UnknownParam(param.to_string()),
            _ => SweepError::BadValue {
                param: param.to_string(),
                value: v.clone(),
            },
        })?;
        cfg.name = format!("{}={}", param, v);
        cfgs.push(cfg);
    }
    Ok(run_batch(&cfgs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encapsulation_ceiling_values() {
        let v = max_tcp_throughput_mbps(512, DEFAULT_LINK_RATE_BPS);
        assert!((v - 125.2).abs() < 0.1, "{v}");
        let v40 = max_tcp_throughput_mbps(40, DEFAULT_LINK_RATE_BPS);
        assert!((v40 - 58.7).abs() < 0.1, "{v40}");
    }

    #[test]
    fn ceiling_maximal_at_exact_fit() {
        // mss that exactly fills its cells beats nearby payloads for the
        // same cell count.
        let exact = max_tcp_throughput_mbps(40, DEFAULT_LINK_RATE_BPS); // 2 cells, 96/96
        let slack = max_tcp_throughput_mbps(39, DEFAULT_LINK_RATE_BPS); // 2 cells, 95/96
        assert!(exact > slack);
    }

    #[test]
    fn bound_predictor_values() {
        let k3 = BoundCoefficients {
            a: 3.0,
            b: 0.0,
            c: 0.0,
        };
        assert_eq!(
            predict_q_bound(
                SimTime::from_ms(30),
                SimTime::ZERO,
                SimTime::ZERO,
                DEFAULT_LINK_RATE_BPS,
                &k3
            ),
            33_012
        );
        assert_eq!(
            predict_q_bound(
                SimTime::from_ms_f64(1.5),
                SimTime::ZERO,
                SimTime::ZERO,
                DEFAULT_LINK_RATE_BPS,
                &k3
            ),
            1_651
        );
        assert_eq!(
            predict_q_bound(
                SimTime::ZERO,
                SimTime::ZERO,
                SimTime::ZERO,
                DEFAULT_LINK_RATE_BPS,
                &BoundCoefficients::default()
            ),
            0
        );
    }

    #[test]
    fn bound_check_inclusive() {
        let mut m = RunMetrics {
            scenario: "x".into(),
            n: 1,
            rtt_ms: 0.0,
            fbd_ms: 0.0,
            interval_ms: 0.0,
            interval_cells: 0,
            max_queue_cells: 100,
            max_queue_rtt_multiple: 0.0,
            per_source_mbps: vec![],
            total_mbps: 0.0,
            efficiency: 0.0,
            drops: 0,
            timeouts: 0,
            steady_state: true,
            diag: RunDiagnostics::default(),
        };
        assert_eq!(check_bound(&m, 100), BoundCheck::Pass);
        m.max_queue_cells = 101;
        assert_eq!(check_bound(&m, 100), BoundCheck::Fail);
    }

    #[test]
    fn topology_delay_arithmetic() {
        let cfg = ScenarioConfig {
            n_sources: 2,
            link_km: LinkSpec::Uniform(1000.0),
            ..ScenarioConfig::default()
        };
        let topo = Topology::build(&cfg);
        assert_eq!(topo.rtt_max, SimTime::from_ms(30));
        assert_eq!(topo.fbd_max, SimTime::from_ms(10));

        let lan = ScenarioConfig {
            n_sources: 1,
            link_km: LinkSpec::Uniform(50.0),
            ..ScenarioConfig::default()
        };
        let topo = Topology::build(&lan);
        assert_eq!(topo.rtt_max, SimTime::from_ms_f64(1.5));
        assert_eq!(topo.fbd_max, SimTime::from_ms_f64(0.5));

        let het = ScenarioConfig {
            n_sources: 2,
            link_km: LinkSpec::PerSource(vec![1000.0, 50.0]),
            ..ScenarioConfig::default()
        };
        let topo = Topology::build(&het);
        assert_eq!(topo.rtt[0], SimTime::from_ms(30));
        assert_eq!(topo.rtt[1], SimTime::from_ms_f64(1.5));
    }

    #[test]
    fn asymmetric_loop_decouples_fbd_from_rtt() {
        let cfg = ScenarioConfig {
            n_sources: 1,
            link_km: LinkSpec::Uniform(30.0 * 100.0 / 3.0),
            fbd_km: Some(1.0),
            ..ScenarioConfig::default()
        };
        let topo = Topology::build(&cfg);
        assert_eq!(topo.rtt_max, SimTime::from_ms(30));
        assert_eq!(topo.fbd_max, SimTime::from_ms_f64(0.01));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_sources = 0;
        assert!(matches!(cfg.validate(), Err(ConfigError::NoSources)));

        let mut cfg = ScenarioConfig::default();
        cfg.link_km = LinkSpec::Uniform(-5.0);
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::NonPositiveLength(_))
        ));

        let mut cfg = ScenarioConfig::default();
        cfg.link_km = LinkSpec::PerSource(vec![100.0]);
        cfg.n_sources = 3;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::LengthListMismatch { .. })
        ));

        let mut cfg = ScenarioConfig::default();
        cfg.duration = SimTime::from_ms(10); // below 3 x RTT warmup
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::DurationTooShort { .. })
        ));
    }

    #[test]
    fn presets_have_expected_shapes() {
        assert_eq!(TablePreset::Table1.scenarios().len(), 5);
        assert_eq!(TablePreset::Table2.scenarios().len(), 4);
        assert_eq!(TablePreset::Table3.scenarios().len(), 4);
        assert_eq!(TablePreset::Table4.scenarios().len(), 9);
        for cfg in TablePreset::Table1
            .scenarios()
            .into_iter()
            .chain(TablePreset::Table2.scenarios())
            .chain(TablePreset::Table3.scenarios())
            .chain(TablePreset::Table4.scenarios())
        {
            cfg.validate().unwrap();
        }
        // The factorial grid realizes the intended delays.
        for cfg in TablePreset::Table4.scenarios() {
            let topo = Topology::build(&cfg);
            let rtt = topo.rtt_max.as_ms_f64();
            let fbd = topo.fbd_max.as_ms_f64();
            assert!([15.0, 30.0, 550.0].iter().any(|r| (rtt - r).abs() < 1e-6));
            assert!([0.01, 1.0, 10.0].iter().any(|f| (fbd - f).abs() < 1e-6));
        }
    }

    #[test]
    fn csv_header_is_pinned() {
        assert_eq!(
            CSV_HEADER,
            "scenario,n,rtt_ms,fbd_ms,interval_ms,interval_cells,max_q_cells,max_q_rtt_mult,throughput_mbps,efficiency_pct,drops,timeouts,steady_state"
        );
    }
}
