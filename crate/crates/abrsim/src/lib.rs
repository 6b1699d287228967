//! Deterministic discrete-event simulator of TCP/IP running over ATM ABR
//! with an explicit-rate switch, plus the experiment harness that measures
//! bottleneck queue growth against the zero-loss buffer bound
//! (a*RTT + b*averaging interval + c*feedback delay) x link bandwidth.

pub mod abr;
pub mod config;
pub mod engine;
pub mod erica;
pub mod experiments;
pub mod fabric;
pub mod netsim;
pub mod tcp;
pub mod time;

pub use engine::{CancelOutcome, Engine, EventHandle, ExecutionStats};
pub use erica::{EricaParams, EricaPort};
pub use experiments::{
    check_bound, max_tcp_throughput_mbps, predict_q_bound, run_batch, run_batch_sequential,
    run_scenario, run_table, BoundCheck, BoundCoefficients, LinkSpec, RunMetrics, ScenarioConfig,
    TablePreset,
};
pub use netsim::Topology;
pub use time::SimTime;
