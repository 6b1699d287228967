//! Plain-text `key = value` scenario files.
//!
//! ```text
//! # five sources over 1000 km links, bounded buffer
//! n_sources = 5
//! link_km = 1000
//! buffer_cells = 33012
//! duration_ms = 2000
//! ```
//!
//! Keys: n_sources, link_km, link_km_list, link_rate_mbps,
//! target_utilization, interval_ms, interval_cells, buffer_cells (a count or
//! `unbounded`), mss, max_window, icr (cells/s), duration_ms, warmup_ms,
//! fbd_km, name. Lines starting with `#` and blank lines are ignored.

use std::path::Path;

use thiserror::Error;

use crate::experiments::{LinkSpec, ScenarioConfig};
use crate::time::SimTime;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {0}: expected 'key = value'")]
    Malformed(usize),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}': bad value '{value}'")]
    BadValue { key: String, value: String },
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
}

fn bad(key: &str, value: &str) -> ParseError {
    ParseError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ParseError> {
    value.trim().parse::<T>().map_err(|_| bad(key, value))
}

/// Applies one `key = value` assignment. Shared by the file parser and the
/// sweep subcommand, so sweepable parameters are exactly the file keys.
pub fn apply_key(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), ParseError> {
    let v = value.trim();
    match key {
        "name" => cfg.name = v.to_string(),
        "n_sources" => cfg.n_sources = parse_num(key, v)?,
        "link_km" => cfg.link_km = LinkSpec::Uniform(parse_num(key, v)?),
        "link_km_list" => {
            let lengths: Result<Vec<f64>, _> =
                v.split(',').map(|s| parse_num::<f64>(key, s)).collect();
            cfg.link_km = LinkSpec::PerSource(lengths?);
        }
        "link_rate_mbps" => cfg.link_rate_bps = parse_num::<f64>(key, v)? * 1e6,
        "target_utilization" => cfg.erica.target_utilization = parse_num(key, v)?,
        "interval_ms" => cfg.erica.interval_time = SimTime::from_ms_f64(parse_num(key, v)?),
        "interval_cells" => cfg.erica.interval_cells = parse_num(key, v)?,
        "buffer_cells" => {
            cfg.buffer_cells = if v.eq_ignore_ascii_case("unbounded") {
                None
            } else {
                Some(parse_num(key, v)?)
            }
        }
        "mss" => cfg.mss = parse_num(key, v)?,
        "max_window" => cfg.max_window = parse_num(key, v)?,
        "icr" => cfg.icr = Some(parse_num(key, v)?),
        "duration_ms" => cfg.duration = SimTime::from_ms_f64(parse_num(key, v)?),
        "warmup_ms" => cfg.warmup = Some(SimTime::from_ms_f64(parse_num(key, v)?)),
        "fbd_km" => cfg.fbd_km = Some(parse_num(key, v)?),
        _ => return Err(ParseError::UnknownKey(key.to_string())),
    }
    Ok(())
}

pub fn parse_str(text: &str) -> Result<ScenarioConfig, ParseError> {
    let mut cfg = ScenarioConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ParseError::Malformed(lineno + 1))?;
        apply_key(&mut cfg, key.trim(), value)?;
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ScenarioConfig, ParseError> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_str(&text)?;
    if cfg.name == "run" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            cfg.name = stem.to_string();
        }
    }
    Ok(cfg)
}
