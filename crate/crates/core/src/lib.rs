//! Reconstruction of per-/24 active-address counts from incremental probe
//! observations, and the analysis chain built on top of them:
//!
//! * [`ingest`] parses observation files and merges per-observer streams.
//! * [`reconstruct`] accumulates address state into count series.
//! * [`classify`] flags diurnal, wide-swing and change-sensitive blocks.
//! * [`detrend`] splits a series into trend, daily seasonal and residual parts.
//! * [`detect`] runs two-sided CUSUM on the normalized trend and labels events.
//! * [`geo`] bins blocks into 2x2 degree cells and builds daily summaries.
//! * [`simulate`] generates ground truth and adaptive probing for validation.
//! * [`pipeline`] wires the stages together behind a key=value config.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod classify;
pub mod config;
pub mod detect;
pub mod detrend;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod pipeline;
pub mod reconstruct;
pub mod regrid;
pub mod simulate;
mod textio;

pub use block::{Block, ObserverId, OffsetSet};
pub use error::{Error, Result};

/// Length of one probing round in seconds.
pub const ROUND_SECS: i64 = 660;

pub const DAY_SECS: i64 = 86_400;

/// UTC day number (days since the Unix epoch) containing `timestamp`.
pub fn utc_day(timestamp: i64) -> i64 {
    timestamp.div_euclid(DAY_SECS)
}

/// `YYYY-MM-DD` for a UTC day number.
pub fn format_day(day: i64) -> String {
    match chrono::DateTime::from_timestamp(day * DAY_SECS, 0) {
        Some(dt) => dt.format("%Y-%m-%d").to_string(),
        None => format!("day{day}"),
    }
}

/// Inverse of [`format_day`].
pub fn parse_day(text: &str) -> Option<i64> {
    let date = chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d").ok()?;
    let ts = date.and_hms_opt(0, 0, 0)?.and_utc().timestamp();
    Some(utc_day(ts))
}
