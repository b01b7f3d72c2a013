//! C ABI over the blockpulse library.
//!
//! Every fallible call returns a [`BpStatus`]. On failure the message is kept
//! per thread and can be copied out with [`bp_last_error_message`]. Handles
//! are opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use blockpulse::classify::{classify, ClassifyConfig};
use blockpulse::config::PipelineConfig;
use blockpulse::detect::{cusum_detect, CusumEvent, Direction};
use blockpulse::detrend::{stl_decompose, Decomposition, StlParams};
use blockpulse::geo::grid_cell;
use blockpulse::pipeline::{run_stage, Stage};
use blockpulse::reconstruct::{ActiveCountSeries, Sample};
use blockpulse::{Block, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Unordered = 4,
    Insufficient = 5,
    Config = 6,
    MissingInput = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for BpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => BpStatus::Parse,
            Error::Unordered { .. } | Error::UnorderedBlock(_) => BpStatus::Unordered,
            Error::Insufficient(_) => BpStatus::Insufficient,
            Error::InvalidArgument(_) => BpStatus::InvalidArgument,
            Error::Config(_) => BpStatus::Config,
            Error::MissingInput { .. } => BpStatus::MissingInput,
            Error::Io(_) => BpStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: BpStatus, message: impl Into<String>) -> BpStatus {
    LAST_ERROR.with(|m| *m.borrow_mut() = message.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), BpStatus>) -> BpStatus {
    LAST_ERROR.with(|m| m.borrow_mut().clear());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(BpStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> BpStatus {
    fail(BpStatus::from(&e), e.to_string())
}

fn null(what: &str) -> BpStatus {
    fail(BpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], BpStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, BpStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, BpStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(BpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated when `cap > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bp_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && cap > 0 {
            let n = m.len().min(cap - 1);
            ptr::copy_nonoverlapping(m.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}

/// Active-address counts of one /24.
pub struct BpSeries(ActiveCountSeries);

/// Builds a series from `len` strictly increasing sample times and counts.
/// `prefix` is the block's upper 24 bits.
///
/// # Safety
/// `timestamps` and `counts` must each hold `len` elements; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bp_series_new(
    prefix: u32,
    ever_active_size: usize,
    interval: i64,
    timestamps: *const i64,
    counts: *const u32,
    len: usize,
    out_series: *mut *mut BpSeries,
) -> BpStatus {
    guard(|| {
        let out_series = out(out_series, "out_series")?;
        let ts = slice(timestamps, len, "timestamps")?;
        let cs = slice(counts, len, "counts")?;
        let block = Block::new(prefix)
            .ok_or_else(|| fail(BpStatus::InvalidArgument, format!("prefix {prefix:#x} exceeds 24 bits")))?;
        let samples: Vec<Sample> = ts.iter().zip(cs).map(|(&timestamp, &count)| Sample { timestamp, count }).collect();
        let warm = samples.first().map(|s| s.timestamp);
        let s = ActiveCountSeries::from_samples(block, ever_active_size, interval, warm, samples).map_err(lib)?;
        *out_series = Box::into_raw(Box::new(BpSeries(s)));
        Ok(())
    })
}

/// # Safety
/// `series` must come from [`bp_series_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_series_free(series: *mut BpSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BpClassification {
    pub responsive: bool,
    pub diurnal: bool,
    pub wide_swing: bool,
    pub change_sensitive: bool,
    pub diurnal_score: f64,
    pub max_daily_swing: u32,
    pub insufficient_data: bool,
}

/// Classifies a series with the default thresholds.
///
/// # Safety
/// `series` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_classify(series: *const BpSeries, result: *mut BpClassification) -> BpStatus {
    guard(|| {
        let series = series.as_ref().ok_or_else(|| null("series"))?;
        let result = out(result, "result")?;
        let c = classify(&series.0, &ClassifyConfig::default());
        *result = BpClassification {
            responsive: c.responsive,
            diurnal: c.diurnal,
            wide_swing: c.wide_swing,
            change_sensitive: c.change_sensitive,
            diurnal_score: c.diurnal_score,
            max_daily_swing: c.max_daily_swing,
            insufficient_data: c.insufficient_data,
        };
        Ok(())
    })
}

pub struct BpDecomposition(Decomposition);

/// Seasonal-trend decomposition with the default windows for `period`.
///
/// # Safety
/// `values` must hold `len` elements and `out_parts` be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_stl(
    values: *const f64,
    len: usize,
    period: usize,
    out_parts: *mut *mut BpDecomposition,
) -> BpStatus {
    guard(|| {
        let out_parts = out(out_parts, "out_parts")?;
        let values = slice(values, len, "values")?;
        let d = stl_decompose(values, &StlParams::new(period)).map_err(lib)?;
        *out_parts = Box::into_raw(Box::new(BpDecomposition(d)));
        Ok(())
    })
}

/// Number of samples in each component.
///
/// # Safety
/// `parts` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bp_decomposition_len(parts: *const BpDecomposition) -> usize {
    parts.as_ref().map_or(0, |d| d.0.observed.len())
}

/// # Safety
/// `parts` must be a live handle or null. The pointer is valid until the
/// handle is freed.
#[no_mangle]
pub unsafe extern "C" fn bp_decomposition_trend(parts: *const BpDecomposition) -> *const f64 {
    parts.as_ref().map_or(ptr::null(), |d| d.0.trend.as_ptr())
}

/// # Safety
/// As [`bp_decomposition_trend`].
#[no_mangle]
pub unsafe extern "C" fn bp_decomposition_seasonal(parts: *const BpDecomposition) -> *const f64 {
    parts.as_ref().map_or(ptr::null(), |d| d.0.seasonal.as_ptr())
}

/// # Safety
/// As [`bp_decomposition_trend`].
#[no_mangle]
pub unsafe extern "C" fn bp_decomposition_residual(parts: *const BpDecomposition) -> *const f64 {
    parts.as_ref().map_or(ptr::null(), |d| d.0.residual.as_ptr())
}

/// # Safety
/// `parts` must come from [`bp_stl`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_decomposition_free(parts: *mut BpDecomposition) {
    if !parts.is_null() {
        drop(Box::from_raw(parts));
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BpDirection {
    Down = 0,
    Up = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpCusumEvent {
    pub direction: BpDirection,
    pub onset: usize,
    pub peak: usize,
    pub end: usize,
    pub magnitude: f64,
    pub reference: f64,
}

impl From<&CusumEvent> for BpCusumEvent {
    fn from(e: &CusumEvent) -> Self {
        BpCusumEvent {
            direction: match e.direction {
                Direction::Down => BpDirection::Down,
                Direction::Up => BpDirection::Up,
            },
            onset: e.onset,
            peak: e.peak,
            end: e.end,
            magnitude: e.magnitude,
            reference: e.reference,
        }
    }
}

pub struct BpEvents(Vec<BpCusumEvent>);

/// Two-sided CUSUM over `x` with threshold `h` and slack `k`.
///
/// # Safety
/// `x` must hold `len` elements and `out_events` be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_cusum(
    x: *const f64,
    len: usize,
    h: f64,
    k: f64,
    out_events: *mut *mut BpEvents,
) -> BpStatus {
    guard(|| {
        let out_events = out(out_events, "out_events")?;
        let x = slice(x, len, "x")?;
        let events = cusum_detect(x, h, k).map_err(lib)?;
        *out_events = Box::into_raw(Box::new(BpEvents(events.iter().map(BpCusumEvent::from).collect())));
        Ok(())
    })
}

/// # Safety
/// `events` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bp_events_len(events: *const BpEvents) -> usize {
    events.as_ref().map_or(0, |e| e.0.len())
}

/// Copies event `index` into `event`.
///
/// # Safety
/// `events` must be a live handle and `event` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_events_get(events: *const BpEvents, index: usize, event: *mut BpCusumEvent) -> BpStatus {
    guard(|| {
        let events = events.as_ref().ok_or_else(|| null("events"))?;
        let event = out(event, "event")?;
        *event = *events.0.get(index).ok_or_else(|| {
            fail(BpStatus::InvalidArgument, format!("index {index} out of {} events", events.0.len()))
        })?;
        Ok(())
    })
}

/// # Safety
/// `events` must come from [`bp_cusum`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_events_free(events: *mut BpEvents) {
    if !events.is_null() {
        drop(Box::from_raw(events));
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BpGridCell {
    pub lat: i16,
    pub lon: i16,
}

/// South-west corner of the 2 by 2 degree cell holding a coordinate.
///
/// # Safety
/// `cell` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_grid_cell(lat: f64, lon: f64, cell: *mut BpGridCell) -> BpStatus {
    guard(|| {
        let cell = out(cell, "cell")?;
        let c = grid_cell(lat, lon).map_err(lib)?;
        *cell = BpGridCell { lat: c.lat, lon: c.lon };
        Ok(())
    })
}

pub struct BpConfig(PipelineConfig);

/// Loads a `key = value` pipeline config from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_config` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_config_load(path: *const c_char, out_config: *mut *mut BpConfig) -> BpStatus {
    guard(|| {
        let out_config = out(out_config, "out_config")?;
        let path = text(path, "path")?;
        let cfg = PipelineConfig::load(Path::new(path)).map_err(lib)?;
        *out_config = Box::into_raw(Box::new(BpConfig(cfg)));
        Ok(())
    })
}

/// Replaces the output directory of a loaded config.
///
/// # Safety
/// `config` must be a live handle and `output` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bp_config_set_output(config: *mut BpConfig, output: *const c_char) -> BpStatus {
    guard(|| {
        let config = out(config, "config")?;
        config.0.output = text(output, "output")?.to_string();
        Ok(())
    })
}

/// # Safety
/// `config` must come from [`bp_config_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_config_free(config: *mut BpConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs one stage by name (`simulate`, `reconstruct`, `classify`, `detrend`,
/// `detect`, `aggregate` or `all`).
///
/// # Safety
/// `config` must be a live handle and `stage` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bp_run_stage(config: *const BpConfig, stage: *const c_char) -> BpStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let name = text(stage, "stage")?;
        let stage: Stage = name.parse().map_err(|m: String| fail(BpStatus::InvalidArgument, m))?;
        run_stage(stage, &config.0).map_err(lib)
    })
}
