//! Change points on the normalized trend: two-sided CUSUM, outage pairing.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::detrend::BlockDecomposition;
use crate::textio::{data_lines, no_trailing, parse_field};
use crate::{Block, Error, Result, DAY_SECS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Down,
    Up,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Down => "down",
            Direction::Up => "up",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "down" => Ok(Direction::Down),
            "up" => Ok(Direction::Up),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedTrend {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Divisor applied after mean removal; 0 when the output is all zeros.
    pub scale: f64,
}

/// `(trend - mean) / stddev`, moments taken over the first `baseline_len`
/// samples (the whole series when `baseline_len` is 0 or too long).
///
/// The divisor is `max(stddev, min_scale)`; a zero divisor yields zeros.
pub fn normalize_trend(trend: &[f64], baseline_len: usize, min_scale: f64) -> NormalizedTrend {
    if trend.is_empty() {
        return NormalizedTrend { values: Vec::new(), mean: 0.0, scale: 0.0 };
    }
    let base = if baseline_len == 0 || baseline_len > trend.len() {
        trend
    } else {
        &trend[..baseline_len]
    };
    let m = base.len() as f64;
    let mean = base.iter().sum::<f64>() / m;
    let var = base.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    let scale = var.sqrt().max(min_scale.max(0.0));
    if scale <= 0.0 {
        return NormalizedTrend { values: vec![0.0; trend.len()], mean, scale: 0.0 };
    }
    NormalizedTrend {
        values: trend.iter().map(|v| (v - mean) / scale).collect(),
        mean,
        scale,
    }
}

/// Like [`normalize_trend`] after removing a weekly profile: the mean trend at
/// each phase of the week over the whole weeks inside the baseline. Falls back
/// to plain normalization when the baseline holds no whole week.
///
/// `activity` scales the profile per sample (empty means 1 throughout), so a
/// block that loses its workday pattern stops having one subtracted.
pub fn normalize_trend_weekly(
    trend: &[f64],
    baseline_len: usize,
    week_len: usize,
    min_scale: f64,
    activity: &[f64],
) -> NormalizedTrend {
    let base_len = if baseline_len == 0 { trend.len() } else { baseline_len.min(trend.len()) };
    let weeks = if week_len == 0 { 0 } else { base_len / week_len };
    if weeks == 0 {
        return normalize_trend(trend, baseline_len, min_scale);
    }
    let mut profile = vec![0.0; week_len];
    for (i, v) in trend[..weeks * week_len].iter().enumerate() {
        profile[i % week_len] += v / weeks as f64;
    }
    let mean = profile.iter().sum::<f64>() / week_len as f64;
    let deseasoned: Vec<f64> = trend
        .iter()
        .enumerate()
        .map(|(i, v)| v - mean - activity.get(i).copied().unwrap_or(1.0) * (profile[i % week_len] - mean))
        .collect();
    normalize_trend(&deseasoned, weeks * week_len, min_scale)
}

/// Strength of the daily pattern per sample, about 1 when it matches the
/// baseline and 0 once it is gone.
///
/// Each day is projected onto the baseline's mean daily shape. A day takes the
/// largest projection among itself and the next `lookahead` days, so quiet
/// weekends between working weeks keep their full weight. The result is
/// divided by its baseline mean. All ones when there is no daily shape.
pub fn daily_activity(observed: &[f64], period: usize, baseline_days: usize, lookahead: usize) -> Vec<f64> {
    let days = if period == 0 { 0 } else { observed.len() / period };
    let base_days = baseline_days.clamp(1, days.max(1)).min(days);
    let ones = vec![1.0; observed.len()];
    if base_days == 0 {
        return ones;
    }
    let centred = |d: usize| {
        let day = &observed[d * period..(d + 1) * period];
        let m = day.iter().sum::<f64>() / period as f64;
        day.iter().map(move |v| v - m)
    };
    let mut shape = vec![0.0; period];
    for d in 0..base_days {
        for (s, v) in shape.iter_mut().zip(centred(d)) {
            *s += v / base_days as f64;
        }
    }
    let norm: f64 = shape.iter().map(|s| s * s).sum();
    if norm <= 1e-12 {
        return ones;
    }
    let proj: Vec<f64> = (0..days).map(|d| centred(d).zip(&shape).map(|(v, s)| v * s).sum::<f64>() / norm).collect();
    // Near the end the window slides back so it keeps its length.
    let width = (lookahead + 1).min(days);
    let held: Vec<f64> = (0..days)
        .map(|d| {
            let from = d.min(days - width);
            proj[from..from + width].iter().copied().fold(0.0, f64::max)
        })
        .collect();
    let reference = held[..base_days].iter().sum::<f64>() / base_days as f64;
    if reference <= 1e-12 {
        return ones;
    }
    (0..observed.len()).map(|i| held[(i / period).min(days - 1)] / reference).collect()
}

/// One CUSUM event in sample indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CusumEvent {
    pub direction: Direction,
    /// First sample of the positive run that led to the first alarm.
    pub onset: usize,
    /// First alarm, where the sum first exceeded the threshold.
    pub peak: usize,
    /// Last sample before the sum fell back to zero (or the last sample).
    pub end: usize,
    /// Largest deviation in the event direction over `onset..=end`, measured
    /// from `reference`.
    pub magnitude: f64,
    /// Reference level in force at onset.
    pub reference: f64,
}

struct Side {
    direction: Direction,
    sum: f64,
    run_start: Option<usize>,
    /// First sample since the last alarm of the current run.
    segment_start: Option<usize>,
    /// (onset, peak, reference at onset)
    open: Option<(usize, usize, f64)>,
}

impl Side {
    fn new(direction: Direction) -> Self {
        Side { direction, sum: 0.0, run_start: None, segment_start: None, open: None }
    }

    fn deviation(&self, x: f64) -> f64 {
        match self.direction {
            Direction::Up => x,
            Direction::Down => -x,
        }
    }

    fn clear(&mut self) {
        self.sum = 0.0;
        self.run_start = None;
        self.segment_start = None;
    }
}

fn deviation(x: &[f64], direction: Direction, from: usize, to: usize, reference: f64) -> f64 {
    let sign = match direction {
        Direction::Up => 1.0,
        Direction::Down => -1.0,
    };
    x[from..=to].iter().map(|&v| sign * (v - reference)).fold(f64::NEG_INFINITY, f64::max)
}

pub const CUSUM_TIE_TOLERANCE: f64 = 1e-9;

/// Two-sided CUSUM around a reference level `m` that starts at 0:
/// `S+ = max(0, S+ + (x - m) - k)`, `S- = max(0, S- - (x - m) - k)`.
///
/// A sum above `h` raises an alarm. Both sums reset and `m` moves to the mean
/// of the samples since the alarming run began (or since its previous alarm),
/// so a return to the old level later shows up as a change the other way.
/// Alarms that follow without the sum settling back to zero extend the same
/// event; an alarm in the other direction closes it.
///
/// Sums within [`CUSUM_TIE_TOLERANCE`] of zero or of `h` count as equal to it,
/// so rounding in the re-centred reference cannot break exact ties.
pub fn cusum_detect(x: &[f64], h: f64, k: f64) -> Result<Vec<CusumEvent>> {
    if !(h > 0.0) || !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("cusum needs h > 0 and k >= 0 (h={h}, k={k})")));
    }
    let mut events = Vec::new();
    let mut sides = [Side::new(Direction::Down), Side::new(Direction::Up)];
    let close = |side: &Side, (onset, peak, reference): (usize, usize, f64), end: usize| CusumEvent {
        direction: side.direction,
        onset,
        peak,
        end,
        magnitude: deviation(x, side.direction, onset, end, reference),
        reference,
    };
    let mut reference = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let mut alarm = None;
        for (a, side) in sides.iter_mut().enumerate() {
            let s = side.sum + side.deviation(xi - reference) - k;
            if s <= CUSUM_TIE_TOLERANCE {
                side.clear();
                if let Some(open) = side.open.take() {
                    events.push(close(side, open, i - 1));
                }
                continue;
            }
            side.sum = s;
            side.run_start.get_or_insert(i);
            side.segment_start.get_or_insert(i);
            if s > h + CUSUM_TIE_TOLERANCE {
                alarm = Some(a);
            }
        }
        let Some(a) = alarm else { continue };
        let side = &mut sides[a];
        let onset = side.run_start.expect("alarming side has a run");
        let from = side.segment_start.expect("alarming side has a segment");
        side.open.get_or_insert((onset, i, reference));
        side.sum = 0.0;
        side.segment_start = None;
        reference = x[from..=i].iter().sum::<f64>() / (i + 1 - from) as f64;
        let other = &mut sides[1 - a];
        other.clear();
        if let Some(open) = other.open.take() {
            events.push(close(other, open, i - 1));
        }
    }
    for side in &sides {
        if let Some(open) = side.open {
            events.push(close(side, open, x.len() - 1));
        }
    }
    events.sort_by_key(|e| (e.onset, e.direction, e.peak));
    Ok(events)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChangeEvent {
    pub block: Block,
    pub direction: Direction,
    pub onset: i64,
    pub peak: i64,
    pub end: i64,
    /// Addresses.
    pub magnitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Outage,
    SustainedDown,
    SustainedUp,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Outage => "outage",
            Label::SustainedDown => "sustained_down",
            Label::SustainedUp => "sustained_up",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "outage" => Ok(Label::Outage),
            "sustained_down" => Ok(Label::SustainedDown),
            "sustained_up" => Ok(Label::SustainedUp),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Label over indices into the event slice given to [`label_events`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventLabel {
    Outage { down: usize, up: usize },
    SustainedDown(usize),
    SustainedUp(usize),
}

impl EventLabel {
    pub fn label(&self) -> Label {
        match self {
            EventLabel::Outage { .. } => Label::Outage,
            EventLabel::SustainedDown(_) => Label::SustainedDown,
            EventLabel::SustainedUp(_) => Label::SustainedUp,
        }
    }

    /// Index of the earlier (or only) event.
    pub fn first(&self) -> usize {
        match *self {
            EventLabel::Outage { down, .. } => down,
            EventLabel::SustainedDown(i) | EventLabel::SustainedUp(i) => i,
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            EventLabel::Outage { down, up } => (down, Some(up)),
            EventLabel::SustainedDown(i) | EventLabel::SustainedUp(i) => (i, None),
        };
        std::iter::once(a).chain(b)
    }
}

/// Pairs each down event with the nearest unconsumed up event starting at or
/// after it, when `up.onset - down.end <= gap`. Everything left over is
/// sustained. Events are expected in onset order; output follows the first
/// event of each label.
pub fn label_events(events: &[ChangeEvent], gap: i64) -> Vec<EventLabel> {
    let mut consumed = vec![false; events.len()];
    let mut labels = Vec::new();
    for (i, down) in events.iter().enumerate() {
        if down.direction != Direction::Down {
            continue;
        }
        let candidate = events
            .iter()
            .enumerate()
            .filter(|&(j, e)| e.direction == Direction::Up && !consumed[j] && e.onset >= down.onset)
            .min_by_key(|&(j, e)| (e.onset, j));
        if let Some((j, up)) = candidate {
            if up.onset - down.end <= gap {
                consumed[i] = true;
                consumed[j] = true;
                labels.push(EventLabel::Outage { down: i, up: j });
            }
        }
    }
    for (i, e) in events.iter().enumerate() {
        if !consumed[i] {
            labels.push(match e.direction {
                Direction::Down => EventLabel::SustainedDown(i),
                Direction::Up => EventLabel::SustainedUp(i),
            });
        }
    }
    labels.sort_by_key(|l| (events[l.first()].onset, l.first()));
    labels
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectConfig {
    pub h: f64,
    pub k: f64,
    pub min_scale: f64,
    /// Remove the baseline's weekly profile before normalizing.
    pub weekly: bool,
    pub baseline_days: usize,
    /// Seconds.
    pub outage_gap: i64,
    /// Seconds. Same-direction events this close, with nothing in between, are
    /// joined before labelling, so one slow ramp gives one event; 0 keeps
    /// them apart.
    pub merge_gap: i64,
    pub suppress_days: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            h: 5.0,
            k: 0.5,
            min_scale: 1.5,
            weekly: true,
            baseline_days: 28,
            outage_gap: 48 * 3600,
            merge_gap: 12 * 3600,
            suppress_days: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledEvent {
    pub event: ChangeEvent,
    pub label: Label,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockEvents {
    pub events: Vec<LabeledEvent>,
    /// Labels dropped because they start in the suppressed opening days.
    pub suppressed: usize,
    /// Unpaired events too close to the span end to tell apart from outages.
    pub withheld: usize,
}

/// Joins consecutive same-direction events of `x` when the next one starts
/// within `gap` seconds of the previous end, as measured on `timestamps`.
/// The joined event keeps the first onset, peak and reference; its magnitude
/// is re-measured over the whole span.
pub fn merge_events(x: &[f64], timestamps: &[i64], events: &[CusumEvent], gap: i64) -> Vec<CusumEvent> {
    let mut out: Vec<CusumEvent> = Vec::with_capacity(events.len());
    for e in events {
        match out.last_mut() {
            Some(prev) if prev.direction == e.direction && timestamps[e.onset] - timestamps[prev.end] <= gap => {
                prev.end = prev.end.max(e.end);
                prev.magnitude = deviation(x, prev.direction, prev.onset, prev.end, prev.reference);
            }
            _ => out.push(e.clone()),
        }
    }
    out
}

/// Normalize, detect, merge, label, then drop labels starting in the first
/// `suppress_days` and unpaired ones starting within the outage gap of the end.
pub fn detect_block(d: &BlockDecomposition, cfg: &DetectConfig) -> Result<BlockEvents> {
    let ts = &d.timestamps;
    if ts.is_empty() {
        return Ok(BlockEvents::default());
    }
    let baseline = cfg.baseline_days * d.parts.period;
    let norm = if cfg.weekly {
        let activity = daily_activity(&d.parts.observed, d.parts.period, cfg.baseline_days, 3);
        normalize_trend_weekly(&d.parts.trend, baseline, 7 * d.parts.period, cfg.min_scale, &activity)
    } else {
        normalize_trend(&d.parts.trend, baseline, cfg.min_scale)
    };
    let raw = cusum_detect(&norm.values, cfg.h, cfg.k)?;
    let events: Vec<ChangeEvent> = merge_events(&norm.values, ts, &raw, cfg.merge_gap)
        .into_iter()
        .map(|e| ChangeEvent {
            block: d.block,
            direction: e.direction,
            onset: ts[e.onset],
            peak: ts[e.peak],
            end: ts[e.end],
            magnitude: e.magnitude * norm.scale,
        })
        .collect();
    let quiet_until = ts[0] + cfg.suppress_days as i64 * DAY_SECS;
    let undecided_from = ts[ts.len() - 1] - cfg.outage_gap;
    let mut out = BlockEvents::default();
    for label in label_events(&events, cfg.outage_gap) {
        let first = &events[label.first()];
        if first.onset < quiet_until {
            out.suppressed += 1;
            continue;
        }
        if label.label() != Label::Outage && first.onset > undecided_from {
            out.withheld += 1;
            continue;
        }
        out.events.extend(label.indices().map(|i| LabeledEvent { event: events[i].clone(), label: label.label() }));
    }
    out.events.sort_by_key(|e| (e.event.onset, e.event.direction));
    out.events = consolidate_daily(out.events);
    Ok(out)
}

/// Folds sustained events of one block sharing a label and a UTC peak day
/// into the first of them. Outage events pass through untouched.
pub fn consolidate_daily(events: Vec<LabeledEvent>) -> Vec<LabeledEvent> {
    let mut out: Vec<LabeledEvent> = Vec::with_capacity(events.len());
    let mut seen: std::collections::HashMap<(Block, Label, i64), usize> = Default::default();
    for e in events {
        if e.label == Label::Outage {
            out.push(e);
            continue;
        }
        let key = (e.event.block, e.label, e.event.peak.div_euclid(DAY_SECS));
        match seen.get(&key) {
            Some(&at) => {
                let kept = &mut out[at].event;
                kept.end = kept.end.max(e.event.end);
                kept.magnitude = kept.magnitude.max(e.event.magnitude);
            }
            None => {
                seen.insert(key, out.len());
                out.push(e);
            }
        }
    }
    out
}

/// True when `timestamp` lies within `days` days of `reference`.
pub fn within_days(timestamp: i64, reference: i64, days: i64) -> bool {
    (timestamp - reference).abs() <= days * DAY_SECS
}

pub fn write_events<'a, W: Write>(mut w: W, events: impl IntoIterator<Item = &'a LabeledEvent>) -> io::Result<()> {
    writeln!(w, "# block direction onset peak end magnitude label")?;
    for e in events {
        let c = &e.event;
        writeln!(w, "{} {} {} {} {} {} {}", c.block, c.direction, c.onset, c.peak, c.end, c.magnitude, e.label)?;
    }
    Ok(())
}

pub fn read_events(text: &str) -> Result<Vec<LabeledEvent>> {
    data_lines(text)
        .map(|(line, content)| {
            let mut f = content.split_ascii_whitespace();
            let event = ChangeEvent {
                block: parse_field(&mut f, line, "block")?,
                direction: parse_field(&mut f, line, "direction")?,
                onset: parse_field(&mut f, line, "onset")?,
                peak: parse_field(&mut f, line, "peak")?,
                end: parse_field(&mut f, line, "end")?,
                magnitude: parse_field(&mut f, line, "magnitude")?,
            };
            let label = parse_field(&mut f, line, "label")?;
            no_trailing(&mut f, line)?;
            if !(event.onset <= event.peak && event.peak <= event.end) {
                return Err(Error::parse(line, "peak", "onset <= peak <= end does not hold"));
            }
            Ok(LabeledEvent { event, label })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: i64 = 3600;

    fn ev(direction: Direction, onset: i64, end: i64) -> ChangeEvent {
        ChangeEvent { block: Block::from_octets(1, 1, 1), direction, onset, peak: onset, end, magnitude: 1.0 }
    }

    #[test]
    fn same_day_sustained_events_fold() {
        let lab = |e: ChangeEvent, label| LabeledEvent { event: e, label };
        let evs = vec![
            lab(ev(Direction::Down, 0, 10), Label::SustainedDown),
            lab(ev(Direction::Down, 20, 30), Label::SustainedDown),
            lab(ev(Direction::Down, 40, 41), Label::Outage),
            lab(ev(Direction::Up, 42, 43), Label::Outage),
            lab(ev(Direction::Down, 50, 60), Label::SustainedDown),
            lab(ev(Direction::Down, 30 * H, 31 * H), Label::SustainedDown),
        ];
        let out = consolidate_daily(evs);
        assert_eq!(out.len(), 4);
        assert_eq!(out[0].event.end, 60);
        assert_eq!(out[1].label, Label::Outage);
        assert_eq!(out[3].event.onset, 30 * H);
    }

    #[test]
    fn merge_joins_close_same_direction_runs() {
        let x: Vec<f64> = (0..60).map(|i| -(i as f64) / 10.0).collect();
        let ts: Vec<i64> = (0..60).map(|i| i * H).collect();
        let ev = |direction, onset, end| CusumEvent {
            direction,
            onset,
            peak: onset,
            end,
            magnitude: deviation(&x, direction, onset, end, 0.0),
            reference: 0.0,
        };
        let (up, down) = (Direction::Up, Direction::Down);
        let events = [(down, 0, 10), (down, 20, 30), (up, 31, 40), (down, 45, 50)].map(|(d, o, e)| ev(d, o, e));
        let merged = merge_events(&x, &ts, &events, 12 * H);
        assert_eq!(merged.len(), 3);
        assert_eq!((merged[0].onset, merged[0].end), (0, 30));
        assert!((merged[0].magnitude - 3.0).abs() < 1e-12);
        // the up event in between keeps the last down separate
        assert_eq!(merged[2].onset, 45);
        assert_eq!(merge_events(&x, &ts, &events[..2], 0).len(), 2);
        assert_eq!(merge_events(&x, &ts, &events[..2], 10 * H).len(), 1);
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_trend(&[0.0, 0.0, 10.0, 10.0], 0, 0.0);
        assert_eq!(n.values, vec![-1.0, -1.0, 1.0, 1.0]);
        assert_eq!((n.mean, n.scale), (5.0, 5.0));
        assert!(normalize_trend(&[3.0; 9], 0, 0.0).values.iter().all(|&v| v == 0.0));
        assert!(normalize_trend(&[3.0; 9], 0, 0.5).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_uses_baseline_prefix() {
        let n = normalize_trend(&[1.0, 3.0, 1.0, 3.0, 10.0], 4, 0.0);
        assert_eq!(n.values[4], 8.0);
    }

    #[test]
    fn floor_applies_to_flat_baseline() {
        let n = normalize_trend(&[2.0, 2.0, 2.0, 0.0], 3, 0.5);
        assert_eq!(n.values, vec![0.0, 0.0, 0.0, -4.0]);
    }

    #[test]
    fn weekly_profile_is_removed() {
        let week = 7 * 4;
        let trend: Vec<f64> = (0..10 * week).map(|i| if i % week < 20 { 12.0 } else { 9.0 }).collect();
        let n = normalize_trend_weekly(&trend, 4 * week, week, 0.5, &[]);
        assert!(n.values.iter().all(|&v| v == 0.0));
        // no whole week inside the baseline: plain normalization
        assert_eq!(normalize_trend_weekly(&trend, week - 1, week, 0.5, &[]), normalize_trend(&trend, week - 1, 0.5));
        let mut dropped = trend.clone();
        dropped[6 * week..].iter_mut().for_each(|v| *v -= 3.0);
        let n = normalize_trend_weekly(&dropped, 4 * week, week, 0.5, &[]);
        assert_eq!(n.values[6 * week], -6.0);
        assert_eq!(n.values[6 * week - 1], 0.0);
    }

    #[test]
    fn zeros_give_no_events() {
        assert!(cusum_detect(&[0.0; 300], 5.0, 0.5).unwrap().is_empty());
    }

    #[test]
    fn step_down_is_one_event() {
        let x: Vec<f64> = (0..100).map(|i| if i < 50 { 0.0 } else { -3.0 }).collect();
        let ev = cusum_detect(&x, 5.0, 0.5).unwrap();
        assert_eq!(ev.len(), 1);
        let e = &ev[0];
        assert_eq!(e.direction, Direction::Down);
        assert_eq!(e.onset, 50);
        // sum 2.5, 5.0, 7.5: the alarm lands on 52, then the reference moves to -3
        assert_eq!((e.peak, e.end), (52, 52));
        assert_eq!(e.magnitude, 3.0);
    }

    #[test]
    fn excursion_gives_a_change_each_way() {
        let mut x = vec![0.0; 40];
        x[10..20].fill(2.0);
        let ev = cusum_detect(&x, 5.0, 0.5).unwrap();
        let got: Vec<_> = ev.iter().map(|e| (e.direction, e.onset, e.peak, e.end, e.magnitude)).collect();
        assert_eq!(got, vec![(Direction::Up, 10, 13, 13, 2.0), (Direction::Down, 20, 23, 23, 2.0)]);
    }

    #[test]
    fn ramp_alarms_chain() {
        let x: Vec<f64> = (0..60).map(|i: i32| -f64::from((i - 10).clamp(0, 30))).collect();
        let ev = cusum_detect(&x, 5.0, 0.5).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].direction, Direction::Down);
        assert_eq!(ev[0].onset, 11);
        assert!(ev[0].end >= 40);
        assert_eq!(ev[0].magnitude, 30.0);
    }

    #[test]
    fn bad_parameters() {
        assert!(cusum_detect(&[1.0], 0.0, 0.5).is_err());
        assert!(cusum_detect(&[1.0], 1.0, -0.5).is_err());
    }

    #[test]
    fn pairing_within_gap() {
        let events = [ev(Direction::Down, 0, 0), ev(Direction::Up, 6 * H, 7 * H)];
        assert_eq!(label_events(&events, 48 * H), vec![EventLabel::Outage { down: 0, up: 1 }]);
    }

    #[test]
    fn pairing_beyond_gap() {
        let events = [ev(Direction::Down, 0, 0), ev(Direction::Up, 30 * 24 * H, 31 * 24 * H)];
        let labels = label_events(&events, 48 * H);
        assert_eq!(labels, vec![EventLabel::SustainedDown(0), EventLabel::SustainedUp(1)]);
    }

    #[test]
    fn up_before_down_is_not_paired() {
        let events = [ev(Direction::Up, 0, H), ev(Direction::Down, 2 * H, 3 * H)];
        let labels = label_events(&events, 48 * H);
        assert_eq!(labels, vec![EventLabel::SustainedUp(0), EventLabel::SustainedDown(1)]);
    }

    #[test]
    fn detect_block_suppresses_and_withholds() {
        use crate::detrend::Decomposition;
        let p = 10;
        let n = 40 * p;
        let mut trend = vec![10.0; n];
        // week 0 dip (suppressed outage), drop on day 20 (kept), rise on day 39 (withheld)
        for v in &mut trend[20..30] {
            *v = 0.0;
        }
        for v in &mut trend[20 * p..39 * p] {
            *v = 0.0;
        }
        for v in &mut trend[39 * p..] {
            *v = 20.0;
        }
        let timestamps: Vec<i64> = (0..n as i64).map(|i| i * DAY_SECS / p as i64).collect();
        let d = BlockDecomposition {
            block: Block::from_octets(9, 9, 9),
            timestamps,
            parts: Decomposition {
                period: p,
                observed: trend.clone(),
                trend,
                seasonal: vec![0.0; n],
                residual: vec![0.0; n],
            },
        };
        let cfg = DetectConfig { baseline_days: 14, weekly: false, ..DetectConfig::default() };
        let out = detect_block(&d, &cfg).unwrap();
        assert_eq!(out.suppressed, 1);
        assert_eq!(out.withheld, 1);
        assert_eq!(out.events.len(), 1);
        let e = &out.events[0];
        assert_eq!(e.label, Label::SustainedDown);
        assert_eq!(e.event.onset, 20 * DAY_SECS);
        assert!(e.event.magnitude > 9.0);
    }

    #[test]
    fn event_file_round_trip() {
        let events = vec![
            LabeledEvent { event: ev(Direction::Down, 10, 20), label: Label::Outage },
            LabeledEvent { event: ev(Direction::Up, 30, 40), label: Label::Outage },
        ];
        let mut buf = Vec::new();
        write_events(&mut buf, &events).unwrap();
        assert_eq!(read_events(std::str::from_utf8(&buf).unwrap()).unwrap(), events);
    }
}
