//! Accumulation of per-address state into active-address count series.
//!
//! Addresses keep their last observed state until they are probed again. A
//! block produces no samples until every ever-active address has been seen at
//! least once (warm-up); after that it yields one sample per round with the
//! current number of addresses that are up.

use std::fmt;
use std::io::{self, Write};

use crate::ingest::{merge_streams, screen_offsets, EverActiveList, ObservationRecord, ObserverStream};
use crate::{Block, Error, ObserverId, OffsetSet, Result, ROUND_SECS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum AddressState {
    #[default]
    Unknown,
    Up,
    Down,
}

/// Tri-state view of every address in one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressStateVector {
    block: Block,
    ever_active: OffsetSet,
    strict: bool,
    states: [AddressState; 256],
    last_update: [Option<i64>; 256],
    unknown: usize,
    up: usize,
}

impl AddressStateVector {
    /// All ever-active addresses start unknown. In strict mode observations of
    /// other offsets are ignored entirely; otherwise their state is tracked but
    /// never counted.
    pub fn new(list: &EverActiveList, strict: bool) -> Self {
        AddressStateVector {
            block: list.block,
            ever_active: list.offsets,
            strict,
            states: [AddressState::Unknown; 256],
            last_update: [None; 256],
            unknown: list.len(),
            up: 0,
        }
    }

    pub fn block(&self) -> Block {
        self.block
    }

    pub fn state(&self, offset: u8) -> AddressState {
        self.states[usize::from(offset)]
    }

    pub fn last_update(&self, offset: u8) -> Option<i64> {
        self.last_update[usize::from(offset)]
    }

    /// Ever-active addresses currently up.
    pub fn up_count(&self) -> usize {
        self.up
    }

    /// Ever-active addresses never observed yet.
    pub fn unknown_count(&self) -> usize {
        self.unknown
    }

    pub fn is_warm(&self) -> bool {
        self.unknown == 0
    }

    /// Records the probe result for `rec.offset`, leaving every other address
    /// untouched.
    pub fn apply(&mut self, rec: &ObservationRecord) -> Result<()> {
        if rec.block != self.block {
            return Err(Error::InvalidArgument(format!(
                "observation for {} applied to {}",
                rec.block, self.block
            )));
        }
        let listed = self.ever_active.contains(rec.offset);
        if !listed && self.strict {
            return Ok(());
        }
        let idx = usize::from(rec.offset);
        let new = if rec.response { AddressState::Up } else { AddressState::Down };
        let old = std::mem::replace(&mut self.states[idx], new);
        self.last_update[idx] = Some(rec.timestamp);
        if listed {
            if old == AddressState::Unknown {
                self.unknown -= 1;
            }
            match (old == AddressState::Up, new == AddressState::Up) {
                (false, true) => self.up += 1,
                (true, false) => self.up -= 1,
                _ => {}
            }
        }
        Ok(())
    }

    /// Value-returning form of [`apply`](Self::apply).
    pub fn apply_observation(mut self, rec: &ObservationRecord) -> Result<Self> {
        self.apply(rec)?;
        Ok(self)
    }
}

/// Fixed round boundaries `anchor + k * interval`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundGrid {
    pub anchor: i64,
    pub interval: i64,
}

impl RoundGrid {
    pub fn new(anchor: i64) -> Self {
        RoundGrid {
            anchor,
            interval: ROUND_SECS,
        }
    }

    pub fn index(&self, timestamp: i64) -> i64 {
        (timestamp - self.anchor).div_euclid(self.interval)
    }

    pub fn start(&self, index: i64) -> i64 {
        self.anchor + index * self.interval
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    pub timestamp: i64,
    pub count: u32,
}

/// Round-by-round count of active addresses in one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveCountSeries {
    pub block: Block,
    pub ever_active_size: usize,
    pub interval: i64,
    /// Start of the round in which the last unknown address was resolved;
    /// `None` when warm-up never completed.
    pub warm_up_end: Option<i64>,
    pub samples: Vec<Sample>,
}

impl ActiveCountSeries {
    /// Builds a series, checking ordering, bounds and the warm-up rule.
    pub fn from_samples(
        block: Block,
        ever_active_size: usize,
        interval: i64,
        warm_up_end: Option<i64>,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        if interval <= 0 {
            return Err(Error::InvalidArgument(format!("{block}: interval must be positive")));
        }
        if samples.windows(2).any(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(Error::InvalidArgument(format!("{block}: samples not strictly increasing")));
        }
        if let Some(s) = samples.iter().find(|s| s.count as usize > ever_active_size) {
            return Err(Error::InvalidArgument(format!(
                "{block}: count {} exceeds ever-active size {ever_active_size}",
                s.count
            )));
        }
        match (warm_up_end, samples.first()) {
            (None, Some(_)) => {
                return Err(Error::InvalidArgument(format!("{block}: samples without warm-up")))
            }
            (Some(w), Some(first)) if first.timestamp < w => {
                return Err(Error::InvalidArgument(format!("{block}: sample before warm-up end")))
            }
            _ => {}
        }
        Ok(ActiveCountSeries {
            block,
            ever_active_size,
            interval,
            warm_up_end,
            samples,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn counts(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| f64::from(s.count))
    }
}

/// Replays time-ordered observations of one block and emits its count series.
///
/// Rounds follow `grid`. The sample stamped with a round's start reflects every
/// observation inside that round. Samples continue with sample-and-hold until
/// the round containing `end` (or the last observation if later).
pub fn emit_series(
    list: &EverActiveList,
    records: &[ObservationRecord],
    grid: RoundGrid,
    end: Option<i64>,
) -> Result<ActiveCountSeries> {
    if list.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: empty ever-active list", list.block)));
    }
    let mut state = AddressStateVector::new(list, false);
    let mut samples = Vec::new();
    let mut warm_round: Option<i64> = None;
    let mut current: Option<i64> = None;

    let close = |state: &AddressStateVector, warm: Option<i64>, from: i64, to: i64, out: &mut Vec<Sample>| {
        if let Some(w) = warm {
            for round in from.max(w)..to {
                out.push(Sample {
                    timestamp: grid.start(round),
                    count: state.up_count() as u32,
                });
            }
        }
    };

    for rec in records {
        let round = grid.index(rec.timestamp);
        match current {
            Some(c) if round < c => return Err(Error::UnorderedBlock(list.block)),
            Some(c) if round > c => close(&state, warm_round, c, round, &mut samples),
            _ => {}
        }
        current = Some(round);
        state.apply(rec)?;
        if warm_round.is_none() && state.is_warm() {
            warm_round = Some(round);
        }
    }
    if let Some(c) = current {
        let last = end.map_or(c, |e| grid.index(e).max(c));
        close(&state, warm_round, c, last + 1, &mut samples);
    }
    Ok(ActiveCountSeries {
        block: list.block,
        ever_active_size: list.len(),
        interval: grid.interval,
        warm_up_end: warm_round.map(|r| grid.start(r)),
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanOutcome {
    /// Every ever-active address was observed. `rounds` counts the rounds
    /// from the first observation through the completing one, inclusive.
    Complete { rounds: u64, seconds: i64 },
    /// Coverage never completed.
    Incomplete { observed: usize, total: usize },
}

/// Time needed to observe every ever-active address of a block at least once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanLatency {
    pub block: Block,
    pub observers: Vec<ObserverId>,
    pub outcome: ScanOutcome,
}

impl ScanLatency {
    pub fn rounds(&self) -> Option<u64> {
        match self.outcome {
            ScanOutcome::Complete { rounds, .. } => Some(rounds),
            ScanOutcome::Incomplete { .. } => None,
        }
    }
}

/// Full-block scan time from the first observation of the block, using only
/// records from `observers` when given.
pub fn full_scan_time(
    list: &EverActiveList,
    records: &[ObservationRecord],
    observers: Option<&[ObserverId]>,
    interval: i64,
) -> ScanLatency {
    let selected = records
        .iter()
        .filter(|r| r.block == list.block)
        .filter(|r| observers.is_none_or(|set| set.contains(&r.observer)));
    let mut used: Vec<ObserverId> = Vec::new();
    let mut seen = OffsetSet::empty();
    let mut start = None;
    let mut outcome = ScanOutcome::Incomplete {
        observed: 0,
        total: list.len(),
    };
    for r in selected {
        let t0 = *start.get_or_insert(r.timestamp);
        if !used.contains(&r.observer) {
            used.push(r.observer);
        }
        if list.contains(r.offset) {
            seen.insert(r.offset);
        }
        if seen.len() == list.len() && !list.is_empty() {
            let rounds = (r.timestamp - t0).div_euclid(interval) as u64 + 1;
            outcome = ScanOutcome::Complete {
                rounds,
                seconds: rounds as i64 * interval,
            };
            break;
        }
        outcome = ScanOutcome::Incomplete {
            observed: seen.len(),
            total: list.len(),
        };
    }
    used.sort();
    ScanLatency {
        block: list.block,
        observers: used,
        outcome,
    }
}

/// Merges observer streams and reconstructs the block named by `list`.
pub fn fuse_observers(
    list: &EverActiveList,
    streams: &[ObserverStream],
    grid: RoundGrid,
    end: Option<i64>,
    strict: bool,
) -> Result<ActiveCountSeries> {
    if streams.is_empty() {
        return Err(Error::InvalidArgument("no observer streams".into()));
    }
    let mut merged = merge_streams(streams)?;
    let records = merged.remove(&list.block).unwrap_or_default();
    let screened = screen_offsets(records, list, strict);
    emit_series(list, &screened.records, grid, end)
}

impl fmt::Display for ActiveCountSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#block {} ever_active {} warm_up_end ", self.block, self.ever_active_size)?;
        match self.warm_up_end {
            Some(t) => write!(f, "{t}")?,
            None => f.write_str("incomplete")?,
        }
        writeln!(f, " interval {}", self.interval)?;
        for s in &self.samples {
            writeln!(f, "{} {} {}", self.block, s.timestamp, s.count)?;
        }
        Ok(())
    }
}

/// Writes series in file order. Each block gets a `#block` header line.
pub fn write_series<'a, W: Write>(mut w: W, series: impl IntoIterator<Item = &'a ActiveCountSeries>) -> io::Result<()> {
    for s in series {
        write!(w, "{s}")?;
    }
    Ok(())
}

pub fn read_series(text: &str) -> Result<Vec<ActiveCountSeries>> {
    struct Pending {
        block: Block,
        size: usize,
        warm: Option<i64>,
        interval: i64,
        samples: Vec<Sample>,
    }
    fn finish(p: Pending) -> Result<ActiveCountSeries> {
        ActiveCountSeries::from_samples(p.block, p.size, p.interval, p.warm, p.samples)
    }
    let mut out = Vec::new();
    let mut pending: Option<Pending> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if let Some(header) = line.strip_prefix("#block ") {
            if let Some(p) = pending.take() {
                out.push(finish(p)?);
            }
            let f: Vec<&str> = header.split_ascii_whitespace().collect();
            if f.len() != 7 || f[1] != "ever_active" || f[3] != "warm_up_end" || f[5] != "interval" {
                return Err(Error::parse(line_no, "header", "expected #block <b> ever_active <n> warm_up_end <t> interval <s>"));
            }
            let block = f[0].parse().map_err(|_| Error::parse(line_no, "block", f[0]))?;
            let size = f[2].parse().map_err(|_| Error::parse(line_no, "ever_active", f[2]))?;
            let warm = match f[4] {
                "incomplete" => None,
                t => Some(t.parse().map_err(|_| Error::parse(line_no, "warm_up_end", t))?),
            };
            let interval = f[6].parse().map_err(|_| Error::parse(line_no, "interval", f[6]))?;
            pending = Some(Pending { block, size, warm, interval, samples: Vec::new() });
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = pending
            .as_mut()
            .ok_or_else(|| Error::parse(line_no, "header", "sample before any #block header"))?;
        let mut fields = line.split_ascii_whitespace();
        let block: Block = crate::textio::parse_field(&mut fields, line_no, "block")?;
        if block != p.block {
            return Err(Error::parse(line_no, "block", format!("{block} under header for {}", p.block)));
        }
        let timestamp = crate::textio::parse_field(&mut fields, line_no, "round_timestamp")?;
        let count = crate::textio::parse_field(&mut fields, line_no, "active_count")?;
        crate::textio::no_trailing(&mut fields, line_no)?;
        p.samples.push(Sample { timestamp, count });
    }
    if let Some(p) = pending {
        out.push(finish(p)?);
    }
    Ok(out)
}
