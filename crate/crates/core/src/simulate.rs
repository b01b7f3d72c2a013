//! Synthetic ground truth and adaptive probing for validating reconstruction.
//!
//! Profile file, one block per line of `key=value` fields:
//!
//! ```text
//! block=10.0.0.0/24 n=32 baseline=10 amplitude=8 mask=1111100 work=9-17 noise=0.01
//!   change_day=42 change_baseline=7 change_amplitude=0 lat=30.5 lon=114.3
//! ```
//!
//! `mask` holds one flag per weekday, Monday first. `work` is an hour range in
//! UTC, end exclusive. `change_day` counts days from the span start.

use std::fmt;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::Coord;
use crate::ingest::{EverActiveList, ObservationRecord, ObserverStream};
use crate::reconstruct::ActiveCountSeries;
use crate::textio::data_lines;
use crate::{Block, Error, ObserverId, OffsetSet, Result, DAY_SECS, ROUND_SECS};

/// Observer tags in assignment order.
pub const OBSERVER_TAGS: [&str; 5] = ["w", "j", "n", "e", "g"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkWeek(pub [bool; 7]);

impl WorkWeek {
    pub const MON_FRI: WorkWeek = WorkWeek([true, true, true, true, true, false, false]);
    pub const EVERY_DAY: WorkWeek = WorkWeek([true; 7]);

    /// Monday = 0.
    pub fn contains(&self, weekday: usize) -> bool {
        self.0[weekday % 7]
    }

    pub fn days(&self) -> usize {
        self.0.iter().filter(|&&d| d).count()
    }
}

impl fmt::Display for WorkWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            f.write_str(if d { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for WorkWeek {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() != 7 || !bytes.iter().all(|b| matches!(b, b'0' | b'1')) {
            return Err(format!("mask {s:?} is not seven 0/1 flags"));
        }
        let mut days = [false; 7];
        for (d, b) in days.iter_mut().zip(bytes) {
            *d = *b == b'1';
        }
        Ok(WorkWeek(days))
    }
}

/// Monday = 0 for the UTC day containing `timestamp`.
pub fn weekday(timestamp: i64) -> usize {
    // 1970-01-01 was a Thursday.
    (crate::utc_day(timestamp) + 3).rem_euclid(7) as usize
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub baseline: u16,
    pub amplitude: u16,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Change {
    pub day: u32,
    pub level: Level,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockProfile {
    pub block: Block,
    pub n: u16,
    pub level: Level,
    pub mask: WorkWeek,
    /// UTC hours, `[start, end)`.
    pub work_hours: (u8, u8),
    pub change: Option<Change>,
    /// Per-address, per-round state flip probability.
    pub noise: f64,
    pub coord: Option<Coord>,
}

impl BlockProfile {
    pub fn new(block: Block, n: u16, baseline: u16, amplitude: u16) -> Self {
        BlockProfile {
            block,
            n,
            level: Level { baseline, amplitude },
            mask: WorkWeek::MON_FRI,
            work_hours: (9, 17),
            change: None,
            noise: 0.0,
            coord: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("profile {}: {m}", self.block)));
        if self.n == 0 || self.n > 256 {
            return bad(format!("n = {} outside 1..=256", self.n));
        }
        let levels = std::iter::once(self.level).chain(self.change.map(|c| c.level));
        for l in levels {
            if u32::from(l.baseline) + u32::from(l.amplitude) > u32::from(self.n) {
                return bad(format!("baseline {} + amplitude {} exceeds n = {}", l.baseline, l.amplitude, self.n));
            }
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 1]", self.noise));
        }
        let (a, b) = self.work_hours;
        if a >= b || b > 24 {
            return bad(format!("work hours {a}-{b}"));
        }
        Ok(())
    }

    fn level_on(&self, day: u32) -> Level {
        match self.change {
            Some(c) if day >= c.day => c.level,
            _ => self.level,
        }
    }
}

impl fmt::Display for BlockProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "block={} n={} baseline={} amplitude={} mask={} work={}-{} noise={}",
            self.block,
            self.n,
            self.level.baseline,
            self.level.amplitude,
            self.mask,
            self.work_hours.0,
            self.work_hours.1,
            self.noise
        )?;
        if let Some(c) = self.change {
            write!(
                f,
                " change_day={} change_baseline={} change_amplitude={}",
                c.day, c.level.baseline, c.level.amplitude
            )?;
        }
        if let Some(c) = self.coord {
            write!(f, " lat={} lon={}", c.lat, c.lon)?;
        }
        Ok(())
    }
}

pub fn parse_profiles(text: &str) -> Result<Vec<BlockProfile>> {
    let mut out: Vec<BlockProfile> = Vec::new();
    for (line, content) in data_lines(text) {
        let p = parse_profile_line(line, content)?;
        if out.iter().any(|q| q.block == p.block) {
            return Err(Error::parse(line, "block", format!("{} profiled twice", p.block)));
        }
        out.push(p);
    }
    Ok(out)
}

fn parse_profile_line(line: usize, content: &str) -> Result<BlockProfile> {
    fn num<T: std::str::FromStr>(line: usize, key: &'static str, v: &str) -> Result<T> {
        v.parse().map_err(|_| Error::parse(line, key, format!("cannot parse {v:?}")))
    }
    let mut block = None;
    let mut n = None;
    let (mut baseline, mut amplitude) = (0u16, 0u16);
    let mut mask = WorkWeek::MON_FRI;
    let mut work = (9u8, 17u8);
    let mut noise = 0.0;
    let (mut change_day, mut change_base, mut change_amp) = (None, None, None);
    let (mut lat, mut lon) = (None, None);
    for item in content.split_ascii_whitespace() {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::parse(line, "field", format!("{item:?} is not key=value")))?;
        match key {
            "block" => block = Some(num::<Block>(line, "block", value)?),
            "n" => n = Some(num(line, "n", value)?),
            "baseline" => baseline = num(line, "baseline", value)?,
            "amplitude" => amplitude = num(line, "amplitude", value)?,
            "mask" => mask = num(line, "mask", value)?,
            "work" => {
                let (a, b) = value
                    .split_once('-')
                    .ok_or_else(|| Error::parse(line, "work", format!("{value:?} is not start-end")))?;
                work = (num(line, "work", a)?, num(line, "work", b)?);
            }
            "noise" => noise = num(line, "noise", value)?,
            "change_day" => change_day = Some(num(line, "change_day", value)?),
            "change_baseline" => change_base = Some(num(line, "change_baseline", value)?),
            "change_amplitude" => change_amp = Some(num(line, "change_amplitude", value)?),
            "lat" => lat = Some(num(line, "lat", value)?),
            "lon" => lon = Some(num(line, "lon", value)?),
            other => return Err(Error::parse(line, "field", format!("unknown key {other:?}"))),
        }
    }
    let block = block.ok_or_else(|| Error::parse(line, "block", "missing"))?;
    let n = n.ok_or_else(|| Error::parse(line, "n", "missing"))?;
    let change = match change_day {
        Some(day) => Some(Change {
            day,
            level: Level {
                baseline: change_base.unwrap_or(baseline),
                amplitude: change_amp.unwrap_or(amplitude),
            },
        }),
        None if change_base.is_some() || change_amp.is_some() => {
            return Err(Error::parse(line, "change_day", "change level given without change_day"))
        }
        None => None,
    };
    let coord = match (lat, lon) {
        (Some(a), Some(b)) => Some(Coord::new(a, b).map_err(|e| Error::parse(line, "lat", e.to_string()))?),
        (None, None) => None,
        _ => return Err(Error::parse(line, "lat", "lat and lon must be given together")),
    };
    let p = BlockProfile {
        block,
        n,
        level: Level { baseline, amplitude },
        mask,
        work_hours: work,
        change,
        noise,
        coord,
    };
    p.validate().map_err(|e| Error::parse(line, "profile", e.to_string()))?;
    Ok(p)
}

pub fn write_profiles<'a, W: Write>(mut w: W, profiles: impl IntoIterator<Item = &'a BlockProfile>) -> io::Result<()> {
    for p in profiles {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

/// Simulated time range: whole days from a UTC midnight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimSpan {
    pub start: i64,
    pub days: u32,
}

impl SimSpan {
    pub fn rounds(&self) -> usize {
        (i64::from(self.days) * DAY_SECS / ROUND_SECS) as usize
    }

    pub fn end(&self) -> i64 {
        self.start + i64::from(self.days) * DAY_SECS
    }
}

/// Ground-truth state of every ever-active address, per round.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthSeries {
    pub block: Block,
    pub start: i64,
    pub interval: i64,
    pub ever_active: EverActiveList,
    pub counts: Vec<u32>,
    pub states: Vec<OffsetSet>,
}

impl TruthSeries {
    pub fn timestamp(&self, round: usize) -> i64 {
        self.start + round as i64 * self.interval
    }
}

fn block_rng(seed: u64, block: Block, stream: u64) -> ChaCha8Rng {
    let mut key = seed ^ u64::from(block.prefix()).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    key = key.rotate_left(17) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03);
    ChaCha8Rng::seed_from_u64(key)
}

/// Ever-active offsets of a profile and the address order behind them:
/// address `i` of the profile lives at `order[i]`.
fn address_layout(profile: &BlockProfile, seed: u64) -> (EverActiveList, Vec<u8>) {
    let mut all: Vec<u8> = (0..=255).collect();
    let mut rng = block_rng(seed, profile.block, 1);
    all.shuffle(&mut rng);
    all.truncate(usize::from(profile.n));
    (EverActiveList::new(profile.block, all.iter().copied()), all)
}

/// Address `i` is up iff `i < baseline + amplitude` during work hours on
/// masked days, else iff `i < baseline`; each state then flips independently
/// with the profile noise probability.
pub fn gen_truth(profile: &BlockProfile, span: SimSpan, seed: u64) -> Result<TruthSeries> {
    profile.validate()?;
    if span.days < 7 {
        return Err(Error::InvalidArgument(format!("span of {} days is shorter than a week", span.days)));
    }
    if span.start.rem_euclid(DAY_SECS) != 0 {
        return Err(Error::InvalidArgument("span must start at a UTC midnight".into()));
    }
    let (list, order) = address_layout(profile, seed);
    let mut rng = block_rng(seed, profile.block, 2);
    let rounds = span.rounds();
    let mut counts = Vec::with_capacity(rounds);
    let mut states = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let t = span.start + r as i64 * ROUND_SECS;
        let day = ((t - span.start) / DAY_SECS) as u32;
        let level = profile.level_on(day);
        let hour = (t.rem_euclid(DAY_SECS) / 3600) as u8;
        let working = profile.mask.contains(weekday(t)) && hour >= profile.work_hours.0 && hour < profile.work_hours.1;
        let active = usize::from(level.baseline) + if working { usize::from(level.amplitude) } else { 0 };
        let mut set = OffsetSet::empty();
        for (i, &offset) in order.iter().enumerate() {
            let mut up = i < active;
            if profile.noise > 0.0 && rng.random_bool(profile.noise) {
                up = !up;
            }
            if up {
                set.insert(offset);
            }
        }
        counts.push(set.len() as u32);
        states.push(set);
    }
    Ok(TruthSeries {
        block: profile.block,
        start: span.start,
        interval: ROUND_SECS,
        ever_active: list,
        counts,
        states,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbePolicy {
    budget: u8,
    pub stop_on_first: bool,
}

impl ProbePolicy {
    pub fn new(budget: u8, stop_on_first: bool) -> Result<Self> {
        if !(1..=16).contains(&budget) {
            return Err(Error::InvalidArgument(format!("probe budget {budget} outside 1..=16")));
        }
        Ok(ProbePolicy { budget, stop_on_first })
    }

    pub fn budget(&self) -> u8 {
        self.budget
    }
}

impl Default for ProbePolicy {
    fn default() -> Self {
        ProbePolicy { budget: 15, stop_on_first: true }
    }
}

pub fn observer_tag(index: usize) -> ObserverId {
    let tag = match OBSERVER_TAGS.get(index) {
        Some(t) => (*t).to_string(),
        None => format!("o{index}"),
    };
    ObserverId::new(&tag).expect("generated tags are valid")
}

/// List index of an observer's `probes`-th probe. Each lap covers the whole
/// list in order, starting `shift` further on than the previous lap, so two
/// observers that meet do not stay in lockstep.
pub fn walk_position(n: usize, shift: usize, probes: usize) -> usize {
    ((probes / n + 1) * shift + probes) % n
}

/// Probe streams from `observers` sites.
///
/// Observer `j` starts its walk of the ever-active list (ascending offsets) at
/// position `j * n / k` and probes `j * 660 / k` seconds into each round; later
/// laps follow [`walk_position`]. Each round it continues the walk, probing up
/// to `min(budget, n)` addresses and stopping early at a positive reply when
/// the policy says so. Probes of one observer-round share a timestamp.
pub fn gen_probing(truth: &TruthSeries, policy: ProbePolicy, observers: usize) -> Result<Vec<ObserverStream>> {
    if observers == 0 {
        return Err(Error::InvalidArgument("at least one observer is required".into()));
    }
    let list: Vec<u8> = truth.ever_active.offsets.iter().collect();
    let n = list.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let per_round = usize::from(policy.budget).min(n);
    (0..observers)
        .map(|j| {
            let observer = observer_tag(j);
            let phase = j as i64 * truth.interval / observers as i64;
            let shift = j * n / observers;
            let mut probes = 0usize;
            let mut records = Vec::new();
            for (r, state) in truth.states.iter().enumerate() {
                let timestamp = truth.timestamp(r) + phase;
                for _ in 0..per_round {
                    let offset = list[walk_position(n, shift, probes)];
                    probes += 1;
                    let response = state.contains(offset);
                    records.push(ObservationRecord { timestamp, observer, block: truth.block, offset, response });
                    if response && policy.stop_on_first {
                        break;
                    }
                }
            }
            ObserverStream::new(observer, records)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Correlation {
    Defined(f64),
    /// One of the series is constant over the overlap.
    Undefined,
}

impl Correlation {
    pub fn value(&self) -> Option<f64> {
        match self {
            Correlation::Defined(r) => Some(*r),
            Correlation::Undefined => None,
        }
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Correlation {
    let m = a.len().min(b.len());
    if m < 2 {
        return Correlation::Undefined;
    }
    let (a, b) = (&a[..m], &b[..m]);
    let ma = a.iter().sum::<f64>() / m as f64;
    let mb = b.iter().sum::<f64>() / m as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Correlation::Undefined;
    }
    Correlation::Defined((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson r between truth counts and reconstructed samples at the same round
/// starts. Needs at least two days of overlap.
pub fn reconstruction_correlation(truth: &TruthSeries, reconstructed: &ActiveCountSeries) -> Result<Correlation> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for s in &reconstructed.samples {
        let dt = s.timestamp - truth.start;
        if dt < 0 || dt % truth.interval != 0 {
            continue;
        }
        if let Some(&c) = truth.counts.get((dt / truth.interval) as usize) {
            a.push(f64::from(c));
            b.push(f64::from(s.count));
        }
    }
    if (a.len() as i64) * truth.interval < 2 * DAY_SECS {
        return Err(Error::Insufficient(format!(
            "{}: {} aligned rounds, less than two days of overlap",
            truth.block,
            a.len()
        )));
    }
    Ok(pearson(&a, &b))
}

pub fn write_truth<'a, W: Write>(mut w: W, truths: impl IntoIterator<Item = &'a TruthSeries>) -> io::Result<()> {
    writeln!(w, "# block timestamp count")?;
    for t in truths {
        for (r, c) in t.counts.iter().enumerate() {
            writeln!(w, "{} {} {}", t.block, t.timestamp(r), c)?;
        }
    }
    Ok(())
}

/// Blocks `10.x.y.0/24` numbered from 0.
pub fn cohort_block(index: usize) -> Block {
    Block::new(0x0a_0000 + index as u32).expect("cohort index fits in a /24 prefix")
}

/// Mixed cohort spanning sparse to dense blocks, with and without a work-week
/// pattern.
pub fn mixed_cohort(count: usize, seed: u64) -> Vec<BlockProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n: u16 = rng.random_range(4..=256);
            let baseline = rng.random_range(0..=n / 2);
            let amplitude = rng.random_range(0..=(n - baseline) / 2);
            let mut p = BlockProfile::new(cohort_block(i), n, baseline, amplitude);
            p.mask = if rng.random_bool(0.7) { WorkWeek::MON_FRI } else { WorkWeek::EVERY_DAY };
            let start = rng.random_range(6..=10);
            p.work_hours = (start, start + rng.random_range(6..=10));
            p.noise = rng.random_range(0.0..0.05);
            p
        })
        .collect()
}

/// Cohort of work-schedule blocks. The first `changed` blocks lose their
/// daily bump and three baseline addresses on `change_day`.
pub fn workplace_cohort(count: usize, changed: usize, change_day: u32, seed: u64) -> Vec<BlockProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let baseline: u16 = rng.random_range(6..=20);
            let amplitude: u16 = rng.random_range(6..=12);
            let n = baseline + amplitude + rng.random_range(0..=16);
            let mut p = BlockProfile::new(cohort_block(i), n, baseline, amplitude);
            p.mask = if rng.random_bool(0.8) { WorkWeek::MON_FRI } else { WorkWeek::EVERY_DAY };
            let start = rng.random_range(7..=10);
            p.work_hours = (start, start + rng.random_range(7..=10));
            p.noise = rng.random_range(0.0..0.02);
            p.coord = Some(Coord {
                lat: rng.random_range(-40.0..60.0),
                lon: rng.random_range(-120.0..140.0),
            });
            if i < changed {
                p.change = Some(Change { day: change_day, level: Level { baseline: baseline - 3, amplitude: 0 } });
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::merge_streams;
    use crate::reconstruct::full_scan_time;

    const START: i64 = 18_262 * DAY_SECS; // 2020-01-01, a Wednesday

    fn span(days: u32) -> SimSpan {
        SimSpan { start: START, days }
    }

    #[test]
    fn every_lap_covers_the_list() {
        for (n, shift) in [(36, 7), (256, 51), (5, 0), (1, 0)] {
            for lap in 0..4 {
                let mut seen: Vec<usize> = (lap * n..(lap + 1) * n).map(|c| walk_position(n, shift, c)).collect();
                assert_eq!(seen[0], (lap + 1) * shift % n);
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn weekday_of_known_dates() {
        assert_eq!(weekday(START), 2);
        assert_eq!(weekday(0), 3);
    }

    #[test]
    fn flat_profile_is_constant() {
        let mut p = BlockProfile::new(cohort_block(0), 40, 12, 0);
        p.mask = WorkWeek::EVERY_DAY;
        let t = gen_truth(&p, span(7), 1).unwrap();
        assert!(t.counts.iter().all(|&c| c == 12));
        assert_eq!(t.counts.len(), 7 * 86_400 / 660);
    }

    #[test]
    fn lab_block_shape() {
        let p = BlockProfile::new(cohort_block(1), 64, 10, 8);
        let t = gen_truth(&p, span(7), 1).unwrap();
        for (r, &c) in t.counts.iter().enumerate() {
            let ts = t.timestamp(r);
            let hour = ts.rem_euclid(DAY_SECS) / 3600;
            let busy = weekday(ts) < 5 && (9..17).contains(&hour);
            assert_eq!(c, if busy { 18 } else { 10 }, "round {r}");
        }
    }

    #[test]
    fn seeded_determinism() {
        let mut p = BlockProfile::new(cohort_block(2), 64, 10, 8);
        p.noise = 0.05;
        let a = gen_truth(&p, span(7), 9).unwrap();
        assert_eq!(a, gen_truth(&p, span(7), 9).unwrap());
        assert_ne!(a.counts, gen_truth(&p, span(7), 10).unwrap().counts);
    }

    #[test]
    fn profile_validation() {
        assert!(gen_truth(&BlockProfile::new(cohort_block(0), 10, 8, 8), span(7), 0).is_err());
        assert!(gen_truth(&BlockProfile::new(cohort_block(0), 10, 2, 2), span(6), 0).is_err());
        assert!(ProbePolicy::new(0, true).is_err());
        assert!(ProbePolicy::new(17, true).is_err());
    }

    #[test]
    fn profile_line_round_trip() {
        let text = "block=10.0.0.0/24 n=32 baseline=10 amplitude=8 mask=1111100 work=9-17 noise=0.01 \
                    change_day=42 change_baseline=7 change_amplitude=0 lat=30.5 lon=114.3\n";
        let ps = parse_profiles(text).unwrap();
        let mut out = Vec::new();
        write_profiles(&mut out, &ps).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text.split_whitespace().collect::<Vec<_>>().join(" ") + "\n");
        assert!(parse_profiles("block=10.0.0.0/24 n=4 baseline=5\n").is_err());
        assert!(parse_profiles("block=10.0.0.0/24 n=4 colour=red\n").is_err());
    }

    #[test]
    fn fully_responsive_needs_one_probe_per_round() {
        let mut p = BlockProfile::new(cohort_block(3), 256, 256, 0);
        p.mask = WorkWeek::EVERY_DAY;
        let t = gen_truth(&p, span(7), 0).unwrap();
        let streams = gen_probing(&t, ProbePolicy::default(), 1).unwrap();
        assert_eq!(streams[0].records().len(), t.states.len());
        let merged = merge_streams(&streams).unwrap();
        let scan = full_scan_time(&t.ever_active, &merged[&t.block], None, ROUND_SECS);
        assert_eq!(scan.rounds(), Some(256));
    }

    #[test]
    fn observers_are_out_of_phase() {
        let p = BlockProfile::new(cohort_block(4), 100, 0, 0);
        let t = gen_truth(&p, span(7), 0).unwrap();
        let streams = gen_probing(&t, ProbePolicy::default(), 5).unwrap();
        let tags: Vec<String> = streams.iter().map(|s| s.observer().to_string()).collect();
        assert_eq!(tags, ["w", "j", "n", "e", "g"]);
        for (j, s) in streams.iter().enumerate() {
            assert_eq!(s.records()[0].timestamp, START + j as i64 * 132);
            assert_eq!(s.records()[0].offset, t.ever_active.offsets.iter().nth(j * 20).unwrap());
        }
    }

    #[test]
    fn pearson_hand_values() {
        // x = 1..5, y = 2,4,5,4,5: sxy = 6, sxx = 10, syy = 6.
        let r = pearson(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).value().unwrap();
        assert!((r - 6.0 / 60f64.sqrt()).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 2.0], &[3.0, 3.0]), Correlation::Undefined);
    }
}
