//! Re-sampling of round series onto an exact number of slots per UTC day.

use crate::reconstruct::ActiveCountSeries;
use crate::{Block, DAY_SECS};

/// Rounds per day, 86400 / 660 rounded to the nearest integer.
pub const SAMPLES_PER_DAY: usize = 131;

/// Values on whole UTC days, `per_day` evenly spaced slots each, slot `j`
/// of a day at `midnight + floor(j * 86400 / per_day)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularSeries {
    pub block: Block,
    /// Midnight (UTC) of the first day.
    pub start: i64,
    pub per_day: usize,
    pub values: Vec<f64>,
}

impl RegularSeries {
    pub fn days(&self) -> usize {
        self.values.len() / self.per_day
    }

    pub fn first_day(&self) -> i64 {
        crate::utc_day(self.start)
    }

    pub fn timestamp(&self, index: usize) -> i64 {
        let (day, slot) = (index / self.per_day, index % self.per_day);
        self.start + day as i64 * DAY_SECS + slot_offset(slot, self.per_day)
    }

    pub fn timestamps(&self) -> Vec<i64> {
        (0..self.values.len()).map(|i| self.timestamp(i)).collect()
    }

    /// The first `days` whole days (or everything, if shorter).
    pub fn head_days(&self, days: usize) -> &[f64] {
        &self.values[..(days * self.per_day).min(self.values.len())]
    }
}

fn slot_offset(slot: usize, per_day: usize) -> i64 {
    (slot as i64 * DAY_SECS) / per_day as i64
}

/// Sample-and-hold onto whole UTC days.
///
/// Gaps longer than a day split the series; the longest piece is used. Only
/// days fully covered by that piece are kept (each sample holds until the next
/// one, the last for one interval). Returns `None` when no whole day remains.
pub fn regrid(series: &ActiveCountSeries, per_day: usize) -> Option<RegularSeries> {
    if per_day == 0 || series.samples.is_empty() {
        return None;
    }
    let samples = &series.samples;
    let mut best = (0usize, 1usize);
    let mut seg_start = 0;
    for i in 1..=samples.len() {
        let split = i == samples.len() || samples[i].timestamp - samples[i - 1].timestamp > DAY_SECS;
        if split {
            let span = |a: usize, b: usize| samples[b - 1].timestamp - samples[a].timestamp;
            if span(seg_start, i) > span(best.0, best.1) {
                best = (seg_start, i);
            }
            seg_start = i;
        }
    }
    let seg = &samples[best.0..best.1];
    let covered_until = seg[seg.len() - 1].timestamp + series.interval;
    let first_day = seg[0].timestamp.div_euclid(DAY_SECS) + i64::from(seg[0].timestamp.rem_euclid(DAY_SECS) != 0);
    let last_slot = slot_offset(per_day - 1, per_day);
    let mut days = 0i64;
    while (first_day + days) * DAY_SECS + last_slot < covered_until {
        days += 1;
    }
    if days == 0 {
        return None;
    }
    let start = first_day * DAY_SECS;
    let mut values = Vec::with_capacity(days as usize * per_day);
    let mut k = 0;
    for day in 0..days {
        for slot in 0..per_day {
            let t = start + day * DAY_SECS + slot_offset(slot, per_day);
            while k + 1 < seg.len() && seg[k + 1].timestamp <= t {
                k += 1;
            }
            values.push(f64::from(seg[k].count));
        }
    }
    Some(RegularSeries {
        block: series.block,
        start,
        per_day,
        values,
    })
}
