//! Diurnal / wide-swing classification of block series.
//!
//! A block is *change sensitive* when its count both follows a daily rhythm
//! and swings by a meaningful number of addresses on most days of some week.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::reconstruct::ActiveCountSeries;
use crate::regrid::{regrid, RegularSeries, SAMPLES_PER_DAY};
use crate::textio::{data_lines, no_trailing, parse_field};
use crate::{utc_day, Block, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyConfig {
    pub samples_per_day: usize,
    /// Days from the start of each series used for classification; 0 means
    /// the whole series.
    pub baseline_days: usize,
    pub diurnal_threshold: f64,
    /// Harmonics of the daily frequency counted with the fundamental.
    pub harmonics: usize,
    pub swing_threshold: u32,
    pub swing_days: usize,
    pub swing_window: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            samples_per_day: SAMPLES_PER_DAY,
            baseline_days: 28,
            diurnal_threshold: 0.5,
            harmonics: 2,
            swing_threshold: 5,
            swing_days: 4,
            swing_window: 7,
        }
    }
}

/// Max minus min of the active count within each UTC day.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DailySwingSeries {
    pub block: Block,
    /// `(utc day number, swing)`, ascending by day, days without samples omitted.
    pub days: Vec<(i64, u32)>,
}

impl DailySwingSeries {
    pub fn max_swing(&self) -> u32 {
        self.days.iter().map(|&(_, s)| s).max().unwrap_or(0)
    }

    fn restricted(&self, first_day: i64, days: usize) -> DailySwingSeries {
        let end = first_day + days as i64;
        DailySwingSeries {
            block: self.block,
            days: self.days.iter().copied().filter(|&(d, _)| d >= first_day && d < end).collect(),
        }
    }
}

pub fn daily_swing(series: &ActiveCountSeries) -> DailySwingSeries {
    let mut days: Vec<(i64, u32)> = Vec::new();
    let mut range: Option<(i64, u32, u32)> = None;
    for s in &series.samples {
        let day = utc_day(s.timestamp);
        match &mut range {
            Some((d, lo, hi)) if *d == day => {
                *lo = (*lo).min(s.count);
                *hi = (*hi).max(s.count);
            }
            _ => {
                if let Some((d, lo, hi)) = range {
                    days.push((d, hi - lo));
                }
                range = Some((day, s.count, s.count));
            }
        }
    }
    if let Some((d, lo, hi)) = range {
        days.push((d, hi - lo));
    }
    DailySwingSeries {
        block: series.block,
        days,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwingTest {
    pub wide: bool,
    /// Fewer than `window` days were available.
    pub insufficient: bool,
}

/// True when some `window` consecutive calendar days hold at least
/// `min_days` days whose swing reaches `threshold` (a "seasonal week").
pub fn wide_swing_test(swings: &DailySwingSeries, threshold: u32, min_days: usize, window: usize) -> SwingTest {
    if window == 0 || swings.days.len() < window {
        return SwingTest {
            wide: false,
            insufficient: true,
        };
    }
    let first = swings.days[0].0;
    let last = swings.days[swings.days.len() - 1].0;
    let span = (last - first + 1) as usize;
    let mut hit = vec![0usize; span];
    for &(d, s) in &swings.days {
        hit[(d - first) as usize] = usize::from(s >= threshold);
    }
    let wide = span >= window && {
        let mut count: usize = hit[..window].iter().sum();
        let mut found = count >= min_days;
        for i in window..span {
            count = count + hit[i] - hit[i - window];
            found |= count >= min_days;
        }
        found
    };
    SwingTest {
        wide,
        insufficient: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiurnalTest {
    pub diurnal: bool,
    pub score: f64,
    /// Shorter than seven days.
    pub insufficient: bool,
}

/// Share of non-DC spectral energy at 1/day and its first `harmonics`
/// multiples, after removing the mean and a least-squares line.
///
/// `values` must cover whole days of `per_day` samples so the daily frequency
/// falls on an exact bin. A series that is a straight line (including
/// constants) scores 0.
pub fn diurnal_score(values: &[f64], per_day: usize, harmonics: usize) -> f64 {
    let n = values.len();
    if per_day == 0 || n < 2 * per_day {
        return 0.0;
    }
    let days = n / per_day;
    let residual = detrend_linear(values);
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if residual.iter().all(|r| r.abs() <= 1e-9 * scale) {
        return 0.0;
    }
    let mut buf: Vec<Complex<f64>> = residual.iter().map(|&r| Complex::new(r, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power[1..].iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut target = 0.0;
    for h in 1..=harmonics + 1 {
        let k = h * days;
        if k > n / 2 {
            break;
        }
        target += power[k];
        if n - k != k {
            target += power[n - k];
        }
    }
    (target / total).clamp(0.0, 1.0)
}

fn detrend_linear(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    values
        .iter()
        .enumerate()
        .map(|(i, &y)| y - y_mean - slope * (i as f64 - x_mean))
        .collect()
}

/// Diurnal test on an already regridded series.
pub fn diurnal_test(series: &RegularSeries, threshold: f64, harmonics: usize) -> DiurnalTest {
    if series.days() < 7 {
        return DiurnalTest {
            diurnal: false,
            score: 0.0,
            insufficient: true,
        };
    }
    let values = &series.values[..series.days() * series.per_day];
    let score = diurnal_score(values, series.per_day, harmonics);
    DiurnalTest {
        diurnal: score >= threshold,
        score,
        insufficient: false,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockClassification {
    pub block: Block,
    pub responsive: bool,
    pub diurnal: bool,
    pub wide_swing: bool,
    pub change_sensitive: bool,
    pub diurnal_score: f64,
    pub max_daily_swing: u32,
    /// Too little data for one of the tests. Not written to files.
    pub insufficient_data: bool,
}

impl BlockClassification {
    fn unresponsive(block: Block) -> Self {
        BlockClassification {
            block,
            responsive: false,
            diurnal: false,
            wide_swing: false,
            change_sensitive: false,
            diurnal_score: 0.0,
            max_daily_swing: 0,
            insufficient_data: true,
        }
    }
}

/// Classifies a block over the configured baseline window.
pub fn classify(series: &ActiveCountSeries, cfg: &ClassifyConfig) -> BlockClassification {
    if series.is_empty() {
        return BlockClassification::unresponsive(series.block);
    }
    let regular = regrid(series, cfg.samples_per_day);
    let first_day = regular
        .as_ref()
        .map_or_else(|| utc_day(series.samples[0].timestamp), RegularSeries::first_day);
    let window_days = if cfg.baseline_days == 0 { usize::MAX / 2 } else { cfg.baseline_days };

    let swings = daily_swing(series).restricted(first_day, window_days);
    let swing = wide_swing_test(&swings, cfg.swing_threshold, cfg.swing_days, cfg.swing_window);

    let diurnal = match &regular {
        Some(r) => {
            let head = RegularSeries {
                values: r.head_days(window_days).to_vec(),
                ..r.clone()
            };
            diurnal_test(&head, cfg.diurnal_threshold, cfg.harmonics)
        }
        None => DiurnalTest {
            diurnal: false,
            score: 0.0,
            insufficient: true,
        },
    };

    let window_end = first_day + window_days as i64;
    let responsive = series
        .samples
        .iter()
        .filter(|s| (first_day..window_end).contains(&utc_day(s.timestamp)))
        .any(|s| s.count > 0);
    BlockClassification {
        block: series.block,
        responsive,
        diurnal: responsive && diurnal.diurnal,
        wide_swing: responsive && swing.wide,
        change_sensitive: responsive && diurnal.diurnal && swing.wide,
        diurnal_score: diurnal.score,
        max_daily_swing: swings.max_swing(),
        insufficient_data: diurnal.insufficient || swing.insufficient,
    }
}

/// Category totals in the layout of a block census table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CategoryCounts {
    pub total: usize,
    pub responsive: usize,
    pub diurnal: usize,
    pub wide_swing: usize,
    pub change_sensitive: usize,
}

impl CategoryCounts {
    pub fn tally<'a>(items: impl IntoIterator<Item = &'a BlockClassification>) -> Self {
        let mut c = CategoryCounts::default();
        for b in items {
            c.total += 1;
            if b.responsive {
                c.responsive += 1;
                c.diurnal += usize::from(b.diurnal);
                c.wide_swing += usize::from(b.wide_swing);
                c.change_sensitive += usize::from(b.change_sensitive);
            }
        }
        c
    }

    pub fn not_diurnal(&self) -> usize {
        self.responsive - self.diurnal
    }

    pub fn narrow_swing(&self) -> usize {
        self.responsive - self.wide_swing
    }

    pub fn not_change_sensitive(&self) -> usize {
        self.responsive - self.change_sensitive
    }
}

impl fmt::Display for CategoryCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# total {}", self.total)?;
        writeln!(f, "# responsive {}", self.responsive)?;
        writeln!(f, "#   not_diurnal {}", self.not_diurnal())?;
        writeln!(f, "#   diurnal {}", self.diurnal)?;
        writeln!(f, "#   narrow_swing {}", self.narrow_swing())?;
        writeln!(f, "#   wide_swing {}", self.wide_swing)?;
        writeln!(f, "#   not_change_sensitive {}", self.not_change_sensitive())?;
        writeln!(f, "#   change_sensitive {}", self.change_sensitive)
    }
}

/// One line per block followed by the category footer.
pub fn write_classifications<W: Write>(mut w: W, items: &[BlockClassification]) -> io::Result<()> {
    writeln!(w, "# block responsive diurnal wide_swing change_sensitive diurnal_score max_daily_swing")?;
    for c in items {
        writeln!(
            w,
            "{} {} {} {} {} {} {}",
            c.block,
            u8::from(c.responsive),
            u8::from(c.diurnal),
            u8::from(c.wide_swing),
            u8::from(c.change_sensitive),
            c.diurnal_score,
            c.max_daily_swing
        )?;
    }
    write!(w, "{}", CategoryCounts::tally(items))
}

pub fn read_classifications(text: &str) -> Result<BTreeMap<Block, BlockClassification>> {
    let flag = |fields: &mut std::str::SplitAsciiWhitespace<'_>, line, name| -> Result<bool> {
        match parse_field::<u8>(fields, line, name)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::parse(line, name, format!("expected 0 or 1, got {v}"))),
        }
    };
    let mut out = BTreeMap::new();
    for (line, content) in data_lines(text) {
        let mut f = content.split_ascii_whitespace();
        let block: Block = parse_field(&mut f, line, "block")?;
        let c = BlockClassification {
            block,
            responsive: flag(&mut f, line, "responsive")?,
            diurnal: flag(&mut f, line, "diurnal")?,
            wide_swing: flag(&mut f, line, "wide_swing")?,
            change_sensitive: flag(&mut f, line, "change_sensitive")?,
            diurnal_score: parse_field(&mut f, line, "diurnal_score")?,
            max_daily_swing: parse_field(&mut f, line, "max_daily_swing")?,
            insufficient_data: false,
        };
        no_trailing(&mut f, line)?;
        if out.insert(block, c).is_some() {
            return Err(Error::parse(line, "block", format!("{block} listed twice")));
        }
    }
    Ok(out)
}
