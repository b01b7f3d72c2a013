//! Additive trend + daily seasonal + residual decomposition.
//!
//! Two methods are provided: STL (seasonal-trend decomposition by LOESS,
//! following the Cleveland et al. inner/outer loop) and a naive decomposition
//! built from a centered moving average and per-phase means.

use std::io::{self, Write};

use crate::regrid::RegularSeries;
use crate::textio::{data_lines, no_trailing, parse_field};
use crate::{Block, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub period: usize,
    pub observed: Vec<f64>,
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
}

impl Decomposition {
    fn assemble(period: usize, observed: &[f64], trend: Vec<f64>, seasonal: Vec<f64>) -> Self {
        let residual = observed
            .iter()
            .zip(trend.iter().zip(&seasonal))
            .map(|(y, (t, s))| y - t - s)
            .collect();
        Decomposition {
            period,
            observed: observed.to_vec(),
            trend,
            seasonal,
            residual,
        }
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    /// Largest `|observed - (trend + seasonal + residual)|`.
    pub fn identity_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.observed[i] - (self.trend[i] + self.seasonal[i] + self.residual[i])).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DetrendMethod {
    #[default]
    Stl,
    Naive,
}

impl std::str::FromStr for DetrendMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stl" => Ok(DetrendMethod::Stl),
            "naive" => Ok(DetrendMethod::Naive),
            other => Err(format!("unknown detrend method {other:?}")),
        }
    }
}

impl std::fmt::Display for DetrendMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetrendMethod::Stl => "stl",
            DetrendMethod::Naive => "naive",
        })
    }
}

/// STL smoothing parameters. Windows are in samples and forced odd; `None`
/// selects the standard default for the period.
#[derive(Clone, Debug, PartialEq)]
pub struct StlParams {
    pub period: usize,
    /// Seasonal smoother span, in cycles.
    pub seasonal_window: usize,
    pub trend_window: Option<usize>,
    pub low_pass_window: Option<usize>,
    pub seasonal_degree: u8,
    pub trend_degree: u8,
    pub low_pass_degree: u8,
    pub seasonal_jump: usize,
    pub trend_jump: usize,
    pub low_pass_jump: usize,
    pub inner: usize,
    pub outer: usize,
    pub robust: bool,
}

impl StlParams {
    pub fn new(period: usize) -> Self {
        StlParams {
            period,
            seasonal_window: 7,
            trend_window: None,
            low_pass_window: None,
            seasonal_degree: 1,
            trend_degree: 1,
            low_pass_degree: 1,
            seasonal_jump: 1,
            trend_jump: 1,
            low_pass_jump: 1,
            inner: 2,
            outer: 1,
            robust: false,
        }
    }

    /// Smallest odd integer >= 1.5 * period / (1 - 1.5 / seasonal_window).
    pub fn default_trend_window(period: usize, seasonal_window: usize) -> usize {
        let ns = odd(seasonal_window.max(3)) as f64;
        let w = (1.5 * period as f64 / (1.0 - 1.5 / ns)).ceil() as usize;
        odd(w.max(3))
    }

    fn resolved(&self) -> Result<Resolved> {
        if self.period < 2 {
            return Err(Error::InvalidArgument("period must be at least 2".into()));
        }
        if self.inner == 0 {
            return Err(Error::InvalidArgument("at least one inner iteration is required".into()));
        }
        let ns = odd(self.seasonal_window.max(3));
        Ok(Resolved {
            np: self.period,
            ns,
            nt: odd(self.trend_window.unwrap_or_else(|| Self::default_trend_window(self.period, ns)).max(3)),
            nl: odd(self.low_pass_window.unwrap_or(self.period).max(3)),
            isdeg: self.seasonal_degree.min(1),
            itdeg: self.trend_degree.min(1),
            ildeg: self.low_pass_degree.min(1),
            nsjump: self.seasonal_jump.max(1),
            ntjump: self.trend_jump.max(1),
            nljump: self.low_pass_jump.max(1),
        })
    }
}

fn odd(n: usize) -> usize {
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

struct Resolved {
    np: usize,
    ns: usize,
    nt: usize,
    nl: usize,
    isdeg: u8,
    itdeg: u8,
    ildeg: u8,
    nsjump: usize,
    ntjump: usize,
    nljump: usize,
}

fn check_length(n: usize, period: usize) -> Result<()> {
    if period < 2 {
        return Err(Error::InvalidArgument("period must be at least 2".into()));
    }
    if n < 2 * period {
        return Err(Error::Insufficient(format!(
            "insufficient periods: {n} samples, need at least {}",
            2 * period
        )));
    }
    Ok(())
}

pub fn stl_decompose(values: &[f64], params: &StlParams) -> Result<Decomposition> {
    check_length(values.len(), params.period)?;
    let p = params.resolved()?;
    let n = values.len();
    let mut trend = vec![0.0; n];
    let mut season = vec![0.0; n];
    let mut weights: Option<Vec<f64>> = None;
    for pass in 0..params.outer.max(1) {
        inner_loop(values, &p, params.inner, weights.as_deref(), &mut season, &mut trend);
        if params.robust && pass + 1 < params.outer {
            weights = Some(robustness_weights(values, &season, &trend));
        }
    }
    center_periods(&mut season, &mut trend, params.period);
    Ok(Decomposition::assemble(params.period, values, trend, season))
}

fn inner_loop(y: &[f64], p: &Resolved, iterations: usize, rw: Option<&[f64]>, season: &mut [f64], trend: &mut Vec<f64>) {
    let n = y.len();
    for _ in 0..iterations {
        let detrended: Vec<f64> = y.iter().zip(trend.iter()).map(|(a, b)| a - b).collect();
        let cycle = cycle_subseries_smooth(&detrended, p, rw);
        let low = low_pass(&cycle, p.np);
        let low = loess(&low, p.nl, p.ildeg, p.nljump, None);
        for i in 0..n {
            season[i] = cycle[p.np + i] - low[i];
        }
        let deseasoned: Vec<f64> = y.iter().zip(season.iter()).map(|(a, b)| a - b).collect();
        *trend = loess(&deseasoned, p.nt, p.itdeg, p.ntjump, rw);
    }
}

fn robustness_weights(y: &[f64], season: &[f64], trend: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = (0..y.len()).map(|i| (y[i] - season[i] - trend[i]).abs()).collect();
    let mut sorted = r.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    let h = 6.0 * median;
    let (c9, c1) = (0.999 * h, 0.001 * h);
    r.iter()
        .map(|&v| {
            if v <= c1 {
                1.0
            } else if v <= c9 {
                let u = v / h;
                (1.0 - u * u).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

/// Moves the seasonal mean of every whole period into the trend, so each
/// period of the seasonal sums to zero. A trailing partial period is left as is.
fn center_periods(season: &mut [f64], trend: &mut [f64], period: usize) {
    for (s, t) in season.chunks_exact_mut(period).zip(trend.chunks_exact_mut(period)) {
        let mean = s.iter().sum::<f64>() / period as f64;
        s.iter_mut().for_each(|v| *v -= mean);
        t.iter_mut().for_each(|v| *v += mean);
    }
}

/// Smooths each cycle-subseries and extends it by one cycle at both ends.
/// Output has `n + 2 * period` values.
fn cycle_subseries_smooth(y: &[f64], p: &Resolved, rw: Option<&[f64]>) -> Vec<f64> {
    let n = y.len();
    let np = p.np;
    let mut out = vec![0.0; n + 2 * np];
    let mut work = Vec::new();
    let mut sub_rw = Vec::new();
    let mut scratch = Vec::new();
    for j in 0..np {
        let k = (n - j - 1) / np + 1;
        work.clear();
        work.extend((0..k).map(|i| y[i * np + j]));
        let rw_sub = rw.map(|rw| {
            sub_rw.clear();
            sub_rw.extend((0..k).map(|i| rw[i * np + j]));
            sub_rw.as_slice()
        });
        let smooth = loess(&work, p.ns, p.isdeg, p.nsjump, rw_sub);
        scratch.resize(k.max(scratch.len()), 0.0);
        let right = p.ns.min(k) - 1;
        let before = estimate(&work, p.ns, p.isdeg, -1.0, 0, right, &mut scratch, rw_sub).unwrap_or(smooth[0]);
        let left = k.saturating_sub(p.ns);
        let after = estimate(&work, p.ns, p.isdeg, k as f64, left, k - 1, &mut scratch, rw_sub).unwrap_or(smooth[k - 1]);
        out[j] = before;
        for (m, v) in smooth.iter().enumerate() {
            out[(m + 1) * np + j] = *v;
        }
        out[(k + 1) * np + j] = after;
    }
    out
}

/// Moving averages of length `np`, `np` and 3, shrinking `n + 2np` to `n`.
fn low_pass(x: &[f64], np: usize) -> Vec<f64> {
    moving_average(&moving_average(&moving_average(x, np), np), 3)
}

fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    let out_len = x.len() + 1 - len;
    let mut out = Vec::with_capacity(out_len);
    let flen = len as f64;
    let mut v: f64 = x[..len].iter().sum();
    out.push(v / flen);
    for i in 1..out_len {
        v = v - x[i - 1] + x[i + len - 1];
        out.push(v / flen);
    }
    out
}

/// LOESS smoothing with span `len`, local degree 0 or 1, evaluated every
/// `jump` points and linearly interpolated in between.
fn loess(y: &[f64], len: usize, degree: u8, jump: usize, rw: Option<&[f64]>) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return y.to_vec();
    }
    let mut ys = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nj = jump.min(n - 1).max(1);
    let (mut left, mut right);
    if len >= n {
        left = 0;
        right = n - 1;
        for i in (0..n).step_by(nj) {
            ys[i] = estimate(y, len, degree, i as f64, left, right, &mut w, rw).unwrap_or(y[i]);
        }
    } else if nj == 1 {
        let half = len.div_ceil(2);
        left = 0;
        right = len - 1;
        for i in 0..n {
            if i + 1 > half && right != n - 1 {
                left += 1;
                right += 1;
            }
            ys[i] = estimate(y, len, degree, i as f64, left, right, &mut w, rw).unwrap_or(y[i]);
        }
    } else {
        let half = len.div_ceil(2);
        left = 0;
        right = len - 1;
        for i in (0..n).step_by(nj) {
            let i1 = i + 1;
            if i1 < half {
                left = 0;
                right = len - 1;
            } else if i1 > n - half {
                left = n - len;
                right = n - 1;
            } else {
                left = i1 - half;
                right = len + i1 - half - 1;
            }
            ys[i] = estimate(y, len, degree, i as f64, left, right, &mut w, rw).unwrap_or(y[i]);
        }
    }
    if nj != 1 {
        let mut i = 0;
        while i + nj < n {
            let delta = (ys[i + nj] - ys[i]) / nj as f64;
            for j in i + 1..i + nj {
                ys[j] = ys[i] + delta * (j - i) as f64;
            }
            i += nj;
        }
        let k = ((n - 1) / nj) * nj;
        if k != n - 1 {
            ys[n - 1] = estimate(y, len, degree, (n - 1) as f64, left, right, &mut w, rw).unwrap_or(y[n - 1]);
            if k != n - 2 {
                let delta = (ys[n - 1] - ys[k]) / (n - 1 - k) as f64;
                for j in k + 1..n - 1 {
                    ys[j] = ys[k] + delta * (j - k) as f64;
                }
            }
        }
    }
    ys
}

/// Tricube-weighted local fit of `y[left..=right]` evaluated at `xs`.
#[allow(clippy::too_many_arguments)]
fn estimate(
    y: &[f64],
    len: usize,
    degree: u8,
    xs: f64,
    left: usize,
    right: usize,
    w: &mut [f64],
    rw: Option<&[f64]>,
) -> Option<f64> {
    let n = y.len();
    let range = (n - 1) as f64;
    let mut h = (xs - left as f64).max(right as f64 - xs);
    if len > n {
        h += ((len - n) / 2) as f64;
    }
    let (h9, h1) = (0.999 * h, 0.001 * h);
    let mut a = 0.0;
    for j in left..=right {
        w[j] = 0.0;
        let r = (j as f64 - xs).abs();
        if r <= h9 {
            w[j] = if r <= h1 {
                1.0
            } else {
                let q = r / h;
                (1.0 - q * q * q).powi(3)
            };
            if let Some(rw) = rw {
                w[j] *= rw[j];
            }
            a += w[j];
        }
    }
    if a <= 0.0 {
        return None;
    }
    for wj in &mut w[left..=right] {
        *wj /= a;
    }
    if h > 0.0 && degree > 0 {
        let a: f64 = (left..=right).map(|j| w[j] * j as f64).sum();
        let mut b = xs - a;
        let c: f64 = (left..=right).map(|j| w[j] * (j as f64 - a).powi(2)).sum();
        if c.sqrt() > 0.001 * range {
            b /= c;
            for j in left..=right {
                w[j] *= b * (j as f64 - a) + 1.0;
            }
        }
    }
    Some((left..=right).map(|j| w[j] * y[j]).sum())
}

/// Centered moving-average trend plus per-phase mean seasonal.
///
/// The moving average has window `period` (a 2 x period filter for even
/// periods). Half a window at each end has no centered average; those values
/// extend a least-squares line through the nearest `period` trend values.
pub fn naive_decompose(values: &[f64], period: usize) -> Result<Decomposition> {
    let n = values.len();
    check_length(n, period)?;
    let half = period / 2;
    let mut trend = vec![0.0; n];
    for (i, t) in trend.iter_mut().enumerate().take(n - half).skip(half) {
        *t = if period % 2 == 1 {
            values[i - half..=i + half].iter().sum::<f64>() / period as f64
        } else {
            let inner: f64 = values[i - half + 1..i + half].iter().sum();
            (inner + 0.5 * (values[i - half] + values[i + half])) / period as f64
        };
    }
    let valid = half..n - half;
    let fit_len = period.min(valid.len());
    let head = line_fit(&trend, valid.start, valid.start + fit_len);
    for (i, t) in trend.iter_mut().enumerate().take(valid.start) {
        *t = head.0 + head.1 * i as f64;
    }
    let tail = line_fit(&trend, valid.end - fit_len, valid.end);
    for (i, t) in trend.iter_mut().enumerate().skip(valid.end) {
        *t = tail.0 + tail.1 * i as f64;
    }

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for i in 0..n {
        sums[i % period] += values[i] - trend[i];
        counts[i % period] += 1;
    }
    let mut pattern: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let mean = pattern.iter().sum::<f64>() / period as f64;
    for v in &mut pattern {
        *v -= mean;
    }
    let seasonal = (0..n).map(|i| pattern[i % period]).collect();
    Ok(Decomposition::assemble(period, values, trend, seasonal))
}

/// Least-squares `(intercept, slope)` of `y[from..to]` against index.
fn line_fit(y: &[f64], from: usize, to: usize) -> (f64, f64) {
    let m = (to - from) as f64;
    let xm = (from + to - 1) as f64 / 2.0;
    let ym = y[from..to].iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &v) in y.iter().enumerate().take(to).skip(from) {
        let dx = i as f64 - xm;
        sxy += dx * (v - ym);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (ym - slope * xm, slope)
}

/// Decomposition of one block's regridded series.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecomposition {
    pub block: Block,
    pub timestamps: Vec<i64>,
    pub parts: Decomposition,
}

pub fn decompose_series(series: &RegularSeries, method: DetrendMethod, stl: &StlParams) -> Result<BlockDecomposition> {
    let parts = match method {
        DetrendMethod::Stl => stl_decompose(&series.values, &StlParams { period: series.per_day, ..stl.clone() })?,
        DetrendMethod::Naive => naive_decompose(&series.values, series.per_day)?,
    };
    Ok(BlockDecomposition {
        block: series.block,
        timestamps: series.timestamps(),
        parts,
    })
}

pub fn write_decompositions<'a, W: Write>(
    mut w: W,
    items: impl IntoIterator<Item = &'a BlockDecomposition>,
) -> io::Result<()> {
    writeln!(w, "# block timestamp observed trend seasonal residual")?;
    for d in items {
        writeln!(w, "#period {} {}", d.block, d.parts.period)?;
        let p = &d.parts;
        for i in 0..p.len() {
            writeln!(
                w,
                "{} {} {} {} {} {}",
                d.block, d.timestamps[i], p.observed[i], p.trend[i], p.seasonal[i], p.residual[i]
            )?;
        }
    }
    Ok(())
}

/// Reads a decomposition file; rows are grouped by block in file order.
pub fn read_decompositions(text: &str) -> Result<Vec<BlockDecomposition>> {
    let mut periods = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.trim().strip_prefix("#period ") {
            let mut f = rest.split_ascii_whitespace();
            let block: Block = parse_field(&mut f, i + 1, "block")?;
            let period: usize = parse_field(&mut f, i + 1, "period")?;
            periods.insert(block, period);
        }
    }
    let mut out: Vec<BlockDecomposition> = Vec::new();
    for (line, content) in data_lines(text) {
        let mut f = content.split_ascii_whitespace();
        let block: Block = parse_field(&mut f, line, "block")?;
        let ts: i64 = parse_field(&mut f, line, "timestamp")?;
        let vals: [f64; 4] = [
            parse_field(&mut f, line, "observed")?,
            parse_field(&mut f, line, "trend")?,
            parse_field(&mut f, line, "seasonal")?,
            parse_field(&mut f, line, "residual")?,
        ];
        no_trailing(&mut f, line)?;
        if out.last().is_none_or(|d| d.block != block) {
            if out.iter().any(|d| d.block == block) {
                return Err(Error::parse(line, "block", format!("rows for {block} are not contiguous")));
            }
            out.push(BlockDecomposition {
                block,
                timestamps: Vec::new(),
                parts: Decomposition {
                    period: periods.get(&block).copied().unwrap_or(0),
                    observed: Vec::new(),
                    trend: Vec::new(),
                    seasonal: Vec::new(),
                    residual: Vec::new(),
                },
            });
        }
        let d = out.last_mut().expect("pushed above");
        if d.timestamps.last().is_some_and(|&prev| ts <= prev) {
            return Err(Error::parse(line, "timestamp", "not increasing"));
        }
        d.timestamps.push(ts);
        d.parts.observed.push(vals[0]);
        d.parts.trend.push(vals[1]);
        d.parts.seasonal.push(vals[2]);
        d.parts.residual.push(vals[3]);
    }
    Ok(out)
}
