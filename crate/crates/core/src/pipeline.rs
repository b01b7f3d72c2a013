//! File-to-file stages driven by a [`PipelineConfig`].
//!
//! | stage       | reads                                   | writes                                  |
//! |-------------|-----------------------------------------|-----------------------------------------|
//! | simulate    | profiles                                | observations, ever_active, truth, geo   |
//! | reconstruct | observations, ever_active               | series, scan_latency                    |
//! | classify    | series                                  | classification                          |
//! | detrend     | series, classification                  | decomposition                           |
//! | detect      | decomposition                           | events                                  |
//! | aggregate   | events, classification, geo             | grid, heatmaps/, cells/                 |

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::classify::{classify, read_classifications, write_classifications, CategoryCounts};
use crate::config::PipelineConfig;
use crate::detect::{detect_block, read_events, write_events, LabeledEvent};
use crate::detrend::{decompose_series, read_decompositions, write_decompositions};
use crate::geo::{daily_change_fraction, export_cell_timeseries, export_heatmap, parse_geo_table, write_geo_table, GeoTable};
use crate::ingest::{
    merge_streams, parse_ever_active, parse_observations, screen_offsets, streams_by_observer, superseded_duplicates,
    write_ever_active, write_observations, ObservationFormat,
};
use crate::reconstruct::{emit_series, full_scan_time, read_series, write_series, RoundGrid, ScanLatency, ScanOutcome};
use crate::regrid::regrid;
use crate::simulate::{gen_probing, gen_truth, parse_profiles, write_truth};
use crate::textio::read_input;
use crate::{format_day, parse_day, utc_day, Error, Result, ROUND_SECS};

pub const OBSERVATIONS: &str = "observations.txt";
pub const EVER_ACTIVE: &str = "ever_active.txt";
pub const TRUTH: &str = "truth.txt";
pub const GEO: &str = "geo.txt";
pub const SERIES: &str = "series.txt";
pub const SCAN_LATENCY: &str = "scan_latency.txt";
pub const CLASSIFICATION: &str = "classification.txt";
pub const DECOMPOSITION: &str = "decomposition.txt";
pub const EVENTS: &str = "events.txt";
pub const GRID: &str = "grid.txt";
pub const HEATMAPS: &str = "heatmaps";
pub const CELLS: &str = "cells";
pub const CONFIG_COPY: &str = "config.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Reconstruct,
    Classify,
    Detrend,
    Detect,
    Aggregate,
    All,
}

impl Stage {
    pub const CHAIN: [Stage; 6] = [
        Stage::Simulate,
        Stage::Reconstruct,
        Stage::Classify,
        Stage::Detrend,
        Stage::Detect,
        Stage::Aggregate,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Simulate => "simulate",
            Stage::Reconstruct => "reconstruct",
            Stage::Classify => "classify",
            Stage::Detrend => "detrend",
            Stage::Detect => "detect",
            Stage::Aggregate => "aggregate",
            Stage::All => "all",
        })
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Stage::CHAIN
            .into_iter()
            .chain([Stage::All])
            .find(|st| st.to_string() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

/// Process exit status for an error: 2 for a missing input, 3 for a bad
/// config, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MissingInput { .. } => 2,
        Error::Config(_) => 3,
        _ => 1,
    }
}

pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        pool = pool.num_threads(cfg.workers);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    pool.install(|| {
        let out = cfg.output_dir();
        fs::create_dir_all(&out)?;
        fs::write(out.join(CONFIG_COPY), cfg.dump())?;
        match stage {
            Stage::All => {
                for st in Stage::CHAIN {
                    if st == Stage::Simulate && cfg.profiles.is_none() {
                        log::info!("no profiles configured, skipping simulate");
                        continue;
                    }
                    run_one(st, cfg, &out)?;
                }
                Ok(())
            }
            st => run_one(st, cfg, &out),
        }
    })
}

fn run_one(stage: Stage, cfg: &PipelineConfig, out: &Path) -> Result<()> {
    log::info!("stage {stage}");
    match stage {
        Stage::Simulate => simulate(cfg, out),
        Stage::Reconstruct => reconstruct(cfg, out),
        Stage::Classify => classify_stage(cfg, out),
        Stage::Detrend => detrend(cfg, out),
        Stage::Detect => detect(cfg, out),
        Stage::Aggregate => aggregate(cfg, out),
        Stage::All => unreachable!("expanded by run_stage"),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn simulate(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let path = cfg.profiles_path().ok_or_else(|| Error::MissingInput {
        path: PathBuf::from("<profiles>"),
        reason: "no profiles file configured".into(),
    })?;
    let profiles = parse_profiles(&read_input(&path)?)?;
    let span = cfg.sim_span();
    let policy = cfg.probe_policy();
    let sims = profiles
        .par_iter()
        .map(|p| {
            let truth = gen_truth(p, span, cfg.seed)?;
            let streams = gen_probing(&truth, policy, cfg.sim_observers)?;
            let merged = merge_streams(&streams)?;
            let mut text = Vec::new();
            write_observations(&mut text, merged.values().flatten())?;
            Ok((truth, text))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut obs = create(&out.join(OBSERVATIONS))?;
    writeln!(obs, "# timestamp observer block offset response")?;
    for (_, text) in &sims {
        obs.write_all(text)?;
    }
    finish(obs)?;
    let mut ea = create(&out.join(EVER_ACTIVE))?;
    write_ever_active(&mut ea, sims.iter().map(|(t, _)| &t.ever_active))?;
    finish(ea)?;
    let mut truth = create(&out.join(TRUTH))?;
    write_truth(&mut truth, sims.iter().map(|(t, _)| t))?;
    finish(truth)?;
    let geo: GeoTable = profiles.iter().filter_map(|p| p.coord.map(|c| (p.block, c))).collect();
    let mut g = create(&out.join(GEO))?;
    write_geo_table(&mut g, &geo)?;
    finish(g)?;
    log::info!("simulated {} blocks over {} days", profiles.len(), span.days);
    Ok(())
}

fn reconstruct(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let obs_text = read_input(&cfg.observations_path())?;
    let lists = parse_ever_active(&read_input(&cfg.ever_active_path())?)?;
    let parsed = parse_observations(obs_text.as_bytes(), ObservationFormat::Text)?;
    drop(obs_text);
    for r in &parsed.rejected {
        log::warn!("line {}: {}", r.line, r.reason);
    }
    let (Some(first), Some(last)) = (
        parsed.records.iter().map(|r| r.timestamp).min(),
        parsed.records.iter().map(|r| r.timestamp).max(),
    ) else {
        return Err(Error::Insufficient("no observations".into()));
    };
    let grid = RoundGrid::new(first);
    let mut merged = merge_streams(&streams_by_observer(&parsed.records)?)?;
    drop(parsed);
    for block in merged.keys().filter(|b| !lists.contains_key(b)) {
        log::warn!("{block}: observations but no ever-active list, skipped");
    }
    let work: Vec<_> = lists
        .values()
        .map(|list| (list, merged.remove(&list.block).unwrap_or_default()))
        .collect();
    let results = work
        .into_par_iter()
        .map(|(list, records)| {
            let dups = superseded_duplicates(&records).len();
            if dups > 0 {
                log::debug!("{}: {dups} superseded duplicate probes", list.block);
            }
            let latency = full_scan_time(list, &records, None, ROUND_SECS);
            let screened = screen_offsets(records, list, cfg.strict_offsets);
            if screened.outside_list > 0 {
                log::warn!("{}: {} probes outside the ever-active list", list.block, screened.outside_list);
            }
            if list.is_empty() {
                return Ok((None, latency));
            }
            Ok((Some(emit_series(list, &screened.records, grid, Some(last))?), latency))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = create(&out.join(SERIES))?;
    write_series(&mut w, results.iter().filter_map(|(s, _)| s.as_ref()))?;
    finish(w)?;
    let mut w = create(&out.join(SCAN_LATENCY))?;
    write_scan_latency(&mut w, results.iter().map(|(_, l)| l))?;
    finish(w)?;
    log::info!("reconstructed {} blocks", results.len());
    Ok(())
}

pub fn write_scan_latency<'a, W: Write>(mut w: W, items: impl IntoIterator<Item = &'a ScanLatency>) -> std::io::Result<()> {
    writeln!(w, "# block observers rounds seconds")?;
    for l in items {
        let observers = if l.observers.is_empty() {
            "-".to_string()
        } else {
            l.observers.iter().map(|o| o.as_str()).collect::<Vec<_>>().join(",")
        };
        match l.outcome {
            ScanOutcome::Complete { rounds, seconds } => writeln!(w, "{} {observers} {rounds} {seconds}", l.block)?,
            ScanOutcome::Incomplete { observed, total } => {
                writeln!(w, "{} {observers} incomplete {observed}/{total}", l.block)?
            }
        }
    }
    Ok(())
}

fn classify_stage(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let series = read_series(&read_input(&out.join(SERIES))?)?;
    let items: Vec<_> = series.par_iter().map(|s| classify(s, &cfg.classify)).collect();
    let mut w = create(&out.join(CLASSIFICATION))?;
    write_classifications(&mut w, &items)?;
    finish(w)?;
    log::info!("{}", CategoryCounts::tally(&items).to_string().replace('\n', "; "));
    Ok(())
}

fn detrend(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let series = read_series(&read_input(&out.join(SERIES))?)?;
    let classes = read_classifications(&read_input(&out.join(CLASSIFICATION))?)?;
    let selected: Vec<_> = series
        .iter()
        .filter(|s| classes.get(&s.block).is_some_and(|c| c.change_sensitive))
        .collect();
    let results: Vec<_> = selected
        .par_iter()
        .map(|s| {
            let Some(regular) = regrid(s, cfg.classify.samples_per_day) else {
                log::warn!("{}: no whole days to decompose", s.block);
                return None;
            };
            match decompose_series(&regular, cfg.detrend_method, &cfg.stl) {
                Ok(d) => Some(d),
                Err(e) => {
                    log::warn!("{}: {e}", s.block);
                    None
                }
            }
        })
        .collect();
    let decomps: Vec<_> = results.into_iter().flatten().collect();
    let mut w = create(&out.join(DECOMPOSITION))?;
    write_decompositions(&mut w, &decomps)?;
    finish(w)?;
    log::info!("decomposed {} of {} change-sensitive blocks", decomps.len(), selected.len());
    Ok(())
}

fn detect(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let decomps = read_decompositions(&read_input(&out.join(DECOMPOSITION))?)?;
    let per_block = decomps
        .par_iter()
        .map(|d| detect_block(d, &cfg.detect))
        .collect::<Result<Vec<_>>>()?;
    let span = decomps
        .iter()
        .filter_map(|d| Some((*d.timestamps.first()?, *d.timestamps.last()?)))
        .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)));
    let mut w = create(&out.join(EVENTS))?;
    if let Some((a, b)) = span {
        writeln!(w, "#span {} {}", format_day(utc_day(a)), format_day(utc_day(b)))?;
    }
    write_events(&mut w, per_block.iter().flat_map(|b| &b.events))?;
    finish(w)?;
    let (suppressed, withheld): (usize, usize) = per_block
        .iter()
        .fold((0, 0), |acc, b| (acc.0 + b.suppressed, acc.1 + b.withheld));
    log::info!(
        "{} events in {} blocks ({suppressed} suppressed early, {withheld} withheld near the end)",
        per_block.iter().map(|b| b.events.len()).sum::<usize>(),
        per_block.len()
    );
    Ok(())
}

/// `#span <first> <last>` from an events file, if present.
fn event_span(text: &str) -> Option<(i64, i64)> {
    let line = text.lines().find_map(|l| l.trim().strip_prefix("#span "))?;
    let mut f = line.split_ascii_whitespace();
    Some((parse_day(f.next()?)?, parse_day(f.next()?)?))
}

fn aggregate(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let events_text = read_input(&out.join(EVENTS))?;
    let events: Vec<LabeledEvent> = read_events(&events_text)?;
    let classes = read_classifications(&read_input(&out.join(CLASSIFICATION))?)?;
    let geo = parse_geo_table(&read_input(&cfg.geo_path())?)?;
    let (first, last) = event_span(&events_text)
        .or_else(|| {
            let days = events.iter().map(|e| utc_day(e.event.peak));
            Some((days.clone().min()?, days.max()?))
        })
        .unwrap_or((0, -1));
    let days = (last - first + 1).max(0) as usize;
    let agg = daily_change_fraction(&events, &classes, &geo, first, days);
    if !agg.ungeolocated.is_empty() {
        log::warn!("{} change-sensitive blocks lack geolocation", agg.ungeolocated.len());
    }
    let mut w = create(&out.join(GRID))?;
    crate::geo::write_grid(&mut w, &agg)?;
    finish(w)?;

    let heat_dir = out.join(HEATMAPS);
    let cell_dir = out.join(CELLS);
    fs::create_dir_all(&heat_dir)?;
    fs::create_dir_all(&cell_dir)?;
    (0..days).into_par_iter().try_for_each(|i| -> Result<()> {
        let day = first + i as i64;
        let mut w = create(&heat_dir.join(format!("{}.txt", format_day(day))))?;
        export_heatmap(&mut w, &agg.day(day))?;
        finish(w)
    })?;
    let cells: Vec<_> = agg.cells().collect();
    cells.par_iter().try_for_each(|cell| -> Result<()> {
        let mut w = create(&cell_dir.join(format!("{cell}.txt")))?;
        export_cell_timeseries(&mut w, *cell, &agg)?;
        finish(w)
    })?;
    let per_label = events.iter().fold(BTreeMap::new(), |mut m, e| {
        *m.entry(e.label.to_string()).or_insert(0usize) += 1;
        m
    });
    log::info!("aggregated {} cells over {days} days, events by label {per_label:?}", cells.len());
    Ok(())
}
