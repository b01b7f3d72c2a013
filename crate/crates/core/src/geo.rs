//! 2x2 degree grid binning and per-day change fractions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use crate::classify::BlockClassification;
use crate::detect::{Label, LabeledEvent};
use crate::textio::{data_lines, no_trailing, parse_field};
use crate::{format_day, utc_day, Block, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coord {
    pub lat: f64,
    pub lon: f64,
}

impl Coord {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidArgument(format!("coordinate ({lat}, {lon}) out of range")));
        }
        Ok(Coord { lat, lon })
    }
}

/// South-west corner of a 2x2 degree cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridCell {
    pub lat: i16,
    pub lon: i16,
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.lat, self.lon)
    }
}

/// `(2 floor(lat/2), 2 floor(lon/2))`. The north pole and the antimeridian
/// at +180 fold into the cells below them, so every cell is 2x2 degrees.
pub fn grid_cell(lat: f64, lon: f64) -> Result<GridCell> {
    let c = Coord::new(lat, lon)?;
    let bin = |v: f64, max: i16| ((2.0 * (v / 2.0).floor()) as i16).min(max);
    Ok(GridCell { lat: bin(c.lat, 88), lon: bin(c.lon, 178) })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeoTable(BTreeMap<Block, Coord>);

impl GeoTable {
    pub fn insert(&mut self, block: Block, coord: Coord) -> Option<Coord> {
        self.0.insert(block, coord)
    }

    pub fn get(&self, block: Block) -> Option<Coord> {
        self.0.get(&block).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Block, Coord)> + '_ {
        self.0.iter().map(|(b, c)| (*b, *c))
    }
}

impl FromIterator<(Block, Coord)> for GeoTable {
    fn from_iter<I: IntoIterator<Item = (Block, Coord)>>(iter: I) -> Self {
        GeoTable(iter.into_iter().collect())
    }
}

/// `<a.b.c.0/24> <lat> <lon>` per line; a block may appear once.
pub fn parse_geo_table(text: &str) -> Result<GeoTable> {
    let mut table = GeoTable::default();
    for (line, content) in data_lines(text) {
        let mut f = content.split_ascii_whitespace();
        let block: Block = parse_field(&mut f, line, "block")?;
        let lat: f64 = parse_field(&mut f, line, "lat")?;
        let lon: f64 = parse_field(&mut f, line, "lon")?;
        no_trailing(&mut f, line)?;
        let coord = Coord::new(lat, lon).map_err(|e| Error::parse(line, "coordinate", e.to_string()))?;
        if table.insert(block, coord).is_some() {
            return Err(Error::parse(line, "block", format!("duplicate entry for {block}")));
        }
    }
    Ok(table)
}

pub fn write_geo_table<W: Write>(mut w: W, table: &GeoTable) -> io::Result<()> {
    writeln!(w, "# block lat lon")?;
    for (block, c) in table.iter() {
        writeln!(w, "{block} {} {}", c.lat, c.lon)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCellSummary {
    pub cell: GridCell,
    pub day: i64,
    pub change_sensitive_count: u32,
    pub down_count: u32,
    pub up_count: u32,
    pub down_fraction: f64,
    pub up_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct CellDays {
    denominator: u32,
    down: Vec<u32>,
    up: Vec<u32>,
}

/// Per-cell daily counts over a span of UTC days.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregation {
    pub first_day: i64,
    pub days: usize,
    cells: BTreeMap<GridCell, CellDays>,
    /// Change-sensitive blocks with no geolocation.
    pub ungeolocated: Vec<Block>,
    /// Sustained events from ungeolocated blocks.
    pub ungeolocated_events: usize,
    /// Sustained events peaking outside the span.
    pub outside_span: usize,
}

/// Counts, per cell and UTC day, the change-sensitive blocks with a
/// sustained_down (sustained_up) event peaking that day. Denominators are the
/// geolocated change-sensitive blocks in each cell.
pub fn daily_change_fraction(
    events: &[LabeledEvent],
    classifications: &BTreeMap<Block, BlockClassification>,
    geo: &GeoTable,
    first_day: i64,
    days: usize,
) -> Aggregation {
    let mut agg = Aggregation {
        first_day,
        days,
        cells: BTreeMap::new(),
        ungeolocated: Vec::new(),
        ungeolocated_events: 0,
        outside_span: 0,
    };
    let mut cell_of = BTreeMap::new();
    for (block, c) in classifications.iter().filter(|(_, c)| c.change_sensitive) {
        debug_assert_eq!(*block, c.block);
        let Some(coord) = geo.get(*block) else {
            agg.ungeolocated.push(*block);
            continue;
        };
        let cell = grid_cell(coord.lat, coord.lon).expect("geo table coordinates are validated");
        cell_of.insert(*block, cell);
        agg.cells
            .entry(cell)
            .or_insert_with(|| CellDays { denominator: 0, down: vec![0; days], up: vec![0; days] })
            .denominator += 1;
    }
    let mut seen = BTreeSet::new();
    for e in events {
        let down = match e.label {
            Label::SustainedDown => true,
            Label::SustainedUp => false,
            Label::Outage => continue,
        };
        let block = e.event.block;
        if !classifications.get(&block).is_some_and(|c| c.change_sensitive) {
            continue;
        }
        let Some(cell) = cell_of.get(&block) else {
            agg.ungeolocated_events += 1;
            continue;
        };
        let offset = utc_day(e.event.peak) - first_day;
        if offset < 0 || offset >= days as i64 {
            agg.outside_span += 1;
            continue;
        }
        if !seen.insert((block, offset, down)) {
            continue;
        }
        let slot = agg.cells.get_mut(cell).expect("cell registered above");
        let counts = if down { &mut slot.down } else { &mut slot.up };
        counts[offset as usize] += 1;
    }
    agg
}

impl Aggregation {
    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        self.cells.keys().copied()
    }

    pub fn denominator(&self, cell: GridCell) -> Option<u32> {
        self.cells.get(&cell).map(|c| c.denominator)
    }

    fn summary(&self, cell: GridCell, c: &CellDays, i: usize) -> GridCellSummary {
        let den = f64::from(c.denominator);
        GridCellSummary {
            cell,
            day: self.first_day + i as i64,
            change_sensitive_count: c.denominator,
            down_count: c.down[i],
            up_count: c.up[i],
            down_fraction: f64::from(c.down[i]) / den,
            up_fraction: f64::from(c.up[i]) / den,
        }
    }

    /// Every (cell, day) pair, ordered by cell then day.
    pub fn summaries(&self) -> impl Iterator<Item = GridCellSummary> + '_ {
        self.cells
            .iter()
            .flat_map(move |(cell, c)| (0..self.days).map(move |i| self.summary(*cell, c, i)))
    }

    /// Summaries of one UTC day, ordered by cell.
    pub fn day(&self, day: i64) -> Vec<GridCellSummary> {
        let i = day - self.first_day;
        if i < 0 || i >= self.days as i64 {
            return Vec::new();
        }
        self.cells.iter().map(|(cell, c)| self.summary(*cell, c, i as usize)).collect()
    }

    pub fn cell(&self, cell: GridCell) -> Option<Vec<GridCellSummary>> {
        let c = self.cells.get(&cell)?;
        Some((0..self.days).map(|i| self.summary(cell, c, i)).collect())
    }
}

pub fn write_grid<W: Write>(mut w: W, agg: &Aggregation) -> io::Result<()> {
    writeln!(w, "# date lat_cell lon_cell denominator down_count up_count down_fraction up_fraction")?;
    for s in agg.summaries() {
        writeln!(
            w,
            "{} {} {} {} {} {} {} {}",
            format_day(s.day),
            s.cell.lat,
            s.cell.lon,
            s.change_sensitive_count,
            s.down_count,
            s.up_count,
            s.down_fraction,
            s.up_fraction
        )?;
    }
    writeln!(w, "# ungeolocated_blocks {}", agg.ungeolocated.len())?;
    writeln!(w, "# ungeolocated_events {}", agg.ungeolocated_events)?;
    Ok(())
}

/// One row per cell with any event that day; net fraction is down minus up.
pub fn export_heatmap<W: Write>(mut w: W, summaries: &[GridCellSummary]) -> io::Result<()> {
    writeln!(w, "# lat_cell lon_cell net_fraction down_count up_count denominator")?;
    let mut rows: Vec<&GridCellSummary> = summaries.iter().filter(|s| s.down_count + s.up_count > 0).collect();
    rows.sort_by_key(|s| s.cell);
    for s in rows {
        writeln!(
            w,
            "{} {} {} {} {} {}",
            s.cell.lat,
            s.cell.lon,
            s.down_fraction - s.up_fraction,
            s.down_count,
            s.up_count,
            s.change_sensitive_count
        )?;
    }
    Ok(())
}

/// Daily `<date> <down_fraction> <up_fraction>` rows for one cell, zero
/// filled. Returns false (header only) for a cell with no blocks.
pub fn export_cell_timeseries<W: Write>(mut w: W, cell: GridCell, agg: &Aggregation) -> io::Result<bool> {
    writeln!(w, "# date down_fraction up_fraction")?;
    let Some(rows) = agg.cell(cell) else {
        log::warn!("cell {cell} has no change-sensitive blocks");
        return Ok(false);
    };
    for s in rows {
        writeln!(w, "{} {} {}", format_day(s.day), s.down_fraction, s.up_fraction)?;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{ChangeEvent, Direction};
    use crate::DAY_SECS;

    fn cls(block: Block, sensitive: bool) -> BlockClassification {
        BlockClassification {
            block,
            responsive: true,
            diurnal: sensitive,
            wide_swing: sensitive,
            change_sensitive: sensitive,
            diurnal_score: 0.0,
            max_daily_swing: 0,
            insufficient_data: false,
        }
    }

    fn sustained(block: Block, peak: i64, label: Label) -> LabeledEvent {
        let direction = if label == Label::SustainedUp { Direction::Up } else { Direction::Down };
        LabeledEvent { event: ChangeEvent { block, direction, onset: peak, peak, end: peak, magnitude: 1.0 }, label }
    }

    #[test]
    fn cells() {
        assert_eq!(grid_cell(0.0, 0.0).unwrap(), GridCell { lat: 0, lon: 0 });
        assert_eq!(grid_cell(30.59, 114.30).unwrap(), GridCell { lat: 30, lon: 114 });
        assert_eq!(grid_cell(-1.0, -1.0).unwrap(), GridCell { lat: -2, lon: -2 });
        assert_eq!(grid_cell(90.0, 180.0).unwrap(), GridCell { lat: 88, lon: 178 });
        assert_eq!(grid_cell(-90.0, -180.0).unwrap(), GridCell { lat: -90, lon: -180 });
        assert!(grid_cell(90.5, 0.0).is_err());
        assert!(grid_cell(0.0, f64::NAN).is_err());
    }

    #[test]
    fn geo_table_rejects_duplicates() {
        assert!(parse_geo_table("1.2.3.0/24 1 2\n1.2.3.0/24 3 4\n").is_err());
        let t = parse_geo_table("# x\n1.2.3.0/24 30.5 114.25\n").unwrap();
        assert_eq!(t.get(Block::from_octets(1, 2, 3)), Some(Coord { lat: 30.5, lon: 114.25 }));
    }

    #[test]
    fn five_of_a_hundred() {
        let mut classes = BTreeMap::new();
        let mut geo = GeoTable::default();
        let mut events = Vec::new();
        for i in 0..100u32 {
            let b = Block::new(i).unwrap();
            classes.insert(b, cls(b, true));
            geo.insert(b, Coord { lat: 24.5, lon: 108.5 });
            if i < 5 {
                events.push(sustained(b, 3 * DAY_SECS + 100, Label::SustainedDown));
            }
        }
        let agg = daily_change_fraction(&events, &classes, &geo, 0, 10);
        let day = agg.day(3);
        assert_eq!(day.len(), 1);
        assert_eq!(day[0].down_fraction, 0.05);
        assert_eq!(agg.day(4)[0].down_fraction, 0.0);

        let mut out = Vec::new();
        export_cell_timeseries(&mut out, GridCell { lat: 24, lon: 108 }, &agg).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows.iter().filter(|r| !r.ends_with(" 0 0")).count(), 1);
    }

    #[test]
    fn ungeolocated_are_tallied() {
        let b = Block::from_octets(1, 1, 1);
        let classes = BTreeMap::from([(b, cls(b, true))]);
        let agg = daily_change_fraction(&[sustained(b, 0, Label::SustainedDown)], &classes, &GeoTable::default(), 0, 1);
        assert_eq!(agg.ungeolocated, vec![b]);
        assert_eq!(agg.ungeolocated_events, 1);
        assert_eq!(agg.cells().count(), 0);
    }

    #[test]
    fn heatmap_rows() {
        let mut out = Vec::new();
        export_heatmap(&mut out, &[]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);

        let s = GridCellSummary {
            cell: GridCell { lat: 24, lon: 108 },
            day: 0,
            change_sensitive_count: 100,
            down_count: 16,
            up_count: 0,
            down_fraction: 16.0 / 100.0,
            up_fraction: 0.0,
        };
        let quiet = GridCellSummary { cell: GridCell { lat: 0, lon: 0 }, down_count: 0, down_fraction: 0.0, ..s.clone() };
        let mut out = Vec::new();
        export_heatmap(&mut out, &[s, quiet]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().nth(1), Some("24 108 0.16 16 0 100"));
    }
}
