use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use blockpulse::classify::BlockClassification;
use blockpulse::detect::{ChangeEvent, Direction, Label, LabeledEvent};
use blockpulse::geo::{
    daily_change_fraction, export_cell_timeseries, grid_cell, parse_geo_table, write_geo_table, Coord, GeoTable,
    GridCell,
};
use blockpulse::{Block, DAY_SECS};

const FIRST_DAY: i64 = 18_300;
const DAYS: usize = 10;

fn cls(block: Block, sensitive: bool) -> BlockClassification {
    BlockClassification {
        block,
        responsive: true,
        diurnal: sensitive,
        wide_swing: sensitive,
        change_sensitive: sensitive,
        diurnal_score: 0.9,
        max_daily_swing: 8,
        insufficient_data: false,
    }
}

#[derive(Debug, Clone)]
struct World {
    classifications: BTreeMap<Block, BlockClassification>,
    geo: GeoTable,
    events: Vec<LabeledEvent>,
}

/// Twenty blocks over a handful of cells near each other, some without
/// coordinates or not change-sensitive, and events that may peak outside the
/// span.
fn world() -> impl Strategy<Value = World> {
    let blocks = prop::collection::vec((any::<bool>(), prop::option::weighted(0.85, (0i32..4, 0i32..4))), 20);
    let events = prop::collection::vec((0usize..20, 0usize..3, -1i64..DAYS as i64 + 1, 0i64..DAY_SECS), 0..60);
    (blocks, events).prop_map(|(blocks, raw)| {
        let ids: Vec<Block> = (0..20).map(|i| Block::from_octets(10, 3, i as u8)).collect();
        let mut classifications = BTreeMap::new();
        let mut geo = GeoTable::default();
        for (i, (sensitive, at)) in blocks.into_iter().enumerate() {
            classifications.insert(ids[i], cls(ids[i], sensitive));
            if let Some((a, b)) = at {
                geo.insert(ids[i], Coord::new(40.3 + 1.5 * a as f64, -3.7 + 1.5 * b as f64).unwrap());
            }
        }
        let events = raw
            .into_iter()
            .map(|(b, label, day, secs)| {
                let label = [Label::Outage, Label::SustainedDown, Label::SustainedUp][label];
                let peak = (FIRST_DAY + day) * DAY_SECS + secs;
                let direction = if label == Label::SustainedUp { Direction::Up } else { Direction::Down };
                LabeledEvent {
                    event: ChangeEvent { block: ids[b], direction, onset: peak, peak, end: peak, magnitude: 1.0 },
                    label,
                }
            })
            .collect();
        World { classifications, geo, events }
    })
}

/// Group-by oracle: distinct blocks per (cell, day, label).
fn oracle(w: &World, label: Label) -> BTreeMap<(GridCell, i64), usize> {
    let mut sets: BTreeMap<(GridCell, i64), BTreeSet<Block>> = BTreeMap::new();
    for e in w.events.iter().filter(|e| e.label == label) {
        let b = e.event.block;
        let Some(c) = w.geo.get(b) else { continue };
        if !w.classifications[&b].change_sensitive {
            continue;
        }
        let day = e.event.peak.div_euclid(DAY_SECS);
        if (FIRST_DAY..FIRST_DAY + DAYS as i64).contains(&day) {
            sets.entry((grid_cell(c.lat, c.lon).unwrap(), day)).or_default().insert(b);
        }
    }
    sets.into_iter().map(|(k, v)| (k, v.len())).collect()
}

proptest! {
    #[test]
    fn every_coordinate_lands_in_one_cell(lat in -90.0f64..=90.0, lon in -180.0f64..=180.0) {
        let c = grid_cell(lat, lon).unwrap();
        prop_assert!(c.lat % 2 == 0 && c.lon % 2 == 0);
        prop_assert!((-90..=88).contains(&c.lat) && (-180..=178).contains(&c.lon));
        prop_assert!(f64::from(c.lat) <= lat && lat <= f64::from(c.lat) + 2.0);
        prop_assert!(f64::from(c.lon) <= lon && lon <= f64::from(c.lon) + 2.0);
        if lat < 90.0 {
            prop_assert!(lat < f64::from(c.lat) + 2.0);
        }
        if lon < 180.0 {
            prop_assert!(lon < f64::from(c.lon) + 2.0);
        }
    }

    #[test]
    fn counts_match_group_by(w in world()) {
        let agg = daily_change_fraction(&w.events, &w.classifications, &w.geo, FIRST_DAY, DAYS);
        let (down, up) = (oracle(&w, Label::SustainedDown), oracle(&w, Label::SustainedUp));
        for s in agg.summaries() {
            prop_assert_eq!(s.down_count as usize, down.get(&(s.cell, s.day)).copied().unwrap_or(0));
            prop_assert_eq!(s.up_count as usize, up.get(&(s.cell, s.day)).copied().unwrap_or(0));
            prop_assert!((0.0..=1.0).contains(&s.down_fraction) && (0.0..=1.0).contains(&s.up_fraction));
            prop_assert!(s.change_sensitive_count > 0);
        }
        // Every oracle key is a reported cell.
        for (cell, _) in down.keys().chain(up.keys()) {
            prop_assert!(agg.denominator(*cell).is_some());
        }
    }

    #[test]
    fn denominators_and_days_are_conserved(w in world()) {
        let agg = daily_change_fraction(&w.events, &w.classifications, &w.geo, FIRST_DAY, DAYS);
        let located = w.classifications.values().filter(|c| c.change_sensitive && w.geo.get(c.block).is_some()).count();
        let total: u32 = agg.cells().map(|c| agg.denominator(c).unwrap()).sum();
        prop_assert_eq!(total as usize, located);
        let ungeolocated = w.classifications.values().filter(|c| c.change_sensitive && w.geo.get(c.block).is_none()).count();
        prop_assert_eq!(agg.ungeolocated.len(), ungeolocated);
        for day in FIRST_DAY..FIRST_DAY + DAYS as i64 {
            let summed: usize = agg.day(day).iter().map(|s| s.down_count as usize).sum();
            let want: usize = oracle(&w, Label::SustainedDown).iter().filter(|((_, d), _)| *d == day).map(|(_, n)| n).sum();
            prop_assert_eq!(summed, want);
            prop_assert_eq!(agg.day(day).len(), agg.cells().count());
        }
    }

    #[test]
    fn geo_table_round_trips(entries in prop::collection::btree_map(0u8..50, (-90.0f64..=90.0, -180.0f64..=180.0), 0..20)) {
        let table: GeoTable = entries
            .into_iter()
            .map(|(b, (lat, lon))| (Block::from_octets(10, 4, b), Coord::new(lat, lon).unwrap()))
            .collect();
        let mut text = Vec::new();
        write_geo_table(&mut text, &table).unwrap();
        prop_assert_eq!(parse_geo_table(std::str::from_utf8(&text).unwrap()).unwrap(), table);
    }
}

#[test]
fn wuhan_lands_in_30_114() {
    assert_eq!(grid_cell(30.59, 114.31).unwrap(), GridCell { lat: 30, lon: 114 });
}

#[test]
fn poles_and_antimeridian_fold_inward() {
    assert_eq!(grid_cell(90.0, 180.0).unwrap(), GridCell { lat: 88, lon: 178 });
    assert_eq!(grid_cell(-90.0, -180.0).unwrap(), GridCell { lat: -90, lon: -180 });
    assert!(grid_cell(90.5, 0.0).is_err());
    assert!(grid_cell(0.0, f64::NAN).is_err());
}

#[test]
fn duplicate_geo_rows_are_refused() {
    assert!(parse_geo_table("10.0.0.0/24 1 2\n10.0.0.0/24 3 4\n").is_err());
}

#[test]
fn empty_cell_series_is_header_only() {
    let agg = daily_change_fraction(&[], &BTreeMap::new(), &GeoTable::default(), FIRST_DAY, DAYS);
    let mut out = Vec::new();
    assert!(!export_cell_timeseries(&mut out, GridCell { lat: 30, lon: 114 }, &agg).unwrap());
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
}
