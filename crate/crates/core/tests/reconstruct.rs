use std::collections::BTreeSet;

use proptest::prelude::*;

use blockpulse::ingest::{merge_streams, EverActiveList, ObservationRecord, ObserverStream};
use blockpulse::reconstruct::{emit_series, full_scan_time, fuse_observers, ActiveCountSeries, RoundGrid, Sample};
use blockpulse::{Block, ObserverId, ROUND_SECS};

const ANCHOR: i64 = 1_600_000_000;

fn block() -> Block {
    Block::from_octets(192, 0, 2)
}

/// Small offset universe so that lists fill up and warm-up completes often.
fn scenario() -> impl Strategy<Value = (BTreeSet<u8>, Vec<ObservationRecord>)> {
    (
        prop::collection::btree_set(0u8..12, 1..8),
        prop::collection::vec((0i64..400, 0u8..14, any::<bool>()), 0..120),
    )
        .prop_map(|(list, steps)| {
            let mut t = ANCHOR;
            let recs = steps
                .into_iter()
                .map(|(dt, offset, response)| {
                    t += dt;
                    ObservationRecord { timestamp: t, observer: ObserverId::new("w").unwrap(), block: block(), offset, response }
                })
                .collect();
            (list, recs)
        })
}

fn round(t: i64) -> i64 {
    (t - ANCHOR).div_euclid(ROUND_SECS)
}

/// Replays every record up to the end of each round from scratch.
fn replay_oracle(list: &BTreeSet<u8>, recs: &[ObservationRecord], end: i64) -> Vec<Sample> {
    let Some(first) = recs.first() else { return Vec::new() };
    let last_round = round(end.max(recs.last().unwrap().timestamp));
    let mut out = Vec::new();
    for r in round(first.timestamp)..=last_round {
        let seen: Vec<&ObservationRecord> = recs.iter().filter(|x| round(x.timestamp) <= r).collect();
        let latest = |o: u8| seen.iter().rev().find(|x| x.offset == o).map(|x| x.response);
        if list.iter().any(|&o| latest(o).is_none()) {
            continue;
        }
        let count = list.iter().filter(|&&o| latest(o) == Some(true)).count() as u32;
        out.push(Sample { timestamp: ANCHOR + r * ROUND_SECS, count });
    }
    out
}

fn scan_oracle(list: &BTreeSet<u8>, recs: &[ObservationRecord]) -> Option<u64> {
    let first = recs.first()?.timestamp;
    (1..=recs.len()).find_map(|n| {
        let seen: BTreeSet<u8> = recs[..n].iter().map(|r| r.offset).collect();
        list.is_subset(&seen).then(|| ((recs[n - 1].timestamp - first) / ROUND_SECS) as u64 + 1)
    })
}

proptest! {
    #[test]
    fn series_matches_replay((offsets, recs) in scenario(), tail in 0i64..3000) {
        let list = EverActiveList::new(block(), offsets.iter().copied());
        let end = recs.last().map_or(ANCHOR, |r| r.timestamp + tail);
        let series = emit_series(&list, &recs, RoundGrid::new(ANCHOR), Some(end)).unwrap();
        prop_assert_eq!(&series.samples, &replay_oracle(&offsets, &recs, end));
        prop_assert_eq!(series.warm_up_end, series.samples.first().map(|s| s.timestamp));
        prop_assert!(series.samples.iter().all(|s| s.count as usize <= offsets.len()));
    }

    #[test]
    fn scan_time_matches_prefix_search((offsets, recs) in scenario()) {
        let list = EverActiveList::new(block(), offsets.iter().copied());
        let got = full_scan_time(&list, &recs, None, ROUND_SECS);
        prop_assert_eq!(got.rounds(), scan_oracle(&offsets, &recs));
    }

    #[test]
    fn series_text_round_trips((offsets, recs) in scenario()) {
        let list = EverActiveList::new(block(), offsets.iter().copied());
        let series = emit_series(&list, &recs, RoundGrid::new(ANCHOR), None).unwrap();
        let mut text = Vec::new();
        blockpulse::reconstruct::write_series(&mut text, [&series]).unwrap();
        let back = blockpulse::reconstruct::read_series(std::str::from_utf8(&text).unwrap()).unwrap();
        if series.is_empty() {
            prop_assert!(back.iter().all(ActiveCountSeries::is_empty));
        } else {
            prop_assert_eq!(back[0].samples.clone(), series.samples);
        }
    }
}

#[test]
fn fusion_equals_reconstruction_of_the_merge() {
    let list = EverActiveList::new(block(), [1, 2, 3]);
    let rec = |t: i64, tag: &str, offset: u8, response: bool| ObservationRecord {
        timestamp: ANCHOR + t,
        observer: ObserverId::new(tag).unwrap(),
        block: block(),
        offset,
        response,
    };
    let w = ObserverStream::new(ObserverId::new("w").unwrap(), vec![rec(0, "w", 1, true), rec(700, "w", 2, false), rec(1400, "w", 1, false)]).unwrap();
    let e = ObserverStream::new(ObserverId::new("e").unwrap(), vec![rec(10, "e", 3, true), rec(700, "e", 2, true)]).unwrap();
    let streams = [w, e];
    let grid = RoundGrid::new(ANCHOR);
    let fused = fuse_observers(&list, &streams, grid, None, false).unwrap();
    let merged = merge_streams(&streams).unwrap();
    let direct = emit_series(&list, &merged[&block()], grid, None).unwrap();
    assert_eq!(fused, direct);
    // Round 1: e (tag order) says 2 is up, then w says it is down; round 2 drops 1.
    assert_eq!(fused.samples.iter().map(|s| s.count).collect::<Vec<_>>(), vec![2, 1]);
}

#[test]
fn observation_outside_the_list_is_not_counted() {
    let list = EverActiveList::new(block(), [5]);
    let recs: Vec<ObservationRecord> = [(0, 5, true), (1, 6, true)]
        .into_iter()
        .map(|(t, offset, response)| ObservationRecord {
            timestamp: ANCHOR + t,
            observer: ObserverId::new("w").unwrap(),
            block: block(),
            offset,
            response,
        })
        .collect();
    let series = emit_series(&list, &recs, RoundGrid::new(ANCHOR), None).unwrap();
    assert_eq!(series.samples, vec![Sample { timestamp: ANCHOR, count: 1 }]);
}
