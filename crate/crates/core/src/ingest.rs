//! Observation records, ever-active lists, and the time merge of per-observer
//! probe streams.
//!
//! Observation file, one record per line:
//!
//! ```text
//! # comment
//! <timestamp> <observer_id> <a.b.c.0/24> <offset> <0|1>
//! ```
//!
//! Ever-active file, one block per line: `<a.b.c.0/24> <o1,o2,...>`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::io::{self, Write};

use crate::textio::{data_lines, field, no_trailing, parse_field};
use crate::{Block, Error, ObserverId, OffsetSet, Result};

/// One probe result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ObservationRecord {
    pub timestamp: i64,
    pub observer: ObserverId,
    pub block: Block,
    pub offset: u8,
    /// Positive reply (`true`) versus a negative reply or no reply.
    pub response: bool,
}

impl ObservationRecord {
    /// Merge order: time, then observer tag, then offset.
    fn merge_key(&self) -> (i64, ObserverId, u8) {
        (self.timestamp, self.observer, self.offset)
    }
}

impl fmt::Display for ObservationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.timestamp,
            self.observer,
            self.block,
            self.offset,
            u8::from(self.response)
        )
    }
}

/// Input layouts understood by [`parse_observations`]. Converters from other
/// archive formats should produce [`ObservationFormat::Text`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[non_exhaustive]
pub enum ObservationFormat {
    #[default]
    Text,
}

/// A line that parsed but was rejected, e.g. an offset above 255.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedObservations {
    pub records: Vec<ObservationRecord>,
    pub rejected: Vec<Rejection>,
}

pub fn parse_observations(raw: &[u8], format: ObservationFormat) -> Result<ParsedObservations> {
    match format {
        ObservationFormat::Text => parse_text(raw),
    }
}

fn parse_text(raw: &[u8]) -> Result<ParsedObservations> {
    let text = std::str::from_utf8(raw).map_err(|e| {
        let line = raw[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "line", "not valid UTF-8")
    })?;
    let mut out = ParsedObservations::default();
    for (line, content) in data_lines(text) {
        let mut fields = content.split_ascii_whitespace();
        let timestamp: i64 = parse_field(&mut fields, line, "timestamp")?;
        if timestamp <= 0 {
            return Err(Error::parse(line, "timestamp", "must be positive"));
        }
        let tag = field(&mut fields, line, "observer")?;
        let observer = ObserverId::new(tag)
            .ok_or_else(|| Error::parse(line, "observer", format!("bad tag {tag:?}")))?;
        let block: Block = parse_field(&mut fields, line, "block")?;
        let offset: i64 = parse_field(&mut fields, line, "offset")?;
        let response = match field(&mut fields, line, "response")? {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(line, "response", format!("expected 0 or 1, got {other:?}")))
            }
        };
        no_trailing(&mut fields, line)?;
        let Ok(offset) = u8::try_from(offset) else {
            out.rejected.push(Rejection {
                line,
                reason: format!("offset {offset} outside 0..=255"),
            });
            continue;
        };
        out.records.push(ObservationRecord {
            timestamp,
            observer,
            block,
            offset,
            response,
        });
    }
    Ok(out)
}

pub fn write_observations<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a ObservationRecord>,
) -> io::Result<()> {
    for r in records {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// Time-ordered records from one observer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObserverStream {
    observer: ObserverId,
    records: Vec<ObservationRecord>,
}

impl ObserverStream {
    /// Fails if any record belongs to another observer or time goes backwards.
    pub fn new(observer: ObserverId, records: Vec<ObservationRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.observer != observer) {
            return Err(Error::InvalidArgument(format!(
                "record from {} in stream of {observer}",
                r.observer
            )));
        }
        let stream = ObserverStream { observer, records };
        stream.check_order()?;
        Ok(stream)
    }

    pub fn observer(&self) -> ObserverId {
        self.observer
    }

    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ObservationRecord> {
        self.records
    }

    fn check_order(&self) -> Result<()> {
        for (i, pair) in self.records.windows(2).enumerate() {
            if pair[1].timestamp < pair[0].timestamp {
                return Err(Error::Unordered {
                    observer: self.observer.to_string(),
                    position: i + 1,
                    previous: pair[0].timestamp,
                    current: pair[1].timestamp,
                });
            }
        }
        Ok(())
    }
}

/// Splits parsed records into one stream per (observer, block), keeping file
/// order within each. Files written block by block are therefore accepted.
pub fn streams_by_observer(records: &[ObservationRecord]) -> Result<Vec<ObserverStream>> {
    let mut groups: BTreeMap<(ObserverId, Block), Vec<ObservationRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.observer, r.block)).or_default().push(*r);
    }
    groups
        .into_iter()
        .map(|((observer, _), recs)| ObserverStream::new(observer, recs))
        .collect()
}

/// K-way merge of observer streams into one time-ordered sequence per block.
///
/// Equal timestamps from different streams are ordered by observer tag, then
/// offset. Each stream keeps its own order, so one stream comes out unchanged.
pub fn merge_streams(streams: &[ObserverStream]) -> Result<BTreeMap<Block, Vec<ObservationRecord>>> {
    for s in streams {
        s.check_order()?;
    }
    // Deterministic stream order makes the final tie-break independent of the
    // order the caller passed the streams in.
    let mut order: Vec<usize> = (0..streams.len()).collect();
    order.sort_by_key(|&i| streams[i].observer);

    let mut heap = BinaryHeap::with_capacity(streams.len());
    for (rank, &i) in order.iter().enumerate() {
        if let Some(first) = streams[i].records.first() {
            heap.push(Reverse((first.merge_key(), rank, 0usize)));
        }
    }
    let mut out: BTreeMap<Block, Vec<ObservationRecord>> = BTreeMap::new();
    while let Some(Reverse((_, rank, pos))) = heap.pop() {
        let stream = &streams[order[rank]];
        let rec = stream.records[pos];
        out.entry(rec.block).or_default().push(rec);
        if let Some(next) = stream.records.get(pos + 1) {
            heap.push(Reverse((next.merge_key(), rank, pos + 1)));
        }
    }
    Ok(out)
}

/// Indices of records that repeat an earlier (timestamp, observer, block,
/// offset) in `records`. Replay keeps the last of each group, so these are the
/// superseded ones.
pub fn superseded_duplicates(records: &[ObservationRecord]) -> Vec<usize> {
    let mut last: std::collections::HashMap<(i64, ObserverId, Block, u8), usize> =
        std::collections::HashMap::new();
    let mut superseded = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(prev) = last.insert((r.timestamp, r.observer, r.block, r.offset), i) {
            superseded.push(prev);
        }
    }
    superseded.sort_unstable();
    superseded
}

/// Addresses of one block that have historically answered probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EverActiveList {
    pub block: Block,
    pub offsets: OffsetSet,
}

impl EverActiveList {
    pub fn new(block: Block, offsets: impl IntoIterator<Item = u8>) -> Self {
        EverActiveList {
            block,
            offsets: offsets.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn contains(&self, offset: u8) -> bool {
        self.offsets.contains(offset)
    }
}

impl fmt::Display for EverActiveList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.block)?;
        if self.offsets.is_empty() {
            return f.write_str("-");
        }
        for (i, o) in self.offsets.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{o}")?;
        }
        Ok(())
    }
}

/// Parses an ever-active file. A block may appear at most once; `-` or a
/// missing second field denotes an empty list.
pub fn parse_ever_active(text: &str) -> Result<BTreeMap<Block, EverActiveList>> {
    let mut out = BTreeMap::new();
    for (line, content) in data_lines(text) {
        let mut fields = content.split_ascii_whitespace();
        let block: Block = parse_field(&mut fields, line, "block")?;
        let mut offsets = OffsetSet::empty();
        if let Some(list) = fields.next().filter(|l| *l != "-") {
            for item in list.split(',').filter(|s| !s.is_empty()) {
                let o: u8 = item
                    .parse()
                    .map_err(|_| Error::parse(line, "offsets", format!("bad offset {item:?}")))?;
                offsets.insert(o);
            }
        }
        no_trailing(&mut fields, line)?;
        if out.insert(block, EverActiveList { block, offsets }).is_some() {
            return Err(Error::parse(line, "block", format!("{block} listed twice")));
        }
    }
    Ok(out)
}

pub fn write_ever_active<'a, W: Write>(
    mut w: W,
    lists: impl IntoIterator<Item = &'a EverActiveList>,
) -> io::Result<()> {
    for l in lists {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

/// Outcome of checking records against the ever-active list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OffsetScreen {
    pub records: Vec<ObservationRecord>,
    /// Records for offsets outside the list; kept unless screening is strict.
    pub outside_list: usize,
}

/// Flags records whose offset is not in `list`. In strict mode they are
/// dropped; otherwise they are kept and only counted.
pub fn screen_offsets(records: Vec<ObservationRecord>, list: &EverActiveList, strict: bool) -> OffsetScreen {
    let outside_list = records.iter().filter(|r| !list.contains(r.offset)).count();
    let records = if strict && outside_list > 0 {
        records.into_iter().filter(|r| list.contains(r.offset)).collect()
    } else {
        records
    };
    OffsetScreen {
        records,
        outside_list,
    }
}
