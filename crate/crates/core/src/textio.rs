//! Small helpers shared by the line-oriented file formats.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Non-blank, non-comment lines with their 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        (!line.is_empty() && !line.starts_with('#')).then_some((i + 1, line))
    })
}

pub(crate) fn field<'a>(
    fields: &mut impl Iterator<Item = &'a str>,
    line: usize,
    name: &'static str,
) -> Result<&'a str> {
    fields
        .next()
        .ok_or_else(|| Error::parse(line, name, "missing field"))
}

pub(crate) fn parse_field<'a, T: std::str::FromStr>(
    fields: &mut impl Iterator<Item = &'a str>,
    line: usize,
    name: &'static str,
) -> Result<T> {
    let raw = field(fields, line, name)?;
    raw.parse()
        .map_err(|_| Error::parse(line, name, format!("cannot parse {raw:?}")))
}

pub(crate) fn no_trailing<'a>(fields: &mut impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match fields.next() {
        Some(extra) => Err(Error::parse(line, "line", format!("unexpected trailing field {extra:?}"))),
        None => Ok(()),
    }
}

pub(crate) fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::MissingInput {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
