//! CSV ingestion and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::margins::UniSeries;

#[derive(Debug, Deserialize)]
struct Row {
    date: String,
    value: String,
}

/// Parses ISO-8601 dates with at least year and month. A bare `YYYY-MM`
/// resolves to the first of the month; a time component is ignored.
pub fn parse_date(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    let day_part = s.split(['T', ' ']).next().unwrap_or(s);
    if let Ok(d) = NaiveDate::parse_from_str(day_part, "%Y-%m-%d") {
        return Ok(d);
    }
    if let Ok(d) = NaiveDate::parse_from_str(&format!("{day_part}-01"), "%Y-%m-%d") {
        return Ok(d);
    }
    Err(Error::Parse(format!("unrecognized date {s:?}; expected YYYY-MM[-DD]")))
}

pub fn read_series_from<R: std::io::Read>(reader: R) -> Result<UniSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().next() != Some("date") || headers.get(1) != Some("value") {
        return Err(Error::Parse(format!(
            "expected header `date,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        times.push(parse_date(&row.date)?);
        let v: f64 = row
            .value
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad value {:?}", i + 1, row.value)))?;
        values.push(v);
    }
    UniSeries::new(times, values)
}

/// Reads a two-column `date,value` CSV.
pub fn read_series(path: &Path) -> Result<UniSeries> {
    let file = fs::File::open(path)?;
    read_series_from(file)
}

pub fn series_to_csv(series: &UniSeries) -> String {
    let mut out = String::from("date,value\n");
    for (t, v) in series.times().iter().zip(series.values()) {
        out.push_str(&format!("{},{}\n", t.format("%Y-%m-%d"), v));
    }
    out
}

/// Writes `contents` to a sibling temp file, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Parse(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
