//! Minute-bar file parsing and grid alignment.
//!
//! Bars are read according to a [`BarFormat`] descriptor; the default is the
//! histdata M1 layout (`YYYYMMDD HHMMSS;open;high;low;close;volume`, EST
//! without daylight saving). Missing minutes stay missing: nothing here ever
//! fabricates a bar.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::calendar::{floor_to_minute, minute_index, Grid, Month};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {malformed} of {rows} rows malformed (limit {limit:.2}%); first: line {first_line}: {first_reason}")]
    TooManyMalformed {
        path: PathBuf,
        rows: usize,
        malformed: usize,
        limit: f64,
        first_line: usize,
        first_reason: String,
    },
    #[error("{path}: duplicate timestamp {timestamp} (lines {first_line} and {second_line})")]
    DuplicateTimestamp { path: PathBuf, timestamp: NaiveDateTime, first_line: usize, second_line: usize },
    #[error("{asset}: two bars snap to minute {minute}")]
    DuplicateMinute { asset: AssetId, minute: NaiveDateTime },
    #[error("invalid bar format: {0}")]
    Format(String),
}

/// Meaning of one delimited column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    /// Full date and time in one field.
    Timestamp,
    /// Date part when date and time are split across fields.
    Date,
    /// Time part when date and time are split across fields.
    Time,
    Open,
    High,
    Low,
    Close,
    Volume,
    Skip,
}

/// Whether a bar's timestamp marks the start or the end of its minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarStamp {
    #[default]
    Open,
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarFormat {
    pub delimiter: char,
    /// chrono format string; with split date/time columns it is applied to
    /// `"<date> <time>"`.
    pub datetime_format: String,
    pub columns: Vec<Column>,
    pub has_header: bool,
    /// Offset of the file clock from UTC in minutes (EST = -300).
    pub tz_offset_minutes: i32,
    pub stamp: BarStamp,
    /// Fraction of malformed rows tolerated before the file is rejected.
    pub max_malformed_fraction: f64,
}

impl Default for BarFormat {
    fn default() -> Self {
        Self::histdata()
    }
}

impl BarFormat {
    pub fn histdata() -> Self {
        BarFormat {
            delimiter: ';',
            datetime_format: "%Y%m%d %H%M%S".to_string(),
            columns: vec![Column::Timestamp, Column::Open, Column::High, Column::Low, Column::Close, Column::Volume],
            has_header: false,
            tz_offset_minutes: -300,
            stamp: BarStamp::Open,
            max_malformed_fraction: 0.01,
        }
    }

    /// The normalized output layout: comma-separated, ISO-8601 UTC, header row.
    pub fn normalized() -> Self {
        BarFormat {
            delimiter: ',',
            datetime_format: "%Y-%m-%dT%H:%M:%SZ".to_string(),
            has_header: true,
            tz_offset_minutes: 0,
            ..Self::histdata()
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let count = |c: Column| self.columns.iter().filter(|&&x| x == c).count();
        let single = count(Column::Timestamp);
        let split = (count(Column::Date), count(Column::Time));
        if !((single == 1 && split == (0, 0)) || (single == 0 && split == (1, 1))) {
            return Err(IngestError::Format("need one timestamp column or one date and one time column".into()));
        }
        for c in [Column::Open, Column::High, Column::Low, Column::Close] {
            if count(c) != 1 {
                return Err(IngestError::Format(format!("need exactly one {c:?} column")));
            }
        }
        if count(Column::Volume) > 1 {
            return Err(IngestError::Format("more than one volume column".into()));
        }
        if !(0.0..=1.0).contains(&self.max_malformed_fraction) {
            return Err(IngestError::Format("max_malformed_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One bid-quote bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinuteBar {
    pub timestamp: NaiveDateTime,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl MinuteBar {
    pub fn flat(timestamp: NaiveDateTime, price: f64) -> Self {
        MinuteBar { timestamp, open: price, high: price, low: price, close: price, volume: 0.0 }
    }

    fn check(&self) -> Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("non-positive or non-finite price".into());
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err("negative or non-finite volume".into());
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err("low/high do not bracket open/close".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    pub asset: AssetId,
    /// Strictly increasing, open-stamped timestamps.
    pub bars: Vec<MinuteBar>,
    /// Offset of `bars` timestamps from UTC in minutes.
    pub tz_offset_minutes: i32,
}

impl BarSeries {
    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParseReport {
    pub series: BarSeries,
    /// Data rows seen (header excluded, blank lines skipped).
    pub rows: usize,
    pub malformed: Vec<MalformedRow>,
}

fn parse_row(fields: &[&str], format: &BarFormat) -> Result<MinuteBar, String> {
    if fields.len() != format.columns.len() {
        return Err(format!("expected {} fields, found {}", format.columns.len(), fields.len()));
    }
    let (mut ts, mut date, mut time) = (None, None, None);
    let mut px = [f64::NAN; 4];
    let mut volume = 0.0;
    for (col, raw) in format.columns.iter().zip(fields) {
        let raw = raw.trim();
        let num = || raw.parse::<f64>().map_err(|_| format!("bad number `{raw}`"));
        match col {
            Column::Timestamp => ts = Some(raw.to_string()),
            Column::Date => date = Some(raw),
            Column::Time => time = Some(raw),
            Column::Open => px[0] = num()?,
            Column::High => px[1] = num()?,
            Column::Low => px[2] = num()?,
            Column::Close => px[3] = num()?,
            Column::Volume => volume = num()?,
            Column::Skip => {}
        }
    }
    let text = match (ts, date, time) {
        (Some(t), _, _) => t,
        (None, Some(d), Some(t)) => format!("{d} {t}"),
        _ => return Err("missing timestamp".into()),
    };
    let mut timestamp = NaiveDateTime::parse_from_str(&text, &format.datetime_format)
        .map_err(|e| format!("bad timestamp `{text}`: {e}"))?;
    if format.stamp == BarStamp::Close {
        timestamp -= Duration::minutes(1);
    }
    let bar = MinuteBar { timestamp, open: px[0], high: px[1], low: px[2], close: px[3], volume };
    bar.check()?;
    Ok(bar)
}

/// Parses delimited bar text. `origin` names the source in error messages.
pub fn parse_bars(text: &str, asset: AssetId, format: &BarFormat, origin: &Path) -> Result<ParseReport, IngestError> {
    format.validate()?;
    let mut rows = 0usize;
    let mut malformed = Vec::new();
    let mut parsed: Vec<(usize, MinuteBar)> = Vec::new();
    let mut header_pending = format.has_header;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        rows += 1;
        let fields: Vec<&str> = line.split(format.delimiter).collect();
        match parse_row(&fields, format) {
            Ok(bar) => parsed.push((line_no, bar)),
            Err(reason) => malformed.push(MalformedRow { line: line_no, reason }),
        }
    }
    if rows > 0 && malformed.len() as f64 > format.max_malformed_fraction * rows as f64 {
        let first = &malformed[0];
        return Err(IngestError::TooManyMalformed {
            path: origin.to_path_buf(),
            rows,
            malformed: malformed.len(),
            limit: format.max_malformed_fraction * 100.0,
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    parsed.sort_by_key(|(_, b)| b.timestamp);
    for w in parsed.windows(2) {
        if w[0].1.timestamp == w[1].1.timestamp {
            let (a, b) = (w[0].0.min(w[1].0), w[0].0.max(w[1].0));
            return Err(IngestError::DuplicateTimestamp {
                path: origin.to_path_buf(),
                timestamp: w[0].1.timestamp,
                first_line: a,
                second_line: b,
            });
        }
    }
    Ok(ParseReport {
        series: BarSeries {
            asset,
            bars: parsed.into_iter().map(|(_, b)| b).collect(),
            tz_offset_minutes: format.tz_offset_minutes,
        },
        rows,
        malformed,
    })
}

pub fn parse_bar_file(path: &Path, asset: AssetId, format: &BarFormat) -> Result<ParseReport, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_bars(&text, asset, format, path)
}

#[derive(Debug, Clone)]
pub struct SnapReport {
    /// UTC series on minute boundaries.
    pub series: BarSeries,
    /// Source timestamps that fell outside the month after normalization.
    pub dropped: Vec<NaiveDateTime>,
}

/// Normalizes timestamps to UTC minute starts and keeps only bars inside `month`.
pub fn snap_to_grid(series: &BarSeries, month: Month) -> Result<SnapReport, IngestError> {
    snap_to_span(series, &Grid::month(month))
}

/// [`snap_to_grid`] for an arbitrary grid.
pub fn snap_to_span(series: &BarSeries, grid: &Grid) -> Result<SnapReport, IngestError> {
    let shift = Duration::minutes(-(series.tz_offset_minutes as i64));
    let lo = grid.origin;
    let hi = grid.origin + grid.len as i64;
    let mut bars = Vec::with_capacity(series.bars.len());
    let mut dropped = Vec::new();
    for bar in &series.bars {
        let ts = floor_to_minute(&(bar.timestamp + shift));
        let m = minute_index(&ts);
        if m < lo || m >= hi {
            dropped.push(bar.timestamp);
            continue;
        }
        if let Some(prev) = bars.last() {
            let prev: &MinuteBar = prev;
            if prev.timestamp == ts {
                return Err(IngestError::DuplicateMinute { asset: series.asset, minute: ts });
            }
        }
        bars.push(MinuteBar { timestamp: ts, ..*bar });
    }
    Ok(SnapReport { series: BarSeries { asset: series.asset, bars, tz_offset_minutes: 0 }, dropped })
}

/// Writes bars in `format`. Timestamps are rendered in the format's clock:
/// the series is converted from its own offset to `format.tz_offset_minutes`.
pub fn write_bars<W: Write>(series: &BarSeries, format: &BarFormat, mut out: W) -> Result<(), IngestError> {
    format.validate()?;
    let io_err = |source| IngestError::Io { path: PathBuf::from("<output>"), source };
    let shift = Duration::minutes(format.tz_offset_minutes as i64 - series.tz_offset_minutes as i64);
    let d = format.delimiter.to_string();
    if format.has_header {
        let names: Vec<&str> = format
            .columns
            .iter()
            .map(|c| match c {
                Column::Timestamp => "timestamp",
                Column::Date => "date",
                Column::Time => "time",
                Column::Open => "open",
                Column::High => "high",
                Column::Low => "low",
                Column::Close => "close",
                Column::Volume => "volume",
                Column::Skip => "skip",
            })
            .collect();
        writeln!(out, "{}", names.join(&d)).map_err(io_err)?;
    }
    let (date_fmt, time_fmt) = format.datetime_format.split_once(' ').unwrap_or((&format.datetime_format, ""));
    for bar in &series.bars {
        let mut ts = bar.timestamp + shift;
        if format.stamp == BarStamp::Close {
            ts += Duration::minutes(1);
        }
        let fields: Vec<String> = format
            .columns
            .iter()
            .map(|c| match c {
                Column::Timestamp => ts.format(&format.datetime_format).to_string(),
                Column::Date => ts.format(date_fmt).to_string(),
                Column::Time => ts.format(time_fmt).to_string(),
                Column::Open => bar.open.to_string(),
                Column::High => bar.high.to_string(),
                Column::Low => bar.low.to_string(),
                Column::Close => bar.close.to_string(),
                Column::Volume => bar.volume.to_string(),
                Column::Skip => String::new(),
            })
            .collect();
        writeln!(out, "{}", fields.join(&d)).map_err(io_err)?;
    }
    Ok(())
}

/// Writes the normalized `timestamp,open,high,low,close,volume` layout.
pub fn write_normalized<W: Write>(series: &BarSeries, out: W) -> Result<(), IngestError> {
    write_bars(series, &BarFormat::normalized(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn eur() -> AssetId {
        "EUR/USD".parse().unwrap()
    }

    fn ts(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, mo, d).unwrap().and_hms_opt(h, mi, s).unwrap()
    }

    fn parse(text: &str, format: &BarFormat) -> Result<ParseReport, IngestError> {
        parse_bars(text, eur(), format, Path::new("mem"))
    }

    #[test]
    fn parses_histdata_row() {
        let r = parse("20160104 170100;1.08701;1.08701;1.08695;1.08695;0\n", &BarFormat::histdata()).unwrap();
        assert_eq!(r.rows, 1);
        assert!(r.malformed.is_empty());
        let bar = r.series.bars[0];
        assert_eq!(bar.timestamp, ts(2016, 1, 4, 17, 1, 0));
        assert_eq!(bar.close, 1.08695);
        assert_eq!(bar.open, 1.08701);
        assert_eq!(r.series.tz_offset_minutes, -300);
    }

    #[test]
    fn empty_input() {
        let r = parse("", &BarFormat::histdata()).unwrap();
        assert_eq!((r.series.len(), r.rows, r.malformed.len()), (0, 0, 0));
    }

    #[test]
    fn non_positive_close_is_collected() {
        let mut text = String::new();
        for m in 0..200 {
            text.push_str(&format!("20160104 {:02}{:02}00;1.1;1.1;1.1;1.1;0\n", 10 + m / 60, m % 60));
        }
        text.push_str("20160105 000000;1.1;1.1;1.1;0;0\n");
        let r = parse(&text, &BarFormat { max_malformed_fraction: 0.01, ..BarFormat::histdata() }).unwrap();
        assert_eq!(r.series.len(), 200);
        assert_eq!(r.malformed.len(), 1);
        assert_eq!(r.malformed[0].line, 201);
    }

    #[test]
    fn too_many_malformed_is_fatal() {
        let text = "20160104 170100;1.1;1.1;1.1;1.1;0\nnonsense\n";
        assert!(matches!(parse(text, &BarFormat::histdata()), Err(IngestError::TooManyMalformed { malformed: 1, rows: 2, .. })));
    }

    #[test]
    fn duplicate_timestamp_is_fatal() {
        let text = "20160104 170100;1.1;1.1;1.1;1.1;0\n20160104 170100;1.2;1.2;1.2;1.2;0\n";
        assert!(matches!(
            parse(text, &BarFormat::histdata()),
            Err(IngestError::DuplicateTimestamp { first_line: 1, second_line: 2, .. })
        ));
    }

    #[test]
    fn unordered_rows_are_sorted() {
        let text = "20160104 170200;1.2;1.2;1.2;1.2;0\n20160104 170100;1.1;1.1;1.1;1.1;0\n";
        let r = parse(text, &BarFormat::histdata()).unwrap();
        assert!(r.series.bars[0].timestamp < r.series.bars[1].timestamp);
    }

    #[test]
    fn split_date_time_columns() {
        let format = BarFormat {
            delimiter: ',',
            datetime_format: "%Y.%m.%d %H:%M".into(),
            columns: vec![Column::Date, Column::Time, Column::Open, Column::High, Column::Low, Column::Close, Column::Skip],
            tz_offset_minutes: 0,
            ..BarFormat::histdata()
        };
        let r = parse("2016.01.04,17:01,1.1,1.2,1.0,1.15,x\n", &format).unwrap();
        assert_eq!(r.series.bars[0].timestamp, ts(2016, 1, 4, 17, 1, 0));
        assert_eq!(r.series.bars[0].volume, 0.0);
    }

    #[test]
    fn bad_descriptor() {
        let f = BarFormat { columns: vec![Column::Timestamp, Column::Close], ..BarFormat::histdata() };
        assert!(matches!(parse("", &f), Err(IngestError::Format(_))));
    }

    fn series(times: &[NaiveDateTime], offset: i32) -> BarSeries {
        BarSeries { asset: eur(), bars: times.iter().map(|&t| MinuteBar::flat(t, 1.1)).collect(), tz_offset_minutes: offset }
    }

    #[test]
    fn snap_preserves_gaps() {
        let m = Month::new(2016, 1).unwrap();
        let s = series(&[ts(2016, 1, 4, 10, 0, 0), ts(2016, 1, 4, 10, 1, 0), ts(2016, 1, 4, 10, 3, 0)], 0);
        let out = snap_to_grid(&s, m).unwrap();
        let mins: Vec<i64> = out.series.bars.iter().map(|b| minute_index(&b.timestamp) - minute_index(&s.bars[0].timestamp)).collect();
        assert_eq!(mins, vec![0, 1, 3]);
    }

    #[test]
    fn snap_floors_seconds() {
        let m = Month::new(2016, 1).unwrap();
        let s = series(&[ts(2016, 1, 4, 10, 0, 30), ts(2016, 1, 4, 10, 1, 0)], 0);
        let out = snap_to_grid(&s, m).unwrap();
        assert_eq!(out.series.bars[0].timestamp, ts(2016, 1, 4, 10, 0, 0));
        let clash = series(&[ts(2016, 1, 4, 10, 0, 0), ts(2016, 1, 4, 10, 0, 30)], 0);
        assert!(matches!(snap_to_grid(&clash, m), Err(IngestError::DuplicateMinute { .. })));
    }

    #[test]
    fn snap_applies_offset_and_drops_outside() {
        let m = Month::new(2016, 1).unwrap();
        let s = series(&[ts(2015, 12, 31, 18, 59, 0), ts(2015, 12, 31, 19, 0, 0), ts(2016, 1, 31, 19, 0, 0)], -300);
        let out = snap_to_grid(&s, m).unwrap();
        assert_eq!(out.series.tz_offset_minutes, 0);
        assert_eq!(out.series.bars.len(), 1);
        assert_eq!(out.series.bars[0].timestamp, ts(2016, 1, 1, 0, 0, 0));
        assert_eq!(out.dropped, vec![ts(2015, 12, 31, 18, 59, 0), ts(2016, 1, 31, 19, 0, 0)]);
    }

    #[test]
    fn close_stamps_shift_back() {
        let f = BarFormat { stamp: BarStamp::Close, ..BarFormat::histdata() };
        let r = parse("20160104 170100;1.1;1.1;1.1;1.1;0\n", &f).unwrap();
        assert_eq!(r.series.bars[0].timestamp, ts(2016, 1, 4, 17, 0, 0));
        let mut buf = Vec::new();
        write_bars(&r.series, &f, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "20160104 170100;1.1;1.1;1.1;1.1;0\n");
    }

    #[test]
    fn normalized_output_layout() {
        let s = series(&[ts(2016, 1, 4, 22, 1, 0)], 0);
        let mut buf = Vec::new();
        write_normalized(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "timestamp,open,high,low,close,volume\n2016-01-04T22:01:00Z,1.1,1.1,1.1,1.1,0\n");
    }
}
