//! Directory layout of raw bar files and assembly of return panels.
//!
//! Files are named `<RATE>_<YYYYMM>.csv` by default (`EURUSD_201601.csv`),
//! one month of bars per file in the file's own clock. Because that clock may
//! be offset from UTC, a UTC window draws on the neighbouring months' files
//! too.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asset::AssetId;
use crate::calendar::{Grid, Month, Span};
use crate::ingest::{parse_bars, snap_to_span, BarFormat, BarSeries, IngestError};
use crate::returns::{log_returns, ReturnSeries, ReturnsError};

pub const DEFAULT_FILE_PATTERN: &str = r"^(?P<asset>[A-Z]{6})_(?P<yyyymm>\d{6})\.csv$";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("file pattern must capture `asset` and `yyyymm`: {0}")]
    Pattern(String),
    #[error("no input files matching the pattern in {0}")]
    NoInput(PathBuf),
    #[error("{path}: {reason}")]
    BadName { path: PathBuf, reason: String },
    #[error("{0} appears twice for {1}")]
    DuplicateFile(AssetId, Month),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Returns(#[from] ReturnsError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DataFile {
    pub asset: AssetId,
    pub month: Month,
    pub path: PathBuf,
}

/// Files found in a data directory, keyed by asset and month.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub root: PathBuf,
    pub files: BTreeMap<(AssetId, Month), PathBuf>,
}

impl Catalog {
    pub fn assets(&self) -> Vec<AssetId> {
        let mut out: Vec<AssetId> = self.files.keys().map(|k| k.0).collect();
        out.dedup();
        out
    }

    pub fn months(&self) -> Vec<Month> {
        let mut out: Vec<Month> = self.files.keys().map(|k| k.1).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn get(&self, asset: AssetId, month: Month) -> Option<&Path> {
        self.files.get(&(asset, month)).map(|p| p.as_path())
    }

    /// Files whose clock-local month could overlap the UTC grid.
    fn covering(&self, asset: AssetId, grid: &Grid) -> Vec<&Path> {
        let first = Month::containing(grid.origin);
        let last = Month::containing(grid.origin + grid.len as i64 - 1);
        let mut months = Vec::new();
        let prev = if first.month == 1 { Month { year: first.year - 1, month: 12 } } else { Month { month: first.month - 1, ..first } };
        months.push(prev);
        months.extend(Month::range(first, last));
        months.push(last.next());
        months.into_iter().filter_map(|m| self.get(asset, m)).collect()
    }
}

/// Scans `dir` (non-recursively) for bar files named by `pattern`.
pub fn scan(dir: &Path, pattern: &str) -> Result<Catalog, DatasetError> {
    let re = Regex::new(pattern).map_err(|e| DatasetError::Pattern(e.to_string()))?;
    if !re.capture_names().flatten().any(|n| n == "asset") || !re.capture_names().flatten().any(|n| n == "yyyymm") {
        return Err(DatasetError::Pattern(pattern.to_string()));
    }
    let entries = fs::read_dir(dir).map_err(|source| DatasetError::Io { path: dir.to_path_buf(), source })?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|source| DatasetError::Io { path: dir.to_path_buf(), source })?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(caps) = re.captures(name) else { continue };
        let path = entry.path();
        let bad = |reason: String| DatasetError::BadName { path: path.clone(), reason };
        let asset: AssetId = caps["asset"].parse().map_err(|e| bad(format!("{e}")))?;
        let month = Month::parse_compact(&caps["yyyymm"]).map_err(|e| bad(format!("{e}")))?;
        if files.insert((asset, month), path.clone()).is_some() {
            return Err(DatasetError::DuplicateFile(asset, month));
        }
    }
    if files.is_empty() {
        return Err(DatasetError::NoInput(dir.to_path_buf()));
    }
    Ok(Catalog { root: dir.to_path_buf(), files })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
    pub rows: usize,
    pub malformed: usize,
}

/// Return series for a fixed asset universe on one grid.
#[derive(Debug, Clone)]
pub struct Panel {
    pub grid: Grid,
    pub assets: Vec<AssetId>,
    pub series: Vec<ReturnSeries<f64>>,
    /// Assets with no file covering the grid; their series are all missing.
    pub absent: Vec<AssetId>,
    pub files: Vec<FileRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_file(path: &Path, asset: AssetId, format: &BarFormat) -> Result<(BarSeries, FileRecord), DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    let text = String::from_utf8_lossy(&bytes);
    let report = parse_bars(&text, asset, format, path)?;
    let record = FileRecord { path: path.to_path_buf(), sha256: sha256_hex(&bytes), rows: report.rows, malformed: report.malformed.len() };
    Ok((report.series, record))
}

/// One asset's returns on `grid`, with the files that fed it (empty when none did).
pub fn load_series(catalog: &Catalog, asset: AssetId, grid: &Grid, format: &BarFormat) -> Result<(ReturnSeries<f64>, Vec<FileRecord>), DatasetError> {
    let paths = catalog.covering(asset, grid);
    if paths.is_empty() {
        return Ok((ReturnSeries::missing(asset, *grid), Vec::new()));
    }
    let mut bars = Vec::new();
    let mut records = Vec::new();
    for path in paths {
        let (series, record) = read_file(path, asset, format)?;
        bars.extend(snap_to_span(&series, grid)?.series.bars);
        records.push(record);
    }
    bars.sort_by_key(|b| b.timestamp);
    if let Some(w) = bars.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
        return Err(IngestError::DuplicateMinute { asset, minute: w[0].timestamp }.into());
    }
    let series = BarSeries { asset, bars, tz_offset_minutes: 0 };
    Ok((log_returns(&series, grid)?, records))
}

/// Loads `assets` on the grid of `span`; assets without data get all-missing series.
pub fn load_panel(catalog: &Catalog, assets: &[AssetId], span: Span, format: &BarFormat) -> Result<Panel, DatasetError> {
    let grid = match span {
        Span::Month(m) => Grid::month(m),
        Span::Year(y) => Grid::year(y),
    };
    let loaded = assets.par_iter().map(|&a| load_series(catalog, a, &grid, format)).collect::<Result<Vec<_>, _>>()?;
    let mut series = Vec::with_capacity(assets.len());
    let mut files = Vec::new();
    let mut absent = Vec::new();
    for (k, (s, records)) in loaded.into_iter().enumerate() {
        if records.is_empty() {
            absent.push(assets[k]);
        }
        series.push(s);
        files.extend(records);
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files.dedup();
    Ok(Panel { grid, assets: assets.to_vec(), series, absent, files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{write_bars, MinuteBar};
    use chrono::NaiveDate;

    fn bar(d: u32, h: u32, m: u32, p: f64) -> MinuteBar {
        MinuteBar::flat(NaiveDate::from_ymd_opt(2016, 1, d).unwrap().and_hms_opt(h, m, 0).unwrap(), p)
    }

    #[test]
    fn scan_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let fmt = BarFormat::histdata();
        let asset: AssetId = "EUR/USD".parse().unwrap();
        // 19:00 EST on Jan 1 is midnight UTC on Jan 2.
        let series = BarSeries { asset, bars: vec![bar(1, 19, 0, 1.0), bar(1, 19, 1, 1.1), bar(1, 19, 3, 1.1)], tz_offset_minutes: -300 };
        let mut buf = Vec::new();
        write_bars(&series, &fmt, &mut buf).unwrap();
        fs::write(dir.path().join("EURUSD_201601.csv"), &buf).unwrap();
        fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();

        let catalog = scan(dir.path(), DEFAULT_FILE_PATTERN).unwrap();
        assert_eq!(catalog.assets(), vec![asset]);
        let other: AssetId = "USD/JPY".parse().unwrap();
        let month = Month { year: 2016, month: 1 };
        let panel = load_panel(&catalog, &[asset, other], Span::Month(month), &fmt).unwrap();
        assert_eq!(panel.absent, vec![other]);
        assert_eq!(panel.files.len(), 1);
        assert_eq!(panel.files[0].sha256.len(), 64);
        let s = &panel.series[0];
        let k = 1440;
        assert!((s.cells[k].value().unwrap() - 1.1f64.ln()).abs() < 1e-15);
        assert!(s.cells[k + 1].observed().is_none());
        assert_eq!(s.count_values(), 1);
        assert_eq!(panel.series[1].count_values(), 0);
    }

    #[test]
    fn empty_dir_is_no_input() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(scan(dir.path(), DEFAULT_FILE_PATTERN), Err(DatasetError::NoInput(_))));
        assert!(matches!(scan(dir.path(), r"^(?P<asset>\w+)$"), Err(DatasetError::Pattern(_))));
    }
}
