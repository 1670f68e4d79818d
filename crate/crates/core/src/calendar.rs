//! Calendar months and the global one-minute grid.
//!
//! Every timestamp is reduced to an absolute minute index (minutes since the
//! Unix epoch, UTC). A [`Grid`] is a contiguous run of such minutes; all
//! series analysed together share one grid.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalendarError {
    #[error("malformed month `{0}` (expected YYYY-MM)")]
    MalformedMonth(String),
    #[error("malformed month range `{0}` (expected YYYY-MM..YYYY-MM)")]
    MalformedRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self, CalendarError> {
        if !(1..=12).contains(&month) || NaiveDate::from_ymd_opt(year, month, 1).is_none() {
            return Err(CalendarError::MalformedMonth(format!("{year}-{month}")));
        }
        Ok(Self { year, month })
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("validated month")
    }

    pub fn next(&self) -> Month {
        if self.month == 12 {
            Month { year: self.year + 1, month: 1 }
        } else {
            Month { year: self.year, month: self.month + 1 }
        }
    }

    /// Absolute minute index of 00:00 UTC on the first day.
    pub fn start_minute(&self) -> i64 {
        minute_index(&self.first_day().and_hms_opt(0, 0, 0).expect("midnight"))
    }

    pub fn minutes(&self) -> usize {
        (self.next().start_minute() - self.start_minute()) as usize
    }

    /// `YYYYMM`, as used in bar file names.
    pub fn compact(&self) -> String {
        format!("{:04}{:02}", self.year, self.month)
    }

    pub fn parse_compact(s: &str) -> Result<Self, CalendarError> {
        let bad = || CalendarError::MalformedMonth(s.to_string());
        if s.len() != 6 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year = s[..4].parse().map_err(|_| bad())?;
        let month = s[4..].parse().map_err(|_| bad())?;
        Month::new(year, month).map_err(|_| bad())
    }

    pub fn containing(minute: i64) -> Month {
        let ts = from_minute_index(minute);
        Month { year: ts.year(), month: ts.month() }
    }

    /// Inclusive range of months.
    pub fn range(first: Month, last: Month) -> Vec<Month> {
        let mut out = Vec::new();
        let mut m = first;
        while m <= last {
            out.push(m);
            m = m.next();
        }
        out
    }

    /// Parses `YYYY-MM..YYYY-MM` or a single `YYYY-MM`.
    pub fn parse_range(s: &str) -> Result<Vec<Month>, CalendarError> {
        match s.split_once("..") {
            Some((a, b)) => {
                let (a, b): (Month, Month) = (a.parse()?, b.parse()?);
                if a > b {
                    return Err(CalendarError::MalformedRange(s.to_string()));
                }
                Ok(Month::range(a, b))
            }
            None => Ok(vec![s.parse()?]),
        }
    }
}

impl FromStr for Month {
    type Err = CalendarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CalendarError::MalformedMonth(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        Month::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?).map_err(|_| bad())
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl TryFrom<String> for Month {
    type Error = CalendarError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Month> for String {
    fn from(value: Month) -> Self {
        value.to_string()
    }
}

/// Analysis window a grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Span {
    Month(Month),
    Year(i32),
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Span::Month(m) => write!(f, "{m}"),
            Span::Year(y) => write!(f, "{y}"),
        }
    }
}

/// Contiguous block of minutes. Position `k` is absolute minute `origin + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub span: Span,
    pub origin: i64,
    pub len: usize,
}

impl Grid {
    pub fn month(month: Month) -> Self {
        Grid { span: Span::Month(month), origin: month.start_minute(), len: month.minutes() }
    }

    pub fn year(year: i32) -> Self {
        let first = Month { year, month: 1 };
        let next = Month { year: year + 1, month: 1 };
        let origin = first.start_minute();
        Grid { span: Span::Year(year), origin, len: (next.start_minute() - origin) as usize }
    }

    pub fn position(&self, minute: i64) -> Option<usize> {
        let k = minute - self.origin;
        (k >= 0 && (k as usize) < self.len).then_some(k as usize)
    }

    pub fn contains(&self, minute: i64) -> bool {
        self.position(minute).is_some()
    }
}

pub fn minute_index(ts: &NaiveDateTime) -> i64 {
    ts.and_utc().timestamp().div_euclid(60)
}

pub fn from_minute_index(minute: i64) -> NaiveDateTime {
    chrono::DateTime::from_timestamp(minute * 60, 0).expect("minute index in range").naive_utc()
}

/// Drops seconds and sub-second parts.
pub fn floor_to_minute(ts: &NaiveDateTime) -> NaiveDateTime {
    ts.with_second(0).and_then(|t| t.with_nanosecond(0)).expect("valid truncation")
}
