//! Daily close-price series: CSV ingestion, validation and trading-day windows.
//!
//! Time is counted in trading days. Calendar gaps are ignored and rows with
//! missing values are rejected rather than imputed.

mod fetch;

pub use fetch::{fetch_prices, FetchError};

use chrono::NaiveDate;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("non-positive price at line {0}")]
    NonPositivePrice(usize),
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("a price series needs at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("dates and closes differ in length ({dates} vs {closes})")]
    LengthMismatch { dates: usize, closes: usize },
    #[error("dates are not strictly increasing at index {0}")]
    Unordered(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("window of length {length} ending at index {end_index} does not fit a series of length {series_len}")]
pub struct WindowOutOfRange {
    pub end_index: usize,
    pub length: usize,
    pub series_len: usize,
}

/// Dated daily close prices. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series, checking ordering, positivity and length.
    pub fn new(
        symbol: impl Into<String>,
        dates: Vec<NaiveDate>,
        closes: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if dates.len() != closes.len() {
            return Err(SeriesError::LengthMismatch { dates: dates.len(), closes: closes.len() });
        }
        if closes.len() < 2 {
            return Err(SeriesError::TooShort(closes.len()));
        }
        for (i, w) in dates.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(SeriesError::DuplicateDate(w[1]));
            }
            if w[1] < w[0] {
                return Err(SeriesError::Unordered(i + 1));
            }
        }
        if let Some(i) = closes.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
            // rows are 1-based after the header
            return Err(SeriesError::NonPositivePrice(i + 2));
        }
        Ok(Self { symbol: symbol.into(), dates, closes })
    }

    /// Series on consecutive weekdays starting at `start`, handy for synthetic data.
    pub fn from_closes_on_weekdays(
        symbol: impl Into<String>,
        start: NaiveDate,
        closes: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let dates = weekday_sequence(start, closes.len());
        Self::new(symbol, dates, closes)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// Index of `date`, or of the last trading day on or before it.
    pub fn index_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        match self.dates.binary_search(&date) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }

    /// Sub-series over the inclusive date range.
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> Result<Self, SeriesError> {
        let lo = self.dates.partition_point(|d| *d < from);
        let hi = self.dates.partition_point(|d| *d <= to);
        Self::new(
            self.symbol.clone(),
            self.dates[lo..hi.max(lo)].to_vec(),
            self.closes[lo..hi.max(lo)].to_vec(),
        )
    }

    /// Serializes back to the `date,close` CSV accepted by [`parse_price_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 20 + 16);
        out.push_str("date,close\n");
        for (d, c) in self.dates.iter().zip(&self.closes) {
            out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), c));
        }
        out
    }
}

/// A contiguous run of trading days `[end_index - length + 1, end_index]`.
#[derive(Debug, Clone, Copy)]
pub struct PriceWindow<'a> {
    parent: &'a PriceSeries,
    end_index: usize,
    length: usize,
}

impl<'a> PriceWindow<'a> {
    pub fn parent(&self) -> &'a PriceSeries {
        self.parent
    }

    pub fn start_index(&self) -> usize {
        self.end_index + 1 - self.length
    }

    pub fn end_index(&self) -> usize {
        self.end_index
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn closes(&self) -> &'a [f64] {
        &self.parent.closes[self.start_index()..=self.end_index]
    }

    pub fn dates(&self) -> &'a [NaiveDate] {
        &self.parent.dates[self.start_index()..=self.end_index]
    }

    pub fn end_date(&self) -> NaiveDate {
        self.parent.dates[self.end_index]
    }

    /// Within-window trading-day offsets `0..length`.
    pub fn t_values(&self) -> Vec<f64> {
        (0..self.length).map(|i| i as f64).collect()
    }
}

/// Window of `length` days ending at `end_index` (inclusive).
pub fn slice_window(
    series: &PriceSeries,
    end_index: usize,
    length: usize,
) -> Result<PriceWindow<'_>, WindowOutOfRange> {
    if length == 0 || end_index >= series.len() || length > end_index + 1 {
        return Err(WindowOutOfRange { end_index, length, series_len: series.len() });
    }
    Ok(PriceWindow { parent: series, end_index, length })
}

/// End indices of the left-to-right window sweep; a trailing partial step is dropped.
pub fn window_end_indices(series_len: usize, length: usize, step: usize) -> Vec<usize> {
    if length == 0 || step == 0 || series_len < length {
        return Vec::new();
    }
    (length - 1..series_len).step_by(step).collect()
}

/// Parses a `date,close` CSV into a validated series, sorted by date.
pub fn parse_price_csv(raw_text: &str) -> Result<PriceSeries, SeriesError> {
    if raw_text.trim().is_empty() {
        return Err(SeriesError::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(raw_text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| SeriesError::MalformedRow { line: 1, reason: e.to_string() })?
        .clone();
    let header_ok = headers.len() == 2
        && headers[0].eq_ignore_ascii_case("date")
        && headers[1].eq_ignore_ascii_case("close");
    if !header_ok {
        return Err(SeriesError::MalformedRow {
            line: 1,
            reason: format!("expected header `date,close`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SeriesError::MalformedRow {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(SeriesError::MalformedRow {
                line,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| {
            SeriesError::MalformedRow { line, reason: format!("bad date {:?}: {e}", &record[0]) }
        })?;
        let close: f64 = record[1].parse().map_err(|_| SeriesError::MalformedRow {
            line,
            reason: format!("bad close {:?}", &record[1]),
        })?;
        if !close.is_finite() {
            return Err(SeriesError::MalformedRow { line, reason: format!("bad close {:?}", &record[1]) });
        }
        if close <= 0.0 {
            return Err(SeriesError::NonPositivePrice(line));
        }
        rows.push((date, close));
    }
    if rows.is_empty() {
        return Err(SeriesError::EmptyInput);
    }

    let mut seen = HashSet::with_capacity(rows.len());
    for (d, _) in &rows {
        if !seen.insert(*d) {
            return Err(SeriesError::DuplicateDate(*d));
        }
    }
    rows.sort_by_key(|(d, _)| *d);
    let (dates, closes) = rows.into_iter().unzip();
    PriceSeries::new("", dates, closes)
}

fn is_weekday(d: NaiveDate) -> bool {
    use chrono::Datelike;
    d.weekday().num_days_from_monday() < 5
}

fn weekday_sequence(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if is_weekday(d) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

/// Moves `days` weekdays forward (or backward when negative) from `from`.
///
/// Used to date critical times that fall outside the observed series; holidays
/// are not modelled.
pub fn add_weekdays(from: NaiveDate, days: i64) -> NaiveDate {
    let mut d = from;
    let mut left = days.unsigned_abs();
    while left > 0 {
        d = if days > 0 { d.succ_opt() } else { d.pred_opt() }.expect("date overflow");
        if is_weekday(d) {
            left -= 1;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn parses_minimal_input() {
        let s = parse_price_csv("date,close\n2000-01-03,100.0\n2000-01-04,101.5").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.closes(), &[100.0, 101.5]);
        assert_eq!(s.dates()[1], date("2000-01-04"));
    }

    #[test]
    fn rejects_negative_price() {
        let err = parse_price_csv("date,close\n2000-01-03,-5").unwrap_err();
        assert_eq!(err, SeriesError::NonPositivePrice(2));
    }

    #[test]
    fn rejects_zero_price_on_later_line() {
        let err = parse_price_csv("date,close\n2000-01-03,5\n2000-01-04,0").unwrap_err();
        assert_eq!(err, SeriesError::NonPositivePrice(3));
    }

    #[test]
    fn rejects_missing_and_garbage_values() {
        let err = parse_price_csv("date,close\n2000-01-03,\n2000-01-04,1").unwrap_err();
        assert!(matches!(err, SeriesError::MalformedRow { line: 2, .. }), "{err:?}");
        let err = parse_price_csv("date,close\n2000-01-03,abc\n2000-01-04,1").unwrap_err();
        assert!(matches!(err, SeriesError::MalformedRow { line: 2, .. }));
        let err = parse_price_csv("date,close\n03/01/2000,1\n2000-01-04,1").unwrap_err();
        assert!(matches!(err, SeriesError::MalformedRow { line: 2, .. }));
        let err = parse_price_csv("date,close\n2000-01-03,1,7\n2000-01-04,1").unwrap_err();
        assert!(matches!(err, SeriesError::MalformedRow { line: 2, .. }));
        let err = parse_price_csv("day,price\n2000-01-03,1\n2000-01-04,1").unwrap_err();
        assert!(matches!(err, SeriesError::MalformedRow { line: 1, .. }));
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        let err = parse_price_csv("date,close\n2000-01-03,1\n2000-01-03,2").unwrap_err();
        assert_eq!(err, SeriesError::DuplicateDate(date("2000-01-03")));
        assert_eq!(parse_price_csv("").unwrap_err(), SeriesError::EmptyInput);
        assert_eq!(parse_price_csv("date,close\n").unwrap_err(), SeriesError::EmptyInput);
        assert_eq!(parse_price_csv("date,close\n2000-01-03,1").unwrap_err(), SeriesError::TooShort(1));
    }

    #[test]
    fn sorts_rows_by_date() {
        let s = parse_price_csv("date,close\n2000-01-05,3\n2000-01-03,1\n2000-01-04,2\n").unwrap();
        assert_eq!(s.closes(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn slice_window_index_arithmetic() {
        let s = PriceSeries::from_closes_on_weekdays("x", date("2000-01-03"), vec![1.0; 1000]).unwrap();
        let w = slice_window(&s, 999, 750).unwrap();
        assert_eq!(w.start_index(), 250);
        assert_eq!(w.end_index(), 999);
        assert_eq!(w.closes().len(), 750);
        assert_eq!(w.t_values()[0], 0.0);
        assert_eq!(w.t_values()[749], 749.0);

        let short = PriceSeries::from_closes_on_weekdays("x", date("2000-01-03"), vec![1.0; 700]).unwrap();
        assert!(slice_window(&short, 699, 750).is_err());
        assert!(slice_window(&short, 700, 10).is_err());
    }

    #[test]
    fn window_count_for_full_history() {
        assert_eq!(window_end_indices(7238, 750, 25).len(), (7238 - 750) / 25 + 1);
        assert_eq!(window_end_indices(7238, 750, 25).len(), 260);
        assert!(window_end_indices(700, 750, 25).is_empty());
        assert_eq!(window_end_indices(750, 750, 25), vec![749]);
    }

    #[test]
    fn weekday_arithmetic() {
        // Friday + 1 weekday is Monday
        assert_eq!(add_weekdays(date("2024-03-01"), 1), date("2024-03-04"));
        assert_eq!(add_weekdays(date("2024-03-04"), -1), date("2024-03-01"));
        assert_eq!(add_weekdays(date("2024-03-04"), 0), date("2024-03-04"));
        assert_eq!(add_weekdays(date("2024-03-04"), 10), date("2024-03-18"));
    }

    proptest! {
        #[test]
        fn csv_round_trip(closes in prop::collection::vec(1e-6f64..1e7, 2..60), start in 0i64..20000) {
            let start = date("1970-01-01") + chrono::Duration::days(start);
            let s = PriceSeries::from_closes_on_weekdays("p", start, closes).unwrap();
            let back = parse_price_csv(&s.to_csv()).unwrap();
            prop_assert_eq!(back.dates(), s.dates());
            prop_assert_eq!(back.closes(), s.closes());
        }

        #[test]
        fn window_enumeration_is_consistent(n in 2usize..400, len in 1usize..120, step in 1usize..40) {
            let s = PriceSeries::from_closes_on_weekdays(
                "p", date("2001-01-01"), (0..n).map(|i| 1.0 + i as f64).collect()).unwrap();
            let ends = window_end_indices(n, len, step);
            for (k, &e) in ends.iter().enumerate() {
                prop_assert_eq!(e, len - 1 + k * step);
                let w = slice_window(&s, e, len).unwrap();
                prop_assert_eq!(w.closes(), &s.closes()[e + 1 - len..=e]);
            }
            if n >= len {
                prop_assert_eq!(ends.len(), (n - len) / step + 1);
            }
        }
    }
}
