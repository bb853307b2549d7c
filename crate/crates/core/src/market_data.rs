//! Comment and price ingestion: ticker/company matching, CSV loaders, and the
//! shared trading calendar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate};

use crate::error::{Error, Result};
use crate::num::Real;

/// Exchange symbol, uppercase ASCII.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ticker(String);

impl Ticker {
    pub fn new(symbol: &str) -> Result<Self> {
        let s = symbol.trim();
        let valid = !s.is_empty()
            && s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
            && s.chars()
                .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '.' || c == '-');
        if valid {
            Ok(Ticker(s.to_string()))
        } else {
            Err(Error::InvalidTicker(symbol.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Ticker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Ticker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ticker::new(s)
    }
}

#[derive(Debug, Clone)]
struct RegistryEntry {
    ticker: Ticker,
    names: Vec<String>,
    names_lower: Vec<String>,
}

/// The tracked company universe: tickers plus the spellings of each company
/// name that count as a mention.
#[derive(Debug, Clone)]
pub struct CompanyRegistry {
    entries: Vec<RegistryEntry>,
}

impl CompanyRegistry {
    /// Builds a registry, rejecting duplicate tickers and empty name lists.
    pub fn new(entries: Vec<(Ticker, Vec<String>)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut built = Vec::with_capacity(entries.len());
        for (ticker, names) in entries {
            if !seen.insert(ticker.clone()) {
                return Err(Error::InvalidRegistry(format!("duplicate ticker {ticker}")));
            }
            if names.is_empty() || names.iter().any(|n| n.trim().is_empty()) {
                return Err(Error::InvalidRegistry(format!(
                    "ticker {ticker} needs at least one non-blank company name"
                )));
            }
            let names_lower = names.iter().map(|n| n.to_lowercase()).collect();
            built.push(RegistryEntry {
                ticker,
                names,
                names_lower,
            });
        }
        Ok(CompanyRegistry { entries: built })
    }

    /// The ten tech companies tracked by default.
    pub fn default_universe() -> Self {
        let entries = [
            ("GOOGL", "Google"),
            ("TSLA", "Tesla"),
            ("META", "Meta"),
            ("NVDA", "Nvidia"),
            ("AAPL", "Apple"),
            ("EBAY", "eBay"),
            ("AMZN", "Amazon"),
            ("NFLX", "Netflix"),
            ("MSFT", "Microsoft"),
            ("INTC", "Intel"),
        ]
        .into_iter()
        .map(|(t, n)| (Ticker::new(t).expect("static symbol"), vec![n.to_string()]))
        .collect();
        Self::new(entries).expect("static universe is valid")
    }

    pub fn tickers(&self) -> impl Iterator<Item = &Ticker> {
        self.entries.iter().map(|e| &e.ticker)
    }

    pub fn contains(&self, ticker: &Ticker) -> bool {
        self.entries.iter().any(|e| &e.ticker == ticker)
    }

    pub fn names(&self, ticker: &Ticker) -> Option<&[String]> {
        self.entries
            .iter()
            .find(|e| &e.ticker == ticker)
            .map(|e| e.names.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Whole-word substring search. `case_sensitive` matching compares chars
/// as-is; otherwise both sides are compared through `to_lowercase`.
fn contains_word(haystack: &[char], needle: &[char], case_sensitive: bool) -> bool {
    if needle.is_empty() || haystack.len() < needle.len() {
        return false;
    }
    let eq = |a: char, b: char| {
        if case_sensitive {
            a == b
        } else {
            a.to_lowercase().eq(b.to_lowercase())
        }
    };
    for start in 0..=haystack.len() - needle.len() {
        let end = start + needle.len();
        if start > 0 && is_word_char(haystack[start - 1]) {
            continue;
        }
        if end < haystack.len() && is_word_char(haystack[end]) {
            continue;
        }
        if haystack[start..end]
            .iter()
            .zip(needle)
            .all(|(&h, &n)| eq(h, n))
        {
            return true;
        }
    }
    false
}

/// Finds every registry company mentioned in `body`.
///
/// A ticker counts when its symbol appears as a case-sensitive whole word,
/// which also covers `$`-prefixed cashtags since `$` is not a word character.
/// A company name counts when it appears as a case-insensitive whole word.
pub fn match_companies(body: &str, registry: &CompanyRegistry) -> BTreeSet<Ticker> {
    let chars: Vec<char> = body.chars().collect();
    let mut matched = BTreeSet::new();
    for entry in &registry.entries {
        let symbol: Vec<char> = entry.ticker.as_str().chars().collect();
        if contains_word(&chars, &symbol, true) {
            matched.insert(entry.ticker.clone());
            continue;
        }
        for name in &entry.names_lower {
            let needle: Vec<char> = name.chars().collect();
            if contains_word(&chars, &needle, false) {
                matched.insert(entry.ticker.clone());
                break;
            }
        }
    }
    matched
}

/// One filtered comment: when it was posted, what it said, which companies it
/// mentioned, and (optionally) its sentiment score in [-0.5, 0.5].
#[derive(Debug, Clone)]
pub struct CommentRecord<T> {
    pub timestamp: i64,
    pub body: String,
    pub tickers: BTreeSet<Ticker>,
    pub score: Option<T>,
}

impl<T: Real> CommentRecord<T> {
    /// UTC calendar date of the comment.
    pub fn date(&self) -> NaiveDate {
        DateTime::from_timestamp(self.timestamp, 0)
            .expect("timestamp validated at load")
            .date_naive()
    }
}

/// Outcome of a comment load: kept records sorted by timestamp, the number of
/// rows dropped for matching no company, and the file lines without a score.
#[derive(Debug)]
pub struct LoadedComments<T> {
    pub records: Vec<CommentRecord<T>>,
    pub dropped: usize,
    pub unscored_lines: Vec<u64>,
}

pub const COMMENT_CSV_HEADER: [&str; 4] = ["timestamp", "body", "tickers", "score"];

pub fn load_comments<T: Real>(path: &Path, registry: &CompanyRegistry) -> Result<LoadedComments<T>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_comments(file, path, registry)
}

/// Reader-based variant of [`load_comments`]; `path` is only used in errors.
pub fn read_comments<T: Real, R: io::Read>(
    reader: R,
    path: &Path,
    registry: &CompanyRegistry,
) -> Result<LoadedComments<T>> {
    let parse_err = |line: u64, msg: String| Error::ParseRow {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != COMMENT_CSV_HEADER {
        return Err(parse_err(
            1,
            format!("expected header {:?}", COMMENT_CSV_HEADER.join(",")),
        ));
    }

    let mut records = Vec::new();
    let mut dropped = 0usize;
    let mut unscored_lines = Vec::new();

    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, got {}", row.len())));
        }

        let timestamp: i64 = row[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("unparseable timestamp {:?}", &row[0])))?;
        if DateTime::from_timestamp(timestamp, 0).is_none() {
            return Err(parse_err(line, format!("timestamp {timestamp} out of range")));
        }

        let body = row[1].to_string();

        let tickers_field = row[2].trim();
        let tickers: BTreeSet<Ticker> = if tickers_field.is_empty() {
            match_companies(&body, registry)
        } else {
            let mut set = BTreeSet::new();
            for part in tickers_field.split(';') {
                let ticker = Ticker::new(part)
                    .map_err(|_| parse_err(line, format!("invalid ticker {part:?}")))?;
                if !registry.contains(&ticker) {
                    return Err(parse_err(line, format!("ticker {ticker} not in registry")));
                }
                set.insert(ticker);
            }
            set
        };

        let score_field = row[3].trim();
        let score = if score_field.is_empty() {
            None
        } else {
            let value: f64 = score_field
                .parse()
                .map_err(|_| parse_err(line, format!("unparseable score {score_field:?}")))?;
            if !(-0.5..=0.5).contains(&value) {
                return Err(parse_err(line, format!("score {value} outside [-0.5, 0.5]")));
            }
            Some(T::from_f64(value).expect("score fits scalar type"))
        };

        if tickers.is_empty() {
            dropped += 1;
            continue;
        }
        if score.is_none() {
            unscored_lines.push(line);
        }
        records.push(CommentRecord {
            timestamp,
            body,
            tickers,
            score,
        });
    }

    records.sort_by_key(|r| r.timestamp);
    Ok(LoadedComments {
        records,
        dropped,
        unscored_lines,
    })
}

/// Daily closes for one ticker, dates strictly increasing, all closes > 0.
#[derive(Debug, Clone)]
pub struct PriceSeries<T> {
    ticker: Ticker,
    bars: Vec<(NaiveDate, T)>,
}

impl<T: Real> PriceSeries<T> {
    pub fn new(ticker: Ticker, bars: Vec<(NaiveDate, T)>) -> Result<Self> {
        for window in bars.windows(2) {
            if window[1].0 == window[0].0 {
                return Err(Error::DuplicateDate {
                    ticker,
                    date: window[1].0,
                });
            }
            if window[1].0 < window[0].0 {
                return Err(Error::Misaligned(format!(
                    "{ticker} bars out of date order at {}",
                    window[1].0
                )));
            }
        }
        if let Some(&(date, close)) = bars.iter().find(|&&(_, c)| c <= T::zero()) {
            return Err(Error::NonPositiveClose {
                ticker,
                date,
                close: close.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(PriceSeries { ticker, bars })
    }

    pub fn ticker(&self) -> &Ticker {
        &self.ticker
    }

    pub fn close_on(&self, date: NaiveDate) -> Option<T> {
        self.bars
            .binary_search_by_key(&date, |&(d, _)| d)
            .ok()
            .map(|i| self.bars[i].1)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.bars.iter().map(|&(d, _)| d)
    }

    pub fn bars(&self) -> &[(NaiveDate, T)] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }
}

/// Loads `date,close` rows; the ticker comes from the file stem.
pub fn load_prices<T: Real>(path: &Path) -> Result<PriceSeries<T>> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let ticker = Ticker::new(stem)?;
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_prices(file, path, ticker)
}

pub fn read_prices<T: Real, R: io::Read>(
    reader: R,
    path: &Path,
    ticker: Ticker,
) -> Result<PriceSeries<T>> {
    let parse_err = |line: u64, msg: String| Error::ParseRow {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "close"] {
        return Err(parse_err(1, "expected header \"date,close\"".to_string()));
    }

    let mut bars: Vec<(NaiveDate, T)> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(row[0].trim(), "%Y-%m-%d")
            .map_err(|_| parse_err(line, format!("unparseable date {:?}", &row[0])))?;
        let close: f64 = row[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("unparseable close {:?}", &row[1])))?;
        if close <= 0.0 {
            return Err(Error::NonPositiveClose {
                ticker,
                date,
                close,
            });
        }
        bars.push((date, T::from_f64(close).expect("close fits scalar type")));
    }

    bars.sort_by_key(|&(d, _)| d);
    if let Some(dup) = bars.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate {
            ticker,
            date: dup[0].0,
        });
    }
    PriceSeries::new(ticker, bars)
}

/// Loads every `<TICKER>.csv` under `dir` for the registry's tickers.
pub fn load_price_dir<T: Real>(
    dir: &Path,
    registry: &CompanyRegistry,
) -> Result<BTreeMap<Ticker, PriceSeries<T>>> {
    let mut out = BTreeMap::new();
    for ticker in registry.tickers() {
        let path = dir.join(format!("{ticker}.csv"));
        if !path.exists() {
            return Err(Error::Io {
                path,
                source: io::Error::new(
                    io::ErrorKind::NotFound,
                    format!("no price file for ticker {ticker}"),
                ),
            });
        }
        out.insert(ticker.clone(), load_prices(&path)?);
    }
    Ok(out)
}

/// Half-open date interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start < end {
            Ok(DateRange { start, end })
        } else {
            Err(Error::EmptyRange { start, end })
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }
}

/// Days on which every loaded ticker has a bar, ascending.
#[derive(Debug, Clone, Default)]
pub struct TradingCalendar {
    days: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.days.binary_search(&date).ok()
    }

    pub fn day(&self, index: usize) -> Option<NaiveDate> {
        self.days.get(index).copied()
    }

    /// Index span of the days falling inside `range`.
    pub fn span(&self, range: DateRange) -> std::ops::Range<usize> {
        let start = self.days.partition_point(|&d| d < range.start);
        let end = self.days.partition_point(|&d| d < range.end);
        start..end
    }

    /// Calendar restricted to `range`; errors when no day survives.
    pub fn restrict(&self, range: DateRange) -> Result<TradingCalendar> {
        let span = self.span(range);
        if span.is_empty() {
            return Err(Error::PeriodOutsideData {
                start: range.start,
                end: range.end,
            });
        }
        Ok(TradingCalendar {
            days: self.days[span].to_vec(),
        })
    }
}

/// Intersects the series' bar dates over `range`.
pub fn build_calendar<T: Real>(
    series: &[&PriceSeries<T>],
    range: DateRange,
) -> Result<TradingCalendar> {
    if series.is_empty() {
        return Err(Error::EmptyInput("no price series"));
    }
    let mut days: BTreeSet<NaiveDate> = series[0]
        .dates()
        .filter(|&d| range.contains(d))
        .collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates().collect();
        days.retain(|d| other.contains(d));
    }
    if days.is_empty() {
        return Err(Error::NoCommonTradingDays);
    }
    Ok(TradingCalendar {
        days: days.into_iter().collect(),
    })
}
