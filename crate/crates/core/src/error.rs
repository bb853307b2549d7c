use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::market_data::Ticker;

/// Errors produced by loaders, signal construction, statistics and backtests.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    ParseRow {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("invalid registry: {0}")]
    InvalidRegistry(String),

    #[error("invalid ticker symbol {0:?}")]
    InvalidTicker(String),

    #[error("sentiment score {0} outside [-0.5, 0.5]")]
    ScoreOutOfRange(f64),

    #[error("invalid class probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("raw value {value} out of range for {family} normalization")]
    RawOutOfRange { family: &'static str, value: f64 },

    #[error("empty lexicon")]
    EmptyLexicon,

    #[error("duplicate date {date} in {ticker} price series")]
    DuplicateDate { ticker: Ticker, date: NaiveDate },

    #[error("non-positive close {close} for {ticker} on {date}")]
    NonPositiveClose {
        ticker: Ticker,
        date: NaiveDate,
        close: f64,
    },

    #[error("empty date range: {start} must precede {end}")]
    EmptyRange { start: NaiveDate, end: NaiveDate },

    #[error("no common trading days")]
    NoCommonTradingDays,

    #[error("unscored comment mentioning {ticker} at timestamp {timestamp}")]
    UnscoredComment { ticker: Ticker, timestamp: i64 },

    #[error("no close for {ticker} on {date}")]
    MissingPrice { ticker: Ticker, date: NaiveDate },

    #[error("insufficient forward bars after {0}")]
    InsufficientForwardBars(NaiveDate),

    #[error("{context}: need at least {need} points, got {got}")]
    TooFewPoints {
        context: &'static str,
        need: usize,
        got: usize,
    },

    #[error("degenerate predictor: all x values identical")]
    DegeneratePredictor,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series misaligned with calendar: {0}")]
    Misaligned(String),

    #[error("period {start}..{end} has no trading days in the loaded data")]
    PeriodOutsideData { start: NaiveDate, end: NaiveDate },

    #[error("result carries no per-day weights")]
    MissingWeights,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
