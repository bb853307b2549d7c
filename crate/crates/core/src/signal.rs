//! Daily sentiment aggregation and the sentiment-volume-change series.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::market_data::{CommentRecord, PriceSeries, Ticker, TradingCalendar};
use crate::num::{real_usize, Real};

/// Mean sentiment and comment count for one ticker on one calendar day.
/// The mean is absent exactly when the count is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyAggregate<T> {
    pub ticker: Ticker,
    pub date: NaiveDate,
    pub mean_sentiment: Option<T>,
    pub count: usize,
}

/// Per-trading-day signal: sentiment change, comment-count change, and their
/// product `svc = delta_sentiment * |delta_count|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySignal<T> {
    pub ticker: Ticker,
    pub date: NaiveDate,
    pub delta_sentiment: T,
    pub delta_count: i64,
    pub svc: T,
}

/// Mean score and count of the comments mentioning `ticker` on `date` (UTC).
pub fn daily_aggregate<T: Real>(
    comments: &[CommentRecord<T>],
    ticker: &Ticker,
    date: NaiveDate,
) -> Result<DailyAggregate<T>> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for comment in comments {
        if comment.date() == date && comment.tickers.contains(ticker) {
            let score = comment.score.ok_or(Error::UnscoredComment {
                ticker: ticker.clone(),
                timestamp: comment.timestamp,
            })?;
            sum += score;
            count += 1;
        }
    }
    let mean_sentiment = (count > 0).then(|| sum / real_usize(count));
    Ok(DailyAggregate {
        ticker: ticker.clone(),
        date,
        mean_sentiment,
        count,
    })
}

/// The signal product itself. Exact: the result is zero whenever either
/// delta is zero, carries the sign of `delta_sentiment`, and negates with it.
pub fn svc_value<T: Real>(delta_sentiment: T, delta_count: i64) -> T {
    let magnitude = T::from_i64(delta_count.abs()).expect("count delta fits scalar");
    delta_sentiment * magnitude
}

/// Day-over-day sentiment change between two aggregates. A day without
/// comments contributes zero sentiment change; the count delta always uses
/// the true counts.
pub fn svc<T: Real>(prev: &DailyAggregate<T>, cur: &DailyAggregate<T>) -> T {
    svc_value(delta_sentiment(prev, cur), delta_count(prev, cur))
}

pub fn delta_sentiment<T: Real>(prev: &DailyAggregate<T>, cur: &DailyAggregate<T>) -> T {
    match (prev.mean_sentiment, cur.mean_sentiment) {
        (Some(p), Some(c)) => c - p,
        _ => T::zero(),
    }
}

pub fn delta_count<T>(prev: &DailyAggregate<T>, cur: &DailyAggregate<T>) -> i64 {
    cur.count as i64 - prev.count as i64
}

/// Builds the per-trading-day signal series for one ticker.
///
/// Each trading day is compared against the immediately preceding calendar
/// day (which may be a non-trading day). The first trading day has no
/// baseline and gets a zero signal.
pub fn signal_series<T: Real>(
    comments: &[CommentRecord<T>],
    ticker: &Ticker,
    calendar: &TradingCalendar,
) -> Result<Vec<DailySignal<T>>> {
    Ok(signal_series_with_aggregates(comments, ticker, calendar)?.1)
}

/// Per-trading-day aggregates paired with the signal series built on them.
pub type AggregatedSignals<T> = (Vec<DailyAggregate<T>>, Vec<DailySignal<T>>);

/// [`signal_series`] plus the trading-day aggregates the signals came from.
pub fn signal_series_with_aggregates<T: Real>(
    comments: &[CommentRecord<T>],
    ticker: &Ticker,
    calendar: &TradingCalendar,
) -> Result<AggregatedSignals<T>> {
    if calendar.is_empty() {
        return Err(Error::EmptyInput("empty trading calendar"));
    }

    // (sum, count) per calendar day for this ticker
    let mut by_day: BTreeMap<NaiveDate, (T, usize)> = BTreeMap::new();
    for comment in comments {
        if comment.tickers.contains(ticker) {
            let score = comment.score.ok_or(Error::UnscoredComment {
                ticker: ticker.clone(),
                timestamp: comment.timestamp,
            })?;
            let slot = by_day.entry(comment.date()).or_insert((T::zero(), 0));
            slot.0 += score;
            slot.1 += 1;
        }
    }
    let aggregate = |date: NaiveDate| -> DailyAggregate<T> {
        let (sum, count) = by_day.get(&date).copied().unwrap_or((T::zero(), 0));
        DailyAggregate {
            ticker: ticker.clone(),
            date,
            mean_sentiment: (count > 0).then(|| sum / real_usize(count)),
            count,
        }
    };

    let mut aggregates = Vec::with_capacity(calendar.len());
    let mut series = Vec::with_capacity(calendar.len());
    for (i, &day) in calendar.days().iter().enumerate() {
        let cur = aggregate(day);
        if i == 0 {
            series.push(DailySignal {
                ticker: ticker.clone(),
                date: day,
                delta_sentiment: T::zero(),
                delta_count: 0,
                svc: T::zero(),
            });
        } else {
            let prev_day = day
                .checked_sub_days(Days::new(1))
                .expect("date arithmetic in range");
            let prev = aggregate(prev_day);
            let ds = delta_sentiment(&prev, &cur);
            let dn = delta_count(&prev, &cur);
            series.push(DailySignal {
                ticker: ticker.clone(),
                date: day,
                delta_sentiment: ds,
                delta_count: dn,
                svc: svc_value(ds, dn),
            });
        }
        aggregates.push(cur);
    }
    Ok((aggregates, series))
}

/// Which forward window a day's price reaction is measured over, counted in
/// trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnLag {
    /// Close-to-close growth from day d to day d+1.
    NextDay,
    /// Close-to-close growth from day d+1 to day d+2.
    DayAfterNext,
}

/// Fractional close-to-close growth over the lag window following `date`.
pub fn forward_return<T: Real>(
    prices: &PriceSeries<T>,
    calendar: &TradingCalendar,
    date: NaiveDate,
    lag: ReturnLag,
) -> Result<T> {
    let idx = calendar
        .index_of(date)
        .ok_or_else(|| Error::Misaligned(format!("{date} not a trading day")))?;
    let (from_off, to_off) = match lag {
        ReturnLag::NextDay => (0usize, 1usize),
        ReturnLag::DayAfterNext => (1, 2),
    };
    let from_day = calendar
        .day(idx + from_off)
        .ok_or(Error::InsufficientForwardBars(date))?;
    let to_day = calendar
        .day(idx + to_off)
        .ok_or(Error::InsufficientForwardBars(date))?;
    let close = |d: NaiveDate| {
        prices.close_on(d).ok_or(Error::MissingPrice {
            ticker: prices.ticker().clone(),
            date: d,
        })
    };
    let from = close(from_day)?;
    let to = close(to_day)?;
    Ok((to - from) / from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{build_calendar, DateRange};
    use approx::assert_relative_eq;
    use std::collections::BTreeSet;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn ticker(s: &str) -> Ticker {
        Ticker::new(s).unwrap()
    }

    fn comment(ts: i64, tickers: &[&str], score: Option<f64>) -> CommentRecord<f64> {
        CommentRecord {
            timestamp: ts,
            body: String::new(),
            tickers: tickers.iter().map(|t| ticker(t)).collect::<BTreeSet<_>>(),
            score,
        }
    }

    // 2021-01-04 00:00:00 UTC
    const D4: i64 = 1609718400;
    const DAY: i64 = 86400;

    #[test]
    fn aggregate_means_scores() {
        let comments = vec![
            comment(D4, &["MSFT"], Some(0.2)),
            comment(D4 + 60, &["MSFT"], Some(0.4)),
            comment(D4 + 120, &["AAPL"], Some(-0.5)),
        ];
        let agg = daily_aggregate(&comments, &ticker("MSFT"), date("2021-01-04")).unwrap();
        assert_eq!(agg.count, 2);
        assert_relative_eq!(agg.mean_sentiment.unwrap(), 0.3, max_relative = 1e-12);
    }

    #[test]
    fn aggregate_empty_day() {
        let comments = vec![comment(D4, &["MSFT"], Some(0.2))];
        let agg = daily_aggregate(&comments, &ticker("MSFT"), date("2021-01-05")).unwrap();
        assert_eq!(agg.count, 0);
        assert!(agg.mean_sentiment.is_none());
    }

    #[test]
    fn aggregate_symmetric_scores_cancel() {
        let comments = vec![
            comment(D4, &["MSFT"], Some(-0.5)),
            comment(D4 + 1, &["MSFT"], Some(0.5)),
        ];
        let agg = daily_aggregate(&comments, &ticker("MSFT"), date("2021-01-04")).unwrap();
        assert_eq!(agg.mean_sentiment, Some(0.0));
        assert_eq!(agg.count, 2);
    }

    #[test]
    fn aggregate_rejects_unscored() {
        let comments = vec![comment(D4, &["MSFT"], None)];
        let err = daily_aggregate(&comments, &ticker("MSFT"), date("2021-01-04")).unwrap_err();
        assert!(matches!(err, Error::UnscoredComment { .. }));
    }

    fn agg(mean: Option<f64>, count: usize) -> DailyAggregate<f64> {
        DailyAggregate {
            ticker: ticker("MSFT"),
            date: date("2021-01-04"),
            mean_sentiment: mean,
            count,
        }
    }

    #[test]
    fn svc_zero_when_sentiment_flat() {
        assert_eq!(svc(&agg(Some(0.1), 100), &agg(Some(0.1), 250)), 0.0);
    }

    #[test]
    fn svc_hand_values() {
        assert_relative_eq!(
            svc(&agg(Some(0.0), 100), &agg(Some(0.2), 150)),
            10.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            svc(&agg(Some(0.3), 200), &agg(Some(0.1), 140)),
            -12.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn svc_missing_side_contributes_zero_sentiment_change() {
        // count delta still real: |0 - 40| = 40, but sentiment change is 0
        assert_eq!(svc(&agg(None, 0), &agg(Some(0.4), 40)), 0.0);
        assert_eq!(svc(&agg(Some(0.4), 40), &agg(None, 0)), 0.0);
    }

    fn weekday_calendar(dates: &[&str]) -> TradingCalendar {
        let bars: Vec<(NaiveDate, f64)> = dates.iter().map(|d| (date(d), 100.0)).collect();
        let series = PriceSeries::new(ticker("MSFT"), bars).unwrap();
        let range = DateRange::new(date("2020-12-01"), date("2021-02-01")).unwrap();
        build_calendar(&[&series], range).unwrap()
    }

    #[test]
    fn series_single_day_is_zero() {
        let cal = weekday_calendar(&["2021-01-04"]);
        let series = signal_series::<f64>(&[], &ticker("MSFT"), &cal).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].svc, 0.0);
    }

    #[test]
    fn series_no_comments_is_all_zero() {
        let cal = weekday_calendar(&["2021-01-04", "2021-01-05", "2021-01-06"]);
        let series = signal_series::<f64>(&[], &ticker("MSFT"), &cal).unwrap();
        assert!(series.iter().all(|s| s.svc == 0.0 && s.delta_count == 0));
    }

    #[test]
    fn series_uses_previous_calendar_day() {
        // Monday 2021-01-04 compares against Sunday 2021-01-03, not the
        // previous trading day.
        let sunday = D4 - DAY;
        let comments = vec![
            comment(sunday, &["MSFT"], Some(0.0)),
            comment(sunday + 1, &["MSFT"], Some(0.0)),
            comment(D4, &["MSFT"], Some(0.2)),
            comment(D4 + 1, &["MSFT"], Some(0.2)),
            comment(D4 + 2, &["MSFT"], Some(0.2)),
        ];
        let cal = weekday_calendar(&["2021-01-01", "2021-01-04"]);
        let series = signal_series(&comments, &ticker("MSFT"), &cal).unwrap();
        // delta_sentiment = 0.2 - 0.0, delta_count = 3 - 2
        assert_relative_eq!(series[1].delta_sentiment, 0.2, max_relative = 1e-12);
        assert_eq!(series[1].delta_count, 1);
        assert_relative_eq!(series[1].svc, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn series_matches_pairwise_svc() {
        let comments = vec![
            comment(D4, &["MSFT"], Some(0.0)),
            comment(D4 + DAY, &["MSFT"], Some(0.2)),
            comment(D4 + DAY + 1, &["MSFT"], Some(0.2)),
        ];
        let cal = weekday_calendar(&["2021-01-04", "2021-01-05"]);
        let series = signal_series(&comments, &ticker("MSFT"), &cal).unwrap();
        let prev = daily_aggregate(&comments, &ticker("MSFT"), date("2021-01-04")).unwrap();
        let cur = daily_aggregate(&comments, &ticker("MSFT"), date("2021-01-05")).unwrap();
        assert_eq!(series[1].svc, svc(&prev, &cur));
        assert_relative_eq!(series[1].svc, 0.2, max_relative = 1e-12);
    }

    fn priced(dates: &[&str], closes: &[f64]) -> PriceSeries<f64> {
        let bars = dates
            .iter()
            .zip(closes)
            .map(|(d, &c)| (date(d), c))
            .collect();
        PriceSeries::new(ticker("MSFT"), bars).unwrap()
    }

    #[test]
    fn forward_return_next_day() {
        let prices = priced(&["2021-01-04", "2021-01-05"], &[100.0, 104.21]);
        let cal = weekday_calendar(&["2021-01-04", "2021-01-05"]);
        let r = forward_return(&prices, &cal, date("2021-01-04"), ReturnLag::NextDay).unwrap();
        assert_relative_eq!(r, 0.0421, max_relative = 1e-12);
    }

    #[test]
    fn forward_return_flat_is_zero() {
        let prices = priced(&["2021-01-04", "2021-01-05"], &[100.0, 100.0]);
        let cal = weekday_calendar(&["2021-01-04", "2021-01-05"]);
        let r = forward_return(&prices, &cal, date("2021-01-04"), ReturnLag::NextDay).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn forward_return_day_after_next() {
        let prices = priced(
            &["2021-01-04", "2021-01-05", "2021-01-06"],
            &[100.0, 110.0, 121.0],
        );
        let cal = weekday_calendar(&["2021-01-04", "2021-01-05", "2021-01-06"]);
        let r =
            forward_return(&prices, &cal, date("2021-01-04"), ReturnLag::DayAfterNext).unwrap();
        assert_relative_eq!(r, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn forward_return_errors_without_enough_bars() {
        let prices = priced(&["2021-01-04", "2021-01-05"], &[100.0, 110.0]);
        let cal = weekday_calendar(&["2021-01-04", "2021-01-05"]);
        let err = forward_return(&prices, &cal, date("2021-01-05"), ReturnLag::NextDay);
        assert!(matches!(err, Err(Error::InsufficientForwardBars(_))));
        let err = forward_return(&prices, &cal, date("2021-01-04"), ReturnLag::DayAfterNext);
        assert!(matches!(err, Err(Error::InsufficientForwardBars(_))));
    }
}
