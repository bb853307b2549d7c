//! Simple linear regression with slope significance, and the pooled
//! signal-vs-return correlation experiment.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market_data::{PriceSeries, Ticker, TradingCalendar};
use crate::num::{real_usize, Real};
use crate::signal::{forward_return, DailySignal, ReturnLag};
use crate::special::student_t_two_sided_p;

/// Least-squares line fit with the two-sided slope t-test.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSummary<T> {
    pub n: usize,
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    pub p_value: T,
}

/// Fits y = slope * x + intercept by ordinary least squares.
///
/// `r_squared` is 1 - SSres/SStot (zero when y has no variance) and
/// `p_value` tests slope != 0 with n - 2 degrees of freedom.
pub fn ols_fit<T: Real>(points: &[(T, T)]) -> Result<RegressionSummary<T>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TooFewPoints {
            context: "ols_fit",
            need: 3,
            got: n,
        });
    }
    let n_t = real_usize::<T>(n);
    let mean_x = points.iter().map(|&(x, _)| x).fold(T::zero(), |a, v| a + v) / n_t;
    let mean_y = points.iter().map(|&(_, y)| y).fold(T::zero(), |a, v| a + v) / n_t;

    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::DegeneratePredictor);
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = (syy - sxy * sxy / sxx).max(T::zero());
    let r_squared = if syy == T::zero() {
        T::zero()
    } else {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };

    let df = real_usize::<T>(n - 2);
    let se_slope = (ss_res / df / sxx).sqrt();
    let p_value = if se_slope == T::zero() {
        if slope == T::zero() {
            T::one()
        } else {
            T::min_positive_value()
        }
    } else {
        student_t_two_sided_p(slope / se_slope, df)
            .max(T::min_positive_value())
            .min(T::one())
    };

    Ok(RegressionSummary {
        n,
        slope,
        intercept,
        r_squared,
        p_value,
    })
}

/// Keeps the pairs whose first component is at least `exclusion_radius` away
/// from the origin. Radius zero keeps everything; order is preserved.
pub fn filtered_pairs<T: Real>(pairs: &[(T, T)], exclusion_radius: T) -> Vec<(T, T)> {
    pairs
        .iter()
        .copied()
        .filter(|&(x, _)| x.abs() >= exclusion_radius)
        .collect()
}

/// Which per-day signal value feeds the regression's x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMetric {
    Svc,
    DeltaSentiment,
}

impl CorrelationMetric {
    /// Forward-return window each metric is paired with by default.
    pub fn default_lag(self) -> ReturnLag {
        match self {
            CorrelationMetric::Svc => ReturnLag::NextDay,
            CorrelationMetric::DeltaSentiment => ReturnLag::DayAfterNext,
        }
    }
}

/// One pooled observation: signal value and the forward return that followed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPoint<T> {
    pub ticker: Ticker,
    pub date: NaiveDate,
    pub x: T,
    pub y: T,
}

#[derive(Debug, Clone)]
pub struct CorrelationResult<T> {
    pub summary: RegressionSummary<T>,
    /// Unfiltered point cloud, ticker-major then by date.
    pub points: Vec<ExperimentPoint<T>>,
    /// Pairs that survived the exclusion radius and fed the fit.
    pub used: usize,
}

/// Pools (signal, forward return) pairs over every ticker and day, drops
/// pairs inside the exclusion radius, and fits a line to the rest.
pub fn correlation_experiment<T: Real>(
    signals: &BTreeMap<Ticker, Vec<DailySignal<T>>>,
    prices: &BTreeMap<Ticker, PriceSeries<T>>,
    calendar: &TradingCalendar,
    metric: CorrelationMetric,
    lag: ReturnLag,
    exclusion_radius: T,
) -> Result<CorrelationResult<T>> {
    let horizon = match lag {
        ReturnLag::NextDay => 1usize,
        ReturnLag::DayAfterNext => 2,
    };
    let mut points = Vec::new();
    for (ticker, series) in signals {
        let prices = prices
            .get(ticker)
            .ok_or_else(|| Error::Misaligned(format!("no prices for {ticker}")))?;
        if series.len() != calendar.len() {
            return Err(Error::Misaligned(format!(
                "{ticker}: {} signals for {} trading days",
                series.len(),
                calendar.len()
            )));
        }
        if calendar.len() <= horizon {
            continue;
        }
        for signal in &series[..calendar.len() - horizon] {
            let x = match metric {
                CorrelationMetric::Svc => signal.svc,
                CorrelationMetric::DeltaSentiment => signal.delta_sentiment,
            };
            let y = forward_return(prices, calendar, signal.date, lag)?;
            points.push(ExperimentPoint {
                ticker: ticker.clone(),
                date: signal.date,
                x,
                y,
            });
        }
    }

    let pairs: Vec<(T, T)> = points.iter().map(|p| (p.x, p.y)).collect();
    let surviving = filtered_pairs(&pairs, exclusion_radius);
    if surviving.len() < 3 {
        return Err(Error::TooFewPoints {
            context: "correlation_experiment",
            need: 3,
            got: surviving.len(),
        });
    }
    let used = surviving.len();
    let summary = ols_fit(&surviving)?;
    Ok(CorrelationResult {
        summary,
        points,
        used,
    })
}
