//! Portfolio accounting and the backtested strategies: buy-and-hold
//! baselines, the single-stock threshold strategy with next-day reversal,
//! and the multi-stock daily rebalancer.
//!
//! All trading is frictionless: fractional shares, zero commissions, zero
//! slippage, no interest on savings. Trades execute at the close that
//! produced the day's signal.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market_data::{PriceSeries, Ticker, TradingCalendar};
use crate::num::{real_usize, Real};
use crate::signal::DailySignal;

/// Parameters of the single-stock threshold strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleStockConfig<T> {
    pub initial_total: T,
    pub invest_fraction: T,
    pub pos_threshold: T,
    pub neg_threshold: T,
}

impl<T: Real> Default for SingleStockConfig<T> {
    fn default() -> Self {
        SingleStockConfig {
            initial_total: T::from_f64(100.0).unwrap(),
            invest_fraction: T::from_f64(0.5).unwrap(),
            pos_threshold: T::from_f64(10.0).unwrap(),
            neg_threshold: T::from_f64(-15.0).unwrap(),
        }
    }
}

impl<T: Real> SingleStockConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.initial_total <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "initial total must be positive, got {}",
                self.initial_total
            )));
        }
        if self.invest_fraction < T::zero() || self.invest_fraction > T::one() {
            return Err(Error::InvalidParameter(format!(
                "invest fraction must lie in [0, 1], got {}",
                self.invest_fraction
            )));
        }
        if !(self.pos_threshold > T::zero() && self.neg_threshold < T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must satisfy pos > 0 > neg, got ({}, {})",
                self.pos_threshold, self.neg_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeAction {
    Buy,
    Sell,
    Reverse,
    None,
}

impl TradeAction {
    pub fn name(self) -> &'static str {
        match self {
            TradeAction::Buy => "buy",
            TradeAction::Sell => "sell",
            TradeAction::Reverse => "reverse",
            TradeAction::None => "none",
        }
    }
}

/// One line of the transfer history.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeLogEntry<T> {
    pub date: NaiveDate,
    pub ticker: Ticker,
    pub action: TradeAction,
    pub amount_usd: T,
    pub shares: T,
    pub svc: T,
}

/// Where money flows when a triggered transfer is undone the next day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReversalDirection {
    ToInvest,
    ToSavings,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingReversal<T> {
    pub direction: ReversalDirection,
    pub amount: T,
}

/// Cash plus fractional share positions, with the full transfer history.
#[derive(Debug, Clone)]
pub struct PortfolioLedger<T> {
    savings: T,
    positions: BTreeMap<Ticker, T>,
    pending_reversal: Option<PendingReversal<T>>,
    history: Vec<TradeLogEntry<T>>,
}

impl<T: Real> PortfolioLedger<T> {
    pub fn new(savings: T) -> Self {
        PortfolioLedger {
            savings,
            positions: BTreeMap::new(),
            pending_reversal: None,
            history: Vec::new(),
        }
    }

    pub fn with_position(mut self, ticker: Ticker, shares: T) -> Self {
        self.positions.insert(ticker, shares);
        self
    }

    pub fn savings(&self) -> T {
        self.savings
    }

    pub fn shares(&self, ticker: &Ticker) -> T {
        self.positions.get(ticker).copied().unwrap_or_else(T::zero)
    }

    pub fn positions(&self) -> &BTreeMap<Ticker, T> {
        &self.positions
    }

    pub fn pending_reversal(&self) -> Option<&PendingReversal<T>> {
        self.pending_reversal.as_ref()
    }

    pub fn history(&self) -> &[TradeLogEntry<T>] {
        &self.history
    }

    /// Savings plus the mark-to-market value of every position.
    pub fn total_value(&self, close: impl Fn(&Ticker) -> T) -> T {
        let mut value = self.savings;
        for (ticker, &shares) in &self.positions {
            value += shares * close(ticker);
        }
        value
    }

    fn log(
        &mut self,
        date: NaiveDate,
        ticker: &Ticker,
        action: TradeAction,
        amount_usd: T,
        shares: T,
        svc: T,
    ) {
        self.history.push(TradeLogEntry {
            date,
            ticker: ticker.clone(),
            action,
            amount_usd,
            shares,
            svc,
        });
    }
}

/// Applies one day of the single-stock strategy at that day's close.
///
/// A pending reversal always executes first and suppresses any new trigger
/// that day; it moves back the recorded amount, capped at what the source
/// account still holds. Otherwise a signal above the positive threshold
/// moves all savings into shares and a signal below the negative threshold
/// sells every share into savings, each scheduling its own reversal for the
/// next day. Zero-balance triggers transfer nothing and schedule nothing.
pub fn single_stock_step<T: Real>(
    ledger: &mut PortfolioLedger<T>,
    ticker: &Ticker,
    date: NaiveDate,
    svc_today: T,
    config: &SingleStockConfig<T>,
    close_today: T,
) {
    if let Some(reversal) = ledger.pending_reversal.take() {
        let (amount, shares_moved) = match reversal.direction {
            ReversalDirection::ToSavings => {
                let held = ledger.shares(ticker);
                let available = held * close_today;
                let amount = reversal.amount.min(available);
                let sold = amount / close_today;
                let remaining = if amount == available {
                    T::zero()
                } else {
                    (held - sold).max(T::zero())
                };
                ledger.positions.insert(ticker.clone(), remaining);
                ledger.savings += amount;
                (amount, sold)
            }
            ReversalDirection::ToInvest => {
                let amount = reversal.amount.min(ledger.savings);
                let bought = amount / close_today;
                ledger.savings -= amount;
                *ledger.positions.entry(ticker.clone()).or_insert_with(T::zero) += bought;
                (amount, bought)
            }
        };
        ledger.log(date, ticker, TradeAction::Reverse, amount, shares_moved, svc_today);
        return;
    }

    if svc_today > config.pos_threshold {
        let amount = ledger.savings;
        let bought = amount / close_today;
        ledger.savings = T::zero();
        *ledger.positions.entry(ticker.clone()).or_insert_with(T::zero) += bought;
        ledger.log(date, ticker, TradeAction::Buy, amount, bought, svc_today);
        if amount > T::zero() {
            ledger.pending_reversal = Some(PendingReversal {
                direction: ReversalDirection::ToSavings,
                amount,
            });
        }
    } else if svc_today < config.neg_threshold {
        let held = ledger.shares(ticker);
        let amount = held * close_today;
        ledger.positions.insert(ticker.clone(), T::zero());
        ledger.savings += amount;
        ledger.log(date, ticker, TradeAction::Sell, amount, held, svc_today);
        if amount > T::zero() {
            ledger.pending_reversal = Some(PendingReversal {
                direction: ReversalDirection::ToInvest,
                amount,
            });
        }
    } else {
        ledger.log(date, ticker, TradeAction::None, T::zero(), T::zero(), svc_today);
    }
}

/// Value series, optional per-day weights, summary metrics and the transfer
/// history of one backtest.
#[derive(Debug, Clone)]
pub struct BacktestResult<T> {
    pub dates: Vec<NaiveDate>,
    pub total_value: Vec<T>,
    pub weights: Option<Vec<BTreeMap<Ticker, T>>>,
    pub return_pct: T,
    pub risk_pct: T,
    pub trade_log: Vec<TradeLogEntry<T>>,
}

impl<T: Real> BacktestResult<T> {
    /// Day-over-day fractional growth of the value series.
    pub fn growths(&self) -> Vec<T> {
        self.total_value
            .windows(2)
            .map(|w| w[1] / w[0] - T::one())
            .collect()
    }
}

/// Return, risk and their ratio over a value series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T> {
    pub return_pct: T,
    pub risk_pct: T,
    /// Absent when the risk is zero.
    pub ratio: Option<T>,
}

/// Fractional return over the whole series, sample standard deviation of the
/// daily growth, and return over risk. A two-point series has a single
/// growth observation and reports zero risk by convention.
pub fn metrics<T: Real>(values: &[T]) -> Result<Metrics<T>> {
    if values.len() < 2 {
        return Err(Error::TooFewPoints {
            context: "metrics",
            need: 2,
            got: values.len(),
        });
    }
    if let Some(&bad) = values.iter().find(|&&v| v <= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "value series must stay positive, found {bad}"
        )));
    }
    let growths: Vec<T> = values.windows(2).map(|w| w[1] / w[0] - T::one()).collect();
    let return_pct = (values[values.len() - 1] - values[0]) / values[0];
    let risk_pct = if growths.len() < 2 {
        T::zero()
    } else {
        let n = real_usize::<T>(growths.len());
        let mean = growths.iter().fold(T::zero(), |a, &g| a + g) / n;
        let ss = growths
            .iter()
            .fold(T::zero(), |a, &g| a + (g - mean) * (g - mean));
        (ss / (n - T::one())).sqrt()
    };
    let ratio = (risk_pct != T::zero()).then(|| return_pct / risk_pct);
    Ok(Metrics {
        return_pct,
        risk_pct,
        ratio,
    })
}

fn closes_over<T: Real>(
    prices: &PriceSeries<T>,
    calendar: &TradingCalendar,
) -> Result<Vec<T>> {
    calendar
        .days()
        .iter()
        .map(|&d| {
            prices.close_on(d).ok_or(Error::MissingPrice {
                ticker: prices.ticker().clone(),
                date: d,
            })
        })
        .collect()
}

fn check_run_preconditions(calendar: &TradingCalendar) -> Result<()> {
    if calendar.len() < 2 {
        return Err(Error::TooFewPoints {
            context: "backtest",
            need: 2,
            got: calendar.len(),
        });
    }
    Ok(())
}

/// Buys `invest_fraction` of the capital split equally across `tickers` at
/// the first close and never trades again.
pub fn bh_run<T: Real>(
    prices: &BTreeMap<Ticker, PriceSeries<T>>,
    tickers: &[Ticker],
    calendar: &TradingCalendar,
    initial_total: T,
    invest_fraction: T,
) -> Result<BacktestResult<T>> {
    if tickers.is_empty() {
        return Err(Error::EmptyInput("no tickers"));
    }
    check_run_preconditions(calendar)?;
    if initial_total <= T::zero() {
        return Err(Error::InvalidParameter("initial total must be positive".into()));
    }
    if invest_fraction < T::zero() || invest_fraction > T::one() {
        return Err(Error::InvalidParameter("invest fraction must lie in [0, 1]".into()));
    }

    let mut closes: BTreeMap<Ticker, Vec<T>> = BTreeMap::new();
    for ticker in tickers {
        let series = prices
            .get(ticker)
            .ok_or_else(|| Error::Misaligned(format!("no prices for {ticker}")))?;
        closes.insert(ticker.clone(), closes_over(series, calendar)?);
    }

    let invested = invest_fraction * initial_total;
    let per_ticker = invested / real_usize(tickers.len());
    let mut ledger = PortfolioLedger::new(initial_total - invested);
    let first_day = calendar.days()[0];
    for ticker in tickers {
        let close0 = closes[ticker][0];
        let bought = per_ticker / close0;
        *ledger.positions.entry(ticker.clone()).or_insert_with(T::zero) += bought;
        ledger.log(first_day, ticker, TradeAction::Buy, per_ticker, bought, T::zero());
    }

    let total_value: Vec<T> = (0..calendar.len())
        .map(|i| ledger.total_value(|t| closes[t][i]))
        .collect();
    let m = metrics(&total_value)?;
    Ok(BacktestResult {
        dates: calendar.days().to_vec(),
        total_value,
        weights: None,
        return_pct: m.return_pct,
        risk_pct: m.risk_pct,
        trade_log: ledger.history,
    })
}

fn check_alignment<T: Real>(
    ticker: &Ticker,
    signals: &[DailySignal<T>],
    calendar: &TradingCalendar,
) -> Result<()> {
    if signals.len() != calendar.len() {
        return Err(Error::Misaligned(format!(
            "{ticker}: {} signals for {} trading days",
            signals.len(),
            calendar.len()
        )));
    }
    for (signal, &day) in signals.iter().zip(calendar.days()) {
        if signal.date != day {
            return Err(Error::Misaligned(format!(
                "{ticker}: signal dated {} on trading day {day}",
                signal.date
            )));
        }
    }
    Ok(())
}

/// Runs the single-stock threshold strategy over the calendar.
///
/// The ledger starts with `invest_fraction` of the capital in shares at the
/// first close; every later close applies [`single_stock_step`] with that
/// day's signal.
pub fn single_stock_run<T: Real>(
    signals: &[DailySignal<T>],
    prices: &PriceSeries<T>,
    config: &SingleStockConfig<T>,
    calendar: &TradingCalendar,
) -> Result<BacktestResult<T>> {
    config.validate()?;
    check_run_preconditions(calendar)?;
    let ticker = prices.ticker().clone();
    check_alignment(&ticker, signals, calendar)?;
    let closes = closes_over(prices, calendar)?;

    let invested = config.invest_fraction * config.initial_total;
    let per_ticker = invested / real_usize(1);
    let mut ledger = PortfolioLedger::new(config.initial_total - invested);
    let bought = per_ticker / closes[0];
    ledger.positions.insert(ticker.clone(), bought);
    ledger.log(
        calendar.days()[0],
        &ticker,
        TradeAction::Buy,
        per_ticker,
        bought,
        signals[0].svc,
    );

    let mut total_value = Vec::with_capacity(calendar.len());
    total_value.push(ledger.total_value(|_| closes[0]));
    for (i, &day) in calendar.days().iter().enumerate().skip(1) {
        single_stock_step(&mut ledger, &ticker, day, signals[i].svc, config, closes[i]);
        total_value.push(ledger.total_value(|_| closes[i]));
    }

    let m = metrics(&total_value)?;
    Ok(BacktestResult {
        dates: calendar.days().to_vec(),
        total_value,
        weights: None,
        return_pct: m.return_pct,
        risk_pct: m.risk_pct,
        trade_log: ledger.history,
    })
}

/// Target allocation derived from one day's signal values, or the decision
/// to leave positions untouched.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightDecision<T> {
    Rebalance(BTreeMap<Ticker, T>),
    NoRebalance,
}

/// Shifts the day's signal values to be non-negative and normalizes them to
/// fractions summing to one. A ticker without data counts as zero change.
/// When every value is equal there is nothing to rank and no rebalance
/// happens; otherwise the minimum-signal ticker always gets weight zero.
pub fn multi_stock_weights<T: Real>(
    svc_values: &BTreeMap<Ticker, Option<T>>,
) -> Result<WeightDecision<T>> {
    if svc_values.is_empty() {
        return Err(Error::EmptyInput("no signal values"));
    }
    let values: Vec<(&Ticker, T)> = svc_values
        .iter()
        .map(|(t, v)| (t, v.unwrap_or_else(T::zero)))
        .collect();
    let first = values[0].1;
    if values.iter().all(|&(_, v)| v == first) {
        return Ok(WeightDecision::NoRebalance);
    }
    let min = values
        .iter()
        .map(|&(_, v)| v)
        .fold(T::infinity(), |a, v| a.min(v));
    let total = values
        .iter()
        .map(|&(_, v)| v - min)
        .fold(T::zero(), |a, v| a + v);
    let weights = values
        .into_iter()
        .map(|(t, v)| (t.clone(), (v - min) / total))
        .collect();
    Ok(WeightDecision::Rebalance(weights))
}

/// Sells every position and repurchases at the same closes according to
/// `weights`. Total value at those closes is preserved.
pub fn rebalance_shares<T: Real>(
    shares: &BTreeMap<Ticker, T>,
    closes: &BTreeMap<Ticker, T>,
    weights: &BTreeMap<Ticker, T>,
) -> BTreeMap<Ticker, T> {
    let value = shares
        .iter()
        .fold(T::zero(), |a, (t, &s)| a + s * closes[t]);
    weights
        .iter()
        .map(|(t, &w)| (t.clone(), w * value / closes[t]))
        .collect()
}

/// Runs the multi-stock daily rebalancer: equal-weight full investment on
/// the first close, then a liquidate-and-repurchase to that day's target
/// weights at every close (held through NoRebalance days).
pub fn multi_stock_run<T: Real>(
    signals: &BTreeMap<Ticker, Vec<DailySignal<T>>>,
    prices: &BTreeMap<Ticker, PriceSeries<T>>,
    calendar: &TradingCalendar,
    initial_total: T,
) -> Result<BacktestResult<T>> {
    if signals.is_empty() {
        return Err(Error::EmptyInput("no tickers"));
    }
    check_run_preconditions(calendar)?;
    if initial_total <= T::zero() {
        return Err(Error::InvalidParameter("initial total must be positive".into()));
    }

    let mut closes: BTreeMap<Ticker, Vec<T>> = BTreeMap::new();
    for (ticker, series) in signals {
        check_alignment(ticker, series, calendar)?;
        let price_series = prices
            .get(ticker)
            .ok_or_else(|| Error::Misaligned(format!("no prices for {ticker}")))?;
        closes.insert(ticker.clone(), closes_over(price_series, calendar)?);
    }

    let tickers: Vec<Ticker> = signals.keys().cloned().collect();
    let per_ticker = initial_total / real_usize(tickers.len());
    let first_day = calendar.days()[0];
    let mut ledger = PortfolioLedger::new(T::zero());
    for ticker in &tickers {
        let close0 = closes[ticker][0];
        let bought = per_ticker / close0;
        ledger.positions.insert(ticker.clone(), bought);
        ledger.log(
            first_day,
            ticker,
            TradeAction::Buy,
            per_ticker,
            bought,
            signals[ticker][0].svc,
        );
    }

    let mut total_value = Vec::with_capacity(calendar.len());
    let mut weights_by_day = Vec::with_capacity(calendar.len());
    let record_weights =
        |positions: &BTreeMap<Ticker, T>, day_closes: &BTreeMap<Ticker, T>, value: T| {
            positions
                .iter()
                .map(|(t, &s)| (t.clone(), s * day_closes[t] / value))
                .collect::<BTreeMap<Ticker, T>>()
        };

    let day_closes = |i: usize| -> BTreeMap<Ticker, T> {
        closes.iter().map(|(t, c)| (t.clone(), c[i])).collect()
    };

    let closes0 = day_closes(0);
    let value0 = ledger.total_value(|t| closes0[t]);
    total_value.push(value0);
    weights_by_day.push(record_weights(&ledger.positions, &closes0, value0));

    for (i, &day) in calendar.days().iter().enumerate().skip(1) {
        let today = day_closes(i);
        let svc_map: BTreeMap<Ticker, Option<T>> = tickers
            .iter()
            .map(|t| (t.clone(), Some(signals[t][i].svc)))
            .collect();
        if let WeightDecision::Rebalance(weights) = multi_stock_weights(&svc_map)? {
            let new_positions = rebalance_shares(&ledger.positions, &today, &weights);
            for ticker in &tickers {
                let old = ledger.shares(ticker);
                let new = new_positions[ticker];
                let delta_value = (new - old) * today[ticker];
                if delta_value != T::zero() {
                    let action = if delta_value > T::zero() {
                        TradeAction::Buy
                    } else {
                        TradeAction::Sell
                    };
                    ledger.log(
                        day,
                        ticker,
                        action,
                        delta_value.abs(),
                        (new - old).abs(),
                        signals[ticker][i].svc,
                    );
                }
            }
            ledger.positions = new_positions;
        }
        let value = ledger.total_value(|t| today[t]);
        total_value.push(value);
        weights_by_day.push(record_weights(&ledger.positions, &today, value));
    }

    let m = metrics(&total_value)?;
    Ok(BacktestResult {
        dates: calendar.days().to_vec(),
        total_value,
        weights: Some(weights_by_day),
        return_pct: m.return_pct,
        risk_pct: m.risk_pct,
        trade_log: ledger.history,
    })
}
