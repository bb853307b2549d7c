//! Higher-order studies over the strategies: threshold grid search with
//! percentile scoring, exhaustive subset permutation, daily growth
//! distribution diffs, and the investment-share bias check.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market_data::{DateRange, PriceSeries, Ticker, TradingCalendar};
use crate::num::{real, real_usize, Real};
use crate::signal::DailySignal;
use crate::strategy::{
    bh_run, metrics, multi_stock_run, single_stock_run, BacktestResult, SingleStockConfig,
};

/// Maps `f` over `inputs` either sequentially or on a dedicated pool of
/// `jobs` threads. Output order always follows input order.
pub fn run_jobs<I, O, F>(inputs: Vec<I>, jobs: usize, f: F) -> Result<Vec<O>>
where
    I: Send + Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync,
{
    if jobs <= 1 {
        return inputs.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| inputs.par_iter().map(&f).collect())
}

/// Candidate threshold pairs: positive triggers ascending, negative triggers
/// descending.
#[derive(Debug, Clone)]
pub struct ThresholdGrid<T> {
    pos: Vec<T>,
    neg: Vec<T>,
}

impl<T: Real> ThresholdGrid<T> {
    pub fn new(pos: Vec<T>, neg: Vec<T>) -> Result<Self> {
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::EmptyInput("threshold candidates"));
        }
        if pos.iter().any(|&p| p <= T::zero()) || pos.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "positive candidates must be ascending and > 0".into(),
            ));
        }
        if neg.iter().any(|&n| n >= T::zero()) || neg.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "negative candidates must be descending and < 0".into(),
            ));
        }
        Ok(ThresholdGrid { pos, neg })
    }

    /// 2.5-spaced candidates out to +-25, bracketing the published optimum.
    pub fn default_grid() -> Self {
        let pos: Vec<T> = (1..=10).map(|i| real(2.5 * i as f64)).collect();
        let neg: Vec<T> = (1..=10).map(|i| real(-2.5 * i as f64)).collect();
        ThresholdGrid { pos, neg }
    }

    pub fn pos_candidates(&self) -> &[T] {
        &self.pos
    }

    pub fn neg_candidates(&self) -> &[T] {
        &self.neg
    }

    /// Row-major pairs: positive candidate outer, negative inner.
    pub fn pairs(&self) -> Vec<(T, T)> {
        self.pos
            .iter()
            .flat_map(|&p| self.neg.iter().map(move |&n| (p, n)))
            .collect()
    }
}

/// One grid cell: average gain versus the half-invested baseline in each
/// tuning period, the per-period percentiles, and their mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell<T> {
    pub pos_threshold: T,
    pub neg_threshold: T,
    pub gain_a: T,
    pub gain_b: T,
    pub pct_a: T,
    pub pct_b: T,
    pub combined: T,
}

#[derive(Debug, Clone)]
pub struct GridResult<T> {
    /// Row-major over the grid's pairs.
    pub cells: Vec<GridCell<T>>,
    pub chosen: (T, T),
}

/// Mean fractional rank of each value, ties averaged, scaled onto [0, 1].
/// A single value (or an all-tied set) sits at 0.5.
pub fn percentile_ranks<T: Real>(values: &[T]) -> Vec<T> {
    let n = values.len();
    if n <= 1 {
        return vec![real(0.5); n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("gains are finite"));
    let denom = real_usize::<T>(n - 1);
    let mut ranks = vec![T::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = real::<T>((i + j) as f64 / 2.0);
        for &slot in &order[i..=j] {
            ranks[slot] = mean_rank / denom;
        }
        i = j + 1;
    }
    ranks
}

/// Scores every threshold pair by its average gain over the half-invested
/// baseline in two tuning periods, converts each period's gains to
/// percentile ranks, and picks the pair with the best mean percentile.
/// Ties go to the larger positive threshold, then the more negative one.
#[allow(clippy::too_many_arguments)]
pub fn threshold_grid_search<T: Real>(
    grid: &ThresholdGrid<T>,
    signals: &BTreeMap<Ticker, Vec<DailySignal<T>>>,
    prices: &BTreeMap<Ticker, PriceSeries<T>>,
    calendar: &TradingCalendar,
    period_a: DateRange,
    period_b: DateRange,
    initial_total: T,
    invest_fraction: T,
    jobs: usize,
) -> Result<GridResult<T>> {
    let periods = [period_a, period_b];
    let mut period_cals = Vec::new();
    for period in periods {
        let span = calendar.span(period);
        let cal = calendar.restrict(period)?;
        period_cals.push((span, cal));
    }

    // baseline finals are pair independent
    let mut bh_finals: Vec<BTreeMap<Ticker, T>> = Vec::new();
    for (_, cal) in &period_cals {
        let mut finals = BTreeMap::new();
        for ticker in signals.keys() {
            let bh = bh_run(
                prices,
                std::slice::from_ref(ticker),
                cal,
                initial_total,
                invest_fraction,
            )?;
            finals.insert(ticker.clone(), *bh.total_value.last().expect("non-empty run"));
        }
        bh_finals.push(finals);
    }

    let pairs = grid.pairs();
    let gains: Vec<[T; 2]> = run_jobs(pairs.clone(), jobs, |&(pos, neg)| {
        let config = SingleStockConfig {
            initial_total,
            invest_fraction,
            pos_threshold: pos,
            neg_threshold: neg,
        };
        let mut out = [T::zero(); 2];
        for (p, (span, cal)) in period_cals.iter().enumerate() {
            let mut sum = T::zero();
            for (ticker, series) in signals {
                let run = single_stock_run(&series[span.clone()], &prices[ticker], &config, cal)?;
                let final_value = *run.total_value.last().expect("non-empty run");
                sum += final_value - bh_finals[p][ticker];
            }
            out[p] = sum / real_usize(signals.len());
        }
        Ok(out)
    })?;

    let gains_a: Vec<T> = gains.iter().map(|g| g[0]).collect();
    let gains_b: Vec<T> = gains.iter().map(|g| g[1]).collect();
    let pct_a = percentile_ranks(&gains_a);
    let pct_b = percentile_ranks(&gains_b);

    let two = real::<T>(2.0);
    let cells: Vec<GridCell<T>> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(pos, neg))| GridCell {
            pos_threshold: pos,
            neg_threshold: neg,
            gain_a: gains_a[i],
            gain_b: gains_b[i],
            pct_a: pct_a[i],
            pct_b: pct_b[i],
            combined: (pct_a[i] + pct_b[i]) / two,
        })
        .collect();

    let mut best = &cells[0];
    for cell in &cells[1..] {
        let better = cell.combined > best.combined
            || (cell.combined == best.combined
                && (cell.pos_threshold > best.pos_threshold
                    || (cell.pos_threshold == best.pos_threshold
                        && cell.neg_threshold < best.neg_threshold)));
        if better {
            best = cell;
        }
    }
    let chosen = (best.pos_threshold, best.neg_threshold);
    Ok(GridResult { cells, chosen })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    MultiStock,
    BuyHold,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::MultiStock => "multi_stock",
            StrategyKind::BuyHold => "bh",
        }
    }
}

/// Per-subset-size averages for one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationSummary<T> {
    pub k: usize,
    pub strategy: StrategyKind,
    pub mean_return: T,
    pub mean_risk: T,
    /// Mean over the subsets whose risk was non-zero; absent if none was.
    pub mean_ratio: Option<T>,
    pub n_subsets: usize,
}

/// Enumerates every size-k subset of `tickers` for each requested k, runs
/// the multi-stock strategy and the fully-invested equal-weight baseline on
/// each, and averages return, risk and their ratio.
pub fn permutation_experiment<T: Real>(
    tickers: &[Ticker],
    k_values: &[usize],
    signals: &BTreeMap<Ticker, Vec<DailySignal<T>>>,
    prices: &BTreeMap<Ticker, PriceSeries<T>>,
    calendar: &TradingCalendar,
    initial_total: T,
    jobs: usize,
) -> Result<Vec<PermutationSummary<T>>> {
    if tickers.is_empty() {
        return Err(Error::EmptyInput("no tickers"));
    }
    for &k in k_values {
        if k == 0 || k > tickers.len() {
            return Err(Error::InvalidParameter(format!(
                "subset size {k} outside 1..={}",
                tickers.len()
            )));
        }
    }

    let mut summaries = Vec::new();
    for &k in k_values {
        let subsets: Vec<Vec<Ticker>> = tickers.iter().cloned().combinations(k).collect();
        let n_subsets = subsets.len();

        // (multi return/risk/ratio, bh return/risk/ratio) per subset
        let per_subset = run_jobs(subsets, jobs, |subset| {
            let sub_signals: BTreeMap<Ticker, Vec<DailySignal<T>>> = subset
                .iter()
                .map(|t| (t.clone(), signals[t].clone()))
                .collect();
            let multi = multi_stock_run(&sub_signals, prices, calendar, initial_total)?;
            let bh = bh_run(prices, subset, calendar, initial_total, T::one())?;
            let m_multi = metrics(&multi.total_value)?;
            let m_bh = metrics(&bh.total_value)?;
            Ok((m_multi, m_bh))
        })?;

        for strategy in [StrategyKind::MultiStock, StrategyKind::BuyHold] {
            let picked = per_subset.iter().map(|(m, b)| match strategy {
                StrategyKind::MultiStock => m,
                StrategyKind::BuyHold => b,
            });
            let n = real_usize::<T>(n_subsets);
            let mean_return = picked
                .clone()
                .fold(T::zero(), |a, m| a + m.return_pct)
                / n;
            let mean_risk = picked.clone().fold(T::zero(), |a, m| a + m.risk_pct) / n;
            let ratios: Vec<T> = picked.filter_map(|m| m.ratio).collect();
            let mean_ratio = (!ratios.is_empty()).then(|| {
                ratios.iter().fold(T::zero(), |a, &r| a + r) / real_usize(ratios.len())
            });
            summaries.push(PermutationSummary {
                k,
                strategy,
                mean_return,
                mean_risk,
                mean_ratio,
                n_subsets,
            });
        }
    }
    Ok(summaries)
}

/// Default histogram bin width for daily growth differences: a quarter of a
/// percentage point, in fractional units.
pub const DEFAULT_DIFF_BIN_WIDTH: f64 = 0.0025;

/// Distribution of per-day growth differences between two runs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport<T> {
    pub mean: T,
    pub stddev: T,
    pub min: T,
    pub max: T,
    /// `(bin_lo, bin_hi, count)` for every non-empty bin, ascending.
    pub bins: Vec<(T, T, usize)>,
}

/// Subtracts b's daily growth from a's day by day and summarizes the
/// differences with moments and a fixed-width histogram.
pub fn daily_diff_distribution<T: Real>(
    a: &BacktestResult<T>,
    b: &BacktestResult<T>,
    bin_width: T,
) -> Result<DistributionReport<T>> {
    if a.dates != b.dates {
        return Err(Error::Misaligned(
            "results cover different trading days".into(),
        ));
    }
    if bin_width <= T::zero() {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let ga = a.growths();
    let gb = b.growths();
    if ga.is_empty() {
        return Err(Error::TooFewPoints {
            context: "daily_diff_distribution",
            need: 2,
            got: a.dates.len(),
        });
    }
    let diffs: Vec<T> = ga.iter().zip(&gb).map(|(&x, &y)| x - y).collect();

    let n = real_usize::<T>(diffs.len());
    let mean = diffs.iter().fold(T::zero(), |a, &d| a + d) / n;
    let stddev = if diffs.len() < 2 {
        T::zero()
    } else {
        let ss = diffs
            .iter()
            .fold(T::zero(), |a, &d| a + (d - mean) * (d - mean));
        (ss / (n - T::one())).sqrt()
    };
    let min = diffs.iter().copied().fold(T::infinity(), T::min);
    let max = diffs.iter().copied().fold(T::neg_infinity(), T::max);

    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &d in &diffs {
        let idx = (d / bin_width)
            .floor()
            .to_i64()
            .ok_or_else(|| Error::InvalidParameter(format!("difference {d} out of bin range")))?;
        *counts.entry(idx).or_insert(0) += 1;
    }
    let bins = counts
        .into_iter()
        .map(|(idx, count)| {
            let lo = T::from_i64(idx).expect("bin index fits scalar") * bin_width;
            (lo, lo + bin_width, count)
        })
        .collect();

    Ok(DistributionReport {
        mean,
        stddev,
        min,
        max,
        bins,
    })
}

/// How evenly the rebalancer spread its capital, and what the same average
/// allocation would have earned held statically.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareReport<T> {
    /// Mean fraction of the portfolio held in each ticker, summing to one.
    pub mean_weights: BTreeMap<Ticker, T>,
    /// Sample standard deviation of the mean weights, in percent.
    pub stddev_pct: T,
    /// Return of a buy-and-hold using the mean weights as the allocation.
    pub static_weight_return: T,
    /// Return of the fully-invested equal-weight buy-and-hold.
    pub equal_weight_return: T,
}

/// Averages the rebalancer's daily weights per ticker and compares a static
/// buy-and-hold at those weights against the equal-weight baseline.
pub fn investment_share_analysis<T: Real>(
    multi: &BacktestResult<T>,
    prices: &BTreeMap<Ticker, PriceSeries<T>>,
    calendar: &TradingCalendar,
) -> Result<ShareReport<T>> {
    let weights_by_day = multi.weights.as_ref().ok_or(Error::MissingWeights)?;
    if multi.dates != calendar.days() {
        return Err(Error::Misaligned(
            "result does not cover the calendar".into(),
        ));
    }

    let n_days = real_usize::<T>(weights_by_day.len());
    let mut mean_weights: BTreeMap<Ticker, T> = BTreeMap::new();
    for day in weights_by_day {
        for (ticker, &w) in day {
            *mean_weights.entry(ticker.clone()).or_insert_with(T::zero) += w;
        }
    }
    for w in mean_weights.values_mut() {
        *w /= n_days;
    }

    let hundred = real::<T>(100.0);
    let pcts: Vec<T> = mean_weights.values().map(|&w| w * hundred).collect();
    let stddev_pct = if pcts.len() < 2 {
        T::zero()
    } else {
        let n = real_usize::<T>(pcts.len());
        let mean = pcts.iter().fold(T::zero(), |a, &p| a + p) / n;
        let ss = pcts
            .iter()
            .fold(T::zero(), |a, &p| a + (p - mean) * (p - mean));
        (ss / (n - T::one())).sqrt()
    };

    // static buy-and-hold at the mean weights
    let initial = hundred;
    let first_day = calendar.days()[0];
    let mut shares: BTreeMap<Ticker, T> = BTreeMap::new();
    for (ticker, &w) in &mean_weights {
        let series = prices
            .get(ticker)
            .ok_or_else(|| Error::Misaligned(format!("no prices for {ticker}")))?;
        let close0 = series.close_on(first_day).ok_or(Error::MissingPrice {
            ticker: ticker.clone(),
            date: first_day,
        })?;
        shares.insert(ticker.clone(), w * initial / close0);
    }
    let mut static_values = Vec::with_capacity(calendar.len());
    for &day in calendar.days() {
        let mut value = T::zero();
        for (ticker, &s) in &shares {
            let close = prices[ticker].close_on(day).ok_or(Error::MissingPrice {
                ticker: ticker.clone(),
                date: day,
            })?;
            value += s * close;
        }
        static_values.push(value);
    }
    let static_weight_return = metrics(&static_values)?.return_pct;

    let tickers: Vec<Ticker> = mean_weights.keys().cloned().collect();
    let equal = bh_run(prices, &tickers, calendar, initial, T::one())?;
    Ok(ShareReport {
        mean_weights,
        stddev_pct,
        static_weight_return,
        equal_weight_return: equal.return_pct,
    })
}
