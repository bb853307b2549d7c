//! Deterministic emission of the engine's artifacts: CSV files with fixed
//! 9-significant-digit float formatting and the markdown summary tables.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::market_data::CommentRecord;
use crate::num::Real;
use crate::sentiment::{AccuracyReport, HumanLabel};
use crate::signal::{DailyAggregate, DailySignal};
use crate::stats::{ExperimentPoint, RegressionSummary};
use crate::strategy::{BacktestResult, Metrics, TradeLogEntry};
use crate::experiments::{DistributionReport, GridResult, PermutationSummary, ShareReport};

/// Formats a scalar with 9 significant digits, shortest decimal form.
/// Identical inputs always format identically.
pub fn fmt_scalar<T: Real>(x: T) -> String {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("scientific form round-trips");
    if rounded == 0.0 {
        return "0".to_string();
    }
    format!("{rounded}")
}

/// `ticker,date,mean_sentiment,count,delta_sentiment,delta_count,svc` rows;
/// an absent mean prints as an empty field.
pub fn write_signals_csv<T: Real, W: Write>(
    w: &mut W,
    rows: &[(DailyAggregate<T>, DailySignal<T>)],
) -> io::Result<()> {
    writeln!(w, "ticker,date,mean_sentiment,count,delta_sentiment,delta_count,svc")?;
    for (aggregate, signal) in rows {
        let mean = aggregate
            .mean_sentiment
            .map(fmt_scalar)
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            signal.ticker,
            signal.date,
            mean,
            aggregate.count,
            fmt_scalar(signal.delta_sentiment),
            signal.delta_count,
            fmt_scalar(signal.svc)
        )?;
    }
    Ok(())
}

pub fn write_points_csv<T: Real, W: Write>(
    w: &mut W,
    points: &[ExperimentPoint<T>],
) -> io::Result<()> {
    writeln!(w, "ticker,date,x,y")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{}",
            p.ticker,
            p.date,
            fmt_scalar(p.x),
            fmt_scalar(p.y)
        )?;
    }
    Ok(())
}

pub fn write_regression_csv<T: Real, W: Write>(
    w: &mut W,
    summary: &RegressionSummary<T>,
) -> io::Result<()> {
    writeln!(w, "n,slope,intercept,r_squared,p_value")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        summary.n,
        fmt_scalar(summary.slope),
        fmt_scalar(summary.intercept),
        fmt_scalar(summary.r_squared),
        fmt_scalar(summary.p_value)
    )
}

/// `date,total_value` plus one `weight_<TICKER>` column per ticker when the
/// result carries per-day weights.
pub fn write_values_csv<T: Real, W: Write>(
    w: &mut W,
    result: &BacktestResult<T>,
) -> io::Result<()> {
    let weight_tickers: Vec<_> = result
        .weights
        .as_ref()
        .and_then(|days| days.first())
        .map(|first| first.keys().cloned().collect())
        .unwrap_or_default();
    write!(w, "date,total_value")?;
    for ticker in &weight_tickers {
        write!(w, ",weight_{ticker}")?;
    }
    writeln!(w)?;
    for (i, (&date, &value)) in result.dates.iter().zip(&result.total_value).enumerate() {
        write!(w, "{},{}", date, fmt_scalar(value))?;
        if let Some(days) = &result.weights {
            for ticker in &weight_tickers {
                write!(w, ",{}", fmt_scalar(days[i][ticker]))?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_metrics_csv<T: Real, W: Write>(w: &mut W, metrics: &Metrics<T>) -> io::Result<()> {
    writeln!(w, "return_pct,risk_pct,ratio")?;
    let ratio = metrics.ratio.map(fmt_scalar).unwrap_or_else(|| "NaN".to_string());
    writeln!(
        w,
        "{},{},{}",
        fmt_scalar(metrics.return_pct),
        fmt_scalar(metrics.risk_pct),
        ratio
    )
}

pub fn write_trades_csv<T: Real, W: Write>(
    w: &mut W,
    log: &[TradeLogEntry<T>],
) -> io::Result<()> {
    writeln!(w, "date,ticker,action,amount_usd,shares,svc")?;
    for entry in log {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            entry.date,
            entry.ticker,
            entry.action.name(),
            fmt_scalar(entry.amount_usd),
            fmt_scalar(entry.shares),
            fmt_scalar(entry.svc)
        )?;
    }
    Ok(())
}

/// Heatmap-ready grid dump, row-major over the candidate pairs.
pub fn write_grid_csv<T: Real, W: Write>(w: &mut W, result: &GridResult<T>) -> io::Result<()> {
    writeln!(w, "pos_threshold,neg_threshold,gain_a,gain_b,pct_a,pct_b,combined")?;
    for cell in &result.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_scalar(cell.pos_threshold),
            fmt_scalar(cell.neg_threshold),
            fmt_scalar(cell.gain_a),
            fmt_scalar(cell.gain_b),
            fmt_scalar(cell.pct_a),
            fmt_scalar(cell.pct_b),
            fmt_scalar(cell.combined)
        )?;
    }
    Ok(())
}

pub fn write_chosen_pair_csv<T: Real, W: Write>(w: &mut W, chosen: (T, T)) -> io::Result<()> {
    writeln!(w, "pos_threshold,neg_threshold")?;
    writeln!(w, "{},{}", fmt_scalar(chosen.0), fmt_scalar(chosen.1))
}

pub fn write_permutation_csv<T: Real, W: Write>(
    w: &mut W,
    summaries: &[PermutationSummary<T>],
) -> io::Result<()> {
    writeln!(w, "k,strategy,mean_return,mean_risk,mean_ratio,n_subsets")?;
    for s in summaries {
        let ratio = s.mean_ratio.map(fmt_scalar).unwrap_or_else(|| "NaN".to_string());
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.k,
            s.strategy.name(),
            fmt_scalar(s.mean_return),
            fmt_scalar(s.mean_risk),
            ratio,
            s.n_subsets
        )?;
    }
    Ok(())
}

/// Histogram block followed by `metric,value` summary rows.
pub fn write_distribution_csv<T: Real, W: Write>(
    w: &mut W,
    report: &DistributionReport<T>,
) -> io::Result<()> {
    writeln!(w, "bin_lo,bin_hi,count")?;
    for &(lo, hi, count) in &report.bins {
        writeln!(w, "{},{},{}", fmt_scalar(lo), fmt_scalar(hi), count)?;
    }
    writeln!(w, "metric,value")?;
    writeln!(w, "mean,{}", fmt_scalar(report.mean))?;
    writeln!(w, "stddev,{}", fmt_scalar(report.stddev))?;
    writeln!(w, "min,{}", fmt_scalar(report.min))?;
    writeln!(w, "max,{}", fmt_scalar(report.max))
}

pub fn write_share_csv<T: Real, W: Write>(w: &mut W, report: &ShareReport<T>) -> io::Result<()> {
    writeln!(w, "ticker,mean_weight")?;
    for (ticker, &weight) in &report.mean_weights {
        writeln!(w, "{},{}", ticker, fmt_scalar(weight))?;
    }
    writeln!(w, "metric,value")?;
    writeln!(w, "stddev_pct,{}", fmt_scalar(report.stddev_pct))?;
    writeln!(w, "static_weight_return,{}", fmt_scalar(report.static_weight_return))?;
    writeln!(w, "equal_weight_return,{}", fmt_scalar(report.equal_weight_return))
}

/// `metric,value` rows and the confusion matrix with human labels as rows
/// and predicted labels as columns.
pub fn write_eval_csv<T: Real, W: Write>(w: &mut W, report: &AccuracyReport<T>) -> io::Result<()> {
    writeln!(w, "metric,value")?;
    writeln!(w, "total,{}", report.total)?;
    writeln!(w, "matches,{}", report.matches)?;
    writeln!(w, "accuracy,{}", fmt_scalar(report.accuracy))?;
    write!(w, "confusion")?;
    for label in HumanLabel::ALL {
        write!(w, ",predicted_{}", label.name())?;
    }
    writeln!(w)?;
    for truth in HumanLabel::ALL {
        write!(w, "true_{}", truth.name())?;
        for predicted in HumanLabel::ALL {
            write!(w, ",{}", report.confusion[truth.index()][predicted.index()])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Scored comment dump in the ingestion schema, RFC 4180 quoting on bodies.
pub fn write_comments_csv<T: Real, W: Write>(
    w: W,
    records: &[CommentRecord<T>],
) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["timestamp", "body", "tickers", "score"])?;
    for record in records {
        let tickers = record
            .tickers
            .iter()
            .map(|t| t.as_str())
            .collect::<Vec<_>>()
            .join(";");
        let score = record.score.map(fmt_scalar).unwrap_or_default();
        csv.write_record([
            record.timestamp.to_string().as_str(),
            record.body.as_str(),
            tickers.as_str(),
            score.as_str(),
        ])?;
    }
    csv.flush()
}

/// Year-by-year return and risk tables, one column per strategy.
pub fn render_summary_md<T: Real>(
    per_year: &BTreeMap<String, BTreeMap<i32, Metrics<T>>>,
) -> String {
    let mut out = String::from("# Backtest summary\n");
    if per_year.is_empty() {
        out.push_str("\nNo results found.\n");
        return out;
    }
    let strategies: Vec<&String> = per_year.keys().collect();
    let mut years: Vec<i32> = per_year
        .values()
        .flat_map(|m| m.keys().copied())
        .collect();
    years.sort_unstable();
    years.dedup();

    let pct = |v: T| {
        let hundred = T::from_f64(100.0).unwrap();
        format!("{}%", fmt_scalar(v * hundred))
    };

    for (title, pick) in [
        ("Returns", 0usize),
        ("Risk", 1usize),
    ] {
        out.push_str(&format!("\n## {title}\n\n"));
        out.push_str("| year |");
        for s in &strategies {
            out.push_str(&format!(" {s} |"));
        }
        out.push_str("\n|---|");
        for _ in &strategies {
            out.push_str("---|");
        }
        out.push('\n');
        for &year in &years {
            out.push_str(&format!("| {year} |"));
            for s in &strategies {
                let cell = per_year[*s]
                    .get(&year)
                    .map(|m| pct(if pick == 0 { m.return_pct } else { m.risk_pct }))
                    .unwrap_or_else(|| "-".to_string());
                out.push_str(&format!(" {cell} |"));
            }
            out.push('\n');
        }
    }
    out
}
