//! Implementation of the subcommands: each loads what it needs, computes
//! through the core crate, and drops deterministic CSV/markdown artifacts
//! into the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Datelike, NaiveDate};

use svcbt_core::experiments::{
    daily_diff_distribution, investment_share_analysis, permutation_experiment,
    threshold_grid_search, ThresholdGrid, DEFAULT_DIFF_BIN_WIDTH,
};
use svcbt_core::market_data::{
    build_calendar, load_comments, load_price_dir, Ticker, TradingCalendar,
};
use svcbt_core::report;
use svcbt_core::sentiment::{composite_score, lexicon_score_with_floor, Lexicon};
use svcbt_core::signal::signal_series_with_aggregates;
use svcbt_core::stats::correlation_experiment;
use svcbt_core::strategy::{bh_run, metrics, multi_stock_run, single_stock_run, Metrics};
use svcbt_core::{Aggregate, Backtest, Comment, Prices, Signal};

use crate::config::{RunConfig, ScoreMode, StrategyKindArg};

/// Everything the pipeline loads from disk.
pub struct LoadedData {
    pub comments: Vec<Comment>,
    pub dropped: usize,
    /// Unscored rows per source file, for the precomputed-score check.
    pub unscored: Vec<(PathBuf, Vec<u64>)>,
    pub prices: BTreeMap<Ticker, Prices>,
    pub calendar: TradingCalendar,
}

pub fn load_data(config: &RunConfig) -> Result<LoadedData> {
    let mut files: Vec<PathBuf> = fs::read_dir(&config.comments_dir)
        .with_context(|| format!("reading {}", config.comments_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no comment CSV files in {}", config.comments_dir.display());
    }

    let mut comments = Vec::new();
    let mut dropped = 0usize;
    let mut unscored = Vec::new();
    for file in &files {
        let loaded = load_comments::<f64>(file, &config.registry)?;
        dropped += loaded.dropped;
        if !loaded.unscored_lines.is_empty() {
            unscored.push((file.clone(), loaded.unscored_lines));
        }
        comments.extend(loaded.records);
    }
    comments.sort_by_key(|r| r.timestamp);

    let prices = load_price_dir::<f64>(&config.prices_dir, &config.registry)?;
    let series: Vec<&Prices> = prices.values().collect();
    let calendar = build_calendar(&series, config.range)?;

    Ok(LoadedData {
        comments,
        dropped,
        unscored,
        prices,
        calendar,
    })
}

/// Comments with every record scored, according to the configured mode.
pub fn scored_comments(config: &RunConfig, data: &LoadedData) -> Result<Vec<Comment>> {
    match config.score_mode {
        ScoreMode::Precomputed => {
            if !data.unscored.is_empty() {
                let mut msg = String::from("precomputed score mode but rows lack scores:");
                for (file, lines) in &data.unscored {
                    let lines: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
                    msg.push_str(&format!(" {}:{}", file.display(), lines.join(",")));
                }
                bail!(msg);
            }
            Ok(data.comments.clone())
        }
        ScoreMode::Lexicon => {
            let path = config
                .lexicon_path
                .as_ref()
                .context("lexicon score mode needs data.lexicon in the config")?;
            let lexicon = Lexicon::from_path(path)?;
            let floor = config.lexicon_neutral_floor;
            Ok(data
                .comments
                .iter()
                .map(|c| {
                    let probs = lexicon_score_with_floor(&c.body, &lexicon, floor);
                    let mut scored = c.clone();
                    scored.score = Some(composite_score(&probs));
                    scored
                })
                .collect())
        }
    }
}

type SignalsByTicker = (BTreeMap<Ticker, Vec<Aggregate>>, BTreeMap<Ticker, Vec<Signal>>);

/// Signal series and per-day aggregates for every configured ticker.
pub fn build_signals(
    config: &RunConfig,
    comments: &[Comment],
    calendar: &TradingCalendar,
) -> Result<SignalsByTicker> {
    let mut aggregates = BTreeMap::new();
    let mut signals = BTreeMap::new();
    for ticker in config.tickers() {
        let (aggs, series) = signal_series_with_aggregates(comments, &ticker, calendar)?;
        aggregates.insert(ticker.clone(), aggs);
        signals.insert(ticker, series);
    }
    Ok((aggregates, signals))
}

fn write_file(path: &Path, write: impl FnOnce(&mut fs::File) -> std::io::Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write(&mut file).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn cmd_ingest(config: &RunConfig) -> Result<()> {
    let data = load_data(config)?;
    let first = data.calendar.days().first().copied();
    let last = data.calendar.days().last().copied();
    println!("comments kept: {}", data.comments.len());
    println!("comments dropped (no company match): {}", data.dropped);
    println!("tickers: {}", data.prices.len());
    match (first, last) {
        (Some(a), Some(b)) => println!("trading days: {} ({a}..{b})", data.calendar.len()),
        _ => println!("trading days: 0"),
    }
    Ok(())
}

pub fn cmd_score(config: &RunConfig) -> Result<()> {
    let data = load_data(config)?;
    let scored = scored_comments(config, &data)?;
    let out = config.out_dir.join("scored_comments.csv");
    write_file(&out, |f| report::write_comments_csv(f, &scored))?;
    println!("scored {} comments -> {}", scored.len(), out.display());
    Ok(())
}

pub fn cmd_signal(config: &RunConfig) -> Result<()> {
    let data = load_data(config)?;
    let comments = scored_comments(config, &data)?;
    let (aggregates, signals) = build_signals(config, &comments, &data.calendar)?;
    let mut rows = Vec::new();
    for ticker in config.tickers() {
        let aggs = &aggregates[&ticker];
        let sigs = &signals[&ticker];
        for (a, s) in aggs.iter().zip(sigs) {
            rows.push((a.clone(), s.clone()));
        }
    }
    let out = config.out_dir.join("signals.csv");
    write_file(&out, |f| report::write_signals_csv(f, &rows))?;
    println!("wrote {} signal rows -> {}", rows.len(), out.display());
    Ok(())
}

pub fn cmd_correlate(config: &RunConfig) -> Result<()> {
    let data = load_data(config)?;
    let comments = scored_comments(config, &data)?;
    let (_, signals) = build_signals(config, &comments, &data.calendar)?;
    let result = correlation_experiment(
        &signals,
        &data.prices,
        &data.calendar,
        config.metric,
        config.effective_lag(),
        config.exclusion_radius,
    )?;
    let points_path = config.out_dir.join("correlation_points.csv");
    write_file(&points_path, |f| report::write_points_csv(f, &result.points))?;
    let summary_path = config.out_dir.join("regression.csv");
    write_file(&summary_path, |f| report::write_regression_csv(f, &result.summary))?;
    let s = &result.summary;
    println!(
        "n={} (of {} pooled) slope={} r_squared={} p_value={}",
        s.n,
        result.points.len(),
        report::fmt_scalar(s.slope),
        report::fmt_scalar(s.r_squared),
        report::fmt_scalar(s.p_value)
    );
    Ok(())
}

/// Equal-capital average of several per-ticker value series, with the trade
/// logs concatenated ticker-major.
fn average_runs(runs: Vec<(Ticker, Backtest)>) -> Result<Backtest> {
    let (_, first) = runs.first().context("no runs to average")?;
    let dates = first.dates.clone();
    let n = runs.len() as f64;
    let mut total_value = vec![0.0f64; dates.len()];
    let mut trade_log = Vec::new();
    for (_, run) in &runs {
        if run.dates != dates {
            bail!("per-ticker runs cover different days");
        }
        for (acc, &v) in total_value.iter_mut().zip(&run.total_value) {
            *acc += v;
        }
        trade_log.extend(run.trade_log.iter().cloned());
    }
    for v in &mut total_value {
        *v /= n;
    }
    let m = metrics(&total_value)?;
    Ok(Backtest {
        dates,
        total_value,
        weights: None,
        return_pct: m.return_pct,
        risk_pct: m.risk_pct,
        trade_log,
    })
}

pub fn run_backtest(config: &RunConfig, kind: StrategyKindArg) -> Result<Backtest> {
    let data = load_data(config)?;
    let tickers = config.tickers();
    match kind {
        StrategyKindArg::Bh50 | StrategyKindArg::Bh100 => {
            let fraction = if kind == StrategyKindArg::Bh50 { 0.5 } else { 1.0 };
            Ok(bh_run(
                &data.prices,
                &tickers,
                &data.calendar,
                config.strategy.initial_total,
                fraction,
            )?)
        }
        StrategyKindArg::Single => {
            let comments = scored_comments(config, &data)?;
            let (_, signals) = build_signals(config, &comments, &data.calendar)?;
            let selected: Vec<Ticker> = match &config.strategy_ticker {
                Some(t) => vec![t.clone()],
                None => tickers,
            };
            let mut runs = Vec::new();
            for ticker in selected {
                let run = single_stock_run(
                    &signals[&ticker],
                    &data.prices[&ticker],
                    &config.strategy,
                    &data.calendar,
                )?;
                runs.push((ticker, run));
            }
            average_runs(runs)
        }
        StrategyKindArg::Multi => {
            let comments = scored_comments(config, &data)?;
            let (_, signals) = build_signals(config, &comments, &data.calendar)?;
            Ok(multi_stock_run(
                &signals,
                &data.prices,
                &data.calendar,
                config.strategy.initial_total,
            )?)
        }
    }
}

pub fn cmd_backtest(config: &RunConfig) -> Result<()> {
    let kind = config.strategy_kind;
    let result = run_backtest(config, kind)?;
    let label = kind.label();
    let values_path = config.out_dir.join(format!("{label}_values.csv"));
    write_file(&values_path, |f| report::write_values_csv(f, &result))?;
    let m = metrics(&result.total_value)?;
    let metrics_path = config.out_dir.join(format!("{label}_metrics.csv"));
    write_file(&metrics_path, |f| report::write_metrics_csv(f, &m))?;
    let trades_path = config.out_dir.join(format!("{label}_trades.csv"));
    write_file(&trades_path, |f| report::write_trades_csv(f, &result.trade_log))?;
    println!(
        "{label}: return {}% risk {}% over {} days -> {}",
        report::fmt_scalar(m.return_pct * 100.0),
        report::fmt_scalar(m.risk_pct * 100.0),
        result.dates.len(),
        values_path.display()
    );
    Ok(())
}

pub fn cmd_grid(config: &RunConfig) -> Result<()> {
    let data = load_data(config)?;
    let comments = scored_comments(config, &data)?;
    let (_, signals) = build_signals(config, &comments, &data.calendar)?;
    let grid = ThresholdGrid::new(config.grid_pos.clone(), config.grid_neg.clone())?;
    let result = threshold_grid_search(
        &grid,
        &signals,
        &data.prices,
        &data.calendar,
        config.period_a,
        config.period_b,
        config.strategy.initial_total,
        config.strategy.invest_fraction,
        config.jobs,
    )?;
    let grid_path = config.out_dir.join("grid.csv");
    write_file(&grid_path, |f| report::write_grid_csv(f, &result))?;
    let chosen_path = config.out_dir.join("grid_chosen.csv");
    write_file(&chosen_path, |f| report::write_chosen_pair_csv(f, result.chosen))?;
    println!(
        "chosen threshold pair: ({}, {}) -> {}",
        report::fmt_scalar(result.chosen.0),
        report::fmt_scalar(result.chosen.1),
        grid_path.display()
    );
    Ok(())
}

pub fn cmd_permute(config: &RunConfig) -> Result<()> {
    let data = load_data(config)?;
    let comments = scored_comments(config, &data)?;
    let (_, signals) = build_signals(config, &comments, &data.calendar)?;
    let tickers = config.tickers();
    let summaries = permutation_experiment(
        &tickers,
        &config.k_values,
        &signals,
        &data.prices,
        &data.calendar,
        config.strategy.initial_total,
        config.jobs,
    )?;
    let out = config.out_dir.join("permutation.csv");
    write_file(&out, |f| report::write_permutation_csv(f, &summaries))?;
    let total: usize = summaries
        .iter()
        .filter(|s| s.strategy == svcbt_core::experiments::StrategyKind::MultiStock)
        .map(|s| s.n_subsets)
        .sum();
    println!("evaluated {total} subsets per strategy -> {}", out.display());
    Ok(())
}

/// Values files written by `backtest`, parsed back for reporting.
struct StoredRun {
    label: String,
    result: Backtest,
}

fn parse_values_csv(path: &Path) -> Result<Backtest> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty values file")?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 2 || columns[0] != "date" || columns[1] != "total_value" {
        bail!("{} is not a values file", path.display());
    }
    let weight_tickers: Vec<Ticker> = columns[2..]
        .iter()
        .map(|c| {
            c.strip_prefix("weight_")
                .with_context(|| format!("unexpected column {c}"))
                .and_then(|t| Ticker::new(t).map_err(Into::into))
        })
        .collect::<Result<_>>()?;

    let mut dates = Vec::new();
    let mut total_value = Vec::new();
    let mut weights = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            bail!("ragged row in {}", path.display());
        }
        dates.push(NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")?);
        total_value.push(fields[1].parse::<f64>()?);
        if !weight_tickers.is_empty() {
            let day: BTreeMap<Ticker, f64> = weight_tickers
                .iter()
                .zip(&fields[2..])
                .map(|(t, v)| Ok((t.clone(), v.parse::<f64>()?)))
                .collect::<Result<_>>()?;
            weights.push(day);
        }
    }
    let m = metrics(&total_value)?;
    Ok(Backtest {
        dates,
        total_value,
        weights: (!weights.is_empty()).then_some(weights),
        return_pct: m.return_pct,
        risk_pct: m.risk_pct,
        trade_log: Vec::new(),
    })
}

fn per_year_metrics(result: &Backtest) -> BTreeMap<i32, Metrics<f64>> {
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (date, &value) in result.dates.iter().zip(&result.total_value) {
        by_year.entry(date.year()).or_default().push(value);
    }
    by_year
        .into_iter()
        .filter_map(|(year, values)| metrics(&values).ok().map(|m| (year, m)))
        .collect()
}

pub fn cmd_report(config: &RunConfig) -> Result<()> {
    let mut stored: Vec<StoredRun> = Vec::new();
    let mut files: Vec<PathBuf> = fs::read_dir(&config.out_dir)
        .with_context(|| format!("reading {}", config.out_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    files.sort();
    for path in files {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(label) = name.strip_suffix("_values.csv") {
            stored.push(StoredRun {
                label: label.to_string(),
                result: parse_values_csv(&path)?,
            });
        }
    }
    if stored.is_empty() {
        bail!(
            "no *_values.csv results in {}; run `backtest` first",
            config.out_dir.display()
        );
    }

    let per_year: BTreeMap<String, BTreeMap<i32, Metrics<f64>>> = stored
        .iter()
        .map(|r| (r.label.clone(), per_year_metrics(&r.result)))
        .collect();
    let md = report::render_summary_md(&per_year);
    let md_path = config.out_dir.join("summary.md");
    write_file(&md_path, |f| f.write_all(md.as_bytes()))?;
    println!("wrote {}", md_path.display());

    // growth distribution diff: rebalancer against the all-in baseline
    let find = |label: &str| stored.iter().find(|r| r.label == label);
    if let (Some(multi), Some(bh)) = (find("multi"), find("bh100")) {
        if multi.result.dates == bh.result.dates {
            let dist =
                daily_diff_distribution(&multi.result, &bh.result, DEFAULT_DIFF_BIN_WIDTH)?;
            let dist_path = config.out_dir.join("distribution.csv");
            write_file(&dist_path, |f| report::write_distribution_csv(f, &dist))?;
            println!("wrote {}", dist_path.display());
        }
    }

    // investment-share bias check needs the rebalancer's weights and prices
    if let Some(multi) = find("multi") {
        if multi.result.weights.is_some() {
            let data = load_data(config)?;
            if data.calendar.days() == multi.result.dates {
                let share = investment_share_analysis(&multi.result, &data.prices, &data.calendar)?;
                let share_path = config.out_dir.join("investment_share.csv");
                write_file(&share_path, |f| report::write_share_csv(f, &share))?;
                println!("wrote {}", share_path.display());
            }
        }
    }
    Ok(())
}
