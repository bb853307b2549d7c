//! Declarative run configuration: a TOML file mirrored one-to-one by CLI
//! flags, validated into a ready-to-use [`RunConfig`].

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::Deserialize;

use svcbt_core::market_data::{CompanyRegistry, DateRange, Ticker};
use svcbt_core::signal::ReturnLag;
use svcbt_core::stats::CorrelationMetric;
use svcbt_core::StrategyConfig;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: RawData,
    #[serde(default)]
    registry: Vec<RawRegistryEntry>,
    range: RawRange,
    #[serde(default)]
    strategy: RawStrategy,
    #[serde(default)]
    score: RawScore,
    #[serde(default)]
    correlate: RawCorrelate,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    permute: RawPermute,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawData {
    comments_dir: PathBuf,
    prices_dir: PathBuf,
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistryEntry {
    ticker: String,
    names: Vec<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRange {
    start: String,
    end: String,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawStrategy {
    kind: Option<String>,
    ticker: Option<String>,
    initial_total: Option<f64>,
    invest_fraction: Option<f64>,
    pos_threshold: Option<f64>,
    neg_threshold: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawScore {
    mode: Option<String>,
    lexicon_neutral_floor: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCorrelate {
    metric: Option<String>,
    lag: Option<String>,
    exclusion_radius: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    pos: Option<Vec<f64>>,
    neg: Option<Vec<f64>>,
    period_a: Option<RawRange>,
    period_b: Option<RawRange>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPermute {
    k: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    Precomputed,
    Lexicon,
}

impl ScoreMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "precomputed" => Ok(ScoreMode::Precomputed),
            "lexicon" => Ok(ScoreMode::Lexicon),
            other => bail!("unknown score mode {other:?} (expected precomputed or lexicon)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKindArg {
    Bh50,
    Bh100,
    Single,
    Multi,
}

impl StrategyKindArg {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bh50" => Ok(StrategyKindArg::Bh50),
            "bh100" => Ok(StrategyKindArg::Bh100),
            "single" => Ok(StrategyKindArg::Single),
            "multi" => Ok(StrategyKindArg::Multi),
            other => bail!("unknown strategy {other:?} (expected bh50, bh100, single or multi)"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StrategyKindArg::Bh50 => "bh50",
            StrategyKindArg::Bh100 => "bh100",
            StrategyKindArg::Single => "single",
            StrategyKindArg::Multi => "multi",
        }
    }
}

pub fn parse_lag(s: &str) -> Result<ReturnLag> {
    match s {
        "next_day" => Ok(ReturnLag::NextDay),
        "day_after_next" => Ok(ReturnLag::DayAfterNext),
        other => bail!("unknown lag {other:?} (expected next_day or day_after_next)"),
    }
}

pub fn parse_metric(s: &str) -> Result<CorrelationMetric> {
    match s {
        "svc" => Ok(CorrelationMetric::Svc),
        "delta_sentiment" => Ok(CorrelationMetric::DeltaSentiment),
        other => bail!("unknown metric {other:?} (expected svc or delta_sentiment)"),
    }
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .with_context(|| format!("unparseable date {s:?} (expected YYYY-MM-DD)"))
}

fn parse_range(raw: &RawRange, what: &str) -> Result<DateRange> {
    let start = parse_date(&raw.start)?;
    let end = parse_date(&raw.end)?;
    DateRange::new(start, end).with_context(|| format!("invalid {what} range"))
}

/// Fully validated configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub comments_dir: PathBuf,
    pub prices_dir: PathBuf,
    pub lexicon_path: Option<PathBuf>,
    pub registry: CompanyRegistry,
    pub range: DateRange,
    pub strategy_kind: StrategyKindArg,
    pub strategy_ticker: Option<Ticker>,
    pub strategy: StrategyConfig,
    pub score_mode: ScoreMode,
    pub lexicon_neutral_floor: f64,
    pub metric: CorrelationMetric,
    /// Absent means "use the metric's default lag".
    pub lag: Option<ReturnLag>,
    pub exclusion_radius: f64,
    pub grid_pos: Vec<f64>,
    pub grid_neg: Vec<f64>,
    pub period_a: DateRange,
    pub period_b: DateRange,
    pub k_values: Vec<usize>,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let raw: RawConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Self::from_raw(raw, path.parent().unwrap_or(Path::new(".")))
    }

    fn from_raw(raw: RawConfig, base: &Path) -> Result<Self> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let comments_dir = resolve(&raw.data.comments_dir);
        let prices_dir = resolve(&raw.data.prices_dir);
        if !comments_dir.is_dir() {
            bail!("comments_dir {} does not exist", comments_dir.display());
        }
        if !prices_dir.is_dir() {
            bail!("prices_dir {} does not exist", prices_dir.display());
        }
        let lexicon_path = raw.data.lexicon.as_deref().map(resolve);
        if let Some(p) = &lexicon_path {
            if !p.is_file() {
                bail!("lexicon {} does not exist", p.display());
            }
        }

        let registry = if raw.registry.is_empty() {
            CompanyRegistry::default_universe()
        } else {
            let entries = raw
                .registry
                .iter()
                .map(|e| Ok((Ticker::new(&e.ticker)?, e.names.clone())))
                .collect::<Result<Vec<_>, svcbt_core::Error>>()?;
            CompanyRegistry::new(entries)?
        };

        let range = parse_range(&raw.range, "backtest")?;

        let strategy = StrategyConfig {
            initial_total: raw.strategy.initial_total.unwrap_or(100.0),
            invest_fraction: raw.strategy.invest_fraction.unwrap_or(0.5),
            pos_threshold: raw.strategy.pos_threshold.unwrap_or(10.0),
            neg_threshold: raw.strategy.neg_threshold.unwrap_or(-15.0),
        };
        strategy.validate()?;
        let strategy_kind = raw
            .strategy
            .kind
            .as_deref()
            .map(StrategyKindArg::parse)
            .transpose()?
            .unwrap_or(StrategyKindArg::Single);
        let strategy_ticker = raw
            .strategy
            .ticker
            .as_deref()
            .map(Ticker::new)
            .transpose()?;
        if let Some(t) = &strategy_ticker {
            if !registry.contains(t) {
                bail!("strategy ticker {t} is not in the registry");
            }
        }

        let score_mode = raw
            .score
            .mode
            .as_deref()
            .map(ScoreMode::parse)
            .transpose()?
            .unwrap_or(ScoreMode::Precomputed);
        let lexicon_neutral_floor = raw.score.lexicon_neutral_floor.unwrap_or(0.1);
        if !(0.0..1.0).contains(&lexicon_neutral_floor) {
            bail!("lexicon_neutral_floor must lie in [0, 1)");
        }

        let metric = raw
            .correlate
            .metric
            .as_deref()
            .map(parse_metric)
            .transpose()?
            .unwrap_or(CorrelationMetric::Svc);
        let lag = raw.correlate.lag.as_deref().map(parse_lag).transpose()?;
        let exclusion_radius = raw.correlate.exclusion_radius.unwrap_or(0.0);
        if exclusion_radius < 0.0 {
            bail!("exclusion_radius must be non-negative");
        }

        let grid_pos = raw
            .grid
            .pos
            .unwrap_or_else(|| (1..=10).map(|i| 2.5 * i as f64).collect());
        let grid_neg = raw
            .grid
            .neg
            .unwrap_or_else(|| (1..=10).map(|i| -2.5 * i as f64).collect());
        let period_a = raw
            .grid
            .period_a
            .map(|r| parse_range(&r, "tuning period a"))
            .transpose()?
            .unwrap_or_else(|| {
                DateRange::new(parse_date("2020-02-01").unwrap(), parse_date("2020-04-01").unwrap())
                    .unwrap()
            });
        let period_b = raw
            .grid
            .period_b
            .map(|r| parse_range(&r, "tuning period b"))
            .transpose()?
            .unwrap_or_else(|| {
                DateRange::new(parse_date("2020-04-01").unwrap(), parse_date("2020-07-01").unwrap())
                    .unwrap()
            });

        let k_values = raw
            .permute
            .k
            .unwrap_or_else(|| (1..=registry.len()).collect());

        let out_dir = raw
            .output
            .dir
            .map(|p| resolve(&p))
            .unwrap_or_else(|| base.join("out"));

        Ok(RunConfig {
            comments_dir,
            prices_dir,
            lexicon_path,
            registry,
            range,
            strategy_kind,
            strategy_ticker,
            strategy,
            score_mode,
            lexicon_neutral_floor,
            metric,
            lag,
            exclusion_radius,
            grid_pos,
            grid_neg,
            period_a,
            period_b,
            k_values,
            out_dir,
            jobs: 1,
        })
    }

    /// Tickers the run operates on: the whole registry, sorted.
    pub fn tickers(&self) -> Vec<Ticker> {
        let mut ts: Vec<Ticker> = self.registry.tickers().cloned().collect();
        ts.sort();
        ts
    }

    pub fn effective_lag(&self) -> ReturnLag {
        self.lag.unwrap_or_else(|| self.metric.default_lag())
    }
}

/// Applies a date override of the form `--start`/`--end` onto a range.
pub fn override_range(
    range: DateRange,
    start: Option<&str>,
    end: Option<&str>,
) -> Result<DateRange> {
    let start_date = start.map(parse_date).transpose()?.unwrap_or(range.start);
    let end_date = end.map(parse_date).transpose()?.unwrap_or(range.end);
    Ok(DateRange::new(start_date, end_date)?)
}
