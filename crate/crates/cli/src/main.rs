mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{override_range, parse_lag, parse_metric, RunConfig, ScoreMode, StrategyKindArg};

/// Sentiment-volume-change backtesting engine.
#[derive(Parser, Debug)]
#[command(name = "svcbt", version, about)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for grid/permutation sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Backtest range start, YYYY-MM-DD (overrides range.start).
    #[arg(long, global = true)]
    start: Option<String>,

    /// Backtest range end, YYYY-MM-DD (overrides range.end).
    #[arg(long, global = true)]
    end: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ScoreArgs {
    /// Scoring mode: precomputed | lexicon (overrides score.mode).
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args, Debug, Default)]
struct CorrelateArgs {
    /// Regression x axis: svc | delta_sentiment (overrides correlate.metric).
    #[arg(long)]
    metric: Option<String>,

    /// Forward window: next_day | day_after_next (overrides correlate.lag).
    #[arg(long)]
    lag: Option<String>,

    /// Keep only |x| >= radius (overrides correlate.exclusion_radius).
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct BacktestArgs {
    /// Strategy: bh50 | bh100 | single | multi (overrides strategy.kind).
    #[arg(long)]
    strategy: Option<String>,

    /// Restrict single-stock runs to one ticker (overrides strategy.ticker).
    #[arg(long)]
    ticker: Option<String>,

    /// Positive trigger (overrides strategy.pos_threshold).
    #[arg(long)]
    pos_threshold: Option<f64>,

    /// Negative trigger (overrides strategy.neg_threshold).
    #[arg(long)]
    neg_threshold: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate comments and prices, printing counts.
    Ingest,
    /// Emit the comment CSV with every score filled in.
    Score(ScoreArgs),
    /// Emit the per-ticker daily signal dump.
    Signal,
    /// Pool signal/return pairs and fit the regression.
    Correlate(CorrelateArgs),
    /// Run one strategy and emit values, metrics and the trade log.
    Backtest(BacktestArgs),
    /// Grid-search threshold pairs over the two tuning periods.
    Grid,
    /// Evaluate every stock subset per size k.
    Permute,
    /// Render summary.md and the distribution/share analyses from results.
    Report,
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) -> Result<()> {
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    config.jobs = cli.jobs.max(1);
    config.range = override_range(config.range, cli.start.as_deref(), cli.end.as_deref())?;

    match &cli.command {
        Command::Score(args) => {
            if let Some(mode) = &args.mode {
                config.score_mode = ScoreMode::parse(mode)?;
            }
        }
        Command::Correlate(args) => {
            if let Some(metric) = &args.metric {
                config.metric = parse_metric(metric)?;
            }
            if let Some(lag) = &args.lag {
                config.lag = Some(parse_lag(lag)?);
            }
            if let Some(radius) = args.radius {
                anyhow::ensure!(radius >= 0.0, "radius must be non-negative");
                config.exclusion_radius = radius;
            }
        }
        Command::Backtest(args) => {
            if let Some(kind) = &args.strategy {
                config.strategy_kind = StrategyKindArg::parse(kind)?;
            }
            if let Some(ticker) = &args.ticker {
                let t = svcbt_core::market_data::Ticker::new(ticker)?;
                anyhow::ensure!(
                    config.registry.contains(&t),
                    "ticker {t} is not in the registry"
                );
                config.strategy_ticker = Some(t);
            }
            if let Some(pos) = args.pos_threshold {
                config.strategy.pos_threshold = pos;
            }
            if let Some(neg) = args.neg_threshold {
                config.strategy.neg_threshold = neg;
            }
            config.strategy.validate()?;
        }
        _ => {}
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = RunConfig::load(&cli.config)?;
    apply_overrides(&mut config, cli)?;
    match &cli.command {
        Command::Ingest => commands::cmd_ingest(&config),
        Command::Score(_) => commands::cmd_score(&config),
        Command::Signal => commands::cmd_signal(&config),
        Command::Correlate(_) => commands::cmd_correlate(&config),
        Command::Backtest(_) => commands::cmd_backtest(&config),
        Command::Grid => commands::cmd_grid(&config),
        Command::Permute => commands::cmd_permute(&config),
        Command::Report => commands::cmd_report(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
