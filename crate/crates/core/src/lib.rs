//! Backtesting engine for a comment-driven trading signal: ingest timestamped
//! social-media comments and daily closes, build the sentiment-volume-change
//! series, measure its correlation with forward returns, and run threshold
//! and rebalancing strategies against buy-and-hold baselines.
//!
//! The numeric core is generic over the scalar type (any [`Real`], i.e. `f32`
//! or `f64`); the concrete aliases below pin the shipped pipeline to `f64`.

pub mod error;
pub mod experiments;
pub mod market_data;
pub mod num;
pub mod report;
pub mod sentiment;
pub mod signal;
pub mod special;
pub mod stats;
pub mod strategy;

pub use error::{Error, Result};
pub use num::Real;

/// Scalar type the shipped pipeline runs on.
pub type F = f64;

pub type Comment = market_data::CommentRecord<F>;
pub type Prices = market_data::PriceSeries<F>;
pub type Aggregate = signal::DailyAggregate<F>;
pub type Signal = signal::DailySignal<F>;
pub type Regression = stats::RegressionSummary<F>;
pub type Ledger = strategy::PortfolioLedger<F>;
pub type Backtest = strategy::BacktestResult<F>;
pub type StrategyConfig = strategy::SingleStockConfig<F>;
pub type Grid = experiments::ThresholdGrid<F>;
