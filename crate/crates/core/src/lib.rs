//! Causal signal engineering and walk-forward backtesting on one-minute OHLCV data.
//!
//! The pipeline runs strictly forward in time:
//!
//! 1. [`market_data`] loads or fetches candles and fills gaps on the minute grid.
//! 2. [`indicators`] computes RSI, MFI, the MACD histogram and BB%.
//! 3. [`normalization`] maps each indicator to a robust Z-score using trailing
//!    median/MAD windows that never include the current bar.
//! 4. [`signal`] aggregates the Z-scores, adds a gated smoothed derivative, and
//!    hosts the derivative-leading laboratory on a synthetic signal.
//! 5. [`decision`] turns the observable into long/flat positions through a
//!    hysteresis band and computes delayed-execution returns.
//! 6. [`metrics`] summarizes equity curves and position durations.
//! 7. [`walkforward`] selects parameters on trailing validation blocks and
//!    concatenates the out-of-sample blocks.
//!
//! Every value at bar `t` is a function of bars `0..=t` only. The only
//! exception is [`signal::horizon_trend`], whose output type cannot be fed to
//! the decision layer.

pub mod decision;
pub mod indicators;
pub mod io;
pub mod market_data;
pub mod metrics;
pub mod normalization;
pub mod series;
pub mod signal;
pub mod synthetic;
pub mod walkforward;

pub use decision::{EquityCurve, PositionPath};
pub use indicators::{IndicatorConfig, IndicatorKey, IndicatorPanel};
pub use market_data::{Candle, CandleSeries};
pub use normalization::NormalizedPanel;
pub use series::Series;
pub use signal::{SignalFrame, SignalParams, Weights};
pub use walkforward::{ParamSet, WalkForwardResult};
