//! Non-annualized performance metrics of an equity curve and summary
//! statistics of long-position durations.

use crate::decision::{Durations, PositionPath};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minutes per year; multiply a per-bar Sharpe ratio by its square root to annualize.
pub const MINUTES_PER_YEAR: f64 = 365.0 * 24.0 * 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot summarize an empty series")]
    Empty,
    #[error("length mismatch: returns {returns}, equity {equity}, positions {positions}")]
    LengthMismatch {
        returns: usize,
        equity: usize,
        positions: usize,
    },
}

/// Largest relative decline from a running peak, as a value in `[-1, 0]`.
pub fn max_drawdown(equity: &[f64]) -> Result<f64, MetricsError> {
    let first = *equity.first().ok_or(MetricsError::Empty)?;
    Ok(drawdowns(first, equity).fold(0.0, f64::min))
}

/// `V_t / peak_t - 1` with the peak seeded at `initial` and including `V_t`.
fn drawdowns(initial: f64, equity: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let mut peak = initial;
    equity.iter().map(move |&v| {
        peak = peak.max(v);
        v / peak - 1.0
    })
}

/// Total return over the absolute max drawdown; `None` without a drawdown.
pub fn calmar(total_return: f64, max_drawdown: f64) -> Option<f64> {
    (max_drawdown < 0.0).then(|| total_return / max_drawdown.abs())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
fn pstd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub bars: usize,
    pub total_return: f64,
    pub mean_return: f64,
    /// Per-bar population standard deviation of returns.
    pub volatility: f64,
    /// Standard deviation of the strictly negative returns.
    pub downside_volatility: Option<f64>,
    pub max_drawdown: f64,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub calmar: Option<f64>,
    /// Root mean square of percentage drawdowns.
    pub ulcer_index: f64,
    /// Fraction of bars strictly below the running peak.
    pub time_under_water: f64,
    pub total_trades: usize,
    pub trades_per_1k: f64,
}

impl PerformanceReport {
    /// Sharpe ratio scaled from one-minute bars to a year.
    pub fn annualized_sharpe(&self) -> Option<f64> {
        self.sharpe.map(|s| s * MINUTES_PER_YEAR.sqrt())
    }
}

/// Summarizes a returns/equity pair produced from `path`.
///
/// Drawdown-based figures treat the starting capital `V = 1` as the initial
/// peak.
pub fn summarize(returns: &[f64], equity: &[f64], path: &PositionPath) -> Result<PerformanceReport, MetricsError> {
    summarize_with_trades(returns, equity, crate::decision::turnover(path), path.len())
}

/// Like [`summarize`] with the trade count supplied directly, e.g. for
/// concatenated walk-forward blocks.
pub fn summarize_with_trades(
    returns: &[f64],
    equity: &[f64],
    trades: usize,
    positions: usize,
) -> Result<PerformanceReport, MetricsError> {
    if returns.is_empty() {
        return Err(MetricsError::Empty);
    }
    if equity.len() != returns.len() || positions != returns.len() {
        return Err(MetricsError::LengthMismatch {
            returns: returns.len(),
            equity: equity.len(),
            positions,
        });
    }
    let bars = returns.len();
    let total_return = equity[bars - 1] - 1.0;
    let mean_return = mean(returns);
    let volatility = pstd(returns);
    let negative: Vec<f64> = returns.iter().copied().filter(|r| *r < 0.0).collect();
    let downside_volatility = (!negative.is_empty()).then(|| pstd(&negative));
    let dd: Vec<f64> = drawdowns(1.0, equity).collect();
    let max_drawdown = dd.iter().copied().fold(0.0, f64::min);
    let ulcer_index = (dd.iter().map(|d| (100.0 * d).powi(2)).sum::<f64>() / bars as f64).sqrt();
    let under = dd.iter().filter(|d| **d < 0.0).count();
    Ok(PerformanceReport {
        bars,
        total_return,
        mean_return,
        volatility,
        downside_volatility,
        max_drawdown,
        sharpe: (volatility > 0.0).then(|| mean_return / volatility),
        sortino: downside_volatility.filter(|d| *d > 0.0).map(|d| mean_return / d),
        calmar: calmar(total_return, max_drawdown),
        ulcer_index,
        time_under_water: under as f64 / bars as f64,
        total_trades: trades,
        trades_per_1k: 1000.0 * trades as f64 / bars as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PercentileMethod {
    /// Linear interpolation between closest ranks over `q (n - 1)`.
    #[default]
    Linear,
    /// Smallest value with at least `q n` observations at or below it.
    NearestRank,
}

/// `q`-quantile of ascending `sorted`.
pub fn percentile(sorted: &[f64], q: f64, method: PercentileMethod) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "percentile of empty slice");
    match method {
        PercentileMethod::Linear => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
        PercentileMethod::NearestRank => {
            let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
            sorted[rank - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationSummary {
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub p90: f64,
    pub max: usize,
    /// Timestamp of the first bar of the longest run.
    pub max_start: Option<i64>,
    /// Timestamp of the last bar of the longest run.
    pub max_end: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub count: usize,
    pub method: PercentileMethod,
    pub open_ended: bool,
    /// `None` when there are no long runs.
    pub summary: Option<DurationSummary>,
}

impl DurationStats {
    pub fn empty(method: PercentileMethod) -> Self {
        Self {
            count: 0,
            method,
            open_ended: false,
            summary: None,
        }
    }
}

/// Order statistics of run lengths. When `timestamps` covers the bar grid the
/// longest run is annotated with its calendar span.
pub fn duration_stats(durations: &Durations, timestamps: Option<&[i64]>, method: PercentileMethod) -> DurationStats {
    if durations.runs.is_empty() {
        return DurationStats::empty(method);
    }
    let mut sorted: Vec<f64> = durations.runs.iter().map(|r| r.len as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let longest = durations
        .runs
        .iter()
        .fold(durations.runs[0], |best, r| if r.len > best.len { *r } else { best });
    let span = timestamps.and_then(|ts| Some((*ts.get(longest.start)?, *ts.get(longest.start + longest.len - 1)?)));
    DurationStats {
        count: sorted.len(),
        method,
        open_ended: durations.open_ended,
        summary: Some(DurationSummary {
            mean: mean(&sorted),
            median: percentile(&sorted, 0.5, method),
            p25: percentile(&sorted, 0.25, method),
            p75: percentile(&sorted, 0.75, method),
            p90: percentile(&sorted, 0.9, method),
            max: longest.len,
            max_start: span.map(|s| s.0),
            max_end: span.map(|s| s.1),
        }),
    }
}

/// Convenience wrapper over plain run lengths.
pub fn duration_stats_of(lengths: &[usize], method: PercentileMethod) -> DurationStats {
    let mut start = 0;
    let runs = lengths
        .iter()
        .map(|&len| {
            let r = crate::decision::Run { start, len };
            start += len + 1;
            r
        })
        .collect();
    duration_stats(&Durations { runs, open_ended: false }, None, method)
}
