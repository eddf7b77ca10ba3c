//! RSI, MFI, MACD histogram and Bollinger %B on a regularized candle grid.
//!
//! All four are trailing computations: the value at bar `t` reads bars
//! `0..=t` only.

use crate::market_data::{Candle, CandleSeries};
use crate::series::Series;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Band-width floor for BB%, in price units.
pub const BB_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("invalid indicator config: {0}")]
    InvalidConfig(String),
    #[error("series of {len} bars is too short; at least {required} required")]
    TooShort { len: usize, required: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IndicatorKey {
    Rsi,
    Mfi,
    Macd,
    Bbp,
}

impl IndicatorKey {
    pub const ALL: [IndicatorKey; 4] = [Self::Rsi, Self::Mfi, Self::Macd, Self::Bbp];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Rsi => "rsi",
            Self::Mfi => "mfi",
            Self::Macd => "macd",
            Self::Bbp => "bbp",
        }
    }
}

impl fmt::Display for IndicatorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How RSI averages gains and losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RsiSmoothing {
    /// Plain trailing means over the last `n` changes.
    #[default]
    Simple,
    /// Wilder's recursive average, seeded with the simple mean.
    Wilder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub n_rsi: usize,
    pub rsi_smoothing: RsiSmoothing,
    pub n_mfi: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub n_bb: usize,
    pub k_bb: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            n_rsi: 14,
            rsi_smoothing: RsiSmoothing::Simple,
            n_mfi: 14,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            n_bb: 20,
            k_bb: 2.0,
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<(), IndicatorError> {
        let windows = [
            ("n_rsi", self.n_rsi),
            ("n_mfi", self.n_mfi),
            ("macd_fast", self.macd_fast),
            ("macd_slow", self.macd_slow),
            ("macd_signal", self.macd_signal),
            ("n_bb", self.n_bb),
        ];
        if let Some((name, _)) = windows.iter().find(|(_, w)| *w < 2) {
            return Err(IndicatorError::InvalidConfig(format!("{name} must be >= 2")));
        }
        if self.macd_fast >= self.macd_slow {
            return Err(IndicatorError::InvalidConfig(
                "macd_fast must be smaller than macd_slow".into(),
            ));
        }
        if !(self.k_bb > 0.0 && self.k_bb.is_finite()) {
            return Err(IndicatorError::InvalidConfig("k_bb must be positive".into()));
        }
        Ok(())
    }

    /// First bar at which every indicator is fully formed.
    pub fn warmup(&self) -> usize {
        [
            self.n_rsi,
            self.n_mfi,
            macd_warmup(self.macd_slow, self.macd_signal),
            self.n_bb - 1,
        ]
        .into_iter()
        .max()
        .unwrap()
    }
}

fn macd_warmup(slow: usize, signal: usize) -> usize {
    slow + signal - 2
}

/// Maps trailing gain/loss (or money-flow) totals onto `[0, 100]`.
fn oscillator(up: f64, down: f64) -> f64 {
    match (up > 0.0, down > 0.0) {
        (false, false) => 50.0,
        (true, false) => 100.0,
        (false, true) => 0.0,
        (true, true) => 100.0 * up / (up + down),
    }
}

/// Relative strength index over the trailing `n` one-bar changes.
pub fn rsi(closes: &[f64], n: usize) -> Series {
    rsi_with(closes, n, RsiSmoothing::Simple)
}

pub fn rsi_with(closes: &[f64], n: usize, smoothing: RsiSmoothing) -> Series {
    let len = closes.len();
    if n < 1 || len < n + 1 {
        return Series::invalid(len);
    }
    let gains: Vec<f64> = (1..len).map(|i| (closes[i] - closes[i - 1]).max(0.0)).collect();
    let losses: Vec<f64> = (1..len).map(|i| (closes[i - 1] - closes[i]).max(0.0)).collect();
    let mut out = vec![f64::NAN; len];
    match smoothing {
        RsiSmoothing::Simple => {
            for t in n..len {
                // changes t-n+1..=t live at gains[t-n..t]
                let g: f64 = gains[t - n..t].iter().sum::<f64>() / n as f64;
                let l: f64 = losses[t - n..t].iter().sum::<f64>() / n as f64;
                out[t] = oscillator(g, l);
            }
        }
        RsiSmoothing::Wilder => {
            let mut g = gains[..n].iter().sum::<f64>() / n as f64;
            let mut l = losses[..n].iter().sum::<f64>() / n as f64;
            out[n] = oscillator(g, l);
            for t in n + 1..len {
                g = (g * (n - 1) as f64 + gains[t - 1]) / n as f64;
                l = (l * (n - 1) as f64 + losses[t - 1]) / n as f64;
                out[t] = oscillator(g, l);
            }
        }
    }
    Series::new(out, n)
}

/// Money flow index over the trailing `n` bars. Bars whose typical price is
/// unchanged from the previous bar count toward neither flow.
pub fn mfi(candles: &[Candle], n: usize) -> Series {
    let len = candles.len();
    if n < 1 || len < n + 1 {
        return Series::invalid(len);
    }
    let tp: Vec<f64> = candles.iter().map(Candle::typical_price).collect();
    // signed flow for bars 1..len: (positive, negative)
    let flows: Vec<(f64, f64)> = (1..len)
        .map(|i| {
            let raw = tp[i] * candles[i].volume;
            if tp[i] > tp[i - 1] {
                (raw, 0.0)
            } else if tp[i] < tp[i - 1] {
                (0.0, raw)
            } else {
                (0.0, 0.0)
            }
        })
        .collect();
    let mut out = vec![f64::NAN; len];
    for t in n..len {
        let window = &flows[t - n..t];
        let pos: f64 = window.iter().map(|f| f.0).sum();
        let neg: f64 = window.iter().map(|f| f.1).sum();
        out[t] = oscillator(pos, neg);
    }
    Series::new(out, n)
}

/// Exponential moving average seeded with the first sample, `alpha = 2/(span+1)`.
pub fn ema(x: &[f64], span: usize) -> Vec<f64> {
    let alpha = 2.0 / (span as f64 + 1.0);
    let mut out = Vec::with_capacity(x.len());
    let mut state = match x.first() {
        Some(&v) => v,
        None => return out,
    };
    for &v in x {
        // incremental form keeps a constant input exactly constant
        state += alpha * (v - state);
        out.push(state);
    }
    out
}

/// MACD histogram: `(EMA_fast - EMA_slow) - signal`, in price units.
pub fn macd_hist(closes: &[f64], fast: usize, slow: usize, signal: usize) -> Series {
    let len = closes.len();
    let warmup = macd_warmup(slow.max(1), signal.max(1));
    if fast >= slow || len <= warmup {
        return Series::invalid(len);
    }
    let ema_fast = ema(closes, fast);
    let ema_slow = ema(closes, slow);
    let line: Vec<f64> = ema_fast.iter().zip(&ema_slow).map(|(f, s)| f - s).collect();
    let sig = ema(&line, signal);
    let hist = line.iter().zip(&sig).map(|(l, s)| l - s).collect();
    Series::new(hist, warmup)
}

/// Bollinger %B on `[0, 100]` with population standard deviation.
pub fn bb_percent(closes: &[f64], n: usize, k: f64) -> Series {
    let len = closes.len();
    if n < 1 || len < n {
        return Series::invalid(len);
    }
    let mut out = vec![f64::NAN; len];
    for t in n - 1..len {
        let window = &closes[t + 1 - n..=t];
        // shifted accumulation: an all-equal window yields exactly zero spread
        let anchor = window[0];
        let mean = anchor + window.iter().map(|c| c - anchor).sum::<f64>() / n as f64;
        let var = window.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
        let sigma = var.sqrt();
        out[t] = if sigma < BB_EPS {
            50.0
        } else {
            // same as 100 (c - lower) / (upper - lower) without differencing the bands
            (50.0 + 50.0 * (closes[t] - mean) / (k * sigma)).clamp(0.0, 100.0)
        };
    }
    Series::new(out, n - 1)
}

/// The four raw indicators on one candle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorPanel {
    series: [Series; 4],
    pub config: IndicatorConfig,
}

impl IndicatorPanel {
    /// Assembles a panel from externally computed series, all of one length.
    pub fn from_series(series: [Series; 4], config: IndicatorConfig) -> Self {
        let len = series[0].len();
        assert!(series.iter().all(|s| s.len() == len), "panel series lengths differ");
        Self { series, config }
    }

    pub fn get(&self, key: IndicatorKey) -> &Series {
        &self.series[key.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndicatorKey, &Series)> {
        IndicatorKey::ALL.into_iter().zip(self.series.iter())
    }

    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn valid_from(&self, key: IndicatorKey) -> usize {
        self.get(key).valid_from()
    }
}

/// Computes all four indicators. The MACD entry holds the histogram.
pub fn compute_panel(candles: &CandleSeries, cfg: &IndicatorConfig) -> Result<IndicatorPanel, IndicatorError> {
    cfg.validate()?;
    let required = cfg.warmup() + 1;
    if candles.len() < required {
        return Err(IndicatorError::TooShort {
            len: candles.len(),
            required,
        });
    }
    let closes = candles.closes();
    let (rsi_s, (mfi_s, (macd_s, bb_s))) = rayon::join(
        || rsi_with(&closes, cfg.n_rsi, cfg.rsi_smoothing),
        || {
            rayon::join(
                || mfi(&candles.candles, cfg.n_mfi),
                || {
                    rayon::join(
                        || macd_hist(&closes, cfg.macd_fast, cfg.macd_slow, cfg.macd_signal),
                        || bb_percent(&closes, cfg.n_bb, cfg.k_bb),
                    )
                },
            )
        },
    );
    Ok(IndicatorPanel {
        series: [rsi_s, mfi_s, macd_s, bb_s],
        config: cfg.clone(),
    })
}
