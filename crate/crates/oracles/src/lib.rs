//! Definition-literal reference implementations for the fwdsig test suites.
//!
//! Nothing here depends on the `fwdsig` crate. Every routine recomputes its
//! result from the raw definition, re-sorting or re-summing the full window
//! at each index. They are slow on purpose and must never be used outside
//! tests.

pub mod pipeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Components with a registered oracle, and how closely they must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Hysteresis,
    RollingMedian,
    RollingMad,
    Normalization,
    Rsi,
    Mfi,
    MacdHist,
    BbPercent,
    MaxDrawdown,
    Objective,
    Selection,
}

impl Component {
    pub const ALL: [Component; 11] = [
        Self::Hysteresis,
        Self::RollingMedian,
        Self::RollingMad,
        Self::Normalization,
        Self::Rsi,
        Self::Mfi,
        Self::MacdHist,
        Self::BbPercent,
        Self::MaxDrawdown,
        Self::Objective,
        Self::Selection,
    ];

    /// Declared tolerance: exact for discrete outputs and sort-based
    /// statistics, `1e-12` where summation order differs.
    pub fn tolerance(self) -> Tolerance {
        match self {
            Self::Hysteresis | Self::RollingMedian | Self::RollingMad | Self::MaxDrawdown | Self::Selection => Tolerance::Exact,
            _ => Tolerance::Abs(1e-12),
        }
    }

    pub fn parse(name: &str) -> Result<Self, OracleError> {
        Self::ALL
            .into_iter()
            .find(|c| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(|s| s == name)) == Some(true))
            .ok_or_else(|| OracleError::Unregistered(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tolerance {
    Exact,
    Abs(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("no oracle registered for component {0:?}")]
    Unregistered(String),
}

/// Outcome of one comparison, serializable as a failure record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub component: Component,
    pub seed: String,
    pub compared: usize,
    pub passed: bool,
    /// `(index, production, oracle)` of the first disagreement.
    pub first_divergence: Option<(usize, f64, f64)>,
    pub max_abs_diff: f64,
}

/// Element-wise comparison. `NaN` matches `NaN`; lengths must agree.
pub fn oracle_compare(component: Component, seed: &str, production: &[f64], oracle: &[f64]) -> CompareReport {
    let tol = component.tolerance();
    let mut first = None;
    let mut max_abs: f64 = 0.0;
    let n = production.len().max(oracle.len());
    for i in 0..n {
        let (p, o) = (
            production.get(i).copied().unwrap_or(f64::INFINITY),
            oracle.get(i).copied().unwrap_or(f64::NEG_INFINITY),
        );
        let ok = if p.is_nan() || o.is_nan() {
            p.is_nan() && o.is_nan()
        } else {
            match tol {
                Tolerance::Exact => p == o,
                Tolerance::Abs(eps) => (p - o).abs() <= eps,
            }
        };
        if p.is_finite() && o.is_finite() {
            max_abs = max_abs.max((p - o).abs());
        }
        if !ok && first.is_none() {
            first = Some((i, p, o));
        }
    }
    CompareReport {
        component,
        seed: seed.to_string(),
        compared: n,
        passed: first.is_none(),
        first_divergence: first,
        max_abs_diff: max_abs,
    }
}

/// Comparison by registered name.
pub fn oracle_compare_named(name: &str, seed: &str, production: &[f64], oracle: &[f64]) -> Result<CompareReport, OracleError> {
    Ok(oracle_compare(Component::parse(name)?, seed, production, oracle))
}

/// Small deterministic generator (SplitMix64) so test cases can be rebuilt
/// from their seed text alone.
#[derive(Debug, Clone)]
pub struct CaseRng(u64);

impl CaseRng {
    pub fn from_text(text: &str) -> Self {
        // FNV-1a
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        Self(h)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Median by full sort; mean of the central pair for even counts.
pub fn sorted_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median of `x[t-w..t]` at each `t >= start + w`; `NaN` elsewhere.
pub fn rolling_median(x: &[f64], start: usize, w: usize) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            if t >= start + w {
                sorted_median(&x[t - w..t])
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Median of `|c[t-w..t]|` plus `eps` at each `t >= start + w`.
pub fn rolling_mad(c: &[f64], start: usize, w: usize, eps: f64) -> Vec<f64> {
    (0..c.len())
        .map(|t| {
            if t >= start + w {
                let abs: Vec<f64> = c[t - w..t].iter().map(|v| v.abs()).collect();
                sorted_median(&abs) + eps
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Z-scores straight from the definition: for each `t` recompute the
/// baselines `m_tau` of every `tau` in the MAD window by sorting.
pub fn normalize(x: &[f64], start: usize, w: usize, eps: f64) -> Vec<f64> {
    let m = rolling_median(x, start, w);
    (0..x.len())
        .map(|t| {
            if t < start + 2 * w {
                return f64::NAN;
            }
            let dev: Vec<f64> = (t - w..t).map(|tau| (x[tau] - m[tau]).abs()).collect();
            let s = sorted_median(&dev) + eps;
            (x[t] - m[t]) / s
        })
        .collect()
}

/// RSI as `100 (1 - 1/(1 + G/L))` from explicit gain and loss lists.
pub fn rsi(closes: &[f64], n: usize) -> Vec<f64> {
    (0..closes.len())
        .map(|t| {
            if t < n {
                return f64::NAN;
            }
            let mut gains = Vec::new();
            let mut losses = Vec::new();
            for i in t + 1 - n..=t {
                let d = closes[i] - closes[i - 1];
                if d > 0.0 {
                    gains.push(d);
                } else if d < 0.0 {
                    losses.push(-d);
                }
            }
            let g = gains.iter().sum::<f64>() / n as f64;
            let l = losses.iter().sum::<f64>() / n as f64;
            if g == 0.0 && l == 0.0 {
                50.0
            } else if l == 0.0 {
                100.0
            } else {
                100.0 * (1.0 - 1.0 / (1.0 + g / l))
            }
        })
        .collect()
}

/// MFI from explicit positive and negative money-flow sums.
/// `bars` holds `(high, low, close, volume)`.
pub fn mfi(bars: &[(f64, f64, f64, f64)], n: usize) -> Vec<f64> {
    let tp = |i: usize| (bars[i].0 + bars[i].1 + bars[i].2) / 3.0;
    (0..bars.len())
        .map(|t| {
            if t < n {
                return f64::NAN;
            }
            let mut pmf = 0.0;
            let mut nmf = 0.0;
            for i in t + 1 - n..=t {
                if tp(i) > tp(i - 1) {
                    pmf += tp(i) * bars[i].3;
                } else if tp(i) < tp(i - 1) {
                    nmf += tp(i) * bars[i].3;
                }
            }
            if pmf == 0.0 && nmf == 0.0 {
                50.0
            } else if nmf == 0.0 {
                100.0
            } else {
                100.0 * (1.0 - 1.0 / (1.0 + pmf / nmf))
            }
        })
        .collect()
}

/// Textbook EMA recursion `e_t = a x_t + (1 - a) e_{t-1}`, `e_0 = x_0`.
pub fn ema(x: &[f64], span: usize) -> Vec<f64> {
    let a = 2.0 / (span as f64 + 1.0);
    let mut out: Vec<f64> = Vec::with_capacity(x.len());
    for (i, &v) in x.iter().enumerate() {
        let e = if i == 0 { v } else { a * v + (1.0 - a) * out[i - 1] };
        out.push(e);
    }
    out
}

pub fn macd_hist(closes: &[f64], fast: usize, slow: usize, signal: usize) -> Vec<f64> {
    let f = ema(closes, fast);
    let s = ema(closes, slow);
    let line: Vec<f64> = (0..closes.len()).map(|i| f[i] - s[i]).collect();
    let sig = ema(&line, signal);
    (0..closes.len())
        .map(|i| if i >= slow + signal - 2 { line[i] - sig[i] } else { f64::NAN })
        .collect()
}

/// `%B` from the band formula with population variance.
pub fn bb_percent(closes: &[f64], n: usize, k: f64) -> Vec<f64> {
    (0..closes.len())
        .map(|t| {
            if t + 1 < n {
                return f64::NAN;
            }
            let w = &closes[t + 1 - n..=t];
            // mean taken relative to the first close; a plain sum near 1e2
            // loses more than the comparison tolerance once divided by sd
            let mu = w[0] + w.iter().map(|c| c - w[0]).sum::<f64>() / n as f64;
            let sd = (w.iter().map(|c| (c - mu) * (c - mu)).sum::<f64>() / n as f64).sqrt();
            if sd < 1e-12 {
                return 50.0;
            }
            // (c - lower) / (upper - lower) with the bands expanded around mu
            (100.0 * ((closes[t] - mu) + k * sd) / (2.0 * k * sd)).clamp(0.0, 100.0)
        })
        .collect()
}

/// Replays the band rule with an explicit if/else chain. 1 = long.
pub fn hysteresis(signal: &[f64], theta: f64, start: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(signal.len());
    let mut p = start;
    for &s in signal {
        if p == 0 && s > theta {
            p = 1;
        } else if p == 1 && s < -theta {
            p = 0;
        }
        out.push(p);
    }
    out
}

/// Max drawdown by scanning every (peak, trough) pair.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..equity.len() {
        let peak = (0..=j).map(|i| equity[i]).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.min(equity[j] / peak - 1.0);
    }
    worst
}

/// Index of the winner: highest `j`; exact ties go to the lowest turnover,
/// then the lowest index. Checked by replaying every pairwise comparison.
pub fn select(scores: &[(f64, usize)]) -> Option<usize> {
    (0..scores.len()).find(|&i| {
        (0..scores.len()).all(|k| {
            let (ji, ti) = scores[i];
            let (jk, tk) = scores[k];
            k == i || ji > jk || (ji == jk && (ti < tk || (ti == tk && i < k)))
        })
    })
}
