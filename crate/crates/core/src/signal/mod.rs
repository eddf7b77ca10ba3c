//! The composite observable `F0`, its gated derivative enhancement `F`, the
//! median-magnitude sweep used to pick threshold scales, and the
//! look-ahead trend diagnostic.

pub mod lab;

use crate::indicators::IndicatorKey;
use crate::normalization::NormalizedPanel;
use crate::series::{LookaheadSeries, Series};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("weights must be non-negative and sum to 1, got {0:?}")]
    NotConvex([f64; 4]),
    #[error("invalid signal parameter: {0}")]
    InvalidParam(String),
    #[error("no valid bars left after the signal warm-up")]
    InsufficientData,
    #[error("frame requested with weights {requested:?} from a base built with {base:?}")]
    WeightMismatch { base: [f64; 4], requested: [f64; 4] },
}

/// Convex aggregation weights over RSI, MFI, MACD and BB%, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Weights([f64; 4]);

impl Weights {
    pub fn new(w: [f64; 4]) -> Result<Self, SignalError> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(SignalError::NotConvex(w));
        }
        Ok(Self(w))
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    /// All weight on one indicator.
    pub fn one_hot(key: IndicatorKey) -> Self {
        let mut w = [0.0; 4];
        w[key.index()] = 1.0;
        Self(w)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl TryFrom<[f64; 4]> for Weights {
    type Error = SignalError;
    fn try_from(w: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(w)
    }
}

impl From<Weights> for [f64; 4] {
    fn from(w: Weights) -> Self {
        w.0
    }
}

/// Parameters shaping `F` from the normalized panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    #[serde(default)]
    pub weights: Weights,
    pub n_diff: usize,
    pub w_ma: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Derivative amplitude `A`.
    pub amp: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self {
            weights: Weights::uniform(),
            n_diff: 2,
            w_ma: 2,
            lambda1: 1.0,
            lambda2: 1.0,
            amp: 1.0,
        }
    }
}

impl SignalParams {
    pub fn validate(&self) -> Result<(), SignalError> {
        if self.n_diff < 1 {
            return Err(SignalError::InvalidParam("n_diff must be >= 1".into()));
        }
        if self.w_ma < 1 {
            return Err(SignalError::InvalidParam("w_ma must be >= 1".into()));
        }
        // lambda1 = +inf is the saturated gate (c1 = 1)
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(SignalError::InvalidParam("lambdas must be >= 0".into()));
        }
        if !(self.amp >= 0.0 && self.amp.is_finite()) {
            return Err(SignalError::InvalidParam("amp must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Bars consumed by the derivative and its smoothing after `F0` turns valid.
    pub fn warmup(&self) -> usize {
        self.n_diff + self.w_ma - 1
    }
}

/// Level gate `c1 = tanh(|lambda1 * f0|)`; an infinite `lambda1` pins it to 1.
#[inline]
pub fn level_gate(lambda1: f64, f0: f64) -> f64 {
    if lambda1.is_infinite() {
        1.0
    } else {
        (lambda1 * f0).abs().tanh()
    }
}

/// Derivative gate `c2 = A * (1 - tanh(|lambda2 * f0|))`.
#[inline]
pub fn slope_gate(lambda2: f64, amp: f64, f0: f64) -> f64 {
    amp * (1.0 - (lambda2 * f0).abs().tanh())
}

/// `c1 * f0 + c2 * d` at a single bar.
#[inline]
pub fn gated_value(lambda1: f64, lambda2: f64, amp: f64, f0: f64, d: f64) -> f64 {
    level_gate(lambda1, f0) * f0 + slope_gate(lambda2, amp, f0) * d
}

/// Convex combination of the normalized indicators, valid where all are.
pub fn composite(panel: &NormalizedPanel, weights: &Weights) -> Series {
    let len = panel.len();
    let w = weights.as_array();
    let values = (0..len)
        .map(|t| IndicatorKey::ALL.iter().map(|&k| w[k.index()] * panel.z(k).values()[t]).sum())
        .collect();
    Series::new(values, panel.valid_from())
}

/// `(x[t] - x[t - n_diff]) / n_diff`, valid `n_diff` bars after `x`.
pub fn causal_derivative(x: &Series, n_diff: usize) -> Series {
    let start = x.valid_from().saturating_add(n_diff);
    let v = x.values();
    let out = (0..x.len())
        .map(|t| {
            if t >= start {
                (v[t] - v[t - n_diff]) / n_diff as f64
            } else {
                f64::NAN
            }
        })
        .collect();
    Series::new(out, start)
}

/// Trailing mean over `x[t - w_ma + 1..=t]`.
pub fn smooth_ma(x: &Series, w_ma: usize) -> Series {
    if w_ma == 0 {
        return Series::invalid(x.len());
    }
    let start = x.valid_from().saturating_add(w_ma - 1);
    let v = x.values();
    let out = (0..x.len())
        .map(|t| {
            if t >= start {
                v[t + 1 - w_ma..=t].iter().sum::<f64>() / w_ma as f64
            } else {
                f64::NAN
            }
        })
        .collect();
    Series::new(out, start)
}

/// Gate coefficients and the resulting observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Gated {
    pub c1: Series,
    pub c2: Series,
    pub f: Series,
}

pub fn gate(f0: &Series, d_smooth: &Series, p: &SignalParams) -> Gated {
    let start = f0.valid_from().max(d_smooth.valid_from());
    let len = f0.len();
    let (mut c1, mut c2, mut f) = (vec![f64::NAN; len], vec![f64::NAN; len], vec![f64::NAN; len]);
    for t in start..len {
        let x = f0.values()[t];
        let a = level_gate(p.lambda1, x);
        let b = slope_gate(p.lambda2, p.amp, x);
        c1[t] = a;
        c2[t] = b;
        f[t] = a * x + b * d_smooth.values()[t];
    }
    Gated {
        c1: Series::new(c1, start),
        c2: Series::new(c2, start),
        f: Series::new(f, start),
    }
}

/// Every intermediate of the observable on the bar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    pub f0: Series,
    pub d_raw: Series,
    pub d_smooth: Series,
    pub c1: Series,
    pub c2: Series,
    pub f: Series,
    pub params: SignalParams,
    pub valid_from: usize,
}

/// Raw and smoothed derivative of `F0` for one `(n_diff, w_ma)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub raw: Series,
    pub smooth: Series,
}

/// `F0` for one panel plus a cache of its derivatives.
///
/// Frames that differ only in their gates share one derivative computation.
/// The cache is filled on first use and read-only afterwards.
#[derive(Debug)]
pub struct SignalBase {
    f0: Series,
    weights: Weights,
    derivatives: Mutex<HashMap<(usize, usize), Arc<Derivative>>>,
    computed: AtomicUsize,
}

impl SignalBase {
    pub fn new(panel: &NormalizedPanel, weights: Weights) -> Self {
        Self::from_f0(composite(panel, &weights), weights)
    }

    /// Wraps an already aggregated `F0`.
    pub fn from_f0(f0: Series, weights: Weights) -> Self {
        Self {
            f0,
            weights,
            derivatives: Mutex::new(HashMap::new()),
            computed: AtomicUsize::new(0),
        }
    }

    pub fn f0(&self) -> &Series {
        &self.f0
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    /// Number of derivative series computed so far (cache misses).
    pub fn derivative_computations(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn derivative(&self, n_diff: usize, w_ma: usize) -> Arc<Derivative> {
        let mut cache = self.derivatives.lock().expect("derivative cache poisoned");
        cache
            .entry((n_diff, w_ma))
            .or_insert_with(|| {
                self.computed.fetch_add(1, Ordering::Relaxed);
                let raw = causal_derivative(&self.f0, n_diff);
                let smooth = smooth_ma(&raw, w_ma);
                Arc::new(Derivative { raw, smooth })
            })
            .clone()
    }

    /// First bar at which `F` is valid for `p`.
    pub fn valid_from(&self, p: &SignalParams) -> usize {
        self.f0.valid_from() + p.warmup()
    }

    pub fn frame(&self, p: &SignalParams) -> Result<SignalFrame, SignalError> {
        p.validate()?;
        if p.weights != self.weights {
            return Err(SignalError::WeightMismatch {
                base: self.weights.as_array(),
                requested: p.weights.as_array(),
            });
        }
        let d = self.derivative(p.n_diff, p.w_ma);
        let gated = gate(&self.f0, &d.smooth, p);
        if !gated.f.has_valid() {
            return Err(SignalError::InsufficientData);
        }
        Ok(SignalFrame {
            f0: self.f0.clone(),
            d_raw: d.raw.clone(),
            d_smooth: d.smooth.clone(),
            valid_from: gated.f.valid_from(),
            c1: gated.c1,
            c2: gated.c2,
            f: gated.f,
            params: *p,
        })
    }

    /// Writes `F` over `range` into `out` without materializing a frame.
    /// Bars inside the warm-up are written as `NaN`.
    pub fn observable_into(&self, p: &SignalParams, d: &Derivative, range: std::ops::Range<usize>, out: &mut Vec<f64>) {
        out.clear();
        let start = self.valid_from(p);
        let f0 = self.f0.values();
        let ds = d.smooth.values();
        out.extend(range.map(|t| {
            if t >= start {
                gated_value(p.lambda1, p.lambda2, p.amp, f0[t], ds[t])
            } else {
                f64::NAN
            }
        }));
    }
}

/// Builds the full frame for `p` from a normalized panel.
pub fn build_frame(panel: &NormalizedPanel, p: &SignalParams) -> Result<SignalFrame, SignalError> {
    p.validate()?;
    SignalBase::new(panel, p.weights).frame(p)
}

/// Gate settings for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub amp: f64,
}

/// Candidate values per gate parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub amp: Vec<f64>,
}

impl Default for GateGrid {
    fn default() -> Self {
        Self {
            lambda1: vec![0.01, 0.5, 1.0, 1.5],
            lambda2: vec![0.01, 0.5, 1.0, 1.5],
            amp: vec![0.75, 1.0, 2.0],
        }
    }
}

/// Which gate parameter a sweep row varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateAxis {
    Lambda1,
    Lambda2,
    Amp,
    All,
}

impl GateGrid {
    /// Full cartesian product, `lambda1` outermost and `amp` innermost.
    pub fn cartesian(&self) -> Vec<GatePoint> {
        let mut out = Vec::new();
        for &lambda1 in &self.lambda1 {
            for &lambda2 in &self.lambda2 {
                for &amp in &self.amp {
                    out.push(GatePoint { lambda1, lambda2, amp });
                }
            }
        }
        out
    }

    /// Each parameter swept over its grid with the other two held at `fixed`.
    pub fn one_at_a_time(&self, fixed: GatePoint) -> Vec<(GateAxis, GatePoint)> {
        let mut out = Vec::new();
        out.extend(
            self.lambda1
                .iter()
                .map(|&lambda1| (GateAxis::Lambda1, GatePoint { lambda1, ..fixed })),
        );
        out.extend(
            self.lambda2
                .iter()
                .map(|&lambda2| (GateAxis::Lambda2, GatePoint { lambda2, ..fixed })),
        );
        out.extend(self.amp.iter().map(|&amp| (GateAxis::Amp, GatePoint { amp, ..fixed })));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: GateAxis,
    pub point: GatePoint,
    pub n_diff: usize,
    pub w_ma: usize,
    pub median_abs_f: f64,
    pub bars: usize,
}

/// Median of a slice, averaging the central pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// `median |F|` over the valid region (optionally its trailing `window` bars)
/// for every sweep point.
pub fn median_abs_sweep(
    base: &SignalBase,
    points: &[(GateAxis, GatePoint)],
    n_diff: usize,
    w_ma: usize,
    window: Option<usize>,
) -> Result<Vec<SweepRow>, SignalError> {
    let len = base.len();
    let d = base.derivative(n_diff, w_ma);
    let mut buf = Vec::new();
    points
        .iter()
        .map(|&(axis, point)| {
            let p = SignalParams {
                weights: base.weights(),
                n_diff,
                w_ma,
                lambda1: point.lambda1,
                lambda2: point.lambda2,
                amp: point.amp,
            };
            p.validate()?;
            let mut start = base.valid_from(&p);
            if let Some(w) = window {
                start = start.max(len.saturating_sub(w));
            }
            if start >= len {
                return Err(SignalError::InsufficientData);
            }
            base.observable_into(&p, &d, start..len, &mut buf);
            buf.iter_mut().for_each(|x| *x = x.abs());
            Ok(SweepRow {
                axis,
                point,
                n_diff,
                w_ma,
                median_abs_f: median(&buf).unwrap(),
                bars: len - start,
            })
        })
        .collect()
}

/// Percentage change between the mean of the next `h` prices and the mean of
/// the last `h` prices (including `t`). Reads the future; diagnostic only.
pub fn horizon_trend(prices: &[f64], h: usize) -> LookaheadSeries {
    let n = prices.len();
    let mut out = vec![f64::NAN; n];
    if h == 0 || n < 2 * h {
        return LookaheadSeries::new(out, 0..0);
    }
    let valid = h - 1..n - h;
    for t in valid.clone() {
        let past = prices[t + 1 - h..=t].iter().sum::<f64>() / h as f64;
        let fut = prices[t + 1..=t + h].iter().sum::<f64>() / h as f64;
        out[t] = (fut - past) / past;
    }
    LookaheadSeries::new(out, valid)
}
