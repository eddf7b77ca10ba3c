//! Robust causal normalization: each indicator is centered by its trailing
//! median and scaled by the trailing median absolute deviation of the
//! centered series. Windows end at `t - 1`, never at `t`.

use crate::indicators::{IndicatorKey, IndicatorPanel};
use crate::series::Series;
use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use thiserror::Error;

pub const DEFAULT_W_NORM: usize = 5000;
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum NormalizationError {
    #[error("normalization window must be >= 2, got {0}")]
    InvalidWindow(usize),
    #[error("scale floor must be finite and non-negative, got {0}")]
    InvalidEps(f64),
}

type Key = (OrderedFloat<f64>, u64);

/// Median of a sliding window in `O(log w)` per update.
///
/// The window is split into a lower and an upper ordered set whose sizes
/// differ by at most one; every key in `lower` sorts before every key in
/// `upper`. Keys carry an insertion sequence number so duplicates stay
/// distinct and removal is exact.
#[derive(Debug, Default, Clone)]
pub struct SlidingMedian {
    lower: BTreeSet<Key>,
    upper: BTreeSet<Key>,
    window: VecDeque<Key>,
    seq: u64,
}

impl SlidingMedian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Appends `x` at the newest end of the window.
    pub fn push(&mut self, x: f64) {
        let key = (OrderedFloat(x), self.seq);
        self.seq += 1;
        match self.lower.last() {
            Some(top) if key > *top => self.upper.insert(key),
            _ => self.lower.insert(key),
        };
        self.window.push_back(key);
        self.rebalance();
    }

    /// Drops the oldest value.
    pub fn pop_oldest(&mut self) -> Option<f64> {
        let key = self.window.pop_front()?;
        if !self.lower.remove(&key) {
            self.upper.remove(&key);
        }
        self.rebalance();
        Some(key.0 .0)
    }

    fn rebalance(&mut self) {
        while self.lower.len() > self.upper.len() + 1 {
            let k = self.lower.pop_last().unwrap();
            self.upper.insert(k);
        }
        while self.upper.len() > self.lower.len() {
            let k = self.upper.pop_first().unwrap();
            self.lower.insert(k);
        }
    }

    /// Median of the current window; the mean of the two central order
    /// statistics when the count is even.
    pub fn median(&self) -> Option<f64> {
        let lo = self.lower.last()?.0 .0;
        if self.lower.len() > self.upper.len() {
            Some(lo)
        } else {
            let hi = self.upper.first()?.0 .0;
            Some((lo + hi) / 2.0)
        }
    }
}

/// Trailing median over `x[t-w..t]`, excluding `x[t]`.
///
/// Valid from `x.valid_from() + w`.
pub fn rolling_median_causal(x: &Series, w: usize) -> Series {
    rolling_stat(x, w, |v| v, 0.0)
}

/// Trailing median of `|centered|` over `centered[t-w..t]`, plus `eps`.
pub fn rolling_mad_causal(centered: &Series, w: usize, eps: f64) -> Series {
    rolling_stat(centered, w, f64::abs, eps)
}

fn rolling_stat(x: &Series, w: usize, transform: impl Fn(f64) -> f64, offset: f64) -> Series {
    let len = x.len();
    let start = x.valid_from();
    let valid_from = start.saturating_add(w);
    if w == 0 || valid_from >= len {
        return Series::invalid(len);
    }
    let values = x.values();
    let mut out = vec![f64::NAN; len];
    let mut win = SlidingMedian::new();
    for &v in &values[start..start + w] {
        win.push(transform(v));
    }
    for t in valid_from..len {
        out[t] = win.median().unwrap() + offset;
        win.pop_oldest();
        win.push(transform(values[t]));
    }
    Series::new(out, valid_from)
}

/// Normalized view of one indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSeries {
    /// `Z_t = (I_t - m_t) / s_t`.
    pub z: Series,
    /// Trailing median `m_t`.
    pub baseline: Series,
    /// Centered series `I_t - m_t`.
    pub centered: Series,
    /// Trailing MAD of the centered series plus the floor, `s_t`.
    pub scale: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPanel {
    keys: [NormalizedSeries; 4],
    pub w_norm: usize,
    pub eps: f64,
}

impl NormalizedPanel {
    pub fn get(&self, key: IndicatorKey) -> &NormalizedSeries {
        &self.keys[key.index()]
    }

    pub fn z(&self, key: IndicatorKey) -> &Series {
        &self.keys[key.index()].z
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndicatorKey, &NormalizedSeries)> {
        IndicatorKey::ALL.into_iter().zip(self.keys.iter())
    }

    pub fn len(&self) -> usize {
        self.keys[0].z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First index at which all four Z-series are valid.
    pub fn valid_from(&self) -> usize {
        self.keys.iter().map(|k| k.z.valid_from()).max().unwrap()
    }

    /// Builds a panel straight from Z-series, e.g. for synthetic studies.
    /// Baselines are zero and scales one over each series' valid region.
    pub fn from_z(z: [Series; 4]) -> Self {
        let keys = z.map(|z| NormalizedSeries {
            baseline: z.map(|_| 0.0),
            scale: z.map(|_| 1.0),
            centered: z.clone(),
            z,
        });
        Self {
            keys,
            w_norm: 0,
            eps: 0.0,
        }
    }
}

/// Normalizes a single indicator series.
pub fn normalize_series(x: &Series, w_norm: usize, eps: f64) -> NormalizedSeries {
    let baseline = rolling_median_causal(x, w_norm);
    let centered_vals: Vec<f64> = x.values().iter().zip(baseline.values()).map(|(i, m)| i - m).collect();
    let centered = Series::new(centered_vals, baseline.valid_from());
    let scale = rolling_mad_causal(&centered, w_norm, eps);
    let z_vals: Vec<f64> = centered.values().iter().zip(scale.values()).map(|(c, s)| c / s).collect();
    let z = Series::new(z_vals, scale.valid_from());
    NormalizedSeries {
        z,
        baseline,
        centered,
        scale,
    }
}

/// Normalizes every indicator of `panel`.
///
/// Z is valid from the indicator's own warm-up plus `2 * w_norm`; a panel too
/// short for that simply has an empty valid region.
pub fn normalize(panel: &IndicatorPanel, w_norm: usize, eps: f64) -> Result<NormalizedPanel, NormalizationError> {
    if w_norm < 2 {
        return Err(NormalizationError::InvalidWindow(w_norm));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(NormalizationError::InvalidEps(eps));
    }
    let keys: Vec<NormalizedSeries> = IndicatorKey::ALL
        .par_iter()
        .map(|&k| normalize_series(panel.get(k), w_norm, eps))
        .collect();
    let keys: [NormalizedSeries; 4] = keys.try_into().expect("four keys");
    Ok(NormalizedPanel { keys, w_norm, eps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        if n % 2 == 1 {
            s[n / 2]
        } else {
            (s[n / 2 - 1] + s[n / 2]) / 2.0
        }
    }

    #[test]
    fn two_element_median_excludes_current() {
        let m = rolling_median_causal(&Series::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], 0), 2);
        assert_eq!(m.valid_from(), 2);
        assert_eq!(m.get(2), Some(1.5));
        assert_eq!(m.get(4), Some(3.5));
    }

    #[test]
    fn sliding_median_with_duplicates() {
        let xs = [3.0, 1.0, 3.0, 3.0, 2.0, 3.0, 1.0, 1.0, 5.0, 3.0, 0.0, -0.0, 3.0];
        let mut m = SlidingMedian::new();
        for w in 1..5 {
            for (t, &x) in xs.iter().enumerate() {
                m.push(x);
                if m.len() > w {
                    m.pop_oldest();
                }
                let lo = (t + 1).saturating_sub(w);
                assert_eq!(m.median().unwrap(), sorted_median(&xs[lo..=t]), "w={w} t={t}");
            }
            while m.pop_oldest().is_some() {}
            assert!(m.median().is_none());
        }
    }

    #[test]
    fn mad_floor_and_constant_magnitudes() {
        let zero = Series::new(vec![0.0; 10], 0);
        assert!(rolling_mad_causal(&zero, 4, 1e-9).valid().iter().all(|&v| v == 1e-9));
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = rolling_mad_causal(&Series::new(alt, 0), 4, 1e-9);
        assert!(s.valid().iter().all(|&v| v == 1.0 + 1e-9));
    }

    #[test]
    fn warmup_accounting() {
        let x = Series::new((0..100).map(|i| (i as f64).sin()).collect(), 7);
        let n = normalize_series(&x, 10, DEFAULT_EPS);
        assert_eq!(n.baseline.valid_from(), 17);
        assert_eq!(n.scale.valid_from(), 27);
        assert_eq!(n.z.valid_from(), 27);
        let short = Series::new(vec![1.0; 20], 5);
        assert!(!normalize_series(&short, 10, DEFAULT_EPS).z.has_valid());
    }

    #[test]
    fn constant_input_gives_zero_scores() {
        let x = Series::new(vec![50.0; 60], 0);
        let n = normalize_series(&x, 8, DEFAULT_EPS);
        assert!(n.z.valid().iter().all(|&z| z == 0.0));
        assert!(n.scale.valid().iter().all(|&s| s == DEFAULT_EPS));
    }

    #[test]
    fn rejects_bad_parameters() {
        let panel = IndicatorPanel::from_series(std::array::from_fn(|_| Series::new(vec![1.0; 10], 0)), Default::default());
        assert_eq!(normalize(&panel, 1, 1e-9), Err(NormalizationError::InvalidWindow(1)));
        assert_eq!(normalize(&panel, 2, -1.0), Err(NormalizationError::InvalidEps(-1.0)));
    }
}
