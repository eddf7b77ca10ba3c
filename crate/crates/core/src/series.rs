//! Bar-aligned series with an explicit warm-up boundary.

use serde::{Deserialize, Serialize};

/// A causal series aligned to the candle grid.
///
/// Entries before `valid_from` are `NaN` and must not be read. A `Series` is
/// causal by construction: every producer in this crate computes index `t`
/// from inputs at indices `<= t` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    valid_from: usize,
}

impl Series {
    /// Wraps `values`, masking everything before `valid_from` with `NaN`.
    pub fn new(mut values: Vec<f64>, valid_from: usize) -> Self {
        let cut = valid_from.min(values.len());
        values[..cut].iter_mut().for_each(|v| *v = f64::NAN);
        Self { values, valid_from }
    }

    /// A series with no valid entries.
    pub fn invalid(len: usize) -> Self {
        Self {
            values: vec![f64::NAN; len],
            valid_from: len,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn valid_from(&self) -> usize {
        self.valid_from
    }

    /// True when at least one entry is valid.
    pub fn has_valid(&self) -> bool {
        self.valid_from < self.values.len()
    }

    pub fn is_valid(&self, t: usize) -> bool {
        t >= self.valid_from && t < self.values.len()
    }

    /// Value at `t`, or `None` inside the warm-up region.
    pub fn get(&self, t: usize) -> Option<f64> {
        self.is_valid(t).then(|| self.values[t])
    }

    /// Raw values including the `NaN` prefix.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The valid tail, starting at `valid_from`.
    pub fn valid(&self) -> &[f64] {
        &self.values[self.valid_from.min(self.values.len())..]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Applies `f` element-wise, keeping the warm-up boundary.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Series {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(t, &v)| if t >= self.valid_from { f(v) } else { f64::NAN })
            .collect();
        Series {
            values,
            valid_from: self.valid_from,
        }
    }
}

/// A series whose entry at `t` reads bars after `t`.
///
/// Produced only by diagnostics. There is deliberately no conversion into
/// [`Series`], so it cannot drive positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookaheadSeries {
    values: Vec<f64>,
    valid: std::ops::Range<usize>,
}

impl LookaheadSeries {
    pub(crate) fn new(values: Vec<f64>, valid: std::ops::Range<usize>) -> Self {
        Self { values, valid }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices with enough past and future bars to be defined.
    pub fn valid_range(&self) -> std::ops::Range<usize> {
        self.valid.clone()
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        self.valid.contains(&t).then(|| self.values[t])
    }
}
