//! Derivative-leading laboratory on the closed-form test signal
//! `f(t) = sin(a t + A0 sin(w t)) + m t - 1`.

use super::{level_gate, median, slope_gate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoParams {
    pub a: f64,
    pub a0: f64,
    pub w: f64,
    pub m: f64,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self {
            a: 0.5,
            a0: 2.0,
            w: 1.0,
            m: 0.1,
        }
    }
}

/// `n` samples starting at `t0` with spacing `dt`.
pub fn uniform_grid(t0: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t0 + dt * i as f64).collect()
}

pub fn demo_signal(p: &DemoParams, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| (p.a * t + p.a0 * (p.w * t).sin()).sin() + p.m * t - 1.0)
        .collect()
}

/// Backward difference `(f[i] - f[i-n]) / (n dt)`; the first `n` entries are `NaN`.
pub fn backward_derivative(f: &[f64], n: usize, dt: f64) -> Vec<f64> {
    (0..f.len())
        .map(|i| {
            if i >= n {
                (f[i] - f[i - n]) / (n as f64 * dt)
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Ungated enhancement `f + A f'`.
pub fn leading_composite(f: &[f64], df: &[f64], amp: f64) -> Vec<f64> {
    f.iter().zip(df).map(|(x, d)| x + amp * d).collect()
}

/// Gated enhancement `c1 f + c2 f'`. Pass `lambda1 = f64::INFINITY` for `c1 = 1`.
pub fn gated_composite(f: &[f64], df: &[f64], lambda1: f64, lambda2: f64, amp: f64) -> Vec<f64> {
    f.iter()
        .zip(df)
        .map(|(&x, &d)| level_gate(lambda1, x) * x + slope_gate(lambda2, amp, x) * d)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub index: usize,
    pub direction: Direction,
}

/// Indices `i` where `x - level` changes sign between `i - 1` and `i`.
/// Non-finite samples break the sequence and never produce a crossing.
pub fn crossings(x: &[f64], level: f64) -> Vec<Crossing> {
    x.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].is_finite() && w[1].is_finite())
        .filter_map(|(i, w)| {
            let before = w[0] - level >= 0.0;
            let after = w[1] - level >= 0.0;
            (before != after).then_some(Crossing {
                index: i + 1,
                direction: if after { Direction::Up } else { Direction::Down },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadStats {
    /// Mean of `base_index - enhanced_index` over matched crossings.
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub matched: usize,
    pub unmatched: usize,
    pub base_crossings: usize,
    pub enhanced_crossings: usize,
    pub radius: usize,
    /// Set when either series has no crossings at all.
    pub no_crossings: bool,
}

/// Matches each crossing of `enhanced` to the nearest same-direction crossing
/// of `base` within `radius` samples and reports how far ahead it occurs.
///
/// The default radius is half the median gap between consecutive base
/// crossings.
pub fn zero_crossing_lead(base: &[f64], enhanced: &[f64], level: f64, radius: Option<usize>) -> LeadStats {
    let bc = crossings(base, level);
    let ec = crossings(enhanced, level);
    let radius = radius.unwrap_or_else(|| {
        let gaps: Vec<f64> = bc.windows(2).map(|w| (w[1].index - w[0].index) as f64).collect();
        median(&gaps).map_or(base.len(), |g| (g / 2.0) as usize)
    });
    let mut leads = Vec::new();
    for e in &ec {
        let nearest = bc
            .iter()
            .filter(|b| b.direction == e.direction && b.index.abs_diff(e.index) <= radius)
            .min_by_key(|b| (b.index.abs_diff(e.index), b.index));
        if let Some(b) = nearest {
            leads.push(b.index as f64 - e.index as f64);
        }
    }
    let matched = leads.len();
    LeadStats {
        mean: (matched > 0).then(|| leads.iter().sum::<f64>() / matched as f64),
        median: median(&leads),
        matched,
        unmatched: ec.len() - matched,
        base_crossings: bc.len(),
        enhanced_crossings: ec.len(),
        radius,
        no_crossings: bc.is_empty() || ec.is_empty(),
    }
}
