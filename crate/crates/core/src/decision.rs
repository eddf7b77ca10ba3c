//! Long/flat positions from a hysteresis band around zero, with one-bar
//! delayed execution, compounding and turnover accounting.

use crate::series::Series;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DecisionError {
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("return {value} at index {index} wipes out the equity")]
    Wipeout { index: usize, value: f64 },
    #[error("transaction cost model {0:?} is not implemented; only zero costs are supported")]
    CostsUnimplemented(CostModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Position {
    #[default]
    Flat,
    Long,
}

impl Position {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_long(self) -> bool {
        self == Position::Long
    }
}

impl From<Position> for u8 {
    fn from(p: Position) -> u8 {
        p.as_u8()
    }
}

impl TryFrom<u8> for Position {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Position::Flat),
            1 => Ok(Position::Long),
            other => Err(format!("position must be 0 or 1, got {other}")),
        }
    }
}

/// One step of the band rule: enter above `+theta`, leave below `-theta`,
/// hold otherwise (including exact equality and `NaN`).
#[inline]
pub fn next_position(state: Position, signal: f64, theta: f64) -> Position {
    match state {
        Position::Flat if signal > theta => Position::Long,
        Position::Long if signal < -theta => Position::Flat,
        _ => state,
    }
}

pub fn check_threshold(theta: f64) -> Result<(), DecisionError> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(DecisionError::InvalidThreshold(theta))
    }
}

/// Runs the band rule over `signal` starting from `start`.
pub fn run_hysteresis(signal: &[f64], theta: f64, start: Position) -> Vec<Position> {
    let mut state = start;
    signal
        .iter()
        .map(|&s| {
            state = next_position(state, s, theta);
            state
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionPath {
    pub positions: Vec<Position>,
    pub theta: f64,
    pub start_state: Position,
    pub valid_from: usize,
}

impl PositionPath {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn long_bars(&self) -> usize {
        self.positions.iter().filter(|p| p.is_long()).count()
    }
}

/// Positions driven by a causal signal. Bars in the signal's warm-up keep
/// `start`.
///
/// Only [`Series`] is accepted; look-ahead diagnostics have a different type.
pub fn hysteresis_positions(signal: &Series, theta: f64, start: Position) -> Result<PositionPath, DecisionError> {
    check_threshold(theta)?;
    let vf = signal.valid_from().min(signal.len());
    let mut positions = vec![start; vf];
    positions.extend(run_hysteresis(&signal.values()[vf..], theta, start));
    Ok(PositionPath {
        positions,
        theta,
        start_state: start,
        valid_from: signal.valid_from(),
    })
}

/// Simple returns `(P_t - P_{t-1}) / P_{t-1}`, with `0` at the first bar.
pub fn simple_returns(prices: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(prices.len());
    if !prices.is_empty() {
        out.push(0.0);
    }
    out.extend(prices.windows(2).map(|w| (w[1] - w[0]) / w[0]));
    out
}

/// Returns earned by a block of positions: bar `i` earns `r_i` only if the
/// position decided at the previous bar was long. `prev` is the state held
/// before the block.
pub fn delayed_returns(prev: Position, positions: &[Position], returns: &[f64]) -> Vec<f64> {
    debug_assert_eq!(positions.len(), returns.len());
    let mut held = prev;
    positions
        .iter()
        .zip(returns)
        .map(|(&p, &r)| {
            let earned = if held.is_long() { r } else { 0.0 };
            held = p;
            earned
        })
        .collect()
}

/// `R_t = p_{t-1} r_t` over the whole path; the first bar earns nothing.
pub fn strategy_returns(path: &PositionPath, prices: &[f64]) -> Result<Vec<f64>, DecisionError> {
    if prices.len() != path.len() {
        return Err(DecisionError::LengthMismatch {
            what: "prices",
            got: prices.len(),
            expected: path.len(),
        });
    }
    let r = simple_returns(prices);
    Ok(delayed_returns(Position::Flat, &path.positions, &r))
}

/// Compounded equity `V_t = prod_{tau <= t} (1 + R_tau)` from `V = 1`.
pub fn equity_curve(returns: &[f64]) -> Result<Vec<f64>, DecisionError> {
    compound_from(1.0, returns)
}

/// Compounds `returns` onto an initial equity level.
pub fn compound_from(initial: f64, returns: &[f64]) -> Result<Vec<f64>, DecisionError> {
    let mut v = initial;
    returns
        .iter()
        .enumerate()
        .map(|(index, &r)| {
            if !(r > -1.0) {
                return Err(DecisionError::Wipeout { index, value: r });
            }
            v *= 1.0 + r;
            Ok(v)
        })
        .collect()
}

/// Number of state changes, the first measured against the start state.
pub fn turnover(path: &PositionPath) -> usize {
    transitions(path.start_state, &path.positions)
}

pub fn transitions(start: Position, positions: &[Position]) -> usize {
    let mut prev = start;
    positions
        .iter()
        .filter(|&&p| {
            let changed = p != prev;
            prev = p;
            changed
        })
        .count()
}

/// A maximal run of long bars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Durations {
    pub runs: Vec<Run>,
    /// The last run was still open at the end of the path.
    pub open_ended: bool,
}

impl Durations {
    pub fn lengths(&self) -> Vec<usize> {
        self.runs.iter().map(|r| r.len).collect()
    }

    pub fn total(&self) -> usize {
        self.runs.iter().map(|r| r.len).sum()
    }
}

pub fn position_durations(path: &PositionPath) -> Durations {
    run_lengths(&path.positions)
}

pub fn run_lengths(positions: &[Position]) -> Durations {
    let mut runs = Vec::new();
    let mut current: Option<usize> = None;
    for (t, p) in positions.iter().enumerate() {
        match (p.is_long(), current) {
            (true, None) => current = Some(t),
            (false, Some(s)) => {
                runs.push(Run { start: s, len: t - s });
                current = None;
            }
            _ => {}
        }
    }
    let open_ended = current.is_some();
    if let Some(s) = current {
        runs.push(Run {
            start: s,
            len: positions.len() - s,
        });
    }
    Durations { runs, open_ended }
}

/// Transaction cost treatment. Only `Zero` is supported.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostModel {
    #[default]
    Zero,
    Proportional {
        rate: f64,
    },
}

pub fn apply_costs(returns: Vec<f64>, model: CostModel) -> Result<Vec<f64>, DecisionError> {
    match model {
        CostModel::Zero => Ok(returns),
        other => Err(DecisionError::CostsUnimplemented(other)),
    }
}

/// Returns, equity and trading activity of one position path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    pub returns: Vec<f64>,
    pub equity: Vec<f64>,
    pub turnover: usize,
    pub durations: Durations,
}

impl EquityCurve {
    pub fn from_path(path: &PositionPath, prices: &[f64]) -> Result<Self, DecisionError> {
        let returns = strategy_returns(path, prices)?;
        let equity = equity_curve(&returns)?;
        Ok(Self {
            returns,
            equity,
            turnover: turnover(path),
            durations: position_durations(path),
        })
    }
}
