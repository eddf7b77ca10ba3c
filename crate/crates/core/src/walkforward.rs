//! Walk-forward parameter selection.
//!
//! At each boundary `t` every grid candidate is scored on its own validation
//! block `[t - w_val, t)`, the best candidate by `J = PnL / sqrt(T)` is kept
//! (lowest turnover breaks ties), and it trades the out-of-sample block
//! `[t, t + w_exec)`. The boundary then advances by `w_exec`.
//!
//! Scoring reads only bars before `t`. Out-of-sample positions carry over
//! from one block to the next; validation blocks always start flat.

use crate::decision::{
    check_threshold, compound_from, delayed_returns, next_position, simple_returns, transitions, DecisionError, Position,
};
use crate::indicators::{compute_panel, IndicatorConfig, IndicatorError};
use crate::market_data::CandleSeries;
use crate::normalization::{normalize, NormalizationError, DEFAULT_EPS, DEFAULT_W_NORM};
use crate::signal::{gated_value, Derivative, SignalBase, SignalError, SignalParams, Weights};
use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WalkForwardError {
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Normalization(#[from] NormalizationError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("first boundary {t0} is before the earliest feasible boundary {required}")]
    BoundaryTooEarly { t0: usize, required: usize },
    #[error("{len} bars cannot hold a single out-of-sample block after boundary {t0}")]
    TooShort { len: usize, t0: usize },
    #[error("no feasible candidate at boundary {boundary} and no earlier selection to fall back on")]
    NoFeasibleCandidate { boundary: usize },
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("objective needs a non-empty evaluation window")]
    EmptyWindow,
    #[error("worker pool: {0}")]
    Pool(String),
}

/// `round(w_fit / rho)`.
pub fn validation_window(w_fit: usize, rho: f64) -> usize {
    (w_fit as f64 / rho).round() as usize
}

/// One candidate configuration: signal shape plus window lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub sig: SignalParams,
    pub w_fit: usize,
    pub rho: f64,
    pub w_val: usize,
    pub w_exec: usize,
}

impl ParamSet {
    pub fn new(sig: SignalParams, w_fit: usize, rho: f64) -> Result<Self, WalkForwardError> {
        if !(rho > 0.0 && rho.is_finite()) || w_fit == 0 {
            return Err(WalkForwardError::InvalidGrid(format!("w_fit = {w_fit}, rho = {rho}")));
        }
        let w_val = validation_window(w_fit, rho);
        if w_val == 0 {
            return Err(WalkForwardError::InvalidGrid(format!(
                "w_fit = {w_fit}, rho = {rho} gives an empty validation block"
            )));
        }
        Ok(Self {
            sig,
            w_fit,
            rho,
            w_val,
            w_exec: w_val,
        })
    }
}

/// Candidate values for every searched parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub n_diff: Vec<usize>,
    pub w_ma: Vec<usize>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub amp: Vec<f64>,
    pub w_fit: Vec<usize>,
    pub rho: Vec<f64>,
}

impl Default for Grid {
    /// The published grid: 48 signal configurations times 20 window pairs.
    fn default() -> Self {
        Self {
            n_diff: vec![2],
            w_ma: vec![2],
            lambda1: vec![0.01, 0.5, 1.0, 1.5],
            lambda2: vec![0.01, 0.5, 1.0, 1.5],
            amp: vec![0.75, 1.0, 2.0],
            w_fit: vec![720, 1440, 2880, 7200, 12000],
            rho: vec![2.0, 3.0, 5.0, 6.0],
        }
    }
}

impl Grid {
    /// Every candidate in enumeration order: `n_diff`, `w_ma`, `lambda1`,
    /// `lambda2`, `amp`, `w_fit`, `rho`, the last varying fastest. This order
    /// breaks any tie left after the turnover rule.
    pub fn candidates(&self, weights: Weights) -> Result<Vec<ParamSet>, WalkForwardError> {
        let dims = [
            ("n_diff", self.n_diff.len()),
            ("w_ma", self.w_ma.len()),
            ("lambda1", self.lambda1.len()),
            ("lambda2", self.lambda2.len()),
            ("amp", self.amp.len()),
            ("w_fit", self.w_fit.len()),
            ("rho", self.rho.len()),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, n)| *n == 0) {
            return Err(WalkForwardError::InvalidGrid(format!("{name} grid is empty")));
        }
        let mut out = Vec::with_capacity(dims.iter().map(|d| d.1).product());
        for &n_diff in &self.n_diff {
            for &w_ma in &self.w_ma {
                for &lambda1 in &self.lambda1 {
                    for &lambda2 in &self.lambda2 {
                        for &amp in &self.amp {
                            let sig = SignalParams {
                                weights,
                                n_diff,
                                w_ma,
                                lambda1,
                                lambda2,
                                amp,
                            };
                            sig.validate()?;
                            for &w_fit in &self.w_fit {
                                for &rho in &self.rho {
                                    out.push(ParamSet::new(sig, w_fit, rho)?);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn max_w_fit(&self) -> usize {
        self.w_fit.iter().copied().max().unwrap_or(0)
    }
}

/// Terminal PnL of a return window and its `sqrt(T)`-scaled objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub pnl: f64,
    pub j: f64,
    pub t_eval: usize,
}

pub fn objective(returns: &[f64]) -> Result<Objective, WalkForwardError> {
    if returns.is_empty() {
        return Err(WalkForwardError::EmptyWindow);
    }
    let growth = returns.iter().fold(1.0, |v, r| v * (1.0 + r));
    Ok(objective_from_pnl(growth - 1.0, returns.len()))
}

fn objective_from_pnl(pnl: f64, t_eval: usize) -> Objective {
    Objective {
        pnl,
        j: pnl / (t_eval as f64).sqrt(),
        t_eval,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub params: ParamSet,
    /// Position of the candidate in grid enumeration order.
    pub index: usize,
    pub j_val: f64,
    pub pnl_val: f64,
    pub turnover_val: usize,
    pub t_eval: usize,
}

/// Why a candidate could not be scored at a boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub index: usize,
    pub boundary: usize,
    pub required: usize,
}

/// Everything strictly before a boundary `t`.
///
/// Built from full-length precomputed series; because every producer is
/// causal, the truncated views equal what a computation on bars `0..t` alone
/// would produce.
pub struct History<'a> {
    base: &'a SignalBase,
    returns: &'a [f64],
    end: usize,
}

impl<'a> History<'a> {
    /// `returns[i]` is the simple return of bar `i`.
    pub fn new(base: &'a SignalBase, returns: &'a [f64], end: usize) -> Self {
        assert!(end <= returns.len() && end <= base.len());
        Self {
            base,
            returns: &returns[..end],
            end,
        }
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn f0(&self) -> &[f64] {
        &self.base.f0().values()[..self.end]
    }

    fn derivative(&self, p: &SignalParams) -> Arc<Derivative> {
        self.base.derivative(p.n_diff, p.w_ma)
    }
}

/// Scores one candidate on `[t - w_val, t)`, entering the block flat.
pub fn evaluate_candidate(history: &History<'_>, index: usize, params: &ParamSet, theta: f64) -> Result<CandidateScore, Skipped> {
    let d = history.derivative(&params.sig);
    score_block(history, &d.smooth.values()[..history.end], index, params, theta)
}

fn score_block(
    history: &History<'_>,
    d_smooth: &[f64],
    index: usize,
    params: &ParamSet,
    theta: f64,
) -> Result<CandidateScore, Skipped> {
    let t = history.end;
    let required = history.base.valid_from(&params.sig) + params.w_fit + params.w_val;
    if t < required {
        return Err(Skipped {
            index,
            boundary: t,
            required,
        });
    }
    let f0 = history.f0();
    let sig = &params.sig;
    let mut state = Position::Flat;
    let mut growth = 1.0;
    let mut turnover = 0;
    for tau in t - params.w_val..t {
        if state.is_long() {
            growth *= 1.0 + history.returns[tau];
        }
        let s = gated_value(sig.lambda1, sig.lambda2, sig.amp, f0[tau], d_smooth[tau]);
        let next = next_position(state, s, theta);
        turnover += usize::from(next != state);
        state = next;
    }
    let obj = objective_from_pnl(growth - 1.0, params.w_val);
    Ok(CandidateScore {
        params: *params,
        index,
        j_val: obj.j,
        pnl_val: obj.pnl,
        turnover_val: turnover,
        t_eval: obj.t_eval,
    })
}

/// Highest `J`; candidates within `tie_eps * |J_max|` of it are tied and the
/// lowest turnover, then the earliest grid index, wins.
pub fn select(scores: &[CandidateScore], tie_eps: f64) -> Option<&CandidateScore> {
    let best = scores.iter().map(|s| s.j_val).fold(f64::NEG_INFINITY, f64::max);
    let cutoff = best - tie_eps * best.abs();
    scores
        .iter()
        .filter(|s| s.j_val >= cutoff)
        .min_by_key(|s| (s.turnover_val, s.index))
}

/// One walk-forward step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub boundary_t: usize,
    pub boundary_ts: Option<i64>,
    pub selected: ParamSet,
    pub selected_index: usize,
    /// `None` when no candidate was feasible and the previous selection was reused.
    pub score: Option<CandidateScore>,
    pub candidates: usize,
    pub skipped: usize,
    pub oos_start: usize,
    pub oos_end: usize,
    pub oos_pnl: f64,
    pub oos_turnover: usize,
    pub carry_in: Position,
    pub carry_out: Position,
    pub oos_returns: Vec<f64>,
    pub oos_positions: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub value: f64,
    pub count: usize,
}

/// How often each grid value was selected, per parameter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionFrequencies {
    pub w_fit: Vec<Bin>,
    pub rho: Vec<Bin>,
    pub w_exec: Vec<Bin>,
    pub lambda1: Vec<Bin>,
    pub lambda2: Vec<Bin>,
    pub amp: Vec<Bin>,
}

impl SelectionFrequencies {
    pub fn dimensions(&self) -> [(&'static str, &[Bin]); 6] {
        [
            ("w_fit", &self.w_fit),
            ("rho", &self.rho),
            ("w_exec", &self.w_exec),
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("amp", &self.amp),
        ]
    }
}

pub fn selection_frequencies(epochs: &[EpochRecord]) -> SelectionFrequencies {
    let tally = |f: &dyn Fn(&ParamSet) -> f64| -> Vec<Bin> {
        let mut m: BTreeMap<OrderedFloat<f64>, usize> = BTreeMap::new();
        for e in epochs {
            *m.entry(OrderedFloat(f(&e.selected))).or_default() += 1;
        }
        m.into_iter().map(|(value, count)| Bin { value: value.0, count }).collect()
    };
    SelectionFrequencies {
        w_fit: tally(&|p| p.w_fit as f64),
        rho: tally(&|p| p.rho),
        w_exec: tally(&|p| p.w_exec as f64),
        lambda1: tally(&|p| p.sig.lambda1),
        lambda2: tally(&|p| p.sig.lambda2),
        amp: tally(&|p| p.sig.amp),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardResult {
    pub theta: f64,
    pub t0: usize,
    pub epochs: Vec<EpochRecord>,
    pub global_returns: Vec<f64>,
    pub global_positions: Vec<Position>,
    pub global_equity: Vec<f64>,
    pub selection_frequencies: SelectionFrequencies,
}

impl WalkForwardResult {
    /// Bars covered by the concatenated out-of-sample blocks.
    pub fn oos_range(&self) -> std::ops::Range<usize> {
        self.t0..self.t0 + self.global_returns.len()
    }

    /// Total position changes across all blocks.
    pub fn turnover(&self) -> usize {
        transitions(Position::Flat, &self.global_positions)
    }

    /// Running count of position changes, one entry per out-of-sample bar.
    pub fn cumulative_trades(&self) -> Vec<usize> {
        let mut prev = Position::Flat;
        let mut n = 0;
        self.global_positions
            .iter()
            .map(|&p| {
                n += usize::from(p != prev);
                prev = p;
                n
            })
            .collect()
    }
}

/// Run-level settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkForwardConfig {
    pub indicators: IndicatorConfig,
    pub w_norm: usize,
    pub eps: f64,
    pub weights: Weights,
    pub grid: Grid,
    pub theta: f64,
    /// First boundary; the earliest feasible one when absent.
    pub t0: Option<usize>,
    /// Relative tolerance for treating objective values as tied.
    pub tie_eps: f64,
    /// Worker threads for candidate scoring; 0 uses all cores.
    pub workers: usize,
}

impl Default for WalkForwardConfig {
    fn default() -> Self {
        Self {
            indicators: IndicatorConfig::default(),
            w_norm: DEFAULT_W_NORM,
            eps: DEFAULT_EPS,
            weights: Weights::uniform(),
            grid: Grid::default(),
            theta: 1.0,
            t0: None,
            tie_eps: 0.0,
            workers: 0,
        }
    }
}

/// Precomputed causal inputs for repeated walk-forward runs.
pub struct Engine {
    base: SignalBase,
    returns: Vec<f64>,
    timestamps: Vec<i64>,
}

impl Engine {
    /// Runs indicators, normalization and aggregation over `data`.
    pub fn prepare(data: &CandleSeries, cfg: &WalkForwardConfig) -> Result<Self, WalkForwardError> {
        let panel = compute_panel(data, &cfg.indicators)?;
        let norm = normalize(&panel, cfg.w_norm, cfg.eps)?;
        let base = SignalBase::new(&norm, cfg.weights);
        Ok(Self::from_parts(base, &data.closes(), data.timestamps()))
    }

    pub fn from_parts(base: SignalBase, closes: &[f64], timestamps: Vec<i64>) -> Self {
        assert_eq!(base.len(), closes.len());
        Self {
            base,
            returns: simple_returns(closes),
            timestamps,
        }
    }

    pub fn base(&self) -> &SignalBase {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn history(&self, t: usize) -> History<'_> {
        History::new(&self.base, &self.returns, t)
    }

    /// Earliest boundary at which every candidate is feasible.
    pub fn earliest_boundary(&self, candidates: &[ParamSet]) -> usize {
        candidates
            .iter()
            .map(|c| self.base.valid_from(&c.sig) + c.w_fit)
            .max()
            .unwrap_or(0)
            + candidates.iter().map(|c| c.w_val).max().unwrap_or(0)
    }

    /// Scores every candidate at boundary `t` on `workers` threads. The
    /// result is in grid order regardless of the worker count.
    pub fn score_all(
        &self,
        t: usize,
        candidates: &[ParamSet],
        theta: f64,
        pool: &rayon::ThreadPool,
    ) -> Vec<Result<CandidateScore, Skipped>> {
        let history = self.history(t);
        // fill the derivative cache before fanning out
        let derivs: Vec<Arc<Derivative>> = candidates.iter().map(|c| history.derivative(&c.sig)).collect();
        pool.install(|| {
            candidates
                .par_iter()
                .zip(derivs.par_iter())
                .enumerate()
                .map(|(i, (c, d))| score_block(&history, &d.smooth.values()[..t], i, c, theta))
                .collect()
        })
    }

    /// Runs the walk-forward loop, continuing after `resume` (records of an
    /// earlier identical run) and calling `on_epoch` for each new epoch.
    pub fn run(
        &self,
        cfg: &WalkForwardConfig,
        resume: &[EpochRecord],
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<WalkForwardResult, WalkForwardError> {
        check_threshold(cfg.theta)?;
        let candidates = cfg.grid.candidates(cfg.weights)?;
        let n = self.len();
        let earliest = self.earliest_boundary(&candidates);
        let t0 = cfg.t0.unwrap_or(earliest);
        if t0 < earliest {
            return Err(WalkForwardError::BoundaryTooEarly { t0, required: earliest });
        }
        let min_block = candidates.iter().map(|c| c.w_exec).min().unwrap_or(1);
        if t0 + min_block > n {
            return Err(WalkForwardError::TooShort { len: n, t0 });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| WalkForwardError::Pool(e.to_string()))?;

        let mut epochs: Vec<EpochRecord> = Vec::new();
        let mut t = t0;
        let mut carry = Position::Flat;
        for (i, rec) in resume.iter().enumerate() {
            if rec.boundary_t != t || rec.oos_start != t || rec.carry_in != carry {
                return Err(WalkForwardError::Resume(format!(
                    "record {i} starts at {} with carry {:?}, expected {t} with {carry:?}",
                    rec.boundary_t, rec.carry_in
                )));
            }
            if rec.oos_end > n || rec.oos_returns.len() != rec.oos_end - rec.oos_start {
                return Err(WalkForwardError::Resume(format!("record {i} block does not fit the data")));
            }
            t = rec.oos_end;
            carry = rec.carry_out;
            epochs.push(rec.clone());
        }

        let mut buf = Vec::new();
        while t < n {
            let scored = self.score_all(t, &candidates, cfg.theta, &pool);
            let skipped = scored.iter().filter(|s| s.is_err()).count();
            let feasible: Vec<CandidateScore> = scored.into_iter().filter_map(Result::ok).collect();
            let (selected, selected_index, score) = match select(&feasible, cfg.tie_eps) {
                Some(s) => (s.params, s.index, Some(*s)),
                None => match epochs.last() {
                    Some(prev) => (prev.selected, prev.selected_index, None),
                    None => return Err(WalkForwardError::NoFeasibleCandidate { boundary: t }),
                },
            };
            let end = t + selected.w_exec;
            if end > n {
                break;
            }
            let d = self.base.derivative(selected.sig.n_diff, selected.sig.w_ma);
            self.base.observable_into(&selected.sig, &d, t..end, &mut buf);
            let mut state = carry;
            let positions: Vec<Position> = buf
                .iter()
                .map(|&s| {
                    state = next_position(state, s, cfg.theta);
                    state
                })
                .collect();
            let oos_returns = delayed_returns(carry, &positions, &self.returns[t..end]);
            let oos_pnl = oos_returns.iter().fold(1.0, |v, r| v * (1.0 + r)) - 1.0;
            let record = EpochRecord {
                boundary_t: t,
                boundary_ts: self.timestamps.get(t).copied(),
                selected,
                selected_index,
                score,
                candidates: candidates.len(),
                skipped,
                oos_start: t,
                oos_end: end,
                oos_pnl,
                oos_turnover: transitions(carry, &positions),
                carry_in: carry,
                carry_out: state,
                oos_returns,
                oos_positions: positions,
            };
            log::debug!("epoch at {t}: selected #{selected_index}, oos pnl {oos_pnl:.6}");
            on_epoch(&record);
            carry = state;
            t = end;
            epochs.push(record);
        }
        assemble(cfg.theta, t0, epochs)
    }
}

/// Concatenates epoch blocks into the global series.
pub fn assemble(theta: f64, t0: usize, epochs: Vec<EpochRecord>) -> Result<WalkForwardResult, WalkForwardError> {
    let global_returns: Vec<f64> = epochs.iter().flat_map(|e| e.oos_returns.iter().copied()).collect();
    let global_positions: Vec<Position> = epochs.iter().flat_map(|e| e.oos_positions.iter().copied()).collect();
    let global_equity = compound_from(1.0, &global_returns)?;
    Ok(WalkForwardResult {
        theta,
        t0,
        selection_frequencies: selection_frequencies(&epochs),
        epochs,
        global_returns,
        global_positions,
        global_equity,
    })
}

/// Prepares `data` and runs a fresh walk-forward.
pub fn run_walkforward(data: &CandleSeries, cfg: &WalkForwardConfig) -> Result<WalkForwardResult, WalkForwardError> {
    Engine::prepare(data, cfg)?.run(cfg, &[], |_| {})
}
