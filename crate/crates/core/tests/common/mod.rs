#![allow(dead_code)]

use fwdsig::indicators::IndicatorConfig;
use fwdsig::market_data::{Candle, CandleSeries};
use fwdsig::signal::Weights;
use fwdsig::synthetic::{generate, SyntheticConfig};
use fwdsig::walkforward::{Grid, WalkForwardConfig};
use fwdsig_oracles::pipeline::{Candidate, OracleConfig};
use fwdsig_oracles::CaseRng;

pub fn synth(bars: usize, seed: &str) -> CandleSeries {
    generate(&SyntheticConfig {
        bars,
        seed: seed.into(),
        ..Default::default()
    })
}

/// `(high, low, close, volume)` tuples for the oracle crate.
pub fn tuples(data: &CandleSeries) -> Vec<(f64, f64, f64, f64)> {
    data.candles.iter().map(|c| (c.high, c.low, c.close, c.volume)).collect()
}

/// Copy of `data` with every bar after `cut` replaced by hostile but
/// well-formed candles: huge jumps, near-zero prices and absurd volumes.
pub fn adversarial(data: &CandleSeries, cut: usize, seed: &str) -> CandleSeries {
    let mut rng = CaseRng::from_text(seed);
    let mut out = data.clone();
    for (i, c) in out.candles.iter_mut().enumerate().skip(cut + 1) {
        let close = match i % 4 {
            0 => rng.range(1e-6, 1e-3),
            1 => rng.range(1e5, 1e9),
            2 => c.close * rng.range(0.01, 100.0),
            _ => 42.0,
        };
        let open = rng.range(1e-6, 1e9);
        *c = Candle {
            timestamp: c.timestamp,
            open,
            high: open.max(close) * 3.0,
            low: open.min(close) / 3.0,
            close,
            volume: if i % 3 == 0 { 0.0 } else { rng.range(0.0, 1e12) },
        };
    }
    out
}

/// A reduced grid and normalization window so walk-forward runs finish in
/// seconds on a few thousand bars.
pub fn small_config(w_norm: usize, w_fit: Vec<usize>, rho: Vec<f64>, lambda1: Vec<f64>) -> WalkForwardConfig {
    WalkForwardConfig {
        w_norm,
        grid: Grid {
            n_diff: vec![2],
            w_ma: vec![2],
            lambda1,
            lambda2: vec![0.5],
            amp: vec![1.0],
            w_fit,
            rho,
        },
        ..Default::default()
    }
}

/// The same setup as plain numbers for the reference pipeline.
pub fn oracle_config(cfg: &WalkForwardConfig) -> OracleConfig {
    assert_eq!(cfg.weights, Weights::uniform());
    let ind: &IndicatorConfig = &cfg.indicators;
    let candidates = cfg
        .grid
        .candidates(cfg.weights)
        .unwrap()
        .iter()
        .map(|p| Candidate {
            n_diff: p.sig.n_diff,
            w_ma: p.sig.w_ma,
            lambda1: p.sig.lambda1,
            lambda2: p.sig.lambda2,
            amp: p.sig.amp,
            w_fit: p.w_fit,
            rho: p.rho,
        })
        .collect();
    OracleConfig {
        n_rsi: ind.n_rsi,
        n_mfi: ind.n_mfi,
        macd: (ind.macd_fast, ind.macd_slow, ind.macd_signal),
        n_bb: ind.n_bb,
        k_bb: ind.k_bb,
        w_norm: cfg.w_norm,
        eps: cfg.eps,
        theta: cfg.theta,
        candidates,
    }
}

/// Bit-level equality that treats every `NaN` as equal.
pub fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

/// Reruns the whole pipeline on `data` with everything after `cut` replaced
/// and reports the first stage whose output at an index `<= cut` moved.
pub fn check_truncation(
    data: &CandleSeries,
    cfg: &WalkForwardConfig,
    clean: &Pipeline,
    cut: usize,
    seed: &str,
) -> Result<(), String> {
    let dirty = Pipeline::run(&adversarial(data, cut, seed), cfg);
    let upto = cut + 1;
    let cmp = |what: &str, a: &[f64], b: &[f64]| {
        if same_bits(&a[..upto], &b[..upto]) {
            Ok(())
        } else {
            Err(format!("{what} differs at or before {cut}"))
        }
    };
    for k in fwdsig::indicators::IndicatorKey::ALL {
        cmp(k.name(), clean.panel.get(k).values(), dirty.panel.get(k).values())?;
        cmp(&format!("z {}", k.name()), clean.norm.z(k).values(), dirty.norm.z(k).values())?;
    }
    cmp("f0", clean.f0.values(), dirty.f0.values())?;
    for (i, (a, b)) in clean.signals.iter().zip(&dirty.signals).enumerate() {
        cmp(&format!("signal {i}"), a, b)?;
    }
    for (i, (a, b)) in clean.positions.iter().zip(&dirty.positions).enumerate() {
        if a[..upto] != b[..upto] {
            return Err(format!("positions {i} differ at or before {cut}"));
        }
    }
    let before = |r: &fwdsig::WalkForwardResult| -> Vec<(usize, usize, Option<u64>)> {
        r.epochs
            .iter()
            .filter(|e| e.boundary_t <= cut)
            .map(|e| (e.boundary_t, e.selected_index, e.score.map(|s| s.j_val.to_bits())))
            .collect()
    };
    if before(&clean.walk) != before(&dirty.walk) {
        return Err(format!("walk-forward selections differ at boundaries <= {cut}"));
    }
    // global position g belongs to bar t0 + g
    let n = (cut + 1).saturating_sub(clean.walk.t0);
    let (a, b) = (&clean.walk.global_positions, &dirty.walk.global_positions);
    if a[..n.min(a.len())] != b[..n.min(b.len())] {
        return Err(format!("walk-forward positions differ at or before {cut}"));
    }
    Ok(())
}

/// Every intermediate product of one pipeline run.
pub struct Pipeline {
    pub panel: fwdsig::IndicatorPanel,
    pub norm: fwdsig::NormalizedPanel,
    pub f0: fwdsig::Series,
    pub signals: Vec<Vec<f64>>,
    pub positions: Vec<Vec<fwdsig::decision::Position>>,
    pub walk: fwdsig::WalkForwardResult,
}

impl Pipeline {
    pub fn run(data: &CandleSeries, cfg: &WalkForwardConfig) -> Self {
        use fwdsig::decision::{hysteresis_positions, Position};
        use fwdsig::signal::{SignalBase, SignalParams};
        let panel = fwdsig::indicators::compute_panel(data, &cfg.indicators).unwrap();
        let norm = fwdsig::normalization::normalize(&panel, cfg.w_norm, cfg.eps).unwrap();
        let base = SignalBase::new(&norm, cfg.weights);
        let mut signals = Vec::new();
        let mut positions = Vec::new();
        for (l1, l2, a) in [(0.5, 0.5, 1.0), (f64::INFINITY, 0.0, 2.0), (0.01, 1.5, 0.75)] {
            let p = SignalParams {
                weights: cfg.weights,
                lambda1: l1,
                lambda2: l2,
                amp: a,
                ..Default::default()
            };
            let frame = base.frame(&p).unwrap();
            positions.push(hysteresis_positions(&frame.f, cfg.theta, Position::Flat).unwrap().positions);
            signals.push(frame.f.into_values());
        }
        let engine = fwdsig::walkforward::Engine::from_parts(base, &data.closes(), data.timestamps());
        let walk = engine.run(cfg, &[], |_| {}).unwrap();
        Self {
            panel,
            f0: engine.base().f0().clone(),
            norm,
            signals,
            positions,
            walk,
        }
    }
}
