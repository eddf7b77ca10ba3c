//! Deterministic synthetic candles: regime-switching drift, a slow
//! oscillation and Gaussian noise on the log price.

use crate::market_data::{Candle, CandleSeries, MINUTE_MS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub bars: usize,
    pub symbol: String,
    pub start_ts: i64,
    pub start_price: f64,
    /// Per-bar log drift magnitude inside a trend regime.
    pub drift: f64,
    /// Mean regime length in bars.
    pub regime_bars: usize,
    /// Log amplitude and period (bars) of the oscillation.
    pub osc_amplitude: f64,
    pub osc_period: f64,
    /// Per-bar log-return noise.
    pub noise: f64,
    /// Relative wick size.
    pub wick: f64,
    pub base_volume: f64,
    /// Text the RNG seed is derived from.
    pub seed: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            bars: 30_000,
            symbol: "SYNTH".into(),
            start_ts: 1_640_995_200_000,
            start_price: 100.0,
            drift: 2e-5,
            regime_bars: 2_000,
            osc_amplitude: 0.004,
            osc_period: 720.0,
            noise: 8e-4,
            wick: 3e-4,
            base_volume: 50.0,
            seed: "fwdsig-synthetic".into(),
        }
    }
}

/// First eight bytes of SHA-256 of `text`, as a seed.
pub fn seed_from_text(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn generate(cfg: &SyntheticConfig) -> CandleSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_text(&cfg.seed));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut candles = Vec::with_capacity(cfg.bars);
    let mut level = cfg.start_price.ln();
    let mut drift = cfg.drift;
    let mut prev_close = cfg.start_price;
    let switch_p = 1.0 / cfg.regime_bars.max(1) as f64;
    let omega = std::f64::consts::TAU / cfg.osc_period;
    for i in 0..cfg.bars {
        if rng.random::<f64>() < switch_p {
            drift = if rng.random::<bool>() { cfg.drift } else { -cfg.drift };
        }
        level += drift + cfg.noise * normal.sample(&mut rng);
        let close = (level + cfg.osc_amplitude * (omega * i as f64).sin()).exp();
        let open = if i == 0 { close } else { prev_close };
        let up: f64 = normal.sample(&mut rng);
        let down: f64 = normal.sample(&mut rng);
        let high = open.max(close) * (1.0 + cfg.wick * up.abs());
        let low = open.min(close) * (1.0 - cfg.wick * down.abs()).max(0.5);
        let volume = cfg.base_volume * (0.5 * normal.sample(&mut rng)).exp();
        candles.push(Candle {
            timestamp: cfg.start_ts + i as i64 * MINUTE_MS,
            open,
            high,
            low,
            close,
            volume,
        });
        prev_close = close;
    }
    CandleSeries::new(cfg.symbol.clone(), candles)
}

/// `bars` identical candles at `price` with constant positive volume.
pub fn constant(bars: usize, price: f64, volume: f64) -> CandleSeries {
    let candles = (0..bars)
        .map(|i| Candle {
            volume,
            ..Candle::flat(i as i64 * MINUTE_MS, price)
        })
        .collect();
    CandleSeries::new("CONST", candles)
}
