use crate::error::CliError;
use chrono::{NaiveDate, NaiveDateTime};
use fwdsig::indicators::IndicatorConfig;
use fwdsig::market_data::KlineClientConfig;
use fwdsig::metrics::PercentileMethod;
use fwdsig::normalization::{DEFAULT_EPS, DEFAULT_W_NORM};
use fwdsig::signal::{GateGrid, GatePoint, SignalParams, Weights};
use fwdsig::synthetic::SyntheticConfig;
use fwdsig::walkforward::{Grid, WalkForwardConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable overriding the klines endpoint.
pub const ENDPOINT_ENV: &str = "FWDSIG_KLINES_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Bundled generator; needs no network or files.
    Synthetic,
    /// A candle file on disk.
    File,
    /// Download the range from the klines endpoint on every run.
    Fetch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: Source,
    /// Candle file for `source = "file"`; `fetch` writes here too.
    pub path: Option<PathBuf>,
    /// Range start, `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM` or epoch milliseconds.
    pub from: Option<String>,
    /// Range end (exclusive), same formats as `from`.
    pub to: Option<String>,
    pub endpoint: KlineClientConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: Source::Synthetic,
            path: None,
            from: None,
            to: None,
            endpoint: KlineClientConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

/// Fixed parameters for `backtest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub n_diff: usize,
    pub w_ma: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub amp: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        let p = SignalParams::default();
        Self {
            n_diff: p.n_diff,
            w_ma: p.w_ma,
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            amp: p.amp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub a: f64,
    pub a0: f64,
    pub w: f64,
    pub m: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Backward-difference span in samples.
    pub n_diff: usize,
    pub amps: Vec<f64>,
    /// Amplitude of the gated series.
    pub gated_amp: f64,
    pub lambda2: Vec<f64>,
    /// Zero-crossing level.
    pub level: f64,
    /// Region used for mean `|c2|`: samples with `|f| > away_from_zero`.
    pub away_from_zero: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            a: 0.5,
            a0: 2.0,
            w: 1.0,
            m: 0.1,
            dt: 0.01,
            t_end: 20.0,
            n_diff: 5,
            amps: vec![2.0, 5.0, 10.0],
            gated_amp: 10.0,
            lambda2: vec![0.0, 0.5, 1.0, 2.0],
            level: 0.0,
            away_from_zero: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Trailing bars over which `median |F|` is taken.
    pub window: usize,
    pub n_diff: usize,
    pub w_ma: usize,
    pub gates: GateGrid,
    /// Values held fixed while one parameter is swept.
    pub fixed: GatePoint,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            window: 100_000,
            n_diff: 2,
            w_ma: 2,
            gates: GateGrid::default(),
            fixed: GatePoint {
                lambda1: 1.0,
                lambda2: 1.0,
                amp: 1.0,
            },
        }
    }
}

/// Everything a command needs. Serialized back as the effective config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub symbol: String,
    pub out: PathBuf,
    /// Scoring threads; 0 uses every core.
    pub workers: usize,
    /// One full run per value.
    pub thetas: Vec<f64>,
    pub w_norm: usize,
    pub eps: f64,
    pub weights: Weights,
    /// First walk-forward boundary; earliest feasible when unset.
    pub t0: Option<usize>,
    pub tie_eps: f64,
    pub percentiles: PercentileMethod,
    pub data: DataConfig,
    pub indicators: IndicatorConfig,
    pub grid: Grid,
    pub backtest: BacktestConfig,
    pub demo: DemoConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            symbol: "BTCUSDT".into(),
            out: PathBuf::from("out"),
            workers: 0,
            thetas: vec![1.0],
            w_norm: DEFAULT_W_NORM,
            eps: DEFAULT_EPS,
            weights: Weights::uniform(),
            t0: None,
            tie_eps: 0.0,
            percentiles: PercentileMethod::default(),
            data: DataConfig::default(),
            indicators: IndicatorConfig::default(),
            grid: Grid::default(),
            backtest: BacktestConfig::default(),
            demo: DemoConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies the environment override for the endpoint.
    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var(ENDPOINT_ENV) {
            if !url.is_empty() {
                self.data.endpoint.base_url = url;
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.thetas.is_empty() {
            return bad("thetas must not be empty".into());
        }
        if let Some(t) = self.thetas.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("theta {t} must be a positive number"));
        }
        if self.symbol.is_empty() || !self.symbol.chars().all(|c| c.is_ascii_alphanumeric()) {
            return bad(format!("symbol {:?} must be non-empty and alphanumeric", self.symbol));
        }
        self.indicators.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.w_norm < 2 {
            return bad("w_norm must be at least 2".into());
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad("eps must be finite and >= 0".into());
        }
        if !(self.tie_eps >= 0.0) {
            return bad("tie_eps must be >= 0".into());
        }
        self.grid
            .candidates(self.weights)
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.signal_params()
            .validate()
            .map_err(|e| CliError::Config(format!("backtest: {e}")))?;
        let g = &self.sweep.gates;
        if g.lambda1.is_empty() || g.lambda2.is_empty() || g.amp.is_empty() {
            return bad("sweep gate grids must not be empty".into());
        }
        if self.sweep.window == 0 {
            return bad("sweep window must be positive".into());
        }
        let d = &self.demo;
        if !(d.dt > 0.0 && d.t_end > 0.0) || d.n_diff == 0 {
            return bad("demo needs dt > 0, t_end > 0 and n_diff >= 1".into());
        }
        match self.data.source {
            Source::File => {
                let path = self
                    .data
                    .path
                    .as_ref()
                    .ok_or_else(|| CliError::Config("data.path is required for source = \"file\"".into()))?;
                if !path.exists() {
                    return bad(format!("data file {} does not exist", path.display()));
                }
            }
            Source::Fetch => {
                self.range()?
                    .ok_or_else(|| CliError::Config("fetch needs both from and to".into()))?;
            }
            Source::Synthetic => {}
        }
        self.range()?;
        Ok(())
    }

    /// The configured `[from, to)` range in epoch milliseconds.
    pub fn range(&self) -> Result<Option<(i64, i64)>, CliError> {
        match (&self.data.from, &self.data.to) {
            (Some(a), Some(b)) => {
                let (start, end) = (parse_time(a)?, parse_time(b)?);
                if start >= end {
                    return Err(CliError::Config(format!("from {a} must precede to {b}")));
                }
                Ok(Some((start, end)))
            }
            (None, None) => Ok(None),
            _ => Err(CliError::Config("from and to must be given together".into())),
        }
    }

    pub fn signal_params(&self) -> SignalParams {
        let b = &self.backtest;
        SignalParams {
            weights: self.weights,
            n_diff: b.n_diff,
            w_ma: b.w_ma,
            lambda1: b.lambda1,
            lambda2: b.lambda2,
            amp: b.amp,
        }
    }

    pub fn walkforward(&self, theta: f64) -> WalkForwardConfig {
        WalkForwardConfig {
            indicators: self.indicators.clone(),
            w_norm: self.w_norm,
            eps: self.eps,
            weights: self.weights,
            grid: self.grid.clone(),
            theta,
            t0: self.t0,
            tie_eps: self.tie_eps,
            workers: self.workers,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Part of the config that determines results. The output directory and
    /// worker count are excluded: results do not depend on them.
    pub fn result_toml(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.workers = 0;
        c.to_toml()
    }
}

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS]` (UTC) or epoch milliseconds.
pub fn parse_time(text: &str) -> Result<i64, CliError> {
    let text = text.trim();
    if let Ok(ms) = text.parse::<i64>() {
        return Ok(ms);
    }
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp_millis());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, fmt) {
            return Ok(t.and_utc().timestamp_millis());
        }
    }
    Err(CliError::Config(format!("cannot parse time {text:?}")))
}
