//! OHLCV candles on a one-minute grid: loading, persistence, gap filling and
//! retrieval from a klines-style HTTP endpoint.

mod fetch;

pub use fetch::{KlineClient, KlineClientConfig};

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Bar spacing in milliseconds.
pub const MINUTE_MS: i64 = 60_000;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read candle file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write candle file {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("row {row}: timestamp {timestamp} does not follow {previous}")]
    NonMonotone { row: usize, previous: i64, timestamp: i64 },
    #[error("candle series is empty")]
    Empty,
    #[error("invalid time range: start {start} must precede end {end}")]
    InvalidRange { start: i64, end: i64 },
    #[error("kline request failed after {attempts} attempts: {message}")]
    Network { attempts: usize, message: String },
    #[error("kline response does not match the expected schema: {0}")]
    Schema(String),
}

/// One OHLCV bar. `timestamp` is the UTC open time in epoch milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Candle {
    /// Typical price `(high + low + close) / 3`.
    pub fn typical_price(&self) -> f64 {
        (self.high + self.low + self.close) / 3.0
    }

    /// Checks the bar invariants, returning a description of the first violation.
    pub fn check(&self) -> Result<(), String> {
        if self.timestamp % MINUTE_MS != 0 {
            return Err(format!("timestamp {} is not minute-aligned", self.timestamp));
        }
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("prices must be finite and strictly positive".into());
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Err("volume must be finite and non-negative".into());
        }
        if self.high < self.low {
            return Err(format!("high {} < low {}", self.high, self.low));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above open/close", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below open/close", self.high));
        }
        Ok(())
    }

    /// Zero-volume bar at `timestamp` carrying `close` in all four prices.
    pub fn flat(timestamp: i64, close: f64) -> Self {
        Self {
            timestamp,
            open: close,
            high: close,
            low: close,
            close,
            volume: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandleSeries {
    pub symbol: String,
    pub interval_ms: i64,
    pub candles: Vec<Candle>,
}

impl CandleSeries {
    pub fn new(symbol: impl Into<String>, candles: Vec<Candle>) -> Self {
        Self {
            symbol: symbol.into(),
            interval_ms: MINUTE_MS,
            candles,
        }
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.close).collect()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.candles.iter().map(|c| c.timestamp).collect()
    }

    /// The first `len` bars.
    pub fn prefix(&self, len: usize) -> CandleSeries {
        CandleSeries {
            symbol: self.symbol.clone(),
            interval_ms: self.interval_ms,
            candles: self.candles[..len.min(self.candles.len())].to_vec(),
        }
    }

    /// True when timestamps advance by exactly `interval_ms`.
    pub fn is_regular(&self) -> bool {
        self.candles
            .windows(2)
            .all(|w| w[1].timestamp - w[0].timestamp == self.interval_ms)
    }

    /// Number of bars `regularize` would insert.
    pub fn gap_count(&self) -> usize {
        self.candles
            .windows(2)
            .map(|w| ((w[1].timestamp - w[0].timestamp) / self.interval_ms - 1).max(0) as usize)
            .sum()
    }
}

/// Reads a candle file (`timestamp,open,high,low,close,volume`).
pub fn load_candles(path: impl AsRef<Path>, symbol: &str) -> Result<CandleSeries, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_candles(file, symbol)
}

/// Parses candle CSV from any reader. Row numbers in errors are 1-based file
/// lines, the header being line 1.
pub fn read_candles(reader: impl std::io::Read, symbol: &str) -> Result<CandleSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut candles: Vec<Candle> = Vec::new();
    for (i, record) in rdr.deserialize::<Candle>().enumerate() {
        let row = i + 2;
        let candle = record.map_err(|e| DataError::Malformed {
            row,
            reason: e.to_string(),
        })?;
        candle.check().map_err(|reason| DataError::Malformed { row, reason })?;
        if let Some(prev) = candles.last() {
            if candle.timestamp <= prev.timestamp {
                return Err(DataError::NonMonotone {
                    row,
                    previous: prev.timestamp,
                    timestamp: candle.timestamp,
                });
            }
        }
        candles.push(candle);
    }
    Ok(CandleSeries::new(symbol, candles))
}

/// Writes `series` in the candle file format.
pub fn write_candles(path: impl AsRef<Path>, series: &CandleSeries) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DataError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    write_candles_to(file, series).map_err(|source| DataError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Candle file format into any writer.
pub fn write_candles_to(w: impl std::io::Write, series: &CandleSeries) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    if series.candles.is_empty() {
        w.write_record(["timestamp", "open", "high", "low", "close", "volume"])?;
    }
    for c in &series.candles {
        w.serialize(c)?;
    }
    w.flush()
}

/// Fills every missing minute between the first and last bar with a flat,
/// zero-volume bar at the previous close. Existing bars are copied unchanged.
pub fn regularize(series: &CandleSeries) -> Result<CandleSeries, DataError> {
    let first = series.candles.first().ok_or(DataError::Empty)?;
    let last = series.candles.last().expect("non-empty");
    let step = series.interval_ms;
    let len = ((last.timestamp - first.timestamp) / step + 1) as usize;
    let mut out = Vec::with_capacity(len);
    for c in &series.candles {
        if let Some(prev) = out.last().copied() {
            let prev: Candle = prev;
            if c.timestamp <= prev.timestamp {
                return Err(DataError::NonMonotone {
                    row: out.len() + 2,
                    previous: prev.timestamp,
                    timestamp: c.timestamp,
                });
            }
            let mut ts = prev.timestamp + step;
            while ts < c.timestamp {
                out.push(Candle::flat(ts, prev.close));
                ts += step;
            }
        }
        out.push(*c);
    }
    Ok(CandleSeries {
        symbol: series.symbol.clone(),
        interval_ms: step,
        candles: out,
    })
}
