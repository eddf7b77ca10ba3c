use super::{Candle, CandleSeries, DataError, MINUTE_MS};
use serde_json::Value;
use std::time::Duration;

/// Settings for a public klines endpoint.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct KlineClientConfig {
    /// Full URL of the klines resource, e.g. `https://api.binance.com/api/v3/klines`.
    pub base_url: String,
    /// Records requested per page.
    pub page_size: usize,
    /// Attempts per page before giving up.
    pub max_attempts: usize,
    /// Delay before the first retry; doubled on every further retry.
    pub backoff_ms: u64,
    /// Minimum pause between page requests.
    pub page_delay_ms: u64,
    pub timeout_ms: u64,
}

impl Default for KlineClientConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.binance.com/api/v3/klines".into(),
            page_size: 1000,
            max_attempts: 4,
            backoff_ms: 500,
            page_delay_ms: 0,
            timeout_ms: 30_000,
        }
    }
}

/// Blocking client for array-of-array kline responses.
pub struct KlineClient {
    cfg: KlineClientConfig,
    http: reqwest::blocking::Client,
}

impl KlineClient {
    pub fn new(cfg: KlineClientConfig) -> Result<Self, DataError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| DataError::Network {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { cfg, http })
    }

    pub fn config(&self) -> &KlineClientConfig {
        &self.cfg
    }

    /// All one-minute candles with open time in `[start, end)`, in order and
    /// without duplicates. Gaps reported by the exchange are kept as gaps.
    pub fn fetch(&self, symbol: &str, start: i64, end: i64) -> Result<CandleSeries, DataError> {
        if start >= end {
            return Err(DataError::InvalidRange { start, end });
        }
        let mut candles: Vec<Candle> = Vec::new();
        let mut cursor = start;
        while cursor < end {
            let page = self.page(symbol, cursor, end)?;
            let fetched = page.len();
            let mut newest = None;
            for c in page {
                newest = Some(newest.map_or(c.timestamp, |n: i64| n.max(c.timestamp)));
                if c.timestamp < cursor || c.timestamp >= end {
                    continue;
                }
                if candles.last().is_some_and(|l| c.timestamp <= l.timestamp) {
                    continue;
                }
                candles.push(c);
            }
            match newest {
                Some(ts) if fetched >= self.cfg.page_size && ts >= cursor => {
                    cursor = ts + MINUTE_MS;
                }
                _ => break,
            }
            if self.cfg.page_delay_ms > 0 {
                std::thread::sleep(Duration::from_millis(self.cfg.page_delay_ms));
            }
        }
        log::debug!("fetched {} candles for {symbol}", candles.len());
        Ok(CandleSeries::new(symbol, candles))
    }

    fn page(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<Candle>, DataError> {
        let query = [
            ("symbol", symbol.to_string()),
            ("interval", "1m".to_string()),
            ("startTime", start.to_string()),
            ("endTime", (end - 1).to_string()),
            ("limit", self.cfg.page_size.to_string()),
        ];
        let url = reqwest::Url::parse_with_params(&self.cfg.base_url, &query).map_err(|e| DataError::Network {
            attempts: 0,
            message: format!("bad endpoint {}: {e}", self.cfg.base_url),
        })?;
        let mut delay = Duration::from_millis(self.cfg.backoff_ms);
        let attempts = self.cfg.max_attempts.max(1);
        let mut last_error = String::new();
        for attempt in 1..=attempts {
            match self.http.get(url.clone()).send() {
                Ok(resp) if resp.status().is_success() => {
                    let body = resp.text().map_err(|e| DataError::Network {
                        attempts: attempt,
                        message: e.to_string(),
                    })?;
                    return parse_klines(&body);
                }
                Ok(resp) => {
                    let status = resp.status();
                    last_error = format!("HTTP {status}");
                    if status.is_client_error() && status.as_u16() != 429 {
                        return Err(DataError::Network {
                            attempts: attempt,
                            message: last_error,
                        });
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
            if attempt < attempts {
                log::warn!("kline request failed ({last_error}); retrying in {delay:?}");
                std::thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(DataError::Network {
            attempts,
            message: last_error,
        })
    }
}

/// Parses an array of kline arrays. Positions 0..6 are open time, open, high,
/// low, close and volume; numbers may be JSON numbers or decimal strings.
pub(crate) fn parse_klines(body: &str) -> Result<Vec<Candle>, DataError> {
    let rows: Vec<Vec<Value>> = serde_json::from_str(body).map_err(|e| DataError::Schema(e.to_string()))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() < 6 {
                return Err(DataError::Schema(format!(
                    "record {i} has {} fields, expected at least 6",
                    row.len()
                )));
            }
            let num = |j: usize| -> Result<f64, DataError> {
                match &row[j] {
                    Value::Number(n) => n.as_f64(),
                    Value::String(s) => s.parse().ok(),
                    _ => None,
                }
                .ok_or_else(|| DataError::Schema(format!("record {i} field {j} is not numeric")))
            };
            let timestamp = row[0]
                .as_i64()
                .ok_or_else(|| DataError::Schema(format!("record {i} open time is not an integer")))?;
            let candle = Candle {
                timestamp,
                open: num(1)?,
                high: num(2)?,
                low: num(3)?,
                close: num(4)?,
                volume: num(5)?,
            };
            candle
                .check()
                .map_err(|reason| DataError::Schema(format!("record {i}: {reason}")))?;
            Ok(candle)
        })
        .collect()
}
