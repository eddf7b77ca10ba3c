use crate::config::{RunConfig, Source};
use crate::error::CliError;
use fwdsig::io::sha256_hex;
use fwdsig::market_data::{load_candles, regularize, write_candles_to, CandleSeries, KlineClient};
use fwdsig::synthetic::generate;

/// Input bars on a regular grid, plus the digest of their candle-file form.
pub struct Input {
    pub series: CandleSeries,
    pub digest: String,
    /// Flat bars inserted for missing minutes.
    pub filled: usize,
}

pub fn candle_digest(series: &CandleSeries) -> String {
    let mut buf = Vec::new();
    write_candles_to(&mut buf, series).expect("in-memory write");
    sha256_hex(&buf)
}

pub fn load(cfg: &RunConfig) -> Result<Input, CliError> {
    let range = cfg.range()?;
    let raw = match cfg.data.source {
        Source::Synthetic => generate(&cfg.data.synthetic),
        Source::File => {
            let path = cfg.data.path.as_ref().expect("validated");
            load_candles(path, &cfg.symbol)?
        }
        Source::Fetch => {
            let (start, end) = range.expect("validated");
            KlineClient::new(cfg.data.endpoint.clone())?.fetch(&cfg.symbol, start, end)?
        }
    };
    let mut series = match range {
        Some((start, end)) => CandleSeries {
            candles: raw
                .candles
                .into_iter()
                .filter(|c| c.timestamp >= start && c.timestamp < end)
                .collect(),
            ..raw
        },
        None => raw,
    };
    if series.is_empty() {
        return Err(CliError::Data("no candles in the selected range".into()));
    }
    let filled = series.gap_count();
    if !series.is_regular() {
        log::info!("filling {filled} missing minutes");
        series = regularize(&series)?;
    }
    let digest = candle_digest(&series);
    log::info!("{} bars, input digest {}", series.len(), &digest[..12]);
    Ok(Input { series, digest, filled })
}
