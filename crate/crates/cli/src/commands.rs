use crate::config::RunConfig;
use crate::data::{self, candle_digest};
use crate::error::CliError;
use crate::output::{run_digest, theta_dir, Outputs, RunManifest};
use fwdsig::decision::{hysteresis_positions, EquityCurve, Position, PositionPath};
use fwdsig::indicators::{compute_panel, IndicatorKey};
use fwdsig::io::{read_records, Column, RecordMeta, RecordWriter};
use fwdsig::market_data::{load_candles, write_candles, CandleSeries, KlineClient};
use fwdsig::metrics::{duration_stats, summarize, summarize_with_trades, DurationStats, PerformanceReport};
use fwdsig::normalization::normalize;
use fwdsig::signal::lab::{
    backward_derivative, demo_signal, gated_composite, leading_composite, uniform_grid, zero_crossing_lead, DemoParams, LeadStats,
};
use fwdsig::signal::{median_abs_sweep, slope_gate, SignalBase, SweepRow};
use fwdsig::walkforward::{assemble, Engine, EpochRecord, SelectionFrequencies, WalkForwardResult};
use serde::{Deserialize, Serialize};
use std::fs::OpenOptions;
use std::io::BufReader;
use std::path::Path;

pub const EPOCH_SCHEMA: &str = "fwdsig.epoch.v1";
pub const REPORT_SCHEMA: &str = "fwdsig.report.v1";
pub const SWEEP_SCHEMA: &str = "fwdsig.sweep.v1";
pub const DEMO_SCHEMA: &str = "fwdsig.demo.v1";
pub const EPOCHS_FILE: &str = "epochs.jsonl";

/// One line of a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportRecord {
    Performance {
        theta: f64,
        #[serde(flatten)]
        report: PerformanceReport,
        annualized_sharpe: Option<f64>,
    },
    Durations {
        theta: f64,
        #[serde(flatten)]
        stats: DurationStats,
    },
    Frequency {
        theta: f64,
        dimension: String,
        value: f64,
        count: usize,
    },
}

fn performance(theta: f64, report: PerformanceReport) -> ReportRecord {
    ReportRecord::Performance {
        theta,
        annualized_sharpe: report.annualized_sharpe(),
        report,
    }
}

fn frequency_records(theta: f64, freq: &SelectionFrequencies) -> Vec<ReportRecord> {
    freq.dimensions()
        .iter()
        .flat_map(|(name, bins)| {
            bins.iter().map(move |b| ReportRecord::Frequency {
                theta,
                dimension: name.to_string(),
                value: b.value,
                count: b.count,
            })
        })
        .collect()
}

pub fn fetch(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let (start, end) = cfg
        .range()?
        .ok_or_else(|| CliError::Config("fetch needs --from and --to".into()))?;
    let client = KlineClient::new(cfg.data.endpoint.clone())?;
    let fetched = client.fetch(&cfg.symbol, start, end)?;
    let rel = format!("candles/{}.csv", cfg.symbol);
    let path = cfg.data.path.clone().unwrap_or_else(|| cfg.out.join(&rel));
    // merge with what is already on disk; the fresh download wins on overlap
    let mut merged = fetched.candles.clone();
    if path.exists() {
        let existing = load_candles(&path, &cfg.symbol)?;
        merged.extend(
            existing
                .candles
                .into_iter()
                .filter(|c| c.timestamp < start || c.timestamp >= end),
        );
        merged.sort_by_key(|c| c.timestamp);
    }
    let series = CandleSeries::new(cfg.symbol.clone(), merged);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    write_candles(&path, &series)?;
    log::info!("{} candles fetched, {} in {}", fetched.len(), series.len(), path.display());

    let input = candle_digest(&series);
    let config = cfg.result_toml();
    let mut out = Outputs::create(&cfg.out, run_digest("fetch", &config, &input))?;
    out.input(series.len(), series.gap_count());
    let name = match path.strip_prefix(&cfg.out) {
        Ok(rel) => rel.to_string_lossy().into_owned(),
        Err(_) => path.to_string_lossy().into_owned(),
    };
    if path.starts_with(&cfg.out) {
        out.track(&name)?;
    }
    out.bytes("config.toml", config.as_bytes())?;
    out.finish("fetch", &config, &input)
}

pub fn backtest(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let input = data::load(cfg)?;
    let config = cfg.result_toml();
    let mut out = Outputs::create(&cfg.out, run_digest("backtest", &config, &input.digest))?;
    out.input(input.series.len(), input.filled);
    let series = &input.series;
    let panel = compute_panel(series, &cfg.indicators).map_err(CliError::data)?;
    let norm = normalize(&panel, cfg.w_norm, cfg.eps).map_err(CliError::pipeline)?;
    let params = cfg.signal_params();
    let frame = SignalBase::new(&norm, cfg.weights)
        .frame(&params)
        .map_err(|e| CliError::Data(format!("{e}: {} bars do not cover the warm-up", series.len())))?;
    let ts = series.timestamps();
    let names: Vec<[String; 4]> = IndicatorKey::ALL
        .iter()
        .map(|k| {
            let n = k.name();
            [n.to_string(), format!("{n}_centered"), format!("{n}_scale"), format!("{n}_z")]
        })
        .collect();
    let mut columns = vec![Column::Int("timestamp", ts.clone())];
    for (k, n) in IndicatorKey::ALL.iter().zip(&names) {
        let z = norm.get(*k);
        columns.push(Column::Float(&n[0], panel.get(*k).values()));
        columns.push(Column::Float(&n[1], z.centered.values()));
        columns.push(Column::Float(&n[2], z.scale.values()));
        columns.push(Column::Float(&n[3], z.z.values()));
    }
    out.columnar("panel.csv", &columns)?;
    out.columnar(
        "signal.csv",
        &[
            Column::Int("timestamp", ts.clone()),
            Column::Float("f0", frame.f0.values()),
            Column::Float("d_smooth", frame.d_smooth.values()),
            Column::Float("c1", frame.c1.values()),
            Column::Float("c2", frame.c2.values()),
            Column::Float("f", frame.f.values()),
        ],
    )?;

    let start = frame.valid_from;
    let closes = series.closes();
    let mut summary = Vec::new();
    for &theta in &cfg.thetas {
        let full = hysteresis_positions(&frame.f, theta, Position::Flat).map_err(CliError::pipeline)?;
        // evaluate from the first bar with a signal
        let path = PositionPath {
            positions: full.positions[start..].to_vec(),
            valid_from: 0,
            ..full
        };
        let curve = EquityCurve::from_path(&path, &closes[start..]).map_err(CliError::pipeline)?;
        let report = summarize(&curve.returns, &curve.equity, &path).map_err(CliError::pipeline)?;
        let stats = duration_stats(&curve.durations, Some(&ts[start..]), cfg.percentiles);
        let dir = theta_dir(theta);
        out.columnar(
            &format!("{dir}/equity.csv"),
            &[
                Column::Int("timestamp", ts[start..].to_vec()),
                Column::Int("position", path.positions.iter().map(|p| p.as_u8() as i64).collect()),
                Column::Float("return", &curve.returns),
                Column::Float("equity", &curve.equity),
            ],
        )?;
        let records = vec![performance(theta, report.clone()), ReportRecord::Durations { theta, stats }];
        out.records(&format!("{dir}/report.jsonl"), REPORT_SCHEMA, &records)?;
        summary.push(performance(theta, report));
    }
    out.records("summary.jsonl", REPORT_SCHEMA, &summary)?;
    out.bytes("config.toml", config.as_bytes())?;
    out.finish("backtest", &config, &input.digest)
}

/// Epoch records already on disk for a resumed run.
fn resume_records(path: &Path, digest: &str) -> Result<Vec<EpochRecord>, CliError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = std::fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (meta, records): (Option<RecordMeta>, Vec<EpochRecord>) =
        read_records(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    match meta.and_then(|m| m.run_digest) {
        Some(d) if d == digest => Ok(records),
        other => Err(CliError::Config(format!(
            "{} belongs to a different run ({}); rerun without --resume or use a fresh --out",
            path.display(),
            other.unwrap_or_else(|| "no digest".into())
        ))),
    }
}

pub fn walkforward(cfg: &RunConfig, resume: bool) -> Result<RunManifest, CliError> {
    let input = data::load(cfg)?;
    let config = cfg.result_toml();
    let mut out = Outputs::create(&cfg.out, run_digest("walkforward", &config, &input.digest))?;
    out.input(input.series.len(), input.filled);
    let series = &input.series;
    let engine = Engine::prepare(series, &cfg.walkforward(cfg.thetas[0])).map_err(|e| match e {
        fwdsig::walkforward::WalkForwardError::Indicator(e) => CliError::data(e),
        e => CliError::pipeline(e),
    })?;
    let ts = series.timestamps();
    let mut summary = Vec::new();
    for &theta in &cfg.thetas {
        let wf = cfg.walkforward(theta);
        let dir = theta_dir(theta);
        let epochs_name = format!("{dir}/{EPOCHS_FILE}");
        let epochs_path = out.path(&epochs_name);
        let prior = if resume {
            resume_records(&epochs_path, out.digest())?
        } else {
            Vec::new()
        };
        std::fs::create_dir_all(out.path(&dir)).map_err(CliError::pipeline)?;
        let file = OpenOptions::new()
            .create(true)
            .append(resume)
            .write(true)
            .truncate(!resume)
            .open(&epochs_path)
            .map_err(|e| CliError::Pipeline(format!("{}: {e}", epochs_path.display())))?;
        let mut writer = if prior.is_empty() {
            let meta = out.meta(EPOCH_SCHEMA);
            if resume {
                // a fresh file under --resume: start it over
                file.set_len(0).map_err(CliError::pipeline)?;
            }
            RecordWriter::new(file, Some(&meta)).map_err(CliError::pipeline)?
        } else {
            log::info!("theta {theta}: resuming after {} epochs", prior.len());
            RecordWriter::append(file)
        };
        let mut write_error = None;
        let result = engine
            .run(&wf, &prior, |e| {
                if write_error.is_none() {
                    write_error = writer.write(e).err();
                }
            })
            .map_err(|e| CliError::Pipeline(format!("theta {theta}: {e}")))?;
        if let Some(e) = write_error {
            return Err(CliError::Pipeline(format!("{}: {e}", epochs_path.display())));
        }
        drop(writer);
        out.track(&epochs_name)?;
        log::info!(
            "theta {theta}: {} epochs, total return {:.6}",
            result.epochs.len(),
            result.global_equity.last().map_or(0.0, |v| v - 1.0)
        );
        let records = write_walkforward_outputs(&mut out, &dir, &result, &ts, cfg)?;
        summary.push(records[0].clone());
    }
    out.records("summary.jsonl", REPORT_SCHEMA, &summary)?;
    out.bytes("config.toml", config.as_bytes())?;
    out.finish("walkforward", &config, &input.digest)
}

/// Performance, duration and frequency records of one result.
pub fn walkforward_records(result: &WalkForwardResult, ts: &[i64], cfg: &RunConfig) -> Result<Vec<ReportRecord>, CliError> {
    let theta = result.theta;
    if result.global_returns.is_empty() {
        return Err(CliError::Pipeline(format!("theta {theta}: no out-of-sample bars")));
    }
    let report = summarize_with_trades(
        &result.global_returns,
        &result.global_equity,
        result.turnover(),
        result.global_positions.len(),
    )
    .map_err(CliError::pipeline)?;
    let durations = fwdsig::decision::run_lengths(&result.global_positions);
    let stats = duration_stats(&durations, Some(&ts[result.oos_range()]), cfg.percentiles);
    let mut records = vec![performance(theta, report), ReportRecord::Durations { theta, stats }];
    records.extend(frequency_records(theta, &result.selection_frequencies));
    Ok(records)
}

fn write_walkforward_outputs(
    out: &mut Outputs,
    dir: &str,
    result: &WalkForwardResult,
    ts: &[i64],
    cfg: &RunConfig,
) -> Result<Vec<ReportRecord>, CliError> {
    out.columnar(
        &format!("{dir}/equity.csv"),
        &[
            Column::Int("timestamp", ts[result.oos_range()].to_vec()),
            Column::Int("position", result.global_positions.iter().map(|p| p.as_u8() as i64).collect()),
            Column::Float("return", &result.global_returns),
            Column::Float("equity", &result.global_equity),
            Column::Int(
                "cumulative_trades",
                result.cumulative_trades().iter().map(|&n| n as i64).collect(),
            ),
        ],
    )?;
    let records = walkforward_records(result, ts, cfg)?;
    out.records(&format!("{dir}/report.jsonl"), REPORT_SCHEMA, &records)?;
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemoRecord {
    Lead {
        amp: f64,
        #[serde(flatten)]
        stats: LeadStats,
    },
    Gate {
        lambda2: f64,
        amp: f64,
        mean_abs_c2: f64,
        /// Largest difference from the ungated series with the same amplitude.
        max_abs_diff_ungated: f64,
    },
}

pub fn demo(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let d = &cfg.demo;
    let config = cfg.result_toml();
    let input = "closed-form";
    let mut out = Outputs::create(&cfg.out, run_digest("demo", &config, input))?;
    let n = (d.t_end / d.dt).round() as usize + 1;
    let grid = uniform_grid(0.0, d.dt, n);
    let p = DemoParams {
        a: d.a,
        a0: d.a0,
        w: d.w,
        m: d.m,
    };
    let f = demo_signal(&p, &grid);
    let df = backward_derivative(&f, d.n_diff, d.dt);

    let mut names = Vec::new();
    let mut series = Vec::new();
    let mut records = Vec::new();
    for &amp in &d.amps {
        let enhanced = leading_composite(&f, &df, amp);
        records.push(DemoRecord::Lead {
            amp,
            stats: zero_crossing_lead(&f, &enhanced, d.level, None),
        });
        names.push(format!("enhanced_a{amp}"));
        series.push(enhanced);
    }
    let ungated = leading_composite(&f, &df, d.gated_amp);
    let away: Vec<f64> = f.iter().copied().filter(|x| x.abs() > d.away_from_zero).collect();
    for &l2 in &d.lambda2 {
        let gated = gated_composite(&f, &df, f64::INFINITY, l2, d.gated_amp);
        let diff = gated
            .iter()
            .zip(&ungated)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let mean_abs_c2 = away.iter().map(|&x| slope_gate(l2, d.gated_amp, x).abs()).sum::<f64>() / away.len().max(1) as f64;
        records.push(DemoRecord::Gate {
            lambda2: l2,
            amp: d.gated_amp,
            mean_abs_c2,
            max_abs_diff_ungated: diff,
        });
        names.push(format!("gated_l2_{l2}"));
        series.push(gated);
    }
    let mut columns = vec![Column::Float("t", &grid), Column::Float("f", &f), Column::Float("df", &df)];
    columns.extend(names.iter().zip(&series).map(|(n, s)| Column::Float(n.as_str(), s)));
    out.columnar("demo.csv", &columns)?;
    out.records("leads.jsonl", DEMO_SCHEMA, &records)?;
    out.bytes("config.toml", config.as_bytes())?;
    out.finish("demo", &config, input)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepRecord {
    Header {
        symbol: String,
        n_diff: usize,
        w_ma: usize,
        window: usize,
        bars: usize,
        /// Fewer bars than `window` were available after the warm-up.
        truncated: bool,
    },
    Row(SweepRow),
}

pub fn sweep(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let input = data::load(cfg)?;
    let config = cfg.result_toml();
    let mut out = Outputs::create(&cfg.out, run_digest("sweep", &config, &input.digest))?;
    out.input(input.series.len(), input.filled);
    let s = &cfg.sweep;
    let panel = compute_panel(&input.series, &cfg.indicators).map_err(CliError::data)?;
    let norm = normalize(&panel, cfg.w_norm, cfg.eps).map_err(CliError::pipeline)?;
    let base = SignalBase::new(&norm, cfg.weights);
    let points = s.gates.one_at_a_time(s.fixed);
    let rows = median_abs_sweep(&base, &points, s.n_diff, s.w_ma, Some(s.window))
        .map_err(|e| CliError::Data(format!("{e}: {} bars do not cover the warm-up", input.series.len())))?;
    let bars = rows.first().map_or(0, |r| r.bars);
    if bars < s.window {
        log::warn!("only {bars} bars after warm-up, fewer than the {} requested", s.window);
    }
    let mut records = vec![SweepRecord::Header {
        symbol: cfg.symbol.clone(),
        n_diff: s.n_diff,
        w_ma: s.w_ma,
        window: s.window,
        bars,
        truncated: bars < s.window,
    }];
    records.extend(rows.into_iter().map(SweepRecord::Row));
    out.records("sweep.jsonl", SWEEP_SCHEMA, &records)?;
    out.bytes("config.toml", config.as_bytes())?;
    out.finish("sweep", &config, &input.digest)
}

/// Checks a walk-forward output directory against its manifest and rebuilds
/// every report from the epoch records alone.
pub fn report(dir: &Path) -> Result<Vec<ReportRecord>, CliError> {
    let manifest = RunManifest::load(dir)?;
    let changed = manifest.verify(dir);
    if !changed.is_empty() {
        return Err(CliError::Data(format!(
            "outputs changed since the run: {}",
            changed.join(", ")
        )));
    }
    if manifest.command != "walkforward" {
        return Err(CliError::Config(format!(
            "{} holds {} output, not walkforward",
            dir.display(),
            manifest.command
        )));
    }
    let cfg: RunConfig = toml::from_str(&manifest.config).map_err(|e| CliError::Data(format!("manifest config: {e}")))?;
    let mut all = Vec::new();
    for &theta in &cfg.thetas {
        let sub = theta_dir(theta);
        let path = dir.join(&sub).join(EPOCHS_FILE);
        let file = std::fs::File::open(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let (_, epochs): (_, Vec<EpochRecord>) =
            read_records(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let first = epochs
            .first()
            .ok_or_else(|| CliError::Data(format!("{} has no epochs", path.display())))?;
        let t0 = first.boundary_t;
        // bar timestamps on the regular grid, indexed from bar 0
        let ts0 = first.boundary_ts.unwrap_or(0) - t0 as i64 * fwdsig::market_data::MINUTE_MS;
        let result = assemble(theta, t0, epochs).map_err(CliError::pipeline)?;
        let end = result.oos_range().end;
        let ts: Vec<i64> = (0..end as i64).map(|i| ts0 + i * fwdsig::market_data::MINUTE_MS).collect();
        let records = walkforward_records(&result, &ts, &cfg)?;

        let stored_path = dir.join(&sub).join("report.jsonl");
        let file = std::fs::File::open(&stored_path).map_err(|e| CliError::Data(format!("{}: {e}", stored_path.display())))?;
        let (_, stored): (_, Vec<ReportRecord>) =
            read_records(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", stored_path.display())))?;
        if stored != records {
            return Err(CliError::Pipeline(format!(
                "theta {theta}: report does not match the epoch records"
            )));
        }
        all.extend(records);
    }
    Ok(all)
}
