//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are the constants below.

mod common;

use common::{check_truncation, oracle_config, small_config, synth, tuples, Pipeline};
use fwdsig::decision::{hysteresis_positions, run_hysteresis, run_lengths, transitions, EquityCurve, Position};
use fwdsig::indicators::{bb_percent, compute_panel, macd_hist, mfi, rsi, IndicatorConfig, IndicatorKey};
use fwdsig::io::{write_columnar, write_records, Column, RecordMeta};
use fwdsig::metrics::{calmar, duration_stats, max_drawdown, PercentileMethod};
use fwdsig::normalization::{normalize, normalize_series};
use fwdsig::series::Series;
use fwdsig::signal::lab::{
    backward_derivative, demo_signal, gated_composite, leading_composite, uniform_grid, zero_crossing_lead, DemoParams,
};
use fwdsig::signal::{
    level_gate, median_abs_sweep, slope_gate, GateAxis, GateGrid, GatePoint, SignalBase, SignalParams, Weights,
};
use fwdsig::synthetic::constant;
use fwdsig::walkforward::{
    select, validation_window, CandidateScore, Engine, Grid, ParamSet, WalkForwardConfig, WalkForwardResult,
};
use fwdsig_oracles::{self as oracle, oracle_compare, CaseRng, Component};
use std::time::Instant;

/// Relative error allowed on the published Calmar ratios.
const CALMAR_REL_TOL: f64 = 1e-4;
/// Floating-point oracle agreement.
const ORACLE_ABS_TOL: f64 = 1e-12;
/// Agreement between compounding the whole run and chaining epoch PnLs.
const CHAIN_REL_TOL: f64 = 1e-12;
/// Bars and cut points of the causality check.
const CAUSALITY_BARS: usize = 50_000;
const CAUSALITY_CUTS: usize = 20;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn causality() -> Outcome {
    let data = synth(CAUSALITY_BARS, "acceptance-causality");
    let cfg = WalkForwardConfig::default();
    let clean = Pipeline::run(&data, &cfg);
    ensure(clean.walk.epochs.len() >= 3, || {
        format!("only {} epochs", clean.walk.epochs.len())
    })?;
    let mut rng = CaseRng::from_text("acceptance-cuts");
    let mut cuts: Vec<usize> = (0..CAUSALITY_CUTS).map(|_| rng.below(data.len() - 1)).collect();
    // make sure some cuts land on boundaries inside the out-of-sample region
    let boundaries: Vec<usize> = clean.walk.epochs.iter().map(|e| e.boundary_t).collect();
    for (slot, b) in cuts
        .iter_mut()
        .zip(boundaries.iter().step_by(boundaries.len().div_ceil(5).max(1)))
    {
        *slot = *b;
    }
    for &cut in &cuts {
        check_truncation(&data, &cfg, &clean, cut, &format!("acceptance-adv-{cut}"))?;
    }
    Ok(format!(
        "{} cuts, {} epochs, {} candidates per epoch, bit-exact",
        cuts.len(),
        clean.walk.epochs.len(),
        clean.walk.epochs[0].candidates
    ))
}

fn appendix_demo() -> Outcome {
    let grid = uniform_grid(0.0, 0.01, 2001);
    let f = demo_signal(&DemoParams::default(), &grid);
    let df = backward_derivative(&f, 5, 0.01);
    let mut means = Vec::new();
    for amp in [2.0, 5.0, 10.0] {
        let enhanced = leading_composite(&f, &df, amp);
        let stats = zero_crossing_lead(&f, &enhanced, 0.0, None);
        let mean = stats.mean.ok_or(format!("A = {amp}: no matched crossings"))?;
        ensure(mean > 0.0, || format!("A = {amp}: mean lead {mean} is not positive"))?;
        means.push(mean);
    }
    ensure(means.windows(2).all(|w| w[0] <= w[1]), || {
        format!("leads not non-decreasing: {means:?}")
    })?;

    for amp in [2.0, 5.0, 10.0] {
        let ungated = leading_composite(&f, &df, amp);
        let gated = gated_composite(&f, &df, f64::INFINITY, 0.0, amp);
        ensure(common::same_bits(&ungated, &gated), || {
            format!("saturated gate differs at A = {amp}")
        })?;
    }

    let away: Vec<f64> = f.iter().copied().filter(|x| x.abs() > 0.1).collect();
    let mean_c2: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&l2| away.iter().map(|&x| slope_gate(l2, 2.0, x).abs()).sum::<f64>() / away.len() as f64)
        .collect();
    ensure(mean_c2.windows(2).all(|w| w[1] < w[0]), || {
        format!("mean |c2| not decreasing: {mean_c2:?}")
    })?;
    ensure(level_gate(f64::INFINITY, -3.0) == 1.0, || {
        "saturated level gate is not 1".into()
    })?;
    Ok(format!(
        "mean leads {:.2}/{:.2}/{:.2} samples, mean |c2| {:.4}/{:.4}/{:.4}",
        means[0], means[1], means[2], mean_c2[0], mean_c2[1], mean_c2[2]
    ))
}

fn calmar_table() -> Outcome {
    let published = [
        (0.033304, -0.200671, 0.165963),
        (2.620689, -0.114912, 22.805979),
        (0.849965, -0.677898, 1.253825),
        (1.596073, -0.440523, 3.623134),
    ];
    let mut worst: f64 = 0.0;
    for (tr, mdd, expected) in published {
        let got = calmar(tr, mdd).ok_or("calmar undefined")?;
        let rel = (got - expected).abs() / expected;
        ensure(rel <= CALMAR_REL_TOL, || {
            format!("calmar({tr}, {mdd}) = {got}, expected {expected}")
        })?;
        worst = worst.max(rel);
    }
    Ok(format!("4 pairs, worst relative error {worst:.2e}"))
}

fn compare(component: Component, seed: &str, production: &[f64], reference: &[f64]) -> Result<(), String> {
    let report = oracle_compare(component, seed, production, reference);
    ensure(report.passed, || serde_json::to_string(&report).unwrap())
}

fn oracles() -> Outcome {
    let mut rng = CaseRng::from_text("acceptance-hysteresis");
    for case in 0..1000 {
        let len = 1 + rng.below(500);
        let signal: Vec<f64> = (0..len).map(|_| 1.5 * rng.normal()).collect();
        let start = rng.below(2) as u8;
        for theta in [0.6, 0.8, 1.0, 1.4, 1.6] {
            let prod: Vec<f64> = run_hysteresis(&signal, theta, Position::try_from(start).unwrap())
                .iter()
                .map(|p| p.as_u8() as f64)
                .collect();
            let reference: Vec<f64> = oracle::hysteresis(&signal, theta, start).iter().map(|&p| p as f64).collect();
            compare(
                Component::Hysteresis,
                &format!("hysteresis case {case} theta {theta}"),
                &prod,
                &reference,
            )?;
        }
    }

    let mut rng = CaseRng::from_text("acceptance-normalization");
    let x: Vec<f64> = (0..5000).map(|_| 50.0 + 15.0 * rng.normal()).collect();
    let w = 1000;
    let s = Series::new(x.clone(), 0);
    let n = normalize_series(&s, w, 1e-9);
    compare(
        Component::RollingMedian,
        "median",
        n.baseline.values(),
        &oracle::rolling_median(&x, 0, w),
    )?;
    compare(
        Component::RollingMad,
        "mad",
        n.scale.values(),
        &oracle::rolling_mad(n.centered.values(), n.centered.valid_from(), w, 1e-9),
    )?;
    compare(
        Component::Normalization,
        "normalization",
        n.z.values(),
        &oracle::normalize(&x, 0, w, 1e-9),
    )?;

    let data = synth(5000, "acceptance-indicators");
    let closes = data.closes();
    let bars = tuples(&data);
    compare(Component::Rsi, "rsi", rsi(&closes, 14).values(), &oracle::rsi(&closes, 14))?;
    compare(
        Component::Mfi,
        "mfi",
        mfi(&data.candles, 14).values(),
        &oracle::mfi(&bars, 14),
    )?;
    compare(
        Component::MacdHist,
        "macd",
        macd_hist(&closes, 12, 26, 9).values(),
        &oracle::macd_hist(&closes, 12, 26, 9),
    )?;
    compare(
        Component::BbPercent,
        "bb",
        bb_percent(&closes, 20, 2.0).values(),
        &oracle::bb_percent(&closes, 20, 2.0),
    )?;
    // the full panel through normalization, against the oracle composite inputs
    let panel = compute_panel(&data, &IndicatorConfig::default()).unwrap();
    let norm = normalize(&panel, 500, 1e-9).unwrap();
    for k in IndicatorKey::ALL {
        let p = panel.get(k);
        compare(
            Component::Normalization,
            k.name(),
            norm.z(k).values(),
            &oracle::normalize(p.values(), p.valid_from(), 500, 1e-9),
        )?;
    }

    let mut rng = CaseRng::from_text("acceptance-mdd");
    for _ in 0..500 {
        let mut v = 1.0;
        let equity: Vec<f64> = (0..1 + rng.below(400))
            .map(|_| {
                v *= 1.0 + 0.02 * rng.normal();
                v
            })
            .collect();
        let (a, b) = (max_drawdown(&equity).unwrap(), oracle::max_drawdown(&equity));
        ensure(a.to_bits() == b.to_bits(), || format!("max drawdown {a} vs {b}"))?;
    }

    let mut rng = CaseRng::from_text("acceptance-selection");
    let p = ParamSet::new(SignalParams::default(), 720, 3.0).unwrap();
    for _ in 0..1000 {
        let scores: Vec<CandidateScore> = (0..1 + rng.below(30))
            .map(|index| CandidateScore {
                params: p,
                index,
                j_val: rng.below(3) as f64 * 0.5,
                pnl_val: 0.0,
                turnover_val: rng.below(4),
                t_eval: p.w_val,
            })
            .collect();
        let pairs: Vec<(f64, usize)> = scores.iter().map(|s| (s.j_val, s.turnover_val)).collect();
        let (a, b) = (select(&scores, 0.0).map(|s| s.index), oracle::select(&pairs));
        ensure(a == b, || format!("selection {a:?} vs {b:?}"))?;
    }

    let data = synth(2000, "acceptance-walkforward");
    let cfg = small_config(200, vec![240, 360], vec![2.0, 3.0], vec![0.5, 1.5]);
    let engine = Engine::prepare(&data, &cfg).map_err(|e| e.to_string())?;
    let result = engine.run(&cfg, &[], |_| {}).map_err(|e| e.to_string())?;
    let reference = oracle::pipeline::walk_forward(&tuples(&data), &oracle_config(&cfg), result.t0);
    ensure(result.epochs.len() == reference.len() && !reference.is_empty(), || {
        format!("{} epochs vs {} in the reference", result.epochs.len(), reference.len())
    })?;
    let candidates = cfg.grid.candidates(cfg.weights).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
    let mut max_j_diff: f64 = 0.0;
    for (e, r) in result.epochs.iter().zip(&reference) {
        ensure(e.boundary_t == r.boundary && e.selected_index == r.selected, || {
            format!("epoch at {}: selected {} vs {}", e.boundary_t, e.selected_index, r.selected)
        })?;
        for (s, j) in engine.score_all(e.boundary_t, &candidates, cfg.theta, &pool).iter().zip(&r.j) {
            match (s, j) {
                (Ok(s), Some(j)) => max_j_diff = max_j_diff.max((s.j_val - j).abs()),
                (Err(_), None) => {}
                _ => return Err(format!("feasibility differs at {}", e.boundary_t)),
            }
        }
        compare(Component::Objective, "oos", &e.oos_returns, &r.oos_returns)?;
    }
    ensure(max_j_diff <= ORACLE_ABS_TOL, || format!("J differs by {max_j_diff}"))?;
    Ok(format!(
        "5000 hysteresis runs, median/MAD/Z, 4 indicators, 500 drawdowns, 1000 selections, {} walk-forward epochs (max J diff {max_j_diff:.1e})",
        reference.len()
    ))
}

fn window_algebra() -> Outcome {
    let grid = Grid::default();
    for &w_fit in &grid.w_fit {
        for &rho in &grid.rho {
            let p = ParamSet::new(SignalParams::default(), w_fit, rho).map_err(|e| e.to_string())?;
            let expected = (w_fit as f64 / rho).round() as usize;
            ensure(
                p.w_val == expected && p.w_exec == p.w_val && validation_window(w_fit, rho) == expected,
                || format!("({w_fit}, {rho}) gives w_val {} w_exec {}", p.w_val, p.w_exec),
            )?;
        }
    }
    let pairs = grid.w_fit.len() * grid.rho.len();
    ensure(pairs == 20, || format!("{pairs} window pairs"))?;
    ensure(
        validation_window(720, 3.0) == 240 && validation_window(12000, 6.0) == 2000,
        || "worked examples".into(),
    )?;
    let n = grid.candidates(Weights::uniform()).map_err(|e| e.to_string())?.len();
    ensure(n == 960, || format!("{n} candidates"))?;
    Ok(format!("{pairs} window pairs, {n} candidates"))
}

fn reduced_config(workers: usize) -> WalkForwardConfig {
    WalkForwardConfig {
        workers,
        grid: Grid {
            n_diff: vec![2],
            w_ma: vec![2],
            lambda1: vec![0.5, 1.5],
            lambda2: vec![0.5],
            amp: vec![1.0],
            w_fit: vec![720, 1440],
            rho: vec![2.0, 3.0],
        },
        ..Default::default()
    }
}

fn encode(result: &WalkForwardResult) -> (Vec<u8>, Vec<u8>) {
    let meta = RecordMeta {
        schema: "epoch".into(),
        run_digest: None,
    };
    let mut records = Vec::new();
    write_records(&mut records, Some(&meta), &result.epochs).unwrap();
    let mut equity = Vec::new();
    write_columnar(&mut equity, None, &[Column::Float("equity", &result.global_equity)]).unwrap();
    (records, equity)
}

fn determinism(data: &fwdsig::market_data::CandleSeries) -> Result<(String, WalkForwardResult), String> {
    let mut outputs = Vec::new();
    let mut first = None;
    for workers in [1, 4, 8] {
        let result = fwdsig::walkforward::run_walkforward(data, &reduced_config(workers)).map_err(|e| e.to_string())?;
        outputs.push((workers, encode(&result)));
        first.get_or_insert(result);
    }
    let (_, reference) = &outputs[0];
    for (workers, out) in &outputs[1..] {
        ensure(out.0 == reference.0, || {
            format!("epoch records differ with {workers} workers")
        })?;
        ensure(out.1 == reference.1, || {
            format!("global equity differs with {workers} workers")
        })?;
    }
    let result = first.unwrap();
    Ok((
        format!(
            "{} epochs, {} record bytes identical for 1/4/8 workers",
            result.epochs.len(),
            reference.0.len()
        ),
        result,
    ))
}

fn tiling(result: &WalkForwardResult, closes: &[f64]) -> Outcome {
    let epochs = &result.epochs;
    ensure(!epochs.is_empty(), || "no epochs".into())?;
    ensure(epochs[0].oos_start == result.t0, || "first block does not start at t0".into())?;
    for (i, e) in epochs.iter().enumerate() {
        ensure(e.boundary_t == e.oos_start, || {
            format!("epoch {i} trades away from its boundary")
        })?;
        ensure(e.oos_end - e.oos_start == e.selected.w_exec, || {
            format!("epoch {i} does not advance by w_exec")
        })?;
        ensure(
            e.oos_returns.len() == e.selected.w_exec && e.oos_positions.len() == e.selected.w_exec,
            || format!("epoch {i} block length"),
        )?;
        if let Some(next) = epochs.get(i + 1) {
            ensure(next.oos_start == e.oos_end, || format!("gap or overlap after epoch {i}"))?;
            ensure(next.carry_in == e.carry_out, || {
                format!("position not carried after epoch {i}")
            })?;
        }
    }
    let concat: Vec<f64> = epochs.iter().flat_map(|e| e.oos_returns.clone()).collect();
    ensure(common::same_bits(&concat, &result.global_returns), || {
        "global returns are not the concatenation".into()
    })?;

    let durations = run_lengths(&result.global_positions);
    let long = result.global_positions.iter().filter(|p| p.is_long()).count();
    ensure(durations.total() == long, || {
        format!("durations {} vs long bars {long}", durations.total())
    })?;
    let turnover = transitions(Position::Flat, &result.global_positions);
    let per_epoch: usize = epochs.iter().map(|e| e.oos_turnover).sum();
    ensure(turnover == result.turnover() && turnover == per_epoch, || {
        format!("turnover {turnover}, result {}, epochs {per_epoch}", result.turnover())
    })?;
    let expected = 2 * durations.runs.len() - usize::from(durations.open_ended);
    ensure(turnover == expected, || format!("turnover {turnover} vs 2 x runs {expected}"))?;

    // the same identities through the single-path equity curve
    let path = fwdsig::PositionPath {
        positions: result.global_positions.clone(),
        theta: result.theta,
        start_state: Position::Flat,
        valid_from: 0,
    };
    let curve = EquityCurve::from_path(&path, &closes[result.oos_range()]).map_err(|e| e.to_string())?;
    ensure(curve.turnover == turnover && curve.durations.total() == long, || {
        "equity curve identities".into()
    })?;

    let chained = epochs.iter().fold(1.0, |v, e| v * (1.0 + e.oos_pnl));
    let last = *result.global_equity.last().unwrap();
    ensure((chained - last).abs() <= CHAIN_REL_TOL * last.abs(), || {
        format!("chained {chained} vs compounded {last}")
    })?;
    Ok(format!(
        "{} contiguous blocks over {} bars, {long} long bars, turnover {turnover}",
        epochs.len(),
        result.global_returns.len()
    ))
}

fn sweep_trends(data: &fwdsig::market_data::CandleSeries) -> Outcome {
    let panel = compute_panel(data, &IndicatorConfig::default()).map_err(|e| e.to_string())?;
    let norm = normalize(
        &panel,
        fwdsig::normalization::DEFAULT_W_NORM,
        fwdsig::normalization::DEFAULT_EPS,
    )
    .map_err(|e| e.to_string())?;
    let base = SignalBase::new(&norm, Weights::uniform());
    let grid = GateGrid::default();
    let points: Vec<(GateAxis, GatePoint)> = grid.cartesian().into_iter().map(|p| (GateAxis::All, p)).collect();
    let rows = median_abs_sweep(&base, &points, 2, 2, None).map_err(|e| e.to_string())?;
    let at = |l1: f64, l2: f64, a: f64| {
        rows.iter()
            .find(|r| r.point.lambda1 == l1 && r.point.lambda2 == l2 && r.point.amp == a)
            .unwrap()
            .median_abs_f
    };
    let mut checked = 0;
    for &l2 in &grid.lambda2 {
        for &a in &grid.amp {
            let v: Vec<f64> = grid.lambda1.iter().map(|&l1| at(l1, l2, a)).collect();
            ensure(v.windows(2).all(|w| w[0] <= w[1]), || {
                format!("not non-decreasing in lambda1 at lambda2 {l2}, A {a}: {v:?}")
            })?;
            checked += 1;
        }
    }
    for &l1 in &grid.lambda1 {
        for &a in &grid.amp {
            let v: Vec<f64> = grid.lambda2.iter().map(|&l2| at(l1, l2, a)).collect();
            ensure(v.windows(2).all(|w| w[0] >= w[1]), || {
                format!("not non-increasing in lambda2 at lambda1 {l1}, A {a}: {v:?}")
            })?;
            checked += 1;
        }
        for &l2 in &grid.lambda2 {
            let v: Vec<f64> = grid.amp.iter().map(|&a| at(l1, l2, a)).collect();
            ensure(v.windows(2).all(|w| w[0] <= w[1]), || {
                format!("not non-decreasing in A at lambda1 {l1}, lambda2 {l2}: {v:?}")
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "{} grid points, {checked} monotone lines over {} bars",
        rows.len(),
        rows[0].bars
    ))
}

fn degenerate() -> Outcome {
    let cfg = WalkForwardConfig {
        w_norm: 500,
        grid: Grid {
            w_fit: vec![720, 1440],
            rho: vec![2.0, 3.0],
            ..Grid::default()
        },
        ..Default::default()
    };
    let data = constant(6000, 123.45, 7.0);
    let panel = compute_panel(&data, &cfg.indicators).map_err(|e| e.to_string())?;
    for (k, expected) in [
        (IndicatorKey::Rsi, 50.0),
        (IndicatorKey::Mfi, 50.0),
        (IndicatorKey::Bbp, 50.0),
        (IndicatorKey::Macd, 0.0),
    ] {
        ensure(panel.get(k).valid().iter().all(|v| *v == expected), || {
            format!("{k} is not {expected}")
        })?;
    }
    let norm = normalize(&panel, cfg.w_norm, cfg.eps).map_err(|e| e.to_string())?;
    for k in IndicatorKey::ALL {
        ensure(norm.z(k).valid().iter().all(|v| *v == 0.0), || format!("Z {k} is not 0"))?;
    }
    let base = SignalBase::new(&norm, Weights::uniform());
    for p in GateGrid::default().cartesian() {
        let sig = SignalParams {
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            amp: p.amp,
            ..Default::default()
        };
        let frame = base.frame(&sig).map_err(|e| e.to_string())?;
        ensure(frame.f.valid().iter().all(|v| *v == 0.0), || "F is not 0".into())?;
        let path = hysteresis_positions(&frame.f, cfg.theta, Position::Flat).map_err(|e| e.to_string())?;
        ensure(path.positions.iter().all(|p| *p == Position::Flat), || {
            "position left flat".into()
        })?;
        let curve = EquityCurve::from_path(&path, &data.closes()).map_err(|e| e.to_string())?;
        ensure(curve.equity.iter().all(|v| *v == 1.0), || "equity moved".into())?;
        let stats = duration_stats(&curve.durations, None, PercentileMethod::Linear);
        ensure(stats.count == 0 && stats.summary.is_none(), || {
            "duration stats not empty".into()
        })?;
    }
    let engine = Engine::from_parts(base, &data.closes(), data.timestamps());
    let walk = engine.run(&cfg, &[], |_| {}).map_err(|e| e.to_string())?;
    ensure(walk.global_equity.iter().all(|v| *v == 1.0), || {
        "walk-forward equity moved".into()
    })?;
    ensure(walk.global_positions.iter().all(|p| *p == Position::Flat), || {
        "walk-forward traded".into()
    })?;
    ensure(run_lengths(&walk.global_positions).runs.is_empty(), || {
        "walk-forward has long runs".into()
    })?;
    Ok(format!(
        "6000 constant bars, 48 gate configs, {} walk-forward epochs",
        walk.epochs.len()
    ))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .cloned()
                    .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
            ))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id} {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name} ({secs:.1}s): {detail}");
            }
        }
    };

    let synthetic_30k = synth(30_000, "acceptance-30k");
    let mut reduced: Option<WalkForwardResult> = None;

    report(1, "strict causality", &mut causality);
    report(2, "derivative-leading demo", &mut appendix_demo);
    report(3, "calmar consistency", &mut calmar_table);
    report(4, "oracle equivalence", &mut oracles);
    report(5, "window algebra and grid size", &mut window_algebra);
    report(6, "determinism across workers", &mut || {
        let (detail, result) = determinism(&synthetic_30k)?;
        reduced = Some(result);
        Ok(detail)
    });
    report(7, "structural tiling", &mut || match &reduced {
        Some(r) => tiling(r, &synthetic_30k.closes()),
        None => {
            let r = fwdsig::walkforward::run_walkforward(&synthetic_30k, &reduced_config(1)).map_err(|e| e.to_string())?;
            tiling(&r, &synthetic_30k.closes())
        }
    });
    report(8, "gate sweep trends", &mut || sweep_trends(&synthetic_30k));
    report(9, "degenerate input", &mut degenerate);

    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
