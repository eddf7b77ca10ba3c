//! Straight-line walk-forward reference: every stage recomputed from the
//! definitions in this crate, one loop per concept.

/// A candidate as plain numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub n_diff: usize,
    pub w_ma: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub amp: f64,
    pub w_fit: usize,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub n_rsi: usize,
    pub n_mfi: usize,
    pub macd: (usize, usize, usize),
    pub n_bb: usize,
    pub k_bb: f64,
    pub w_norm: usize,
    pub eps: f64,
    pub theta: f64,
    /// Enumeration order defines tie-breaking.
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEpoch {
    pub boundary: usize,
    pub selected: usize,
    /// Objective per candidate in enumeration order; `None` if infeasible.
    pub j: Vec<Option<f64>>,
    pub oos_returns: Vec<f64>,
}

/// Composite `F0` with uniform weights, `NaN` until all four scores exist.
pub fn composite(bars: &[(f64, f64, f64, f64)], cfg: &OracleConfig) -> (Vec<f64>, usize) {
    let closes: Vec<f64> = bars.iter().map(|b| b.2).collect();
    let raw = [
        (super::rsi(&closes, cfg.n_rsi), cfg.n_rsi),
        (super::mfi(bars, cfg.n_mfi), cfg.n_mfi),
        (
            super::macd_hist(&closes, cfg.macd.0, cfg.macd.1, cfg.macd.2),
            cfg.macd.1 + cfg.macd.2 - 2,
        ),
        (super::bb_percent(&closes, cfg.n_bb, cfg.k_bb), cfg.n_bb - 1),
    ];
    let z: Vec<Vec<f64>> = raw
        .iter()
        .map(|(x, start)| super::normalize(x, *start, cfg.w_norm, cfg.eps))
        .collect();
    let valid_from = raw.iter().map(|(_, s)| s + 2 * cfg.w_norm).max().unwrap();
    let f0 = (0..bars.len())
        .map(|t| {
            if t < valid_from {
                f64::NAN
            } else {
                (z[0][t] + z[1][t] + z[2][t] + z[3][t]) / 4.0
            }
        })
        .collect();
    (f0, valid_from)
}

/// `F` for one candidate, `NaN` before its warm-up.
pub fn observable(f0: &[f64], f0_start: usize, c: &Candidate) -> Vec<f64> {
    let start = f0_start + c.n_diff + c.w_ma - 1;
    (0..f0.len())
        .map(|t| {
            if t < start {
                return f64::NAN;
            }
            let mut acc = 0.0;
            for k in t + 1 - c.w_ma..=t {
                acc += (f0[k] - f0[k - c.n_diff]) / c.n_diff as f64;
            }
            let d = acc / c.w_ma as f64;
            let c1 = (c.lambda1 * f0[t]).abs().tanh();
            let c2 = c.amp * (1.0 - (c.lambda2 * f0[t]).abs().tanh());
            c1 * f0[t] + c2 * d
        })
        .collect()
}

/// Runs the whole walk-forward from `t0`.
pub fn walk_forward(bars: &[(f64, f64, f64, f64)], cfg: &OracleConfig, t0: usize) -> Vec<OracleEpoch> {
    let n = bars.len();
    let (f0, f0_start) = composite(bars, cfg);
    let signals: Vec<Vec<f64>> = cfg.candidates.iter().map(|c| observable(&f0, f0_start, c)).collect();
    let r: Vec<f64> = (0..n)
        .map(|t| {
            if t == 0 {
                0.0
            } else {
                (bars[t].2 - bars[t - 1].2) / bars[t - 1].2
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut t = t0;
    let mut carry = 0u8;
    let mut prev_sel: Option<usize> = None;
    while t < n {
        let mut j = Vec::new();
        let mut ranked = Vec::new();
        for (i, c) in cfg.candidates.iter().enumerate() {
            let w_val = (c.w_fit as f64 / c.rho).round() as usize;
            let start = f0_start + c.n_diff + c.w_ma - 1;
            if t < start + c.w_fit + w_val {
                j.push(None);
                continue;
            }
            let block = &signals[i][t - w_val..t];
            let pos = super::hysteresis(block, cfg.theta, 0);
            let mut v = 1.0;
            let mut trades = 0;
            let mut prev = 0u8;
            for k in 0..w_val {
                let held = if k == 0 { 0 } else { pos[k - 1] };
                let ret = if held == 1 { r[t - w_val + k] } else { 0.0 };
                v *= 1.0 + ret;
                if pos[k] != prev {
                    trades += 1;
                }
                prev = pos[k];
            }
            let score = (v - 1.0) / (w_val as f64).sqrt();
            j.push(Some(score));
            ranked.push((i, score, trades));
        }
        let pick = super::select(&ranked.iter().map(|x| (x.1, x.2)).collect::<Vec<_>>())
            .map(|k| ranked[k].0)
            .or(prev_sel)
            .expect("no feasible candidate at the first boundary");
        let c = cfg.candidates[pick];
        let w_exec = (c.w_fit as f64 / c.rho).round() as usize;
        if t + w_exec > n {
            break;
        }
        let pos = super::hysteresis(&signals[pick][t..t + w_exec], cfg.theta, carry);
        let mut rets = Vec::with_capacity(w_exec);
        for k in 0..w_exec {
            let held = if k == 0 { carry } else { pos[k - 1] };
            rets.push(if held == 1 { r[t + k] } else { 0.0 });
        }
        carry = pos[w_exec - 1];
        out.push(OracleEpoch {
            boundary: t,
            selected: pick,
            j,
            oos_returns: rets,
        });
        prev_sel = Some(pick);
        t += w_exec;
    }
    out
}
