//! Single-path evolution of the stock, the realised-variance estimators, the
//! leverage, and the index processes.
//!
//! Three coupled processes are advanced from the same Gaussian draws:
//!
//! * the model-free discrete index `I~` (arithmetic gross returns, can go
//!   nonpositive on extreme paths, in which case the path is flagged),
//! * the continuous-time index `I` (log-space, structurally positive),
//! * the simplified process `X` whose variance driver uses the diffusion
//!   increment alone (the reduction device used by the limit theory).
//!
//! Per step `n`, the leverage is `target_vol / sqrt(v)` with `v` the variance
//! state as of step `n - leverage_lag` (the seed `v0` before that).

use crate::error::{Error, Result};
use crate::market::{MarketParams, SegmentStats};
use crate::multipliers::LambdaParam;

/// Uniform time grid: `t_n = n * horizon / steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    steps: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!("grid horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        Ok(GridSpec { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_n` computed as `n * T / N` so grid times do not accumulate drift.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.horizon / self.steps as f64
    }
}

/// Which realised-variance estimator drives the leverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// EWMA recursion `v_n = lambda v_{n-1} + (1-lambda)/dt * ret^2`.
    Ewma,
    /// Simple moving average of the last `window` squared annualised returns
    /// (seeded with `v0` weight during warm-up).
    Sma { window: u32 },
    /// Two EWMA estimators with decays `lambda1`, `lambda2`; leverage is the
    /// minimum of `max_leverage` and the two implied leverages.
    Capped { lambda1: LambdaParam, lambda2: LambdaParam, max_leverage: f64 },
    /// EWMA index accruing the adjustment rate `a(t)` on the risky leg
    /// (dividend protection or fee).
    FeeAdjusted,
}

/// Full static configuration of one index.
#[derive(Debug, Clone)]
pub struct IndexConfig {
    pub lambda: LambdaParam,
    /// Target volatility (per sqrt-year).
    pub target_vol: f64,
    /// Initial annual variance seed.
    pub v0: f64,
    /// Initial index level.
    pub i0: f64,
    pub variant: Variant,
    /// Leverage at step n uses the variance state of step n - lag.
    pub leverage_lag: usize,
}

impl IndexConfig {
    pub fn new(
        lambda: LambdaParam,
        target_vol: f64,
        v0: f64,
        i0: f64,
        variant: Variant,
        leverage_lag: usize,
    ) -> Result<Self> {
        if !(target_vol > 0.0) {
            return Err(Error::invalid(format!("target_vol must be positive, got {target_vol}")));
        }
        if !(v0 > 0.0) {
            return Err(Error::invalid(format!("v0 must be positive, got {v0}")));
        }
        if !(i0 > 0.0) {
            return Err(Error::invalid(format!("i0 must be positive, got {i0}")));
        }
        if leverage_lag == 0 {
            return Err(Error::invalid("leverage_lag must be at least 1"));
        }
        match variant {
            Variant::Sma { window } if window < 3 => {
                return Err(Error::invalid("SMA window must be at least 3"));
            }
            Variant::Capped { max_leverage, .. } if !(max_leverage > 0.0) => {
                return Err(Error::invalid("max_leverage must be positive"));
            }
            _ => {}
        }
        Ok(IndexConfig { lambda, target_vol, v0, i0, variant, leverage_lag })
    }

    /// Plain EWMA index with leverage lag 1.
    pub fn ewma(lambda: LambdaParam, target_vol: f64, v0: f64, i0: f64) -> Result<Self> {
        IndexConfig::new(lambda, target_vol, v0, i0, Variant::Ewma, 1)
    }
}

// ---------------------------------------------------------------------------
// Step primitives
// ---------------------------------------------------------------------------

/// Exact log-return of the stock over one segment:
/// `(rho_n - sigma_n^2/2) dt + sigma_n sqrt(dt) Z`.
pub fn stock_log_return(seg: &SegmentStats, dt: f64, z: f64) -> f64 {
    (seg.carry - 0.5 * seg.sigma_sq) * dt + seg.sigma_sq.sqrt() * dt.sqrt() * z
}

/// EWMA realised-variance recursion:
/// `lambda * v_prev + (1-lambda)/dt * simple_return^2`.
pub fn ewma_variance_step(v_prev: f64, simple_return: f64, lambda: LambdaParam, dt: f64) -> f64 {
    lambda.value() * v_prev + (1.0 - lambda.value()) / dt * simple_return * simple_return
}

/// Leverage from a (lagged) variance estimate: `target_vol / sqrt(v)`.
pub fn leverage(target_vol: f64, lagged_variance: f64) -> f64 {
    target_vol / lagged_variance.sqrt()
}

/// One step of the model-free discrete index.  The gross return is
/// `1 + (1-w) r_n dt + w * simple_return (+ w a_n dt)`; nonpositive values
/// flag the path.
pub fn discrete_index_step(
    log_index: f64,
    w: f64,
    seg: &SegmentStats,
    dt: f64,
    simple_return: f64,
    adjustment_rate: f64,
    step: usize,
) -> Result<f64> {
    let gross =
        1.0 + (1.0 - w) * seg.r * dt + w * adjustment_rate * dt + w * simple_return;
    if gross <= 0.0 {
        return Err(Error::NonpositiveIndexValue { step });
    }
    Ok(log_index + gross.ln())
}

/// One step of the continuous-time index in log space:
/// `r_n dt + w (rho_n - r_n) dt (+ w a_n dt) - w^2 sigma_n^2 dt / 2
///  + w sigma_n sqrt(dt) Z`.
pub fn continuous_index_step(
    log_index: f64,
    w: f64,
    seg: &SegmentStats,
    dt: f64,
    z: f64,
    adjustment_rate: f64,
) -> f64 {
    log_index
        + seg.r * dt
        + w * (seg.carry - seg.r) * dt
        + w * adjustment_rate * dt
        - 0.5 * w * w * seg.sigma_sq * dt
        + w * seg.sigma_sq.sqrt() * dt.sqrt() * z
}

/// One step of the simplified process: the same increment form with the
/// diffusion-driven variance `u` in place of `v`, and
/// `u_n = lambda u_{n-1} + (1-lambda)/dt (sigma_n sqrt(dt) Z)^2`.
pub fn simplified_process_step(
    log_x: f64,
    u_lagged: f64,
    u_prev: f64,
    config: &IndexConfig,
    seg: &SegmentStats,
    dt: f64,
    z: f64,
    adjustment_rate: f64,
) -> (f64, f64) {
    let w = leverage(config.target_vol, u_lagged);
    let new_log = continuous_index_step(log_x, w, seg, dt, z, adjustment_rate);
    let diffusion = seg.sigma_sq.sqrt() * dt.sqrt() * z;
    let new_u = config.lambda.value() * u_prev
        + (1.0 - config.lambda.value()) / dt * diffusion * diffusion;
    (new_log, new_u)
}

// ---------------------------------------------------------------------------
// Path evolution
// ---------------------------------------------------------------------------

/// Terminal log-levels of one simulated path.  `log_index_discrete` is `None`
/// when the discrete definition produced a nonpositive gross return.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub log_index_discrete: Option<f64>,
    pub log_index_continuous: f64,
    pub log_simplified: f64,
}

impl PathResult {
    pub fn flagged(&self) -> bool {
        self.log_index_discrete.is_none()
    }
}

/// Variance state fed to the leverage, kept per lag slot.  The second
/// component is only distinct for the capped (two-estimator) variant.
#[derive(Clone, Copy)]
struct VarSnapshot {
    v1: f64,
    v2: f64,
}

/// SMA needs a window of past annualised squared returns plus the seed blend.
struct SmaState {
    window: usize,
    ring: Vec<f64>,
    count: usize,
    v0: f64,
}

impl SmaState {
    fn new(window: usize, v0: f64) -> Self {
        SmaState { window, ring: vec![0.0; window], count: 0, v0 }
    }

    fn push(&mut self, xi: f64) {
        self.ring[self.count % self.window] = xi;
        self.count += 1;
    }

    /// `(1 - n/L) v0 + (1/L) sum xi` during warm-up, plain window average
    /// afterwards.
    fn variance(&self) -> f64 {
        let l = self.window as f64;
        if self.count >= self.window {
            self.ring.iter().sum::<f64>() / l
        } else {
            let filled: f64 = self.ring[..self.count].iter().sum();
            (1.0 - self.count as f64 / l) * self.v0 + filled / l
        }
    }
}

/// Run one path on a precomputed segment table.  All three processes are fed
/// the same draws, which is what makes pathwise difference diagnostics
/// meaningful.  `z_stream` must hold exactly one standard normal per step.
pub fn run_path_on_segments(
    segments: &[SegmentStats],
    config: &IndexConfig,
    grid: &GridSpec,
    z_stream: &[f64],
    mut leverage_trace: Option<&mut Vec<f64>>,
) -> Result<PathResult> {
    if z_stream.len() != grid.steps() {
        return Err(Error::invalid(format!(
            "z_stream has {} draws, grid has {} steps",
            z_stream.len(),
            grid.steps()
        )));
    }
    if segments.len() != grid.steps() {
        return Err(Error::invalid("segment table does not match the grid"));
    }
    let dt = grid.dt();
    let lag = config.leverage_lag;
    let fee_adjusted = matches!(config.variant, Variant::FeeAdjusted);

    // lag ring of variance snapshots; front = state of step n - lag
    let mut lagged: Vec<VarSnapshot> = vec![VarSnapshot { v1: config.v0, v2: config.v0 }; lag];
    let mut lag_head = 0usize;
    let mut u_lagged: Vec<f64> = vec![config.v0; lag];

    let mut ewma_v = config.v0;
    let mut capped = (config.v0, config.v0);
    let mut sma = match config.variant {
        Variant::Sma { window } => Some(SmaState::new(window as usize, config.v0)),
        _ => None,
    };

    let mut u = config.v0;
    let mut log_disc = Some(config.i0.ln());
    let mut log_cont = config.i0.ln();
    let mut log_x = config.i0.ln();

    for (n, (seg, &z)) in segments.iter().zip(z_stream).enumerate() {
        let snapshot = lagged[lag_head];
        let w = match config.variant {
            Variant::Ewma | Variant::Sma { .. } | Variant::FeeAdjusted => {
                leverage(config.target_vol, snapshot.v1)
            }
            Variant::Capped { max_leverage, .. } => max_leverage
                .min(leverage(config.target_vol, snapshot.v1))
                .min(leverage(config.target_vol, snapshot.v2)),
        };
        if let Some(trace) = leverage_trace.as_deref_mut() {
            trace.push(w);
        }
        let adjustment = if fee_adjusted { seg.adjustment } else { 0.0 };

        let log_ret = stock_log_return(seg, dt, z);
        let simple_ret = log_ret.exp_m1();

        if let Some(ld) = log_disc {
            match discrete_index_step(ld, w, seg, dt, simple_ret, adjustment, n + 1) {
                Ok(new) => log_disc = Some(new),
                Err(Error::NonpositiveIndexValue { .. }) => log_disc = None,
                Err(e) => return Err(e),
            }
        }
        log_cont = continuous_index_step(log_cont, w, seg, dt, z, adjustment);

        let (new_log_x, new_u) = simplified_process_step(
            log_x,
            u_lagged[lag_head],
            u,
            config,
            seg,
            dt,
            z,
            adjustment,
        );
        log_x = new_log_x;
        u = new_u;

        // advance the variance estimator(s)
        let new_snapshot = match config.variant {
            Variant::Ewma | Variant::FeeAdjusted => {
                ewma_v = ewma_variance_step(ewma_v, simple_ret, config.lambda, dt);
                VarSnapshot { v1: ewma_v, v2: ewma_v }
            }
            Variant::Sma { .. } => {
                let state = sma.as_mut().unwrap();
                state.push(simple_ret * simple_ret / dt);
                let v = state.variance();
                VarSnapshot { v1: v, v2: v }
            }
            Variant::Capped { lambda1, lambda2, .. } => {
                capped.0 = ewma_variance_step(capped.0, simple_ret, lambda1, dt);
                capped.1 = ewma_variance_step(capped.1, simple_ret, lambda2, dt);
                VarSnapshot { v1: capped.0, v2: capped.1 }
            }
        };
        lagged[lag_head] = new_snapshot;
        u_lagged[lag_head] = u;
        lag_head = (lag_head + 1) % lag;
    }

    Ok(PathResult {
        log_index_discrete: log_disc,
        log_index_continuous: log_cont,
        log_simplified: log_x,
    })
}

/// Run one path directly from market curves (builds the segment table).
pub fn run_path(
    market: &MarketParams,
    config: &IndexConfig,
    grid: &GridSpec,
    z_stream: &[f64],
) -> Result<PathResult> {
    let segments = market.segment_table(grid.horizon(), grid.steps())?;
    run_path_on_segments(&segments, config, grid, z_stream, None)
}

/// Like `run_path` but also returns the per-step leverage.
pub fn run_path_traced(
    market: &MarketParams,
    config: &IndexConfig,
    grid: &GridSpec,
    z_stream: &[f64],
) -> Result<(PathResult, Vec<f64>)> {
    let segments = market.segment_table(grid.horizon(), grid.steps())?;
    let mut trace = Vec::with_capacity(grid.steps());
    let result = run_path_on_segments(&segments, config, grid, z_stream, Some(&mut trace))?;
    Ok((result, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(v: f64) -> LambdaParam {
        LambdaParam::new(v).unwrap()
    }

    fn seg(r: f64, carry: f64, sigma: f64) -> SegmentStats {
        SegmentStats { r, carry, sigma_sq: sigma * sigma, adjustment: 0.0 }
    }

    #[test]
    fn stock_log_return_hand_values() {
        // drift cancels when rho = sigma^2/2 and Z = 0
        let s = seg(0.0, 0.125, 0.5);
        assert_eq!(stock_log_return(&s, 0.01, 0.0), 0.0);
        // rho=0.03, sigma=0.5, dt=0.01, Z=1: (0.03-0.125)*0.01 + 0.5*0.1
        let s = seg(0.0, 0.03, 0.5);
        assert!((stock_log_return(&s, 0.01, 1.0) - 0.04905).abs() < 1e-15);
    }

    #[test]
    fn ewma_step_hand_values() {
        let l = lam(0.9);
        assert!((ewma_variance_step(0.04, 0.0, l, 1.0) - 0.036).abs() < 1e-15);
        // 0.9*0.04 + 0.1*252*0.0001
        let got = ewma_variance_step(0.04, 0.01, l, 1.0 / 252.0);
        assert!((got - 0.038520).abs() < 1e-12);
    }

    #[test]
    fn ewma_recursion_matches_closed_sum() {
        // v_n = lambda^n v0 + (1-lambda)/dt sum lambda^{n-k} ret_k^2
        let l = lam(0.77);
        let dt = 1.0 / 252.0;
        let v0 = 0.03;
        let mut state = 12345u64;
        for _ in 0..100 {
            let rets: Vec<f64> = (0..50)
                .map(|_| {
                    // cheap deterministic pseudo-returns, value range ~ +-3%
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.06
                })
                .collect();
            let mut v = v0;
            for &r in &rets {
                v = ewma_variance_step(v, r, l, dt);
            }
            let n = rets.len();
            let mut closed = l.value().powi(n as i32) * v0;
            for (k, &r) in rets.iter().enumerate() {
                closed += (1.0 - l.value()) / dt * l.value().powi((n - 1 - k) as i32) * r * r;
            }
            assert!((v - closed).abs() < 1e-12, "recursion vs closed sum: {v} vs {closed}");
        }
    }

    #[test]
    fn leverage_values() {
        assert!((leverage(0.2, 0.04) - 1.0).abs() < 1e-15);
        assert!((leverage(0.2, 0.02) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn discrete_step_hand_value() {
        // w=1.4142, r=0.05, dt=0.01, simple return 2%
        let s = seg(0.05, 0.0, 0.5);
        let got = discrete_index_step(0.0, 1.4142, &s, 0.01, 0.02, 0.0, 1).unwrap();
        let gross: f64 = 1.0 + (1.0 - 1.4142) * 0.0005 + 1.4142 * 0.02;
        assert!((got - gross.ln()).abs() < 1e-15);
        assert!((gross - 1.0280769).abs() < 1e-7);
    }

    #[test]
    fn discrete_step_degenerate_legs() {
        let s = seg(0.07, 0.0, 0.5);
        // w = 1: gross return is the stock ratio exactly
        let got = discrete_index_step(0.0, 1.0, &s, 0.01, 0.025, 0.0, 1).unwrap();
        assert!((got - 1.025f64.ln()).abs() < 1e-15);
        // w = 0: cash leg only
        let got = discrete_index_step(0.0, 0.0, &s, 0.01, 0.025, 0.0, 1).unwrap();
        assert!((got - (1.0 + 0.0007f64).ln()).abs() < 1e-15);
        // crash wipes out a leveraged path
        let err = discrete_index_step(0.0, 2.0, &s, 0.01, -0.6, 0.0, 7);
        assert!(matches!(err, Err(Error::NonpositiveIndexValue { step: 7 })));
    }

    #[test]
    fn continuous_step_trivial_cases() {
        let s = seg(0.05, 0.05, 0.5);
        // w = 0: pure cash accrual
        assert!((continuous_index_step(0.0, 0.0, &s, 0.01, 1.7, 0.0) - 0.0005).abs() < 1e-15);
        // w = 1, rho = r: GBM log-return with rate r
        let got = continuous_index_step(0.0, 1.0, &s, 0.01, 1.0, 0.0);
        let want = 0.05 * 0.01 - 0.5 * 0.25 * 0.01 + 0.5 * 0.1;
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn simplified_step_updates() {
        let config = IndexConfig::ewma(lam(0.9), 0.2, 0.02, 1.0).unwrap();
        let s = seg(0.05, 0.03, 0.5);
        // Z = 0: u decays by lambda and the increment has no diffusion term
        let (logx, u) = simplified_process_step(0.0, 0.02, 0.02, &config, &s, 0.01, 0.0, 0.0);
        assert!((u - 0.9 * 0.02).abs() < 1e-15);
        let w = leverage(0.2, 0.02);
        let want = 0.05 * 0.01 + w * (0.03 - 0.05) * 0.01 - 0.5 * w * w * 0.25 * 0.01;
        assert!((logx - want).abs() < 1e-15);
    }

    #[test]
    fn u_closed_form_identity_constant_sigma() {
        // sigma^{-2} u_n = lambda^n sigma^{-2} v0 + (1-lambda) sum lambda^{n-k} Z_k^2
        let config = IndexConfig::ewma(lam(0.85), 0.2, 0.02, 1.0).unwrap();
        let s = seg(0.0, 0.0, 0.5);
        let dt = 1.0 / 500.0;
        let zs: Vec<f64> = (0..20).map(|i| ((i * 37 + 11) % 19) as f64 / 9.0 - 1.0).collect();
        let mut u = config.v0;
        for &z in &zs {
            let (_, nu) = simplified_process_step(0.0, u, u, &config, &s, dt, z, 0.0);
            u = nu;
        }
        let sigma_sq = 0.25;
        let n = zs.len();
        let mut closed = 0.85f64.powi(n as i32) * config.v0 / sigma_sq;
        for (k, &z) in zs.iter().enumerate() {
            closed += (1.0 - 0.85) * 0.85f64.powi((n - 1 - k) as i32) * z * z;
        }
        assert!((u / sigma_sq - closed).abs() < 1e-12);
    }

    #[test]
    fn single_step_path_composes_step_formulas() {
        let market = MarketParams::constant(0.05, 0.03, 0.5, 1.0).unwrap();
        let config = IndexConfig::ewma(lam(0.9), 0.2, 0.02, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 1).unwrap();
        let z = 0.6;
        let res = run_path(&market, &config, &grid, &[z]).unwrap();

        let s = seg(0.05, 0.03, 0.5);
        let w = leverage(0.2, 0.02);
        let log_ret = stock_log_return(&s, 1.0, z);
        let want_disc = discrete_index_step(0.0, w, &s, 1.0, log_ret.exp_m1(), 0.0, 1).unwrap();
        let want_cont = continuous_index_step(0.0, w, &s, 1.0, z, 0.0);
        assert!((res.log_index_discrete.unwrap() - want_disc).abs() < 1e-15);
        assert!((res.log_index_continuous - want_cont).abs() < 1e-15);
        assert!((res.log_simplified - want_cont).abs() < 1e-15); // u_0 = v_0
    }

    #[test]
    fn capped_with_infinite_cap_reproduces_ewma_bitwise() {
        let market = MarketParams::constant(0.05, 0.03, 0.5, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 64).unwrap();
        let zs: Vec<f64> = (0..64).map(|i| ((i * 29 + 3) % 41) as f64 / 20.0 - 1.0).collect();
        let ewma = IndexConfig::ewma(lam(0.9), 0.2, 0.02, 1.0).unwrap();
        let capped = IndexConfig::new(
            lam(0.9),
            0.2,
            0.02,
            1.0,
            Variant::Capped {
                lambda1: lam(0.9),
                lambda2: lam(0.9),
                max_leverage: f64::INFINITY,
            },
            1,
        )
        .unwrap();
        let a = run_path(&market, &ewma, &grid, &zs).unwrap();
        let b = run_path(&market, &capped, &grid, &zs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn capped_leverage_binds() {
        let market = MarketParams::constant(0.05, 0.03, 0.5, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 8).unwrap();
        let zs = vec![0.0; 8];
        let config = IndexConfig::new(
            lam(0.9),
            0.2,
            0.02, // implied leverage sqrt(2) > cap
            1.0,
            Variant::Capped { lambda1: lam(0.9), lambda2: lam(0.9), max_leverage: 1.0 },
            1,
        )
        .unwrap();
        let (_, trace) = run_path_traced(&market, &config, &grid, &zs).unwrap();
        assert_eq!(trace[0], 1.0);
    }

    #[test]
    fn leverage_lag_uses_older_state() {
        let market = MarketParams::constant(0.0, 0.0, 0.5, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 4).unwrap();
        let zs = vec![1.0, -0.5, 0.25, 0.75];
        let lag1 = IndexConfig::ewma(lam(0.9), 0.2, 0.02, 1.0).unwrap();
        let mut lag2 = lag1.clone();
        lag2.leverage_lag = 2;
        let (_, t1) = run_path_traced(&market, &lag1, &grid, &zs).unwrap();
        let (_, t2) = run_path_traced(&market, &lag2, &grid, &zs).unwrap();
        // seed leverage for the first `lag` steps
        let w0 = leverage(0.2, 0.02);
        assert_eq!(t1[0], w0);
        assert_eq!(t2[0], w0);
        assert_eq!(t2[1], w0);
        assert_ne!(t1[1], w0);
        // lag-2 leverage at step 3 equals lag-1 leverage at step 2
        assert_eq!(t2[2], t1[1]);
    }

    #[test]
    fn sma_warm_up_blend_and_window() {
        let market = MarketParams::constant(0.0, 0.0, 0.5, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 6).unwrap();
        let config = IndexConfig::new(
            lam(0.9), // unused by SMA variance itself
            0.2,
            0.02,
            1.0,
            Variant::Sma { window: 3 },
            1,
        )
        .unwrap();
        let zs = vec![0.5, -0.25, 1.0, 0.0, -0.75, 0.3];
        let (_, trace) = run_path_traced(&market, &config, &grid, &zs).unwrap();
        let dt = grid.dt();
        let s = seg(0.0, 0.0, 0.5);
        let xi: Vec<f64> = zs
            .iter()
            .map(|&z| {
                let r = stock_log_return(&s, dt, z).exp_m1();
                r * r / dt
            })
            .collect();
        // step 2 sees one return: (1 - 1/3) v0 + xi_0/3
        let want = (1.0 - 1.0 / 3.0) * 0.02 + xi[0] / 3.0;
        assert!((trace[1] - leverage(0.2, want)).abs() < 1e-14);
        // step 5 sees the full window xi_1..xi_3
        let want = (xi[1] + xi[2] + xi[3]) / 3.0;
        assert!((trace[4] - leverage(0.2, want)).abs() < 1e-14);
    }

    #[test]
    fn fee_adjustment_accrues_on_both_definitions() {
        let horizon = 1.0;
        let r = crate::market::PiecewiseCurve::constant(0.05, horizon).unwrap();
        let rho = crate::market::PiecewiseCurve::constant(0.03, horizon).unwrap();
        let sigma = crate::market::PiecewiseCurve::constant(0.5, horizon).unwrap();
        let a = crate::market::PiecewiseCurve::constant(0.01, horizon).unwrap();
        let market =
            MarketParams::new(r.clone(), rho, sigma, r, Some(a)).unwrap();
        let grid = GridSpec::new(1.0, 16).unwrap();
        let zs = vec![0.1; 16];
        let plain = IndexConfig::ewma(lam(0.9), 0.2, 0.02, 1.0).unwrap();
        let mut feecfg = plain.clone();
        feecfg.variant = Variant::FeeAdjusted;
        let base = run_path(&market, &plain, &grid, &zs).unwrap();
        let fee = run_path(&market, &feecfg, &grid, &zs).unwrap();
        // positive adjustment rate raises both index definitions
        assert!(fee.log_index_continuous > base.log_index_continuous);
        assert!(fee.log_index_discrete.unwrap() > base.log_index_discrete.unwrap());
    }

    #[test]
    fn zero_like_volatility_growth_blends_rates() {
        // diffusion terms vanish; one step grows at (1-w) r + w rho
        let market = MarketParams::constant(0.05, 0.03, 1e-7, 1.0).unwrap();
        let config = IndexConfig::ewma(lam(0.9), 0.2, 0.04, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 1).unwrap();
        let res = run_path(&market, &config, &grid, &[0.0]).unwrap();
        let w = leverage(0.2, 0.04);
        let blend = (1.0 - w) * 0.05 + w * 0.03;
        assert!((res.log_index_continuous - blend).abs() < 1e-10);
    }

    #[test]
    fn grid_times_and_validation() {
        let g = GridSpec::new(1.0, 2000).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(2000), 1.0);
        assert!((g.dt() - 0.0005).abs() < 1e-18);
        assert!(GridSpec::new(0.0, 10).is_err());
        assert!(GridSpec::new(1.0, 0).is_err());
    }
}
