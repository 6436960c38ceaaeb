//! Deterministic market coefficients as piecewise-constant curves on `[0, T]`
//! and the per-step integrated quantities the simulation and pricer consume.

use crate::error::{Error, Result};

/// A step function on `[0, horizon]`: `values[i]` applies on
/// `[breakpoints[i], breakpoints[i+1])` with the last piece running to the
/// horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCurve {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    horizon: f64,
}

impl PiecewiseCurve {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, horizon: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::invalid(
                "curve needs equally many breakpoints and values, at least one of each",
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!("curve horizon must be positive, got {horizon}")));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::invalid("first breakpoint must be 0"));
        }
        for w in breakpoints.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::invalid("breakpoints must be strictly ascending"));
            }
        }
        if *breakpoints.last().unwrap() >= horizon {
            return Err(Error::invalid("last breakpoint must lie before the horizon"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("curve values must be finite"));
        }
        Ok(PiecewiseCurve { breakpoints, values, horizon })
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        PiecewiseCurve::new(vec![0.0], vec![value], horizon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value of the step function at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = match self.breakpoints.binary_search_by(|b| b.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.values[idx]
    }

    /// Exact integral of the step function over `[t0, t1]`.
    pub fn integrate(&self, t0: f64, t1: f64) -> Result<f64> {
        if !(0.0 <= t0 && t0 <= t1 && t1 <= self.horizon) {
            return Err(Error::invalid(format!(
                "integration interval [{t0}, {t1}] leaves the curve domain [0, {}]",
                self.horizon
            )));
        }
        let mut acc = 0.0;
        for (i, &value) in self.values.iter().enumerate() {
            let start = self.breakpoints[i];
            let end = if i + 1 < self.breakpoints.len() { self.breakpoints[i + 1] } else { self.horizon };
            let lo = start.max(t0);
            let hi = end.min(t1);
            if hi > lo {
                acc += value * (hi - lo);
            }
        }
        Ok(acc)
    }

    /// Same curve with every value transformed by `f` (e.g. squaring a
    /// volatility curve).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        PiecewiseCurve::new(
            self.breakpoints.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            self.horizon,
        )
    }

    /// Same curve with every value shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        self.map(|v| v + delta)
    }
}

/// Merged, deduplicated breakpoints of several curves (all sharing a horizon).
pub fn refined_breakpoints(curves: &[&PiecewiseCurve]) -> Vec<f64> {
    let mut pts: Vec<f64> = curves.iter().flat_map(|c| c.breakpoints.iter().copied()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// The deterministic coefficient set: risk-free rate `r`, total carry `rho`,
/// volatility `sigma`, discount rate, and an optional adjustment rate `a`
/// (dividend protection or fee).  Volatility must stay inside fixed positive
/// bounds.
#[derive(Debug, Clone)]
pub struct MarketParams {
    pub r: PiecewiseCurve,
    pub rho: PiecewiseCurve,
    pub sigma: PiecewiseCurve,
    pub r_disc: PiecewiseCurve,
    pub a: Option<PiecewiseCurve>,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl MarketParams {
    pub fn new(
        r: PiecewiseCurve,
        rho: PiecewiseCurve,
        sigma: PiecewiseCurve,
        r_disc: PiecewiseCurve,
        a: Option<PiecewiseCurve>,
    ) -> Result<Self> {
        let horizon = r.horizon();
        for (name, c) in [("rho", &rho), ("sigma", &sigma), ("r_disc", &r_disc)] {
            if c.horizon() != horizon {
                return Err(Error::invalid(format!("{name} horizon differs from r horizon")));
            }
        }
        if let Some(ref a) = a {
            if a.horizon() != horizon {
                return Err(Error::invalid("adjustment-rate horizon differs from r horizon"));
            }
        }
        let sigma_lo = sigma.min_value();
        let sigma_hi = sigma.max_value();
        if !(sigma_lo > 0.0) {
            return Err(Error::invalid(format!(
                "volatility must be bounded away from zero, min is {sigma_lo}"
            )));
        }
        Ok(MarketParams { r, rho, sigma, r_disc, a, sigma_lo, sigma_hi })
    }

    /// Constant-coefficient market with the discount rate equal to `r` and no
    /// adjustment rate.
    pub fn constant(r: f64, rho: f64, sigma: f64, horizon: f64) -> Result<Self> {
        MarketParams::new(
            PiecewiseCurve::constant(r, horizon)?,
            PiecewiseCurve::constant(rho, horizon)?,
            PiecewiseCurve::constant(sigma, horizon)?,
            PiecewiseCurve::constant(r, horizon)?,
            None,
        )
    }

    pub fn horizon(&self) -> f64 {
        self.r.horizon()
    }

    pub fn is_constant(&self) -> bool {
        self.r.is_constant()
            && self.rho.is_constant()
            && self.sigma.is_constant()
            && self.a.as_ref().map_or(true, |a| a.is_constant())
    }

    /// Time averages of (r, rho, sigma^2, a) over `[t0, t1]`.
    pub fn segment_stats(&self, t0: f64, t1: f64) -> Result<SegmentStats> {
        if !(t1 > t0) {
            return Err(Error::invalid(format!("segment [{t0}, {t1}] must have positive length")));
        }
        let dt = t1 - t0;
        let sigma_sq_curve = self.sigma.map(|v| v * v)?;
        Ok(SegmentStats {
            r: self.r.integrate(t0, t1)? / dt,
            carry: self.rho.integrate(t0, t1)? / dt,
            sigma_sq: sigma_sq_curve.integrate(t0, t1)? / dt,
            adjustment: match &self.a {
                Some(a) => a.integrate(t0, t1)? / dt,
                None => 0.0,
            },
        })
    }

    /// Per-step averages on the uniform grid `t_n = n T / N`, computed once
    /// and shared by every simulated path.
    pub fn segment_table(&self, horizon: f64, steps: usize) -> Result<Vec<SegmentStats>> {
        if steps == 0 {
            return Err(Error::invalid("segment table needs at least one step"));
        }
        if horizon > self.horizon() {
            return Err(Error::invalid(format!(
                "grid horizon {horizon} exceeds curve horizon {}",
                self.horizon()
            )));
        }
        let sigma_sq_curve = self.sigma.map(|v| v * v)?;
        let n = steps as f64;
        let mut table = Vec::with_capacity(steps);
        for i in 0..steps {
            let t0 = i as f64 * horizon / n;
            let t1 = (i + 1) as f64 * horizon / n;
            let dt = t1 - t0;
            table.push(SegmentStats {
                r: self.r.integrate(t0, t1)? / dt,
                carry: self.rho.integrate(t0, t1)? / dt,
                sigma_sq: sigma_sq_curve.integrate(t0, t1)? / dt,
                adjustment: match &self.a {
                    Some(a) => a.integrate(t0, t1)? / dt,
                    None => 0.0,
                },
            });
        }
        Ok(table)
    }

    /// Market with the volatility curve shifted by `delta` everywhere (used
    /// for bump-and-reprice vegas under common random numbers).
    pub fn with_bumped_sigma(&self, delta: f64) -> Result<Self> {
        MarketParams::new(
            self.r.clone(),
            self.rho.clone(),
            self.sigma.shifted(delta)?,
            self.r_disc.clone(),
            self.a.clone(),
        )
    }
}

/// Time-averaged coefficients over one rebalancing interval: `r_n`, `rho_n`,
/// the average of `sigma^2`, and the adjustment rate (zero when absent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentStats {
    pub r: f64,
    pub carry: f64,
    pub sigma_sq: f64,
    pub adjustment: f64,
}
