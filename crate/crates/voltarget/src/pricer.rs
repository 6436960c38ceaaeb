//! The limiting diffusion of the discretised index, European call pricing on
//! its lognormal terminal distribution, and the rho-to-vega conversion.
//!
//! As the rebalancing step vanishes, the index converges in law to
//!
//! ```text
//! dX = (r(t) + (rho(t) - r(t)) sigma(t)^{-1} sbar U(lambda)) X dt
//!      + sbar sqrt(V(lambda)) X dW
//! ```
//!
//! (with the carry term extended by the adjustment rate `a(t)` for the
//! fee-adjusted variant).  Pricing works directly on the terminal moments:
//! `log X_T` is normal with mean `log I0 + int mu - sbar^2 V T / 2` and
//! variance `sbar^2 V T`.
//!
//! The vega of a payoff with respect to the *stock* volatility equals
//! `(r - rho) sigma^{-2} sbar U(lambda)` times the drift sensitivity of the
//! same payoff on the limiting diffusion, valid for constant coefficients.

use crate::error::{Error, Result};
use crate::market::{refined_breakpoints, MarketParams, PiecewiseCurve};
use crate::special::norm_cdf;

/// Drift curve and (constant) volatility of the limiting diffusion.
#[derive(Debug, Clone)]
pub struct LimitDiffusionParams {
    pub drift: PiecewiseCurve,
    /// `target_vol * sqrt(V)`, strictly above the target volatility.
    pub vol: f64,
    pub u: f64,
    pub v: f64,
}

/// European call specification.
#[derive(Debug, Clone, Copy)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64) -> Result<Self> {
        if !(strike > 0.0) {
            return Err(Error::invalid(format!("strike must be positive, got {strike}")));
        }
        if !(maturity > 0.0) {
            return Err(Error::invalid(format!("maturity must be positive, got {maturity}")));
        }
        Ok(OptionSpec { strike, maturity })
    }
}

/// Build the limiting diffusion parameters from market curves and the
/// multipliers.  The drift is assembled pointwise on the common breakpoint
/// refinement of r, rho, sigma (and a, whose carry contribution is included
/// iff `include_adjustment`).
pub fn limiting_params(
    market: &MarketParams,
    target_vol: f64,
    u: f64,
    v: f64,
    include_adjustment: bool,
) -> Result<LimitDiffusionParams> {
    if !(target_vol > 0.0) {
        return Err(Error::invalid("target_vol must be positive"));
    }
    if !(u >= 1.0 && v >= 1.0) {
        return Err(Error::invalid(format!("multipliers must be at least 1, got U={u}, V={v}")));
    }
    let mut curves: Vec<&PiecewiseCurve> = vec![&market.r, &market.rho, &market.sigma];
    if let Some(ref a) = market.a {
        if include_adjustment {
            curves.push(a);
        }
    }
    let breakpoints = refined_breakpoints(&curves);
    let values: Vec<f64> = breakpoints
        .iter()
        .map(|&t| {
            let r = market.r.value_at(t);
            let rho = market.rho.value_at(t);
            let sigma = market.sigma.value_at(t);
            let adj = if include_adjustment {
                market.a.as_ref().map_or(0.0, |a| a.value_at(t))
            } else {
                0.0
            };
            r + (rho - r + adj) / sigma * target_vol * u
        })
        .collect();
    Ok(LimitDiffusionParams {
        drift: PiecewiseCurve::new(breakpoints, values, market.horizon())?,
        vol: target_vol * v.sqrt(),
        u,
        v,
    })
}

/// Mean and variance of `log X_T` for the limiting geometric diffusion
/// started at `i0`.
pub fn terminal_lognormal(
    params: &LimitDiffusionParams,
    i0: f64,
    maturity: f64,
) -> Result<(f64, f64)> {
    if !(i0 > 0.0) {
        return Err(Error::invalid("initial level must be positive"));
    }
    if maturity == 0.0 {
        return Ok((i0.ln(), 0.0));
    }
    let drift_integral = params.drift.integrate(0.0, maturity)?;
    let var_log = params.vol * params.vol * maturity;
    Ok((i0.ln() + drift_integral - 0.5 * var_log, var_log))
}

/// Discounted call value on a lognormal terminal distribution:
/// `discount * (e^{m + v/2} Phi(d1) - K Phi(d2))` with
/// `d1 = (m - log K + v)/sqrt(v)`, `d2 = d1 - sqrt(v)`.
pub fn bs_call(mean_log: f64, var_log: f64, strike: f64, discount: f64) -> Result<f64> {
    if var_log < 0.0 {
        return Err(Error::invalid(format!("var_log must be nonnegative, got {var_log}")));
    }
    if !(strike > 0.0) {
        return Err(Error::invalid("strike must be positive"));
    }
    if var_log == 0.0 {
        return Ok(discount * (mean_log.exp() - strike).max(0.0));
    }
    let sd = var_log.sqrt();
    let d1 = (mean_log - strike.ln() + var_log) / sd;
    let d2 = d1 - sd;
    Ok(discount * ((mean_log + 0.5 * var_log).exp() * norm_cdf(d1) - strike * norm_cdf(d2)))
}

/// Companion put, kept for the parity check only.
#[cfg(test)]
fn bs_put(mean_log: f64, var_log: f64, strike: f64, discount: f64) -> Result<f64> {
    if var_log < 0.0 {
        return Err(Error::invalid("var_log must be nonnegative"));
    }
    if var_log == 0.0 {
        return Ok(discount * (strike - mean_log.exp()).max(0.0));
    }
    let sd = var_log.sqrt();
    let d1 = (mean_log - strike.ln() + var_log) / sd;
    let d2 = d1 - sd;
    Ok(discount * (strike * norm_cdf(-d2) - (mean_log + 0.5 * var_log).exp() * norm_cdf(-d1)))
}

/// Sensitivity of the discounted call value to a parallel shift of the drift
/// curve: `T * discount * e^{m + v/2} Phi(d1)` (the pathwise derivative of
/// `log X_T` in the drift level is `T`).
pub fn rho_drift(
    mean_log: f64,
    var_log: f64,
    strike: f64,
    discount: f64,
    maturity: f64,
) -> Result<f64> {
    if !(var_log > 0.0) {
        return Err(Error::invalid("rho_drift requires var_log > 0"));
    }
    if !(strike > 0.0) {
        return Err(Error::invalid("strike must be positive"));
    }
    let sd = var_log.sqrt();
    let d1 = (mean_log - strike.ln() + var_log) / sd;
    Ok(maturity * discount * (mean_log + 0.5 * var_log).exp() * norm_cdf(d1))
}

/// Rho-to-vega conversion for constant coefficients:
/// stock-volatility vega = `(r - rho) sigma^{-2} target_vol U * d(price)/d(mu)`.
/// Rejects time-dependent coefficient curves.
pub fn vega_conversion(
    market: &MarketParams,
    target_vol: f64,
    u: f64,
    rho_sensitivity: f64,
) -> Result<f64> {
    if !market.r.is_constant() || !market.rho.is_constant() || !market.sigma.is_constant() {
        return Err(Error::HypothesisViolation(
            "the rho-vega conversion is stated for constant r, rho, sigma only".into(),
        ));
    }
    let r = market.r.values()[0];
    let rho = market.rho.values()[0];
    let sigma = market.sigma.values()[0];
    Ok((r - rho) / (sigma * sigma) * target_vol * u * rho_sensitivity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::{compute_u, compute_v, LambdaParam, QuadratureSettings};

    // frozen with 40-digit arithmetic
    const BS_CALL_REF: f64 = 0.075_770_821_464_272_725;

    #[test]
    fn limiting_params_trivial_carry() {
        // rho = r and no adjustment: drift is exactly r
        let market = MarketParams::constant(0.05, 0.05, 0.5, 1.0).unwrap();
        let p = limiting_params(&market, 0.2, 1.04, 1.11, false).unwrap();
        assert!(p.drift.is_constant());
        assert!((p.drift.values()[0] - 0.05).abs() < 1e-15);
        assert!((p.vol - 0.2 * 1.11f64.sqrt()).abs() < 1e-15);
        assert!(p.vol > 0.2);
    }

    #[test]
    fn limiting_params_reference_constants() {
        let market = MarketParams::constant(0.05, 0.03, 0.5, 1.0).unwrap();
        let settings = QuadratureSettings::default();
        let lambda = LambdaParam::new(0.9).unwrap();
        let (u, _) = compute_u(lambda, &settings).unwrap();
        let (v, _) = compute_v(lambda, &settings).unwrap();
        let p = limiting_params(&market, 0.2, u, v, false).unwrap();
        let want = 0.05 + (0.03 - 0.05) * (0.2 / 0.5) * u;
        assert!((p.drift.values()[0] - want).abs() < 1e-15);
        // frozen end-to-end values for the reference parameter set
        assert!((p.drift.values()[0] - 0.041_684_559_476_733).abs() < 1e-10);
        assert!((p.vol - 0.210_647_506_268_065_8).abs() < 1e-10);
    }

    #[test]
    fn near_unity_lambda_recovers_the_stock() {
        // lambda -> 1 and target = sigma: drift ~ rho, vol ~ sigma within 1%
        let market = MarketParams::constant(0.05, 0.03, 0.5, 1.0).unwrap();
        let settings = QuadratureSettings::default();
        let lambda = LambdaParam::new(0.999).unwrap();
        let (u, _) = compute_u(lambda, &settings).unwrap();
        let (v, _) = compute_v(lambda, &settings).unwrap();
        let p = limiting_params(&market, 0.5, u, v, false).unwrap();
        assert!((p.drift.values()[0] - 0.03).abs() < 0.01 * 0.03_f64.abs().max(1.0));
        assert!((p.vol - 0.5).abs() / 0.5 < 0.01);
    }

    #[test]
    fn terminal_lognormal_pure_diffusion() {
        let market = MarketParams::constant(0.0, 0.0, 0.5, 1.0).unwrap();
        let mut p = limiting_params(&market, 0.2, 1.0, 1.0, false).unwrap();
        p.vol = 0.2;
        let (m, v) = terminal_lognormal(&p, 1.0, 1.0).unwrap();
        assert!((m + 0.02).abs() < 1e-15);
        assert!((v - 0.04).abs() < 1e-15);
        let (m0, v0) = terminal_lognormal(&p, 1.0, 0.0).unwrap();
        assert_eq!((m0, v0), (0.0, 0.0));
    }

    #[test]
    fn bs_call_frozen_reference() {
        let got = bs_call(-0.02, 0.04, 1.0, (-0.05f64).exp()).unwrap();
        assert!((got - BS_CALL_REF).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn bs_call_degenerate_cases() {
        // tiny strike: call degenerates to the discounted forward
        let fwd = (-0.02f64 + 0.02).exp();
        let got = bs_call(-0.02, 0.04, 1e-12, 1.0).unwrap();
        assert!((got - fwd).abs() < 1e-9);
        // vanishing variance, deep ITM: intrinsic value
        let got = bs_call(2.0f64.ln(), 1e-8, 1.0, 1.0).unwrap();
        assert!((got - 1.0).abs() < 1e-3);
        let got = bs_call(2.0f64.ln(), 0.0, 1.0, 1.0).unwrap();
        assert!((got - 1.0).abs() < 1e-15);
        assert!(bs_call(0.0, -0.01, 1.0, 1.0).is_err());
    }

    #[test]
    fn put_call_parity() {
        for &(m, v, k) in &[(-0.02, 0.04, 1.0), (0.1, 0.09, 1.3), (-0.3, 0.5, 0.7)] {
            let disc = 0.97;
            let call = bs_call(m, v, k, disc).unwrap();
            let put = bs_put(m, v, k, disc).unwrap();
            let forward = disc * ((m + v / 2.0f64).exp() - k);
            assert!((call - put - forward).abs() < 1e-12);
        }
    }

    #[test]
    fn bs_call_monotonicity() {
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let k = 0.5 + 0.1 * i as f64;
            let c = bs_call(0.0, 0.04, k, 1.0).unwrap();
            assert!(c < last, "call not decreasing in strike at {k}");
            last = c;
        }
        let mut last = 0.0;
        for i in 1..20 {
            let v = 0.01 * i as f64;
            let c = bs_call(0.0, v, 1.0, 1.0).unwrap();
            assert!(c > last, "call not increasing in variance at {v}");
            last = c;
        }
    }

    #[test]
    fn rho_drift_matches_finite_difference() {
        // central bump of the drift level: price(m + T*h) vs price(m - T*h)
        let t = 1.0;
        for &(m, v) in &[(-0.02, 0.04), (0.05, 0.09), (-0.1, 0.01), (0.0, 0.25), (0.2, 0.16)] {
            for &k in &[0.5, 0.8, 1.0, 1.25, 2.0] {
                let disc = 0.95;
                let analytic = rho_drift(m, v, k, disc, t).unwrap();
                let h = 1e-5;
                let up = bs_call(m + t * h, v, k, disc).unwrap();
                let dn = bs_call(m - t * h, v, k, disc).unwrap();
                let fd = (up - dn) / (2.0 * h);
                assert!(
                    (analytic - fd).abs() <= 1e-6 * analytic.abs().max(1e-12),
                    "m={m} v={v} k={k}: {analytic} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn rho_drift_limits() {
        let t = 2.0;
        let disc = 0.9;
        // tiny strike: Phi(d1) -> 1, so the sensitivity is T * discounted forward
        let got = rho_drift(0.1, 0.04, 1e-10, disc, t).unwrap();
        assert!((got - t * disc * (0.1f64 + 0.02).exp()).abs() < 1e-10);
        // far out of the money
        let got = rho_drift(0.0, 0.04, 1e10, disc, t).unwrap();
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn vega_conversion_values_and_hypothesis() {
        let market = MarketParams::constant(0.05, 0.03, 0.5, 1.0).unwrap();
        // rho = r gives exactly zero
        let flat = MarketParams::constant(0.05, 0.05, 0.5, 1.0).unwrap();
        assert_eq!(vega_conversion(&flat, 0.2, 1.05, 0.6).unwrap(), 0.0);
        // sign: r > rho and positive drift sensitivity give positive vega
        let got = vega_conversion(&market, 0.2, 1.05, 0.6).unwrap();
        assert!(got > 0.0);
        assert!((got - 0.02 / 0.25 * 0.2 * 1.05 * 0.6).abs() < 1e-15);
        // non-constant curves are rejected
        let r = PiecewiseCurve::new(vec![0.0, 0.5], vec![0.05, 0.04], 1.0).unwrap();
        let c = PiecewiseCurve::constant(0.03, 1.0).unwrap();
        let s = PiecewiseCurve::constant(0.5, 1.0).unwrap();
        let bumpy = MarketParams::new(r, c.clone(), s, c, None).unwrap();
        assert!(matches!(
            vega_conversion(&bumpy, 0.2, 1.05, 0.6),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn fee_adjustment_enters_the_drift() {
        let horizon = 1.0;
        let r = PiecewiseCurve::constant(0.05, horizon).unwrap();
        let rho = PiecewiseCurve::constant(0.03, horizon).unwrap();
        let sigma = PiecewiseCurve::constant(0.5, horizon).unwrap();
        let a = PiecewiseCurve::constant(0.01, horizon).unwrap();
        let market = MarketParams::new(r.clone(), rho, sigma, r, Some(a)).unwrap();
        let with = limiting_params(&market, 0.2, 1.05, 1.1, true).unwrap();
        let without = limiting_params(&market, 0.2, 1.05, 1.1, false).unwrap();
        let delta = with.drift.values()[0] - without.drift.values()[0];
        assert!((delta - 0.01 / 0.5 * 0.2 * 1.05).abs() < 1e-15);
    }

    #[test]
    fn piecewise_drift_uses_common_refinement() {
        let r = PiecewiseCurve::new(vec![0.0, 0.5], vec![0.05, 0.04], 1.0).unwrap();
        let rho = PiecewiseCurve::new(vec![0.0, 0.25], vec![0.03, 0.02], 1.0).unwrap();
        let sigma = PiecewiseCurve::constant(0.5, 1.0).unwrap();
        let disc = PiecewiseCurve::constant(0.05, 1.0).unwrap();
        let market = MarketParams::new(r, rho, sigma, disc, None).unwrap();
        let p = limiting_params(&market, 0.2, 1.05, 1.1, false).unwrap();
        assert_eq!(p.drift.breakpoints(), &[0.0, 0.25, 0.5]);
        // spot check the middle piece: r=0.05, rho=0.02
        let want = 0.05 + (0.02 - 0.05) * 0.4 * 1.05;
        assert!((p.drift.value_at(0.3) - want).abs() < 1e-15);
    }
}
