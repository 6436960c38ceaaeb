//! One function per subcommand.  Every command is a pure function of
//! (config, seed) and writes a single CSV file with a stable header
//! (schema v1, documented in the README).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use voltarget::index::GridSpec;
use voltarget::mc::{
    clt_verify, histogram, kde, lln_verify, run_batch, silverman_bandwidth, summary, Bandwidth,
};
use voltarget::multipliers::{compute_u, compute_v, multipliers};
use voltarget::pricer::{
    bs_call, limiting_params, rho_drift, terminal_lognormal, vega_conversion, OptionSpec,
};
use voltarget::special::norm_pdf;

use crate::config::Experiment;

fn writer(out_dir: &Path, name: &str) -> Result<(csv::Writer<std::fs::File>, PathBuf)> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let path = out_dir.join(name);
    let w = csv::Writer::from_path(&path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok((w, path))
}

fn fmt(x: f64) -> String {
    x.to_string()
}

/// `multipliers`: one row per lambda with U, V and their analytic bounds.
pub fn cmd_multipliers(exp: &Experiment, out_dir: &Path) -> Result<PathBuf> {
    let (mut w, path) = writer(out_dir, "multipliers.csv")?;
    w.write_record(["lambda", "u", "u_lo", "u_hi", "v", "v_lo", "v_hi"])?;
    for &lambda in &exp.lambdas {
        let m = multipliers(lambda, &exp.settings)?;
        w.write_record([
            fmt(lambda.value()),
            fmt(m.u_value),
            fmt(m.u_bounds.0),
            fmt(m.u_bounds.1),
            fmt(m.v_value),
            fmt(m.v_bounds.0),
            fmt(m.v_bounds.1),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

/// `density`: kernel density of the discrete index's terminal log-level next
/// to the limiting normal density.  Needs exactly one lambda and one step
/// count.
pub fn cmd_density(exp: &Experiment, out_dir: &Path) -> Result<PathBuf> {
    let [lambda] = exp.lambdas[..] else {
        bail!("density expects exactly one lambda in sim.lambdas");
    };
    let [steps] = exp.steps[..] else {
        bail!("density expects exactly one entry in sim.steps");
    };
    let config = exp.index_config(lambda)?;
    let grid = GridSpec::new(exp.horizon, steps)?;
    let batch = run_batch(&exp.market, &config, &grid, exp.paths, exp.seed)?;
    let samples = batch.discrete_log_samples();

    let bandwidth = match exp.density_bandwidth {
        Some(bw) => bw,
        None => silverman_bandwidth(&samples)?,
    };
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bandwidth;
    let points = exp.density_grid_points.max(2);
    let xs: Vec<f64> =
        (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let curve = kde(&samples, Bandwidth::Fixed(bandwidth), &xs)?;

    let (u, _) = compute_u(lambda, &exp.settings)?;
    let (v, _) = compute_v(lambda, &exp.settings)?;
    let params = limiting_params(&exp.market, exp.target_vol, u, v, exp.include_adjustment())?;
    let (mean_log, var_log) = terminal_lognormal(&params, exp.i0, exp.horizon)?;
    let sd = var_log.sqrt();

    let (mut w, path) = writer(out_dir, "density.csv")?;
    w.write_record(["x", "kde_density", "limit_density"])?;
    for (x, d) in curve.x.iter().zip(&curve.density) {
        let analytic = norm_pdf((x - mean_log) / sd) / sd;
        w.write_record([fmt(*x), fmt(*d), fmt(analytic)])?;
    }
    w.flush()?;

    // companion histogram when a bin count is configured
    if let Some(bins) = exp.density_bins {
        let (edges, counts) = histogram(&samples, bins)?;
        let (mut hw, _) = writer(out_dir, "density_histogram.csv")?;
        hw.write_record(["bin_left", "bin_right", "count", "density"])?;
        let n = samples.len() as f64;
        for (i, &count) in counts.iter().enumerate() {
            let width = edges[i + 1] - edges[i];
            hw.write_record([
                fmt(edges[i]),
                fmt(edges[i + 1]),
                count.to_string(),
                fmt(count as f64 / (n * width)),
            ])?;
        }
        hw.flush()?;
    }
    Ok(path)
}

/// `vol-convergence`: sample std of log I_T per (lambda, N) against the
/// limiting volatility.
pub fn cmd_vol_convergence(exp: &Experiment, out_dir: &Path) -> Result<PathBuf> {
    let (mut w, path) = writer(out_dir, "vol_convergence.csv")?;
    w.write_record(["lambda", "n_steps", "sample_std", "limit_std"])?;
    for &lambda in &exp.lambdas {
        let (v, _) = compute_v(lambda, &exp.settings)?;
        let limit_std = exp.target_vol * (v * exp.horizon).sqrt();
        let config = exp.index_config(lambda)?;
        for &steps in &exp.steps {
            let grid = GridSpec::new(exp.horizon, steps)?;
            let batch = run_batch(&exp.market, &config, &grid, exp.paths, exp.seed)?;
            let stats = summary(&batch.continuous_log_samples())?;
            w.write_record([
                fmt(lambda.value()),
                steps.to_string(),
                fmt(stats.std),
                fmt(limit_std),
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// `price-convergence`: MC call price on the continuous index per
/// (lambda, N) against the limiting lognormal price.
pub fn cmd_price_convergence(exp: &Experiment, out_dir: &Path) -> Result<PathBuf> {
    let Some(strike) = exp.strike else {
        bail!("price-convergence needs [option] strike in the config");
    };
    let option = OptionSpec::new(strike, exp.horizon)?;
    let strike = option.strike;
    let discount = exp.discount_factor()?;
    let (mut w, path) = writer(out_dir, "price_convergence.csv")?;
    w.write_record(["lambda", "n_steps", "mc_price", "mc_stderr", "bs_price"])?;
    for &lambda in &exp.lambdas {
        let (u, _) = compute_u(lambda, &exp.settings)?;
        let (v, _) = compute_v(lambda, &exp.settings)?;
        let params =
            limiting_params(&exp.market, exp.target_vol, u, v, exp.include_adjustment())?;
        let (mean_log, var_log) = terminal_lognormal(&params, exp.i0, exp.horizon)?;
        let bs = bs_call(mean_log, var_log, strike, discount)?;
        let config = exp.index_config(lambda)?;
        for &steps in &exp.steps {
            let grid = GridSpec::new(exp.horizon, steps)?;
            let batch = run_batch(&exp.market, &config, &grid, exp.paths, exp.seed)?;
            let payoffs: Vec<f64> = batch
                .continuous_log_samples()
                .iter()
                .map(|&l| (l.exp() - strike).max(0.0))
                .collect();
            let stats = summary(&payoffs)?;
            w.write_record([
                fmt(lambda.value()),
                steps.to_string(),
                fmt(discount * stats.mean),
                fmt(discount * stats.stderr_mean),
                fmt(bs),
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// `vega`: bump-and-reprice MC vega under common random numbers per
/// (lambda, N) against the converted rho sensitivity.
pub fn cmd_vega(exp: &Experiment, out_dir: &Path) -> Result<PathBuf> {
    let Some(strike) = exp.strike else {
        bail!("vega needs [option] strike in the config");
    };
    let option = OptionSpec::new(strike, exp.horizon)?;
    let strike = option.strike;
    let bump = exp.vol_bump.unwrap_or(0.001);
    if !(bump > 0.0) {
        bail!("option.vol_bump must be positive");
    }
    let discount = exp.discount_factor()?;
    let up_market = exp.market.with_bumped_sigma(bump)?;
    let dn_market = exp.market.with_bumped_sigma(-bump)?;

    let (mut w, path) = writer(out_dir, "vega.csv")?;
    w.write_record(["lambda", "n_steps", "mc_vega", "converted_vega"])?;
    for &lambda in &exp.lambdas {
        let (u, _) = compute_u(lambda, &exp.settings)?;
        let (v, _) = compute_v(lambda, &exp.settings)?;
        let params =
            limiting_params(&exp.market, exp.target_vol, u, v, exp.include_adjustment())?;
        let (mean_log, var_log) = terminal_lognormal(&params, exp.i0, exp.horizon)?;
        let sensitivity = rho_drift(mean_log, var_log, strike, discount, exp.horizon)?;
        let converted = vega_conversion(&exp.market, exp.target_vol, u, sensitivity)?;
        let config = exp.index_config(lambda)?;
        for &steps in &exp.steps {
            let grid = GridSpec::new(exp.horizon, steps)?;
            let up = run_batch(&up_market, &config, &grid, exp.paths, exp.seed)?;
            let dn = run_batch(&dn_market, &config, &grid, exp.paths, exp.seed)?;
            let diffs: Vec<f64> = up
                .continuous_log_samples()
                .iter()
                .zip(dn.continuous_log_samples())
                .map(|(&lu, ld)| {
                    discount * ((lu.exp() - strike).max(0.0) - (ld.exp() - strike).max(0.0))
                        / (2.0 * bump)
                })
                .collect();
            let stats = summary(&diffs)?;
            w.write_record([
                fmt(lambda.value()),
                steps.to_string(),
                fmt(stats.mean),
                fmt(converted),
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// `lln-clt`: empirical law-of-large-numbers and central-limit statistics of
/// the variance driver per (lambda, N).
pub fn cmd_lln_clt(exp: &Experiment, out_dir: &Path) -> Result<PathBuf> {
    if !exp.market.sigma.is_constant() {
        bail!("lln-clt runs the constant-sigma driver; use a constant market.sigma");
    }
    let sigma = exp.market.sigma.values()[0];
    let (mut w, path) = writer(out_dir, "lln_clt.csv")?;
    w.write_record([
        "lambda",
        "n_steps",
        "paths",
        "lln_u",
        "lln_u_dispersion",
        "u_target",
        "lln_v",
        "lln_v_dispersion",
        "v_target",
        "clt_variance",
        "clt_variance_stderr",
        "skewness",
        "excess_kurtosis",
    ])?;
    for &lambda in &exp.lambdas {
        for &steps in &exp.steps {
            let lln = lln_verify(lambda, exp.v0, sigma, steps, exp.paths, exp.seed)?;
            let clt = clt_verify(lambda, exp.v0, sigma, steps, exp.paths, exp.seed)?;
            w.write_record([
                fmt(lambda.value()),
                steps.to_string(),
                exp.paths.to_string(),
                fmt(lln.mean_u),
                fmt(lln.dispersion_u),
                fmt(lln.target_u),
                fmt(lln.mean_v),
                fmt(lln.dispersion_v),
                fmt(lln.target_v),
                fmt(clt.sample_variance),
                fmt(clt.variance_stderr),
                fmt(clt.skewness),
                fmt(clt.excess_kurtosis),
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}
