//! The experiment configuration file: TOML with flat key/value sections.
//! Scalars describe constant coefficient curves; `{ times, values }` tables
//! describe step functions (times ascending, starting at 0, one value per
//! piece).

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use voltarget::index::{IndexConfig, Variant};
use voltarget::multipliers::{LambdaParam, QuadratureSettings};
use voltarget::{MarketParams, PiecewiseCurve};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub market: MarketSection,
    pub index: IndexSection,
    pub sim: SimSection,
    #[serde(default)]
    pub option: Option<OptionSection>,
    #[serde(default)]
    pub density: Option<DensitySection>,
    #[serde(default)]
    pub quadrature: Option<QuadratureSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CurveSpec {
    Constant(f64),
    Steps { times: Vec<f64>, values: Vec<f64> },
}

impl CurveSpec {
    fn build(&self, horizon: f64, name: &str) -> Result<PiecewiseCurve> {
        match self {
            CurveSpec::Constant(v) => PiecewiseCurve::constant(*v, horizon),
            CurveSpec::Steps { times, values } => {
                PiecewiseCurve::new(times.clone(), values.clone(), horizon)
            }
        }
        .with_context(|| format!("invalid curve for `{name}`"))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub r: CurveSpec,
    pub rho: CurveSpec,
    pub sigma: CurveSpec,
    /// Discount rate; defaults to `r`.
    pub r_disc: Option<CurveSpec>,
    /// Adjustment rate a(t) (dividend protection or fee), optional.
    pub adjustment: Option<CurveSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSection {
    pub target_vol: f64,
    pub v0: f64,
    pub i0: f64,
    /// "ewma" (default) or "fee-adjusted".  The SMA and capped variants are
    /// library-level features; the lambda-indexed experiment commands only
    /// make sense for the EWMA family.
    pub variant: Option<String>,
    pub leverage_lag: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    pub steps: Vec<usize>,
    pub paths: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionSection {
    pub strike: f64,
    /// Symmetric volatility bump for the finite-difference vega.
    pub vol_bump: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub grid_points: Option<usize>,
    /// Fixed kernel bandwidth; Silverman's rule when absent.
    pub bandwidth: Option<f64>,
    /// Histogram bin count (the histogram is a diagnostic; the CSV carries
    /// the kernel estimate).
    pub bins: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub product_trunc_eps: Option<f64>,
    pub domain_split: Option<f64>,
    pub max_subdivisions: Option<usize>,
}

/// Everything a command needs, validated and converted to library types.
pub struct Experiment {
    pub market: MarketParams,
    pub lambdas: Vec<LambdaParam>,
    pub steps: Vec<usize>,
    pub paths: usize,
    pub seed: u64,
    pub horizon: f64,
    pub target_vol: f64,
    pub v0: f64,
    pub i0: f64,
    pub variant: Variant,
    pub leverage_lag: usize,
    pub strike: Option<f64>,
    pub vol_bump: Option<f64>,
    pub density_grid_points: usize,
    pub density_bandwidth: Option<f64>,
    pub density_bins: Option<usize>,
    pub settings: QuadratureSettings,
}

impl Experiment {
    pub fn from_file(path: &std::path::Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let file: ConfigFile = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Experiment::from_config(file, seed_override)
    }

    pub fn from_config(file: ConfigFile, seed_override: Option<u64>) -> Result<Self> {
        let horizon = file.sim.horizon;
        let r = file.market.r.build(horizon, "market.r")?;
        let rho = file.market.rho.build(horizon, "market.rho")?;
        let sigma = file.market.sigma.build(horizon, "market.sigma")?;
        let r_disc = match &file.market.r_disc {
            Some(spec) => spec.build(horizon, "market.r_disc")?,
            None => r.clone(),
        };
        let adjustment = file
            .market
            .adjustment
            .as_ref()
            .map(|spec| spec.build(horizon, "market.adjustment"))
            .transpose()?;
        let market = MarketParams::new(r, rho, sigma, r_disc, adjustment)?;

        let variant = match file.index.variant.as_deref().unwrap_or("ewma") {
            "ewma" => Variant::Ewma,
            "fee-adjusted" => Variant::FeeAdjusted,
            other => bail!(
                "variant `{other}` is not runnable from the CLI (choose `ewma` or \
                 `fee-adjusted`; the SMA and capped variants are library-level)"
            ),
        };
        if matches!(variant, Variant::FeeAdjusted) && market.a.is_none() {
            bail!("variant `fee-adjusted` needs a `market.adjustment` curve");
        }

        if file.sim.lambdas.is_empty() {
            bail!("sim.lambdas must list at least one lambda");
        }
        let lambdas = file
            .sim
            .lambdas
            .iter()
            .map(|&l| LambdaParam::new(l).map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()?;
        if file.sim.steps.is_empty() {
            bail!("sim.steps must list at least one step count");
        }
        if file.sim.steps.iter().any(|&n| n == 0) {
            bail!("every entry of sim.steps must be at least 1");
        }
        if file.sim.paths == 0 {
            bail!("sim.paths must be at least 1");
        }

        let defaults = QuadratureSettings::default();
        let q = file.quadrature.unwrap_or_default();
        let settings = QuadratureSettings {
            abs_tol: q.abs_tol.unwrap_or(defaults.abs_tol),
            rel_tol: q.rel_tol.unwrap_or(defaults.rel_tol),
            product_trunc_eps: q.product_trunc_eps.unwrap_or(defaults.product_trunc_eps),
            domain_split: q.domain_split.unwrap_or(defaults.domain_split),
            max_subdivisions: q.max_subdivisions.unwrap_or(defaults.max_subdivisions),
        };
        settings.validate()?;

        Ok(Experiment {
            market,
            lambdas,
            steps: file.sim.steps,
            paths: file.sim.paths,
            seed: seed_override.unwrap_or(file.sim.seed),
            horizon,
            target_vol: file.index.target_vol,
            v0: file.index.v0,
            i0: file.index.i0,
            variant,
            leverage_lag: file.index.leverage_lag.unwrap_or(1),
            strike: file.option.as_ref().map(|o| o.strike),
            vol_bump: file.option.as_ref().and_then(|o| o.vol_bump),
            density_grid_points: file.density.as_ref().and_then(|d| d.grid_points).unwrap_or(201),
            density_bandwidth: file.density.as_ref().and_then(|d| d.bandwidth),
            density_bins: file.density.as_ref().and_then(|d| d.bins),
            settings,
        })
    }

    pub fn index_config(&self, lambda: LambdaParam) -> Result<IndexConfig> {
        Ok(IndexConfig::new(
            lambda,
            self.target_vol,
            self.v0,
            self.i0,
            self.variant,
            self.leverage_lag,
        )?)
    }

    pub fn include_adjustment(&self) -> bool {
        matches!(self.variant, Variant::FeeAdjusted)
    }

    pub fn discount_factor(&self) -> Result<f64> {
        Ok((-self.market.r_disc.integrate(0.0, self.horizon)?).exp())
    }
}
