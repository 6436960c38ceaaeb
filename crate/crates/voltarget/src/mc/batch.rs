//! Deterministic parallel path orchestration and the empirical verifiers of
//! the limit theorems.
//!
//! Paths are embarrassingly parallel: path `p` is a pure function of
//! `(market, config, grid, seed, p)`, results are collected in path order,
//! and all reductions run over that ordered vector — so a batch is
//! bit-identical for any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{run_path_on_segments, GridSpec, IndexConfig, PathResult};
use crate::market::MarketParams;
use crate::mc::rng::RngStream;
use crate::mc::stats::{pairwise_sum, skewness_excess_kurtosis, summary};
use crate::multipliers::{compute_u, compute_v, LambdaParam, QuadratureSettings};

/// All terminal path values of one batch, in path order, with the
/// configuration echoed back.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub config: IndexConfig,
    pub grid: GridSpec,
    pub seed: u64,
    pub paths: Vec<PathResult>,
}

impl SimResult {
    pub fn requested_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn flagged_count(&self) -> usize {
        self.paths.iter().filter(|p| p.flagged()).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.flagged_count() as f64 / self.paths.len() as f64
    }

    /// Terminal log-levels of the discrete index, flagged paths excluded.
    pub fn discrete_log_samples(&self) -> Vec<f64> {
        self.paths.iter().filter_map(|p| p.log_index_discrete).collect()
    }

    pub fn continuous_log_samples(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.log_index_continuous).collect()
    }

    pub fn simplified_log_samples(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.log_simplified).collect()
    }
}

/// Simulate `paths` coupled paths of the discrete, continuous, and simplified
/// processes.  Per-path flags (nonpositive discrete gross return) are
/// recorded, never fatal.
pub fn run_batch(
    market: &MarketParams,
    config: &IndexConfig,
    grid: &GridSpec,
    paths: usize,
    seed: u64,
) -> Result<SimResult> {
    if paths == 0 {
        return Err(Error::invalid("a batch needs at least one path"));
    }
    let segments = market.segment_table(grid.horizon(), grid.steps())?;
    let n = grid.steps();
    let results: Result<Vec<PathResult>> = (0..paths)
        .into_par_iter()
        .map_init(Vec::new, |buf: &mut Vec<f64>, p| {
            RngStream::new(seed, p as u64).fill_normals(buf, n);
            run_path_on_segments(&segments, config, grid, buf, None)
        })
        .collect();
    Ok(SimResult { config: config.clone(), grid: *grid, seed, paths: results? })
}

/// Cesàro averages of the inverse square-root and inverse of the normalised
/// variance driver, against their quadrature targets.
#[derive(Debug, Clone, Copy)]
pub struct LlnReport {
    pub n_steps: usize,
    pub paths: usize,
    /// Cross-path mean of the per-path averages of `(sigma^{-2} u)^{-1/2}`.
    pub mean_u: f64,
    /// Cross-path standard deviation of those averages.
    pub dispersion_u: f64,
    pub mean_v: f64,
    pub dispersion_v: f64,
    pub target_u: f64,
    pub target_v: f64,
}

/// Per-path state of the normalised driver
/// `omega_n = lambda^n omega_0 + (1-lambda) sum lambda^{n-k} Z_k^2` and the
/// running sums the verifiers need.
fn driver_sums(lambda: f64, omega0: f64, n_steps: usize, stream: &RngStream) -> (f64, f64, f64) {
    let mut omega = omega0;
    let mut sum_u = 0.0;
    let mut sum_v = 0.0;
    let mut clt = 0.0;
    for i in 0..n_steps {
        let z = stream.normal(i as u64);
        let inv_sqrt = 1.0 / omega.sqrt();
        sum_u += inv_sqrt;
        sum_v += 1.0 / omega;
        clt += inv_sqrt * z;
        omega = lambda * omega + (1.0 - lambda) * z * z;
    }
    (sum_u, sum_v, clt)
}

/// Law-of-large-numbers check: per-path Cesàro averages of `omega^{-1/2}` and
/// `omega^{-1}` converge to U and V.
pub fn lln_verify(
    lambda: LambdaParam,
    v0: f64,
    sigma: f64,
    n_steps: usize,
    paths: usize,
    seed: u64,
) -> Result<LlnReport> {
    if !(v0 > 0.0 && sigma > 0.0) {
        return Err(Error::invalid("lln_verify needs positive v0 and sigma"));
    }
    if n_steps == 0 || paths == 0 {
        return Err(Error::invalid("lln_verify needs steps and paths"));
    }
    let settings = QuadratureSettings::default();
    let target_u = compute_u(lambda, &settings)?.0;
    let target_v = compute_v(lambda, &settings)?.0;
    let omega0 = v0 / (sigma * sigma);
    let l = lambda.value();
    let per_path: Vec<(f64, f64)> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let stream = RngStream::new(seed, p as u64);
            let (su, sv, _) = driver_sums(l, omega0, n_steps, &stream);
            (su / n_steps as f64, sv / n_steps as f64)
        })
        .collect();
    let us: Vec<f64> = per_path.iter().map(|x| x.0).collect();
    let vs: Vec<f64> = per_path.iter().map(|x| x.1).collect();
    let (mean_u, dispersion_u) = mean_and_dispersion(&us);
    let (mean_v, dispersion_v) = mean_and_dispersion(&vs);
    Ok(LlnReport {
        n_steps,
        paths,
        mean_u,
        dispersion_u,
        mean_v,
        dispersion_v,
        target_u,
        target_v,
    })
}

fn mean_and_dispersion(xs: &[f64]) -> (f64, f64) {
    let mean = pairwise_sum(xs) / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&sq) / (xs.len() as f64 - 1.0)).sqrt())
}

/// Central-limit-theorem check: across paths, the variance of
/// `N^{-1/2} sum Z_k / sqrt(omega_{k-1})` targets V, and the normalised sum
/// should look Gaussian (moment diagnostics).
#[derive(Debug, Clone, Copy)]
pub struct CltReport {
    pub n_steps: usize,
    pub paths: usize,
    pub sample_variance: f64,
    /// Large-sample standard error of the sample variance.
    pub variance_stderr: f64,
    pub target_v: f64,
    pub skewness: f64,
    pub skewness_stderr: f64,
    pub excess_kurtosis: f64,
    pub kurtosis_stderr: f64,
}

pub fn clt_verify(
    lambda: LambdaParam,
    v0: f64,
    sigma: f64,
    n_steps: usize,
    paths: usize,
    seed: u64,
) -> Result<CltReport> {
    if !(v0 > 0.0 && sigma > 0.0) {
        return Err(Error::invalid("clt_verify needs positive v0 and sigma"));
    }
    if n_steps == 0 || paths < 2 {
        return Err(Error::invalid("clt_verify needs steps and at least 2 paths"));
    }
    let settings = QuadratureSettings::default();
    let target_v = compute_v(lambda, &settings)?.0;
    let omega0 = v0 / (sigma * sigma);
    let l = lambda.value();
    let sums: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let stream = RngStream::new(seed, p as u64);
            let (_, _, clt) = driver_sums(l, omega0, n_steps, &stream);
            clt / (n_steps as f64).sqrt()
        })
        .collect();
    let stats = summary(&sums)?;
    let variance = stats.std * stats.std;
    let (skewness, excess_kurtosis) = skewness_excess_kurtosis(&sums)?;
    let pf = paths as f64;
    Ok(CltReport {
        n_steps,
        paths,
        sample_variance: variance,
        variance_stderr: variance * (2.0 / (pf - 1.0)).sqrt(),
        target_v,
        skewness,
        skewness_stderr: (6.0 / pf).sqrt(),
        excess_kurtosis,
        kurtosis_stderr: (24.0 / pf).sqrt(),
    })
}

/// Pathwise agreement of the discrete and continuous index definitions under
/// coupled draws.
#[derive(Debug, Clone, Copy)]
pub struct EquivalenceReport {
    pub n_steps: usize,
    /// Mean |log I~_T - log I_T| over unflagged paths.
    pub mean_abs_log_diff: f64,
    pub flagged_fraction: f64,
    pub compared_paths: usize,
}

pub fn equivalence_check(
    market: &MarketParams,
    config: &IndexConfig,
    grid: &GridSpec,
    paths: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let batch = run_batch(market, config, grid, paths, seed)?;
    let diffs: Vec<f64> = batch
        .paths
        .iter()
        .filter_map(|p| {
            p.log_index_discrete.map(|ld| (ld - p.log_index_continuous).abs())
        })
        .collect();
    if diffs.is_empty() {
        return Err(Error::DegenerateSample("every path was flagged".into()));
    }
    Ok(EquivalenceReport {
        n_steps: grid.steps(),
        mean_abs_log_diff: pairwise_sum(&diffs) / diffs.len() as f64,
        flagged_fraction: batch.flagged_fraction(),
        compared_paths: diffs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(v: f64) -> LambdaParam {
        LambdaParam::new(v).unwrap()
    }

    fn reference_setup() -> (MarketParams, IndexConfig) {
        let market = MarketParams::constant(0.05, 0.03, 0.5, 1.0).unwrap();
        let config = IndexConfig::ewma(lam(0.9), 0.2, 0.02, 1.0).unwrap();
        (market, config)
    }

    #[test]
    fn single_path_batch_reduces_to_run_path() {
        let (market, config) = reference_setup();
        let grid = GridSpec::new(1.0, 32).unwrap();
        let batch = run_batch(&market, &config, &grid, 1, 99).unwrap();
        let mut zs = Vec::new();
        RngStream::new(99, 0).fill_normals(&mut zs, 32);
        let single = crate::index::run_path(&market, &config, &grid, &zs).unwrap();
        assert_eq!(batch.paths[0], single);
    }

    #[test]
    fn batch_is_thread_count_invariant() {
        let (market, config) = reference_setup();
        let grid = GridSpec::new(1.0, 64).unwrap();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| run_batch(&market, &config, &grid, 500, 7).unwrap());
        let b = pool4.install(|| run_batch(&market, &config, &grid, 500, 7).unwrap());
        assert_eq!(a.paths, b.paths);
    }

    #[test]
    fn degenerate_driver_averages_to_one() {
        // omega_0 = 1 and xi == 1 keep omega identically 1; the Cesàro
        // averages of omega^{-1/2} and omega^{-1} are exactly 1
        let l = 0.9;
        let mut omega: f64 = 1.0;
        let mut sum_u = 0.0;
        let mut sum_v = 0.0;
        for _ in 0..1000 {
            sum_u += 1.0 / omega.sqrt();
            sum_v += 1.0 / omega;
            omega = l * omega + (1.0 - l) * 1.0;
        }
        assert!((sum_u / 1000.0 - 1.0).abs() < 1e-12);
        assert!((sum_v / 1000.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lln_dispersion_shrinks_with_n() {
        // dispersion across paths decays like n^{-1/2}: a factor >= 2.5
        // from n = 10^4 to n = 10^5
        let lambda = lam(0.9);
        let a = lln_verify(lambda, 0.02, 0.5, 10_000, 24, 5).unwrap();
        let b = lln_verify(lambda, 0.02, 0.5, 100_000, 24, 5).unwrap();
        assert!(a.dispersion_v / b.dispersion_v >= 2.5, "{} vs {}", a.dispersion_v, b.dispersion_v);
        assert!(a.dispersion_u / b.dispersion_u >= 2.5);
    }

    #[test]
    fn flagged_paths_are_excluded_pairwise() {
        // brutal grid: N = 2 with huge leverage makes some discrete paths die
        let market = MarketParams::constant(0.0, 0.0, 1.5, 1.0).unwrap();
        let config = IndexConfig::ewma(lam(0.9), 2.5, 0.01, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 2).unwrap();
        let batch = run_batch(&market, &config, &grid, 4000, 11).unwrap();
        let flagged = batch.flagged_count();
        assert!(flagged > 0, "expected some flagged paths in this stress setup");
        assert_eq!(batch.discrete_log_samples().len(), 4000 - flagged);
        assert_eq!(batch.continuous_log_samples().len(), 4000);
        let eq = equivalence_check(&market, &config, &grid, 4000, 11).unwrap();
        assert_eq!(eq.compared_paths, 4000 - flagged);
    }
}
