//! Summary statistics, Gaussian kernel density estimation, and histograms
//! for the simulation outputs.

use crate::error::{Error, Result};
use crate::special::norm_pdf;

/// Mean / standard deviation with their standard errors.
#[derive(Debug, Clone, Copy)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n-1) standard deviation.
    pub std: f64,
    pub stderr_mean: f64,
    /// Large-sample standard error of the sample std, `std / sqrt(2(n-1))`.
    pub stderr_std: f64,
}

/// Pairwise (cascade) summation: deterministic for a fixed input order and
/// accurate to a few ulps regardless of sample count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn summary(samples: &[f64]) -> Result<SummaryStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::DegenerateSample(format!(
            "summary statistics need at least 2 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = pairwise_sum(samples) / nf;
    let sq: Vec<f64> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (nf - 1.0);
    let std = var.sqrt();
    Ok(SummaryStats {
        n,
        mean,
        std,
        stderr_mean: std / nf.sqrt(),
        stderr_std: std / (2.0 * (nf - 1.0)).sqrt(),
    })
}

/// Standardised skewness and excess kurtosis (biased moment estimators; the
/// reference standard errors are `sqrt(6/n)` and `sqrt(24/n)`).
pub fn skewness_excess_kurtosis(samples: &[f64]) -> Result<(f64, f64)> {
    let stats = summary(samples)?;
    if stats.std == 0.0 {
        return Err(Error::DegenerateSample("constant sample has no shape moments".into()));
    }
    let n = samples.len() as f64;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in samples {
        let d = x - stats.mean;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m3 /= n;
    m4 /= n;
    let m2 = stats.std * stats.std * (n - 1.0) / n;
    Ok((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

/// Bandwidth choice for the Gaussian KDE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `1.06 * std * n^{-1/5}`.
    Silverman,
    Fixed(f64),
}

/// A density estimate evaluated on a grid.
#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let stats = summary(samples)?;
    let bw = 1.06 * stats.std * (samples.len() as f64).powf(-0.2);
    if !(bw > 0.0) {
        return Err(Error::DegenerateSample(
            "Silverman bandwidth degenerates on a zero-variance sample; pass a fixed bandwidth"
                .into(),
        ));
    }
    Ok(bw)
}

fn resolve_bandwidth(samples: &[f64], bandwidth: Bandwidth) -> Result<f64> {
    match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(samples),
        Bandwidth::Fixed(bw) => {
            if bw > 0.0 {
                Ok(bw)
            } else {
                Err(Error::invalid(format!("bandwidth must be positive, got {bw}")))
            }
        }
    }
}

/// Gaussian-kernel density estimate on a caller-supplied grid.
pub fn kde(samples: &[f64], bandwidth: Bandwidth, grid: &[f64]) -> Result<DensityCurve> {
    if samples.is_empty() {
        return Err(Error::DegenerateSample("KDE needs at least one sample".into()));
    }
    let bw = resolve_bandwidth(samples, bandwidth)?;
    let inv_n_bw = 1.0 / (samples.len() as f64 * bw);
    let density = grid
        .iter()
        .map(|&x| {
            let mut acc = 0.0;
            for &s in samples {
                acc += norm_pdf((x - s) / bw);
            }
            acc * inv_n_bw
        })
        .collect();
    Ok(DensityCurve { x: grid.to_vec(), density, bandwidth: bw })
}

/// KDE on an automatic uniform grid spanning the sample range padded by four
/// bandwidths.
pub fn kde_auto_grid(
    samples: &[f64],
    bandwidth: Bandwidth,
    points: usize,
) -> Result<DensityCurve> {
    if points < 2 {
        return Err(Error::invalid("KDE grid needs at least 2 points"));
    }
    if samples.is_empty() {
        return Err(Error::DegenerateSample("KDE needs at least one sample".into()));
    }
    let bw = resolve_bandwidth(samples, bandwidth)?;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * bw;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bw;
    let grid: Vec<f64> =
        (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    kde(samples, Bandwidth::Fixed(bw), &grid)
}

/// Equal-width histogram over the sample range; returns bin edges
/// (`bins + 1` of them) and counts.
pub fn histogram(samples: &[f64], bins: usize) -> Result<(Vec<f64>, Vec<u64>)> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if samples.is_empty() {
        return Err(Error::DegenerateSample("histogram needs samples".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    for &s in samples {
        let mut idx = ((s - lo) / width) as usize;
        if idx >= bins {
            idx = bins - 1; // the maximum lands in the last bin
        }
        counts[idx] += 1;
    }
    Ok((edges, counts))
}
