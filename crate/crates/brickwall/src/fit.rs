//! Small least-squares helpers shared by the transport and growth fits.

use crate::error::Error;
use crate::rng::{stream, StreamDomain};
use crate::Result;
use rand::Rng;

/// Ordinary least squares line y = slope * x + intercept.
#[derive(Clone, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals.
    pub sse: f64,
    pub n_points: usize,
}

/// Fits a line; None with fewer than two points or degenerate x spread.
pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx < 1e-300 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    Some(LineFit {
        slope,
        intercept,
        sse,
        n_points: n,
    })
}

/// Power law y = prefactor * x^exponent, fitted as a line in ln-ln space.
#[derive(Clone, Debug)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub sse: f64,
    pub n_points: usize,
}

/// Requires strictly positive coordinates on every point.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.iter().any(|p| p.0 <= 0.0 || p.1 <= 0.0) {
        return Err(Error::FitUnavailable(
            "power law needs positive points".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let line = fit_line(&logs)
        .ok_or_else(|| Error::FitUnavailable("fewer than two distinct abscissas".into()))?;
    Ok(PowerLawFit {
        exponent: line.slope,
        prefactor: line.intercept.exp(),
        sse: line.sse,
        n_points: line.n_points,
    })
}

/// Percentile bootstrap over item indices 0..n_items. The closure receives a
/// resampled index multiset and returns an estimate, or None to skip that
/// resample (for example, a window with too few points). Returns the 2.5 and
/// 97.5 percentiles, or None if every resample was skipped.
pub fn bootstrap_percentile_ci<F>(
    n_items: usize,
    n_resamples: usize,
    seed: u64,
    estimate: F,
) -> Option<(f64, f64)>
where
    F: Fn(&[usize]) -> Option<f64>,
{
    if n_items == 0 || n_resamples == 0 {
        return None;
    }
    let mut rng = stream(seed, StreamDomain::Bootstrap, 0);
    let mut estimates = Vec::with_capacity(n_resamples);
    let mut indices = vec![0usize; n_items];
    for _ in 0..n_resamples {
        for slot in indices.iter_mut() {
            *slot = rng.random_range(0..n_items);
        }
        if let Some(v) = estimate(&indices) {
            estimates.push(v);
        }
    }
    if estimates.is_empty() {
        return None;
    }
    estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| {
        let pos = (estimates.len() as f64 - 1.0) * q;
        estimates[pos.round() as usize]
    };
    Some((pick(0.025), pick(0.975)))
}
