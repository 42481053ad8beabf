//! Log-log least squares used by every exponent estimate in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fitted power law `value ≈ exp(intercept) · scale^{±exponent}`.
///
/// `exponent` is reported with the sign convention of the producing
/// operation: decay rates (Fourier decay, tube exponents) are positive when
/// the value shrinks, growth rates (box counts) are positive when it grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the samples from the fitted line, in
    /// natural-log units.
    pub residual: f64,
    /// `[min scale, max scale]` of the samples used.
    pub window: [f64; 2],
    pub sample_count: usize,
}

/// Ordinary least squares on `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::pre("fit inputs differ in length"));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::pre(format!("a line fit needs at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::pre("fit abscissae are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
    })
}

/// Fits `ln value` against `ln scale`. Samples with non-positive values are
/// skipped (their logarithm is undefined); at least two must remain.
pub fn loglog_fit(scales: &[f64], values: &[f64]) -> Result<(LineFit, [f64; 2], usize)> {
    let kept: Vec<(f64, f64)> = scales
        .iter()
        .zip(values)
        .filter(|(s, v)| **s > 0.0 && **v > 0.0)
        .map(|(s, v)| (*s, *v))
        .collect();
    let xs: Vec<f64> = kept.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    let lo = kept.iter().map(|k| k.0).fold(f64::INFINITY, f64::min);
    let hi = kept.iter().map(|k| k.0).fold(f64::NEG_INFINITY, f64::max);
    Ok((line, [lo, hi], kept.len()))
}

/// Fit of a decaying power law `value ~ scale^{-exponent}`.
pub fn decay_fit_from_samples(scales: &[f64], values: &[f64]) -> Result<DecayFit> {
    let (line, window, count) = loglog_fit(scales, values)?;
    Ok(DecayFit {
        exponent: -line.slope,
        intercept: line.intercept,
        residual: line.residual,
        window,
        sample_count: count,
    })
}

/// Fit of a growing power law `value ~ scale^{exponent}`.
pub fn growth_fit_from_samples(scales: &[f64], values: &[f64]) -> Result<DecayFit> {
    let (line, window, count) = loglog_fit(scales, values)?;
    Ok(DecayFit {
        exponent: line.slope,
        intercept: line.intercept,
        residual: line.residual,
        window,
        sample_count: count,
    })
}
