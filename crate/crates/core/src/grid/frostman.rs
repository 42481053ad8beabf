use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::grid::set::divisor_chain;
use crate::grid::WeightedMeasure;

/// Exponent search grid step.
pub const FROSTMAN_STEP: f64 = 0.01;

/// Fitted ball condition `μ(window of side r) ≤ C r^s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanFit {
    pub exponent: f64,
    pub constant: f64,
    /// Smallest and largest window side used.
    pub window: [f64; 2],
}

/// Largest exponent on the `0.01` grid for which the window ratios
/// `max μ(window)/r^s` show no growth as `r → 0`.
///
/// Windows are blocks aligned to the absolute grid whose side runs through
/// the divisor chain of the resolution. "No growth" is read off a least
/// squares trend of `ln max μ(window)` against `ln r` over the whole ladder;
/// the reported constant is the largest ratio at the selected exponent.
pub fn frostman_fit(m: &WeightedMeasure) -> Result<FrostmanFit> {
    if m.support().is_empty() {
        return Err(Error::pre("Frostman fit of an empty measure"));
    }
    let samples = window_maxima(m)?;
    let d = m.dim() as f64;
    if samples.len() < 2 {
        // A single scale carries no trend; only s = 0 is certified.
        let (r, mass) = samples[0];
        return Ok(FrostmanFit {
            exponent: 0.0,
            constant: mass,
            window: [r, r],
        });
    }
    let xs: Vec<f64> = samples.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, m)| m.ln()).collect();
    let trend = fit_line(&xs, &ys)?.slope;
    let steps = (trend / FROSTMAN_STEP + 1e-6).floor().max(0.0);
    let exponent = (steps * FROSTMAN_STEP).min(d);
    let constant = samples
        .iter()
        .map(|(r, mass)| mass / r.powf(exponent))
        .fold(0.0, f64::max);
    Ok(FrostmanFit {
        exponent,
        constant,
        window: [samples[0].0, samples[samples.len() - 1].0],
    })
}

/// `(r, max block mass)` for block sides `r = k/N`, `k` in the divisor
/// chain of `N`, finest first.
pub fn window_maxima(m: &WeightedMeasure) -> Result<Vec<(f64, f64)>> {
    let n = m.resolution();
    let chain = divisor_chain(n);
    let mut out = Vec::with_capacity(chain.len());
    let mut level = m.clone();
    let max_of = |w: &WeightedMeasure| w.weights().iter().cloned().fold(0.0, f64::max);
    out.push((1.0 / n as f64, max_of(&level)));
    for pair in chain.windows(2) {
        level = level.coarsen(pair[1] / pair[0])?;
        out.push((pair[1] as f64 / n as f64, max_of(&level)));
    }
    Ok(out)
}
