//! Fourier transforms of grid measures, decay fits and energy integrals.
//!
//! The transform of a measure is the exponential sum over cell centers
//! `μ̂(ξ) = Σ w(c) exp(-2πi center(c)·ξ)`. Evaluation groups cells into
//! runs of equal weight along the last axis and sums each run with the
//! closed-form Dirichlet kernel; measures that factor as a product of
//! one-dimensional marginals are evaluated axis by axis.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{decay_fit_from_samples, DecayFit};
use crate::grid::{GridSet, WeightedMeasure};
use crate::numeric::{cis_neg, neumaier_sum, sin_pi, ComplexAccumulator};

/// Minimum number of frequency magnitudes in a decay fit.
pub const MIN_FREQUENCIES: usize = 8;
/// Minimum span of a frequency window, in octaves.
pub const MIN_OCTAVES: f64 = 3.0;

#[derive(Clone, Debug)]
struct Run {
    start: Vec<f64>,
    len: u64,
    weight: f64,
}

#[derive(Clone, Debug)]
enum Plan {
    Runs { runs: Vec<Run>, resolution: f64 },
    Product(Vec<FourierEvaluator>),
}

/// Precomputed evaluation plan for repeated transforms of one measure.
#[derive(Clone, Debug)]
pub struct FourierEvaluator {
    dim: usize,
    plan: Plan,
}

impl FourierEvaluator {
    pub fn new(m: &WeightedMeasure) -> Self {
        if m.dim() >= 2 {
            if let Some(factors) = product_factors(m) {
                return FourierEvaluator {
                    dim: m.dim(),
                    plan: Plan::Product(factors.iter().map(FourierEvaluator::runs).collect()),
                };
            }
        }
        FourierEvaluator::runs(m)
    }

    fn runs(m: &WeightedMeasure) -> Self {
        let set = m.support();
        let d = set.dim();
        let last = set.extent()[d - 1];
        let mut runs: Vec<Run> = Vec::new();
        let mut prev: Option<u64> = None;
        for (&c, &w) in set.cells().iter().zip(m.weights()) {
            let extend = match (prev, runs.last()) {
                (Some(p), Some(r)) => c == p + 1 && c % last != 0 && r.weight.to_bits() == w.to_bits(),
                _ => false,
            };
            if extend {
                runs.last_mut().expect("run").len += 1;
            } else {
                runs.push(Run {
                    start: set.center(c),
                    len: 1,
                    weight: w,
                });
            }
            prev = Some(c);
        }
        FourierEvaluator {
            dim: d,
            plan: Plan::Runs {
                runs,
                resolution: set.resolution() as f64,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `μ̂(ξ)`; exactly 1 at `ξ = 0`.
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        assert_eq!(xi.len(), self.dim, "frequency dimension mismatch");
        if xi.iter().all(|&x| x == 0.0) {
            return Complex64::new(1.0, 0.0);
        }
        match &self.plan {
            Plan::Product(factors) => factors
                .iter()
                .zip(xi)
                .fold(Complex64::new(1.0, 0.0), |acc, (f, &x)| acc * f.eval(&[x])),
            Plan::Runs { runs, resolution } => {
                let d = self.dim;
                let xl = xi[d - 1];
                let theta = xl / resolution;
                let s1 = sin_pi(theta);
                let mut acc = ComplexAccumulator::default();
                for r in runs {
                    let base: f64 = r.start.iter().zip(xi).map(|(c, x)| c * x).sum();
                    let z = if r.len == 1 {
                        cis_neg(base)
                    } else if s1 == 0.0 {
                        cis_neg(base) * r.len as f64
                    } else {
                        let l = r.len as f64;
                        let kernel = sin_pi(l * theta) / s1;
                        if kernel == 0.0 {
                            continue;
                        }
                        cis_neg(base + 0.5 * (l - 1.0) * theta) * kernel
                    };
                    acc.add(z * r.weight);
                }
                acc.value()
            }
        }
    }
}

impl FourierEvaluator {
    /// `μ̂(t·center(c))` for every cell `c` of `points`. Product measures
    /// tabulate each axis once per distinct coordinate.
    pub fn eval_scaled_centers(&self, points: &GridSet, t: f64) -> Vec<Complex64> {
        let d = points.dim();
        assert_eq!(d, self.dim, "frequency dimension mismatch");
        let n = points.resolution() as f64;
        if let Plan::Product(factors) = &self.plan {
            let tables: Vec<Vec<Complex64>> = (0..d)
                .map(|axis| {
                    let o = points.origin()[axis] as f64;
                    (0..points.extent()[axis])
                        .map(|i| factors[axis].eval(&[t * (o + i as f64 + 0.5) / n]))
                        .collect()
                })
                .collect();
            let mut idx = vec![0u64; d];
            return points
                .cells()
                .iter()
                .map(|&c| {
                    points.decode(c, &mut idx);
                    idx.iter()
                        .enumerate()
                        .fold(Complex64::new(1.0, 0.0), |acc, (axis, &i)| acc * tables[axis][i as usize])
                })
                .collect();
        }
        let mut xi = vec![0.0; d];
        points
            .cells()
            .iter()
            .map(|&c| {
                points.center_into(c, &mut xi);
                xi.iter_mut().for_each(|x| *x *= t);
                self.eval(&xi)
            })
            .collect()
    }
}

/// One-dimensional marginals of `m` if `m` is their product measure.
fn product_factors(m: &WeightedMeasure) -> Option<Vec<WeightedMeasure>> {
    let set = m.support();
    let d = set.dim();
    let mut marginals: Vec<BTreeMap<i64, f64>> = vec![BTreeMap::new(); d];
    let tuples: Vec<Vec<i64>> = set.absolute_tuples().collect();
    for (t, &w) in tuples.iter().zip(m.weights()) {
        for (axis, &k) in t.iter().enumerate() {
            *marginals[axis].entry(k).or_insert(0.0) += w;
        }
    }
    let count: u128 = marginals.iter().map(|mg| mg.len() as u128).product();
    if count != set.len() as u128 {
        return None;
    }
    for (t, &w) in tuples.iter().zip(m.weights()) {
        let p: f64 = t.iter().enumerate().map(|(axis, k)| marginals[axis][k]).product();
        if (p - w).abs() > 1e-12 * w.max(1e-300) {
            return None;
        }
    }
    let n = set.resolution();
    marginals
        .into_iter()
        .map(|mg| {
            let support = GridSet::from_absolute_1d(n, mg.keys().copied()).ok()?;
            let weights: Vec<f64> = mg.values().copied().collect();
            let total = neumaier_sum(weights.iter().copied());
            Some(WeightedMeasure::from_parts_unchecked(
                support,
                weights.iter().map(|w| w / total).collect(),
            ))
        })
        .collect()
}

/// `Σ w(c) exp(-2πi center(c)·ξ)` for one frequency.
pub fn measure_fourier(m: &WeightedMeasure, xi: &[f64]) -> Result<Complex64> {
    if xi.len() != m.dim() {
        return Err(Error::pre(format!(
            "frequency has {} coordinates, measure lives in dimension {}",
            xi.len(),
            m.dim()
        )));
    }
    Ok(FourierEvaluator::new(m).eval(xi))
}

fn check_window(freqs: &[f64], reach: f64, resolution: u64, min_count: usize) -> Result<()> {
    if freqs.len() < min_count {
        return Err(Error::pre(format!(
            "need at least {min_count} frequency magnitudes, got {}",
            freqs.len()
        )));
    }
    if let Some(t) = freqs.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::pre(format!("frequency magnitude {t} is not positive")));
    }
    let lo = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = freqs.iter().copied().fold(0.0, f64::max);
    if (hi / lo).log2() < MIN_OCTAVES - 1e-9 {
        return Err(Error::pre(format!(
            "frequency window [{lo}, {hi}] spans fewer than {MIN_OCTAVES} octaves"
        )));
    }
    let guard = resolution as f64 / 4.0;
    if hi * reach >= guard {
        return Err(Error::Aliasing {
            frequency: hi * reach,
            guard,
        });
    }
    Ok(())
}

/// 12 magnitudes spaced geometrically over `[1, N/8]`; a valid decay
/// window whenever `N ≥ 64`.
pub fn default_frequencies(resolution: u64) -> Vec<f64> {
    let hi = resolution as f64 / 8.0;
    (0..12).map(|j| hi.powf(j as f64 / 11.0)).collect()
}

/// `(t, sup_ω |μ̂(tω)|)` for every magnitude `t`.
pub fn decay_samples(m: &WeightedMeasure, freqs: &[f64], directions: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    check_window(freqs, 1.0, m.resolution(), MIN_FREQUENCIES)?;
    let d = m.dim();
    if directions.is_empty() {
        return Err(Error::pre("no directions given"));
    }
    for w in directions {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if w.len() != d || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::pre("directions must be unit vectors of the measure's dimension"));
        }
    }
    let ev = FourierEvaluator::new(m);
    Ok(freqs
        .par_iter()
        .map(|&t| {
            let mut xi = vec![0.0; d];
            let sup = directions.iter().fold(0.0f64, |best, w| {
                xi.iter_mut().zip(w).for_each(|(x, c)| *x = t * c);
                best.max(ev.eval(&xi).norm())
            });
            (t, sup)
        })
        .collect())
}

/// Power-law fit of `sup_ω |μ̂(tω)|` against `t`; the exponent is the decay
/// rate `γ`.
pub fn decay_fit(m: &WeightedMeasure, freqs: &[f64], directions: &[Vec<f64>]) -> Result<DecayFit> {
    let samples = decay_samples(m, freqs, directions)?;
    fit_samples(&samples)
}

fn fit_samples(samples: &[(f64, f64)]) -> Result<DecayFit> {
    let (t, v): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    decay_fit_from_samples(&t, &v)
}

fn energy_impl(m: &WeightedMeasure, s: f64, diagonal: bool) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::pre(format!("energy exponent {s} must be a finite s ≥ 0")));
    }
    let set = m.support();
    let w = m.weights();
    if s == 0.0 && diagonal {
        let t = neumaier_sum(w.iter().copied());
        return Ok(t * t);
    }
    let d = set.dim();
    let centers = set.centers();
    let floor = 1.0 / set.resolution() as f64;
    let n = w.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ci = &centers[i * d..(i + 1) * d];
            let terms = (i + 1..n).map(|j| {
                let cj = &centers[j * d..(j + 1) * d];
                let r = ci.iter().zip(cj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                w[j] * r.max(floor).powf(-s)
            });
            2.0 * w[i] * neumaier_sum(terms)
        })
        .collect();
    let off = neumaier_sum(rows);
    if !diagonal {
        return Ok(off);
    }
    let diag = neumaier_sum(w.iter().map(|x| x * x)) * floor.powf(-s);
    Ok(off + diag)
}

/// `Σ w(c)w(c') max(|c - c'|, 1/N)^{-s}` over all ordered pairs of cells.
pub fn energy_integral(m: &WeightedMeasure, s: f64) -> Result<f64> {
    energy_impl(m, s, true)
}

/// As [`energy_integral`] but summing only pairs of distinct cells.
pub fn energy_integral_off_diagonal(m: &WeightedMeasure, s: f64) -> Result<f64> {
    energy_impl(m, s, false)
}

/// `(t, g(t))` with `g(t) = Σ_y w_F(y) |μ̂_E(t·center(y))|²`.
pub fn sphere_averaged_samples(me: &WeightedMeasure, mf: &WeightedMeasure, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if me.dim() != mf.dim() {
        return Err(Error::pre(format!(
            "measures live in dimensions {} and {}",
            me.dim(),
            mf.dim()
        )));
    }
    let d = mf.dim();
    let centers = mf.support().centers();
    let reach = centers
        .chunks(d)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    check_window(t_grid, reach.max(f64::MIN_POSITIVE), me.resolution(), 2)?;
    let ev = FourierEvaluator::new(me);
    let wf = mf.weights();
    let fset = mf.support();
    Ok(t_grid
        .par_iter()
        .map(|&t| {
            let values = ev.eval_scaled_centers(fset, t);
            (t, neumaier_sum(values.iter().zip(wf).map(|(z, &w)| w * z.norm_sqr())))
        })
        .collect())
}

/// Power-law fit of the sphere-averaged transform `g(t)`.
pub fn sphere_averaged_decay(me: &WeightedMeasure, mf: &WeightedMeasure, t_grid: &[f64]) -> Result<DecayFit> {
    fit_samples(&sphere_averaged_samples(me, mf, t_grid)?)
}

/// Summary of a fit as emitted next to its sample table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub exponent: f64,
    pub intercept: f64,
    pub residual: f64,
    pub window: [f64; 2],
}

impl From<&DecayFit> for FitSummary {
    fn from(f: &DecayFit) -> Self {
        FitSummary {
            exponent: f.exponent,
            intercept: f.intercept,
            residual: f.residual,
            window: f.window,
        }
    }
}

/// CSV table `t,value,log_t,log_value`; the logs of zero values are left
/// empty.
pub fn samples_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("t,value,log_t,log_value\n");
    for &(t, v) in samples {
        let lv = if v > 0.0 { v.ln().to_string() } else { String::new() };
        let _ = writeln!(out, "{t},{v},{},{lv}", t.ln());
    }
    out
}

pub fn fit_summary_json(fit: &DecayFit) -> String {
    serde_json::to_string_pretty(&FitSummary::from(fit)).expect("fit summary serializes")
}
