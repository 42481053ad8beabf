//! Brute-force oracles shared by the integration tests and the acceptance
//! runner.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fraclab::arithmetic::{productset, sumset};
use fraclab::grid::{GridSet, WeightedMeasure};
use fraclab::projection::project_measure;
use fraclab::seed;
use fraclab::spectral::{energy_integral, measure_fourier};
use num_complex::Complex64;
use rand::Rng;

pub const ORACLE_MAX_CELLS: usize = 500;
pub const ORACLE_RESOLUTIONS: [u64; 4] = [8, 16, 32, 64];

/// A random set of at most 500 cells at `N ≤ 64` inside `[-1, 1]^d`.
pub fn random_set(rng: &mut impl Rng, dim: usize) -> GridSet {
    let n = ORACLE_RESOLUTIONS[rng.gen_range(0..ORACLE_RESOLUTIONS.len())];
    let side_cap = if dim == 1 { n } else { n.min(22) };
    let extent: Vec<u64> = (0..dim).map(|_| rng.gen_range(1..=side_cap)).collect();
    let origin: Vec<i64> = extent
        .iter()
        .map(|&e| rng.gen_range(-(n as i64)..=(n as i64 - e as i64)))
        .collect();
    let volume: u64 = extent.iter().product();
    let density: f64 = rng.gen_range(0.05..1.0);
    let mut cells: Vec<u64> = (0..volume).filter(|_| rng.gen_bool(density)).collect();
    if cells.is_empty() {
        cells.push(rng.gen_range(0..volume));
    }
    cells.truncate(ORACLE_MAX_CELLS);
    GridSet::new(n, origin, extent, cells).expect("valid random set")
}

pub fn random_measure(rng: &mut impl Rng, dim: usize) -> WeightedMeasure {
    let set = random_set(rng, dim);
    let masses: Vec<f64> = (0..set.len()).map(|_| rng.gen_range(0.1..1.0)).collect();
    WeightedMeasure::from_masses(&set, &masses).expect("positive masses")
}

/// Two sets drawn at a common `N`.
fn random_pair(rng: &mut impl Rng) -> (GridSet, GridSet) {
    loop {
        let a = random_set(rng, 1);
        let b = random_set(rng, 1);
        if a.resolution() == b.resolution() {
            return (a, b);
        }
    }
}

pub fn brute_sumset(a: &GridSet, b: &GridSet) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    for p in a.absolute_1d() {
        for q in b.absolute_1d() {
            out.insert(p + q);
            out.insert(p + q + 1);
        }
    }
    out
}

/// Output cells `k` with `[k, k+1)·N` meeting `{xy : x ∈ [p, p+1), y ∈ [q, q+1)}`
/// (all in units of `1/N`), tested cell by cell.
pub fn brute_productset(a: &GridSet, b: &GridSet) -> BTreeSet<i64> {
    let n = a.resolution() as i64;
    let mut out = BTreeSet::new();
    for p in a.absolute_1d() {
        for q in b.absolute_1d() {
            let corners = [p * q, (p + 1) * q, p * (q + 1), (p + 1) * (q + 1)];
            let lo = *corners.iter().min().unwrap();
            let hi = *corners.iter().max().unwrap();
            let hi_attained = p * q == hi;
            for k in lo.div_euclid(n) - 1..=hi.div_euclid(n) + 1 {
                let meets_above = hi > k * n || (hi == k * n && hi_attained);
                let meets_below = lo < (k + 1) * n;
                if meets_above && meets_below {
                    out.insert(k);
                }
            }
        }
    }
    out
}

/// Pushforward under `x ↦ x·y`: every cell's mass split over output cells
/// in proportion to the overlap with its image interval.
pub fn brute_projection(m: &WeightedMeasure, y: &[f64]) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (abs, &w) in m.support().absolute_tuples().zip(m.weights()) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (&a, &yj) in abs.iter().zip(y) {
            let (u, v) = (yj * a as f64, yj * (a + 1) as f64);
            lo += u.min(v);
            hi += u.max(v);
        }
        if hi <= lo {
            *out.entry(lo.floor() as i64).or_insert(0.0) += w;
            continue;
        }
        for k in lo.floor() as i64..=hi.ceil() as i64 {
            let overlap = hi.min((k + 1) as f64) - lo.max(k as f64);
            if overlap > 0.0 {
                *out.entry(k).or_insert(0.0) += w * overlap / (hi - lo);
            }
        }
    }
    out
}

pub fn brute_energy(m: &WeightedMeasure, s: f64) -> f64 {
    let set = m.support();
    let floor = 1.0 / set.resolution() as f64;
    let centers: Vec<Vec<f64>> = set.cells().iter().map(|&c| set.center(c)).collect();
    let mut total = 0.0;
    for (ci, wi) in centers.iter().zip(m.weights()) {
        for (cj, wj) in centers.iter().zip(m.weights()) {
            let r = ci.iter().zip(cj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            total += wi * wj * r.max(floor).powf(-s);
        }
    }
    total
}

pub fn brute_fourier(m: &WeightedMeasure, xi: &[f64]) -> Complex64 {
    let set = m.support();
    let mut z = Complex64::new(0.0, 0.0);
    for (&c, &w) in set.cells().iter().zip(m.weights()) {
        let phase: f64 = set.center(c).iter().zip(xi).map(|(a, b)| a * b).sum();
        z += w * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
    }
    z
}

pub type OracleResult = Result<(), String>;

pub fn check_sumset(seed_value: u64) -> OracleResult {
    let mut rng = seed::stream(seed_value, 1);
    let (a, b) = random_pair(&mut rng);
    let got: BTreeSet<i64> = sumset(&a, &b).map_err(|e| e.to_string())?.absolute_1d().into_iter().collect();
    if got != brute_sumset(&a, &b) {
        return Err(format!("sumset mismatch for seed {seed_value}"));
    }
    Ok(())
}

pub fn check_productset(seed_value: u64) -> OracleResult {
    let mut rng = seed::stream(seed_value, 2);
    let (a, b) = random_pair(&mut rng);
    let got: BTreeSet<i64> = productset(&a, &b).map_err(|e| e.to_string())?.absolute_1d().into_iter().collect();
    if got != brute_productset(&a, &b) {
        return Err(format!("productset mismatch for seed {seed_value}"));
    }
    Ok(())
}

pub fn check_projection(seed_value: u64) -> OracleResult {
    let mut rng = seed::stream(seed_value, 3);
    let dim = rng.gen_range(1..=2);
    let m = random_measure(&mut rng, dim);
    let mut y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.4..1.4)).collect();
    if y.iter().all(|&v| v == 0.0) {
        y[0] = 1.0;
    }
    let nu = project_measure(&m, &y).map_err(|e| e.to_string())?;
    let expected = brute_projection(&m, &y);
    let got: BTreeMap<i64, f64> = nu.support().absolute_1d().into_iter().zip(nu.weights().iter().copied()).collect();
    let keys: BTreeSet<i64> = expected.keys().chain(got.keys()).copied().collect();
    for k in keys {
        let (e, g) = (expected.get(&k).copied().unwrap_or(0.0), got.get(&k).copied().unwrap_or(0.0));
        if (e - g).abs() > 1e-12 {
            return Err(format!("projection seed {seed_value}: cell {k} has {g}, oracle {e}"));
        }
    }
    Ok(())
}

pub fn check_energy(seed_value: u64) -> OracleResult {
    let mut rng = seed::stream(seed_value, 4);
    let dim = rng.gen_range(1..=2);
    let m = random_measure(&mut rng, dim);
    let s = rng.gen_range(0.0..dim as f64);
    let got = energy_integral(&m, s).map_err(|e| e.to_string())?;
    let want = brute_energy(&m, s);
    if (got - want).abs() > 1e-9 * want.abs().max(1.0) {
        return Err(format!("energy seed {seed_value}: {got} vs oracle {want}"));
    }
    Ok(())
}

pub fn check_fourier(seed_value: u64) -> OracleResult {
    let mut rng = seed::stream(seed_value, 5);
    let dim = rng.gen_range(1..=2);
    let m = random_measure(&mut rng, dim);
    let guard = m.resolution() as f64 / 4.0;
    for _ in 0..4 {
        let xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-guard..guard)).collect();
        let got = measure_fourier(&m, &xi).map_err(|e| e.to_string())?;
        let want = brute_fourier(&m, &xi);
        if (got - want).norm() > 1e-9 {
            return Err(format!("fourier seed {seed_value} at {xi:?}: {got} vs oracle {want}"));
        }
    }
    Ok(())
}

pub const ORACLES: [(&str, fn(u64) -> OracleResult); 5] = [
    ("sumset", check_sumset),
    ("productset", check_productset),
    ("project_measure", check_projection),
    ("energy_integral", check_energy),
    ("measure_fourier", check_fourier),
];
