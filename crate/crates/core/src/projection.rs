//! Projection pushforwards, tubes through the origin and pinned distances.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::growth_fit_from_samples;
use crate::grid::{Budget, GridSet, WeightedMeasure};
use crate::numeric::neumaier_sum;

/// Largest admissible `|y|` for projection vectors.
pub const MAX_PROJECTION_NORM: f64 = 2.0;
/// Length of the tube axis.
pub const TUBE_LENGTH: f64 = 10.0;
pub const MIN_TUBE_DELTAS: usize = 6;
pub const MIN_TUBE_DIRECTIONS: usize = 16;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Image interval of the cell with absolute index `abs` under `x ↦ x·y`,
/// in units of output cells of resolution `out`.
fn image_interval(abs: &[i64], y: &[f64], n: u64, out: u64) -> (f64, f64) {
    let scale = out as f64 / n as f64;
    let (mut lo, mut hi) = (0.0, 0.0);
    for (&a, &yj) in abs.iter().zip(y) {
        let (p, q) = (yj * a as f64, yj * (a + 1) as f64);
        lo += p.min(q);
        hi += p.max(q);
    }
    (lo * scale, hi * scale)
}

/// Distributes unit mass over `[lo, hi)` (output-cell units) by overlap
/// length; a degenerate interval puts everything in the cell holding `lo`.
fn spread(lo: f64, hi: f64, mut emit: impl FnMut(i64, f64)) {
    let first = lo.floor() as i64;
    if hi <= lo {
        emit(first, 1.0);
        return;
    }
    let last = (hi.ceil() as i64 - 1).max(first);
    if first == last {
        emit(first, 1.0);
        return;
    }
    let len = hi - lo;
    for k in first..=last {
        let a = lo.max(k as f64);
        let b = hi.min((k + 1) as f64);
        if b > a {
            emit(k, (b - a) / len);
        }
    }
}

fn check_vectors(ys: &[Vec<f64>], d: usize) -> Result<()> {
    for y in ys {
        if y.len() != d {
            return Err(Error::pre(format!(
                "projection vector has {} coordinates, measure lives in dimension {d}",
                y.len()
            )));
        }
        if !y.iter().all(|x| x.is_finite()) || norm(y) > MAX_PROJECTION_NORM + 1e-12 {
            return Err(Error::pre(format!("projection vector {y:?} must have |y| ≤ {MAX_PROJECTION_NORM}")));
        }
        if y.iter().all(|&x| x == 0.0) {
            log::warn!("projection along y = 0: all mass lands at the origin");
        }
    }
    Ok(())
}

/// Pushforward of `m` under `x ↦ (x·y¹, …, x·yᵏ)` on a `k`-dimensional grid
/// of resolution `out`. Each cell's mass is spread over the bounding box of
/// its image with per-axis overlap weights.
pub fn multi_project_at(m: &WeightedMeasure, ys: &[Vec<f64>], out: u64, budget: Budget) -> Result<WeightedMeasure> {
    let d = m.dim();
    let k = ys.len();
    if k == 0 || k > d {
        return Err(Error::pre(format!("need 1 ≤ k ≤ {d} projection vectors, got {k}")));
    }
    if out < m.resolution() {
        return Err(Error::pre(format!(
            "output resolution {out} is below the input resolution {}",
            m.resolution()
        )));
    }
    check_vectors(ys, d)?;
    let set = m.support();
    let n = set.resolution();
    let images: Vec<Vec<(f64, f64)>> = set
        .absolute_tuples()
        .map(|abs| ys.iter().map(|y| image_interval(&abs, y, n, out)).collect())
        .collect();
    let mut lo = vec![i64::MAX; k];
    let mut hi = vec![i64::MIN; k];
    for im in &images {
        for (axis, &(a, b)) in im.iter().enumerate() {
            lo[axis] = lo[axis].min(a.floor() as i64);
            hi[axis] = hi[axis].max((b.ceil() as i64 - 1).max(a.floor() as i64));
        }
    }
    if images.is_empty() {
        return Err(Error::Degenerate("measure has empty support".into()));
    }
    let extent: Vec<u64> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as u64).collect();
    let volume = extent.iter().try_fold(1u128, |acc, &e| acc.checked_mul(e as u128)).unwrap_or(u128::MAX);
    budget.check(volume)?;
    let mut mass = vec![0.0f64; volume as usize];
    let mut axis_parts: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for (im, &w) in images.iter().zip(m.weights()) {
        for (axis, &(a, b)) in im.iter().enumerate() {
            axis_parts[axis].clear();
            let base = lo[axis];
            let parts = &mut axis_parts[axis];
            spread(a, b, |c, f| parts.push(((c - base) as usize, f)));
        }
        // odometer over the per-axis pieces
        let mut idx = vec![0usize; k];
        'outer: loop {
            let mut flat = 0usize;
            let mut f = w;
            for axis in 0..k {
                let (c, frac) = axis_parts[axis][idx[axis]];
                flat = flat * extent[axis] as usize + c;
                f *= frac;
            }
            mass[flat] += f;
            for axis in (0..k).rev() {
                idx[axis] += 1;
                if idx[axis] < axis_parts[axis].len() {
                    continue 'outer;
                }
                idx[axis] = 0;
            }
            break;
        }
    }
    let cells: Vec<u64> = (0..volume as u64).filter(|&c| mass[c as usize] > 0.0).collect();
    let weights: Vec<f64> = cells.iter().map(|&c| mass[c as usize]).collect();
    let support = GridSet::new(out, lo, extent, cells)?;
    WeightedMeasure::from_masses(&support, &weights)
}

/// [`multi_project_at`] at the input resolution.
pub fn multi_project(m: &WeightedMeasure, ys: &[Vec<f64>]) -> Result<WeightedMeasure> {
    multi_project_at(m, ys, m.resolution(), Budget::default())
}

/// One-dimensional pushforward `ν_y` at resolution `out`.
pub fn project_measure_at(m: &WeightedMeasure, y: &[f64], out: u64) -> Result<WeightedMeasure> {
    multi_project_at(m, &[y.to_vec()], out, Budget::default())
}

/// One-dimensional pushforward `ν_y` at the input resolution.
pub fn project_measure(m: &WeightedMeasure, y: &[f64]) -> Result<WeightedMeasure> {
    project_measure_at(m, y, m.resolution())
}

fn unit(xi: &[f64]) -> Result<Vec<f64>> {
    let r = norm(xi);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::pre("tube direction must be a nonzero vector"));
    }
    Ok(xi.iter().map(|x| x / r).collect())
}

fn check_delta(delta: f64, resolution: u64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::pre(format!("tube radius {delta} must lie in (0, 1)")));
    }
    if delta < 1.0 / resolution as f64 {
        return Err(Error::Resolution(format!(
            "tube radius {delta} is finer than the grid spacing 1/{resolution}"
        )));
    }
    Ok(())
}

/// Distance from `c` to the segment `{s·u : 0 ≤ s ≤ TUBE_LENGTH}`.
fn segment_distance(c: &[f64], u: &[f64]) -> f64 {
    let s: f64 = c.iter().zip(u).map(|(a, b)| a * b).sum();
    let r2: f64 = c.iter().map(|x| x * x).sum();
    if s <= 0.0 {
        return r2.sqrt();
    }
    if s >= TUBE_LENGTH {
        let e2: f64 = c.iter().zip(u).map(|(a, b)| (a - TUBE_LENGTH * b).powi(2)).sum();
        return e2.sqrt();
    }
    (r2 - s * s).max(0.0).sqrt()
}

/// Mass of the cells whose centers lie within `delta` of the tube axis from
/// the origin in direction `xi/|xi|`.
pub fn tube_mass(m: &WeightedMeasure, xi: &[f64], delta: f64) -> Result<f64> {
    if xi.len() != m.dim() {
        return Err(Error::pre("tube direction dimension differs from the measure's"));
    }
    let u = unit(xi)?;
    check_delta(delta, m.resolution())?;
    let set = m.support();
    let mut c = vec![0.0; set.dim()];
    let terms = set.cells().iter().zip(m.weights()).filter_map(|(&cell, &w)| {
        set.center_into(cell, &mut c);
        (segment_distance(&c, &u) <= delta).then_some(w)
    });
    Ok(neumaier_sum(terms))
}

/// Tube masses for one direction at every radius (radii in any order).
fn tube_masses(m: &WeightedMeasure, u: &[f64], deltas: &[f64]) -> Vec<f64> {
    let set = m.support();
    let mut c = vec![0.0; set.dim()];
    let mut hits: Vec<(f64, f64)> = set
        .cells()
        .iter()
        .zip(m.weights())
        .map(|(&cell, &w)| {
            set.center_into(cell, &mut c);
            (segment_distance(&c, u), w)
        })
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    deltas
        .iter()
        .map(|&delta| neumaier_sum(hits.iter().take_while(|h| h.0 <= delta).map(|h| h.1)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeProfile {
    pub direction_count: usize,
    /// `(δ, max over directions of the tube mass)`, δ strictly decreasing.
    pub samples: Vec<(f64, f64)>,
    /// `e` in `μ(T_δ) ~ δ^e`.
    pub exponent: f64,
    /// `s_F - e`.
    pub l_f: f64,
    pub residual: f64,
    /// Per-direction masses, `masses[direction][delta]`.
    #[serde(skip)]
    pub masses: Vec<Vec<f64>>,
}

fn check_ladder(deltas: &[f64], directions: &[Vec<f64>], d: usize, resolution: u64) -> Result<Vec<f64>> {
    if deltas.len() < MIN_TUBE_DELTAS {
        return Err(Error::pre(format!(
            "need at least {MIN_TUBE_DELTAS} radii, got {}",
            deltas.len()
        )));
    }
    if directions.len() < MIN_TUBE_DIRECTIONS {
        return Err(Error::pre(format!(
            "need at least {MIN_TUBE_DIRECTIONS} directions, got {}",
            directions.len()
        )));
    }
    for &delta in deltas {
        check_delta(delta, resolution)?;
    }
    let mut ladder = deltas.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    ladder.dedup();
    if ladder.len() != deltas.len() {
        return Err(Error::pre("tube radii must be distinct"));
    }
    if (ladder[0] / ladder[ladder.len() - 1]).log2() < 2.0 - 1e-9 {
        return Err(Error::pre("tube radii must span at least 2 octaves"));
    }
    if directions.iter().any(|w| w.len() != d) {
        return Err(Error::pre("direction dimension differs from the measure's"));
    }
    Ok(ladder)
}

/// Max-over-directions tube masses along a radius ladder, with the fitted
/// exponent `e` and the derived `l_F = s_F - e`.
pub fn tube_profile(m: &WeightedMeasure, directions: &[Vec<f64>], deltas: &[f64], s_f: f64) -> Result<TubeProfile> {
    let ladder = check_ladder(deltas, directions, m.dim(), m.resolution())?;
    let units: Vec<Vec<f64>> = directions.iter().map(|w| unit(w)).collect::<Result<_>>()?;
    let masses: Vec<Vec<f64>> = units.par_iter().map(|u| tube_masses(m, u, &ladder)).collect();
    let best: Vec<f64> = (0..ladder.len())
        .map(|j| masses.iter().map(|row| row[j]).fold(0.0, f64::max))
        .collect();
    let fit = growth_fit_from_samples(&ladder, &best)?;
    let exponent = fit.exponent.max(0.0);
    Ok(TubeProfile {
        direction_count: units.len(),
        samples: ladder.iter().copied().zip(best).collect(),
        exponent,
        l_f: s_f - exponent,
        residual: fit.residual,
        masses,
    })
}

/// CSV rows `direction,delta,mass` of a tube profile.
pub fn tube_csv(profile: &TubeProfile) -> String {
    let mut out = String::from("direction,delta,mass\n");
    for (k, row) in profile.masses.iter().enumerate() {
        for ((delta, _), mass) in profile.samples.iter().zip(row) {
            let _ = writeln!(out, "{k},{delta},{mass}");
        }
    }
    out
}

/// Outer cover of `{|x - y| : x ∈ E}` on a 1-D grid at the resolution of `E`.
pub fn pinned_distances(e: &GridSet, y: &[f64]) -> Result<GridSet> {
    if e.is_empty() {
        return Err(Error::pre("pinned distances of an empty set"));
    }
    if y.len() != e.dim() {
        return Err(Error::pre("pin dimension differs from the set's"));
    }
    let n = e.resolution();
    let nf = n as f64;
    let mut idx: Vec<i64> = Vec::new();
    for abs in e.absolute_tuples() {
        let (mut near, mut far) = (0.0, 0.0);
        for (&a, &yj) in abs.iter().zip(y) {
            // coordinates in cell units
            let (lo, hi, p) = (a as f64, (a + 1) as f64, yj * nf);
            let gap = if p < lo {
                lo - p
            } else if p > hi {
                p - hi
            } else {
                0.0
            };
            let reach = (p - lo).abs().max((hi - p).abs());
            near += gap * gap;
            far += reach * reach;
        }
        let (near, far) = (near.sqrt(), far.sqrt());
        let first = near.floor() as i64;
        let last = (far.ceil() as i64 - 1).max(first);
        idx.extend(first..=last);
    }
    GridSet::from_absolute_1d(n, idx)
}

/// Largest number of greedy `δ`-balls needed to cover the centers of `F`
/// inside one tube, over all radii and directions.
pub fn star_like_score(f: &GridSet, deltas: &[f64], directions: &[Vec<f64>]) -> Result<usize> {
    let ladder = check_ladder(deltas, directions, f.dim(), f.resolution())?;
    let units: Vec<Vec<f64>> = directions.iter().map(|w| unit(w)).collect::<Result<_>>()?;
    let d = f.dim();
    let centers = f.centers();
    let scores: Vec<usize> = units
        .par_iter()
        .map(|u| {
            let mut best = 0;
            for &delta in &ladder {
                let mut inside: Vec<(f64, &[f64])> = centers
                    .chunks(d)
                    .filter(|c| segment_distance(c, u) <= delta)
                    .map(|c| (c.iter().zip(u).map(|(a, b)| a * b).sum::<f64>(), c))
                    .collect();
                inside.sort_by(|a, b| a.0.total_cmp(&b.0));
                best = best.max(greedy_cover(&inside, delta));
            }
            best
        })
        .collect();
    Ok(scores.into_iter().max().unwrap_or(0))
}

fn greedy_cover(points: &[(f64, &[f64])], delta: f64) -> usize {
    let mut covered = vec![false; points.len()];
    let mut balls = 0;
    for i in 0..points.len() {
        if covered[i] {
            continue;
        }
        balls += 1;
        let p = points[i].1;
        for j in i..points.len() {
            if points[j].0 - points[i].0 > delta {
                break;
            }
            let r2: f64 = p.iter().zip(points[j].1).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2 <= delta * delta {
                covered[j] = true;
            }
        }
    }
    balls
}
