//! Congruence classes of point tuples and occupancy of the simplex
//! configuration space of a set.
//!
//! A `(k+1)`-tuple is represented by its vector of pairwise distances in the
//! order `(0,1), (0,2), …, (0,k), (1,2), …, (k-1,k)`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::seed;

/// Samples per seeded chunk; chunk `c` draws from stream `c` of the seed.
pub const SAMPLE_CHUNK: u64 = 1 << 14;
pub const MIN_SAMPLES: u64 = 1000;
/// Number of points on the saturation curve.
pub const SATURATION_POINTS: u64 = 20;
/// Largest bin grid for which the reachable region is enumerated.
pub const MAX_REACHABLE_ENUMERATION: u128 = 1 << 24;
/// Largest set whose diameter is computed exactly; bigger sets use the
/// bounding-box diagonal.
pub const EXACT_DIAMETER_CELLS: usize = 1 << 15;

fn pair_count(points: usize) -> usize {
    points * points.saturating_sub(1) / 2
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_tuple(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map(|p| p.len()).unwrap_or(0);
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::pre("tuple points have different dimensions"));
    }
    if points.len() > d + 1 {
        return Err(Error::pre(format!(
            "{} points in dimension {d}: need k + 1 ≤ d + 1",
            points.len()
        )));
    }
    Ok(d)
}

/// Pairwise distances `|xⁱ - xʲ|`, `i < j`.
pub fn congruence_vector(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_tuple(points)?;
    let mut out = Vec::with_capacity(pair_count(points.len()));
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(dist(&points[i], &points[j]));
        }
    }
    Ok(out)
}

/// Pairwise distances of points on the sphere of radius `t` about `z`, via
/// `|x - y|² = 2t² - 2(x - z)·(y - z)`.
pub fn congruence_vector_on_sphere(points: &[Vec<f64>], z: &[f64], t: f64) -> Result<Vec<f64>> {
    let d = check_tuple(points)?;
    if z.len() != d {
        return Err(Error::pre("sphere center dimension differs from the points'"));
    }
    let rel: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(z).map(|(a, b)| a - b).collect()).collect();
    let mut out = Vec::with_capacity(pair_count(points.len()));
    for i in 0..rel.len() {
        for j in i + 1..rel.len() {
            let dot: f64 = rel[i].iter().zip(&rel[j]).map(|(a, b)| a * b).sum();
            out.push((2.0 * t * t - 2.0 * dot).max(0.0).sqrt());
        }
    }
    Ok(out)
}

/// Whether two labelled tuples are congruent: their distance vectors agree
/// within `tol` in max norm.
pub fn congruent_check(t1: &[Vec<f64>], t2: &[Vec<f64>], tol: f64) -> Result<bool> {
    if t1.len() != t2.len() || t1.first().map(|p| p.len()) != t2.first().map(|p| p.len()) {
        return Err(Error::pre("tuples differ in size or dimension"));
    }
    let (a, b) = (congruence_vector(t1)?, congruence_vector(t2)?);
    Ok(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol))
}

/// Cells of `e` whose closed box meets the sphere `|x - z| = t`.
pub fn sphere_slice(e: &GridSet, z: &[f64], t: f64) -> Result<GridSet> {
    if z.len() != e.dim() {
        return Err(Error::pre("sphere center dimension differs from the set's"));
    }
    if !(t > 0.0) {
        return Err(Error::pre(format!("sphere radius {t} must be positive")));
    }
    let n = e.resolution() as f64;
    let mut idx = vec![0u64; e.dim()];
    Ok(e.filter(|c| {
        e.decode(c, &mut idx);
        let (mut near, mut far) = (0.0, 0.0);
        for axis in 0..idx.len() {
            let lo = (e.origin()[axis] + idx[axis] as i64) as f64 / n;
            let hi = lo + 1.0 / n;
            let p = z[axis];
            let gap = (lo - p).max(p - hi).max(0.0);
            let reach = (p - lo).abs().max((hi - p).abs());
            near += gap * gap;
            far += reach * reach;
        }
        near.sqrt() <= t && t <= far.sqrt()
    }))
}

/// Largest distance between cell centers (exact for small sets, the
/// bounding-box diagonal of the centers otherwise).
pub fn center_diameter(e: &GridSet) -> f64 {
    let d = e.dim();
    let centers = e.centers();
    if e.len() <= EXACT_DIAMETER_CELLS {
        return (0..e.len())
            .into_par_iter()
            .map(|i| {
                let ci = &centers[i * d..(i + 1) * d];
                (i + 1..e.len()).map(|j| dist(ci, &centers[j * d..(j + 1) * d])).fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for c in centers.chunks(d) {
        for axis in 0..d {
            lo[axis] = lo[axis].min(c[axis]);
            hi[axis] = hi[axis].max(c[axis]);
        }
    }
    dist(&lo, &hi)
}

/// Bin layout of the distance space: `bins_per_axis` bins of side `1/M`
/// covering `[0, diameter]` in each of the `pairs` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinGrid {
    pub points: usize,
    pub pairs: usize,
    pub bin_resolution: u64,
    pub bins_per_axis: u64,
}

impl BinGrid {
    pub fn new(k: usize, bin_resolution: u64, diameter: f64) -> Result<Self> {
        if bin_resolution == 0 {
            return Err(Error::pre("bin resolution must be positive"));
        }
        let bins_per_axis = ((diameter * bin_resolution as f64).ceil() as u64).max(1);
        let pairs = pair_count(k + 1);
        let g = BinGrid {
            points: k + 1,
            pairs,
            bin_resolution,
            bins_per_axis,
        };
        if (pairs as f64) * (bins_per_axis as f64).log2() >= 127.0 {
            return Err(Error::pre(format!(
                "{bins_per_axis}^{pairs} bins do not fit the bin key; lower the bin resolution"
            )));
        }
        Ok(g)
    }

    pub fn total_bins(&self) -> u128 {
        (self.bins_per_axis as u128).pow(self.pairs as u32)
    }

    pub fn bin(&self, v: f64) -> u64 {
        ((v * self.bin_resolution as f64).floor().max(0.0) as u64).min(self.bins_per_axis - 1)
    }

    pub fn key(&self, distances: &[f64]) -> u128 {
        distances
            .iter()
            .rev()
            .fold(0u128, |acc, &v| acc * self.bins_per_axis as u128 + self.bin(v) as u128)
    }

    pub fn decode(&self, mut key: u128, out: &mut [u64]) {
        for slot in out.iter_mut() {
            *slot = (key % self.bins_per_axis as u128) as u64;
            key /= self.bins_per_axis as u128;
        }
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.points - i - 1) / 2 + (j - i - 1)
    }

    /// Whether the bin box contains a point meeting every triangle
    /// inequality: `lo_a ≤ hi_b + hi_c` becomes `a ≤ b + c + 2` in bin units.
    pub fn triangle_feasible(&self, bins: &[u64]) -> bool {
        for i in 0..self.points {
            for j in i + 1..self.points {
                for l in j + 1..self.points {
                    let a = bins[self.pair_index(i, j)];
                    let b = bins[self.pair_index(i, l)];
                    let c = bins[self.pair_index(j, l)];
                    if a > b + c + 2 || b > a + c + 2 || c > a + b + 2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Number of triangle-feasible bins, when the grid is small enough to
    /// enumerate.
    pub fn reachable_bins(&self) -> Option<u64> {
        let total = self.total_bins();
        if self.points <= 2 {
            return Some(total as u64);
        }
        if total > MAX_REACHABLE_ENUMERATION {
            return None;
        }
        let count = (0..total as u64)
            .into_par_iter()
            .filter(|&key| {
                let mut bins = vec![0u64; self.pairs];
                self.decode(key as u128, &mut bins);
                self.triangle_feasible(&bins)
            })
            .count();
        Some(count as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexSpectrum {
    pub k: usize,
    pub d: usize,
    pub bin_resolution: u64,
    pub bins_per_axis: u64,
    pub diameter: f64,
    pub occupied_bins: u64,
    pub sampled_tuples: u64,
    /// `occupied_bins / M^{pairs}`: Lebesgue volume of the occupied bins.
    pub volume_estimate: f64,
    /// Occupied share of the full range box `[0, diameter]^{pairs}`.
    pub box_fraction: f64,
    pub reachable_bins: Option<u64>,
    /// Occupied share of the triangle-feasible bins.
    pub reachable_fraction: Option<f64>,
    /// `(samples drawn, bins occupied so far)`.
    pub saturation_curve: Vec<(u64, u64)>,
    #[serde(skip)]
    pub bins: Vec<u128>,
}

impl SimplexSpectrum {
    /// Share of the final occupancy first reached during the last 10% of
    /// the samples.
    pub fn late_growth(&self) -> f64 {
        let last = self.occupied_bins as f64;
        if last == 0.0 {
            return 0.0;
        }
        let cut = self.sampled_tuples - self.sampled_tuples / 10;
        let before = self
            .saturation_curve
            .iter()
            .filter(|p| p.0 <= cut)
            .map(|p| p.1)
            .max()
            .unwrap_or(0);
        (last - before as f64) / last
    }

    /// The JSON summary `{k, d, M, occupied, samples, volume_estimate, …}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "d": self.d,
            "M": self.bin_resolution,
            "occupied": self.occupied_bins,
            "samples": self.sampled_tuples,
            "volume_estimate": self.volume_estimate,
            "box_fraction": self.box_fraction,
            "reachable_bins": self.reachable_bins,
            "reachable_fraction": self.reachable_fraction,
            "diameter": self.diameter,
        })
    }

    pub fn saturation_csv(&self) -> String {
        let mut out = String::from("samples,occupied\n");
        for (s, o) in &self.saturation_curve {
            let _ = writeln!(out, "{s},{o}");
        }
        out
    }
}

/// Bins first reached by the samples of one chunk, with the global index of
/// the first sample hitting each.
fn sample_chunk(e: &GridSet, centers: &[f64], grid: &BinGrid, seed_value: u64, chunk: u64, count: u64) -> HashMap<u128, u64> {
    let d = e.dim();
    let n = e.len();
    let mut rng = seed::stream(seed_value, chunk);
    let mut seen = HashMap::new();
    let mut idx = vec![0usize; grid.points];
    let mut distances = vec![0.0; grid.pairs];
    for s in 0..count {
        for slot in idx.iter_mut() {
            *slot = rng.gen_range(0..n);
        }
        let mut p = 0;
        for i in 0..grid.points {
            for j in i + 1..grid.points {
                distances[p] = dist(&centers[idx[i] * d..(idx[i] + 1) * d], &centers[idx[j] * d..(idx[j] + 1) * d]);
                p += 1;
            }
        }
        seen.entry(grid.key(&distances)).or_insert(chunk * SAMPLE_CHUNK + s);
    }
    seen
}

/// Seeded Monte Carlo estimate of the occupied part of the distance space
/// of `(k+1)`-tuples of cell centers of `e`. The sample stream is a prefix
/// of the stream for any larger sample count.
pub fn simplex_spectrum(e: &GridSet, k: usize, samples: u64, bin_resolution: u64, seed_value: u64) -> Result<SimplexSpectrum> {
    let d = e.dim();
    if k < 1 || k > d {
        return Err(Error::pre(format!("k = {k} must lie in [1, {d}]")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::pre(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if e.is_empty() {
        return Err(Error::pre("simplex spectrum of an empty set"));
    }
    let diameter = center_diameter(e);
    let grid = BinGrid::new(k, bin_resolution, diameter)?;
    let centers = e.centers();
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let mut first_seen: HashMap<u128, u64> = HashMap::new();
    // bounded batches keep the per-chunk maps from piling up
    let batch = (rayon::current_num_threads() as u64 * 4).max(1);
    let mut start = 0;
    while start < chunks {
        let end = (start + batch).min(chunks);
        let maps: Vec<HashMap<u128, u64>> = (start..end)
            .into_par_iter()
            .map(|c| {
                let count = SAMPLE_CHUNK.min(samples - c * SAMPLE_CHUNK);
                sample_chunk(e, &centers, &grid, seed_value, c, count)
            })
            .collect();
        for map in maps {
            for (key, at) in map {
                first_seen.entry(key).and_modify(|v| *v = (*v).min(at)).or_insert(at);
            }
        }
        start = end;
    }
    let mut firsts: Vec<u64> = first_seen.values().copied().collect();
    firsts.sort_unstable();
    let saturation_curve = (1..=SATURATION_POINTS)
        .map(|p| {
            let upto = samples * p / SATURATION_POINTS;
            (upto, firsts.partition_point(|&f| f < upto) as u64)
        })
        .collect();
    let mut bins: Vec<u128> = first_seen.into_keys().collect();
    bins.sort_unstable();
    let occupied = bins.len() as u64;
    let reachable = grid.reachable_bins();
    Ok(SimplexSpectrum {
        k,
        d,
        bin_resolution,
        bins_per_axis: grid.bins_per_axis,
        diameter,
        occupied_bins: occupied,
        sampled_tuples: samples,
        volume_estimate: occupied as f64 * (bin_resolution as f64).powi(-(grid.pairs as i32)),
        box_fraction: occupied as f64 / grid.total_bins() as f64,
        reachable_bins: reachable,
        reachable_fraction: reachable.map(|r| occupied as f64 / r as f64),
        saturation_curve,
        bins,
    })
}
