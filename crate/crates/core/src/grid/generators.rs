use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::set::{box_volume, flatten};
use crate::grid::GridSet;

/// Default per-object cell budget.
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_CELL_BUDGET)
    }
}

impl Budget {
    pub fn check(self, needed: u128) -> Result<()> {
        if needed > self.0 as u128 {
            Err(Error::Budget {
                needed,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

/// Digit-restricted base-`b` Cantor construction of depth `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorSpec {
    pub base: u64,
    pub digits: Vec<u64>,
    pub depth: u32,
}

impl CantorSpec {
    pub fn new(base: u64, digits: &[u64], depth: u32) -> Result<Self> {
        let spec = CantorSpec {
            base,
            digits: digits.to_vec(),
            depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(Error::pre(format!("Cantor base must be at least 2, got {}", self.base)));
        }
        if self.depth == 0 {
            return Err(Error::pre("Cantor depth must be positive"));
        }
        if self.digits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::pre("Cantor digits must be strictly increasing"));
        }
        if self.digits.len() < 2 {
            return Err(Error::pre("Cantor digit set needs at least two digits (dimension must be positive)"));
        }
        if self.digits.iter().any(|&d| d >= self.base) {
            return Err(Error::pre(format!("Cantor digits must be below the base {}", self.base)));
        }
        Ok(())
    }

    /// `log |D| / log b`.
    pub fn nominal_dimension(&self) -> f64 {
        (self.digits.len() as f64).ln() / (self.base as f64).ln()
    }

    pub fn with_depth(&self, depth: u32) -> CantorSpec {
        CantorSpec {
            depth,
            ..self.clone()
        }
    }

    /// `b^n`, if it fits.
    pub fn resolution(&self) -> Option<u64> {
        self.base.checked_pow(self.depth)
    }

    /// Distance from `u` to the closed union of the depth-`n` intervals.
    pub(crate) fn distance(&self, u: f64, cells: &[u64], periodic: bool) -> f64 {
        let n = self.resolution().unwrap_or(u64::MAX) as f64;
        let mut best = distance_to_cells(u, cells, n);
        if periodic {
            best = best
                .min(distance_to_cells(u - 1.0, cells, n))
                .min(distance_to_cells(u + 1.0, cells, n));
        }
        best
    }

    /// A construction of roughly the requested dimension: the base `b ≤
    /// max_base` and digit count minimizing `|log m / log b − s|` (smaller
    /// base on ties), with digits spread evenly over `0..b` including both
    /// ends.
    pub fn with_dimension(s: f64, max_base: u64, depth: u32) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::pre(format!("target dimension {s} outside (0, 1]")));
        }
        let mut best: Option<(f64, u64, u64)> = None;
        for b in 2..=max_base.max(2) {
            for m in 2..=b {
                let err = ((m as f64).ln() / (b as f64).ln() - s).abs();
                if best.is_none_or(|(e, _, _)| err < e - 1e-12) {
                    best = Some((err, b, m));
                }
            }
        }
        let (_, b, m) = best.expect("at least one candidate");
        let digits: Vec<u64> = (0..m).map(|i| i * (b - 1) / (m - 1)).collect();
        CantorSpec::new(b, &digits, depth)
    }
}

fn distance_to_cells(u: f64, cells: &[u64], n: f64) -> f64 {
    if cells.is_empty() {
        return f64::INFINITY;
    }
    let k = (u * n).floor();
    let pos = cells.partition_point(|&c| (c as f64) < k);
    let mut best = f64::INFINITY;
    if pos < cells.len() {
        let c = cells[pos] as f64;
        if c == k {
            return 0.0;
        }
        best = best.min(c / n - u);
    }
    if pos > 0 {
        let c = cells[pos - 1] as f64;
        best = best.min((u - (c + 1.0) / n).max(0.0));
    }
    best
}

/// Depth-`n` iterate of the digit-restricted construction on `[0, 1)`:
/// `|D|^n` cells at resolution `b^n`.
pub fn make_cantor(spec: &CantorSpec, budget: Budget) -> Result<GridSet> {
    spec.validate()?;
    let count = (spec.digits.len() as u128).checked_pow(spec.depth).unwrap_or(u128::MAX);
    budget.check(count)?;
    let n = spec.resolution().ok_or_else(|| Error::Budget {
        needed: u128::MAX,
        budget: budget.0,
    })?;
    let cells = cantor_indices(spec);
    Ok(GridSet::from_parts_unchecked(n, vec![0], vec![n], cells))
}

pub(crate) fn cantor_indices(spec: &CantorSpec) -> Vec<u64> {
    let mut cells = vec![0u64];
    for _ in 0..spec.depth {
        let mut next = Vec::with_capacity(cells.len() * spec.digits.len());
        for &c in &cells {
            for &d in &spec.digits {
                next.push(c * spec.base + d);
            }
        }
        cells = next;
    }
    cells
}

/// Cartesian product of sets sharing one resolution; axes are concatenated
/// in factor order.
pub fn make_product(factors: &[GridSet], budget: Budget) -> Result<GridSet> {
    if factors.len() < 2 {
        return Err(Error::pre("a product needs at least two factors"));
    }
    let n = factors[0].resolution();
    if factors.iter().any(|f| f.resolution() != n) {
        return Err(Error::pre("product factors have different resolutions"));
    }
    let count = factors.iter().fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128));
    budget.check(count)?;
    let origin: Vec<i64> = factors.iter().flat_map(|f| f.origin().iter().copied()).collect();
    let extent: Vec<u64> = factors.iter().flat_map(|f| f.extent().iter().copied()).collect();
    box_volume(&extent)?;
    if factors.iter().any(|f| f.is_empty()) {
        return GridSet::new(n, origin, extent, Vec::new());
    }

    // Odometer over factor cells, last factor fastest: lexicographic output.
    let mut cells = Vec::with_capacity(count as usize);
    let mut pos = vec![0usize; factors.len()];
    let tuples: Vec<Vec<Vec<u64>>> = factors.iter().map(|f| f.tuples().collect()).collect();
    let mut t = Vec::with_capacity(extent.len());
    loop {
        t.clear();
        for (f, &p) in pos.iter().enumerate() {
            t.extend_from_slice(&tuples[f][p]);
        }
        cells.push(flatten(&extent, &t));
        let mut f = factors.len();
        loop {
            if f == 0 {
                return Ok(GridSet::from_parts_unchecked(n, origin, extent, cells));
            }
            f -= 1;
            pos[f] += 1;
            if pos[f] < tuples[f].len() {
                break;
            }
            pos[f] = 0;
        }
    }
}

/// Angular restriction of a sphere subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularSpec {
    Full,
    /// The same Cantor construction applied to every normalized angular
    /// coordinate (polar angles over `[0, π]`, azimuth over `[0, 2π)`).
    Cantor(CantorSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSubsetSpec {
    pub dim: usize,
    pub radius: f64,
    pub angular: AngularSpec,
}

impl SphereSubsetSpec {
    pub fn full(dim: usize, radius: f64) -> Self {
        SphereSubsetSpec {
            dim,
            radius,
            angular: AngularSpec::Full,
        }
    }

    /// Nominal dimension of the parameterized subset.
    pub fn nominal_dimension(&self) -> f64 {
        match &self.angular {
            AngularSpec::Full => (self.dim - 1) as f64,
            AngularSpec::Cantor(c) => (self.dim - 1) as f64 * c.nominal_dimension(),
        }
    }
}

/// Cells of the grid at resolution `N` whose center lies within one cell
/// diameter of the (angularly restricted) sphere `|x| = t`.
pub fn make_sphere_subset(spec: &SphereSubsetSpec, resolution: u64, budget: Budget) -> Result<GridSet> {
    let d = spec.dim;
    if d < 2 {
        return Err(Error::pre(format!("sphere subsets need dimension ≥ 2, got {d}")));
    }
    let t = spec.radius;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::pre(format!("sphere radius must be positive, got {t}")));
    }
    if resolution == 0 {
        return Err(Error::pre("resolution must be positive"));
    }
    let n = resolution as f64;
    let diam = (d as f64).sqrt() / n;
    if diam >= t / 10.0 {
        return Err(Error::Resolution(format!(
            "cell diameter {diam:.4} is not below radius/10 = {:.4}",
            t / 10.0
        )));
    }
    let angular = match &spec.angular {
        AngularSpec::Full => None,
        AngularSpec::Cantor(c) => {
            c.validate()?;
            budget.check((c.digits.len() as u128).saturating_pow(c.depth))?;
            Some((c, cantor_indices(c)))
        }
    };

    let m = ((t + diam) * n).ceil() as i64 + 1;
    let origin = vec![-m; d];
    let extent = vec![(2 * m) as u64; d];
    box_volume(&extent)?;

    let outer = t + diam;
    let inner = (t - diam).max(0.0);
    let mut cells = Vec::new();
    let mut prefix = vec![-m; d - 1];
    let mut center = vec![0.0; d];
    let mut rel = vec![0u64; d];
    let coord = |i: i64| (i as f64 + 0.5) / n;
    loop {
        let r2: f64 = prefix.iter().map(|&i| coord(i) * coord(i)).sum();
        if r2 <= outer * outer {
            let hi = (outer * outer - r2).sqrt();
            let lo = if inner * inner > r2 { (inner * inner - r2).sqrt() } else { 0.0 };
            // last coordinate in ±[lo, hi], one extra cell each side
            let ranges = [(-hi, -lo), (lo, hi)];
            let mut last_added = i64::MIN;
            for (a, b) in ranges {
                let i0 = ((a * n - 0.5).floor() as i64 - 1).max(-m);
                let i1 = ((b * n - 0.5).ceil() as i64 + 1).min(m - 1);
                for i in i0..=i1 {
                    if i <= last_added {
                        continue;
                    }
                    for (k, &p) in prefix.iter().enumerate() {
                        center[k] = coord(p);
                    }
                    center[d - 1] = coord(i);
                    if on_subset(&center, t, diam, angular.as_ref()) {
                        for k in 0..d - 1 {
                            rel[k] = (prefix[k] + m) as u64;
                        }
                        rel[d - 1] = (i + m) as u64;
                        cells.push(flatten(&extent, &rel));
                        last_added = i;
                        budget.check(cells.len() as u128)?;
                    }
                }
            }
        }
        // odometer over the first d-1 axes
        let mut k = d - 1;
        loop {
            if k == 0 {
                return GridSet::new(resolution, origin, extent, cells);
            }
            k -= 1;
            prefix[k] += 1;
            if prefix[k] < m {
                break;
            }
            prefix[k] = -m;
        }
    }
}

fn on_subset(c: &[f64], t: f64, diam: f64, angular: Option<&(&CantorSpec, Vec<u64>)>) -> bool {
    let r = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let Some((spec, cells)) = angular else {
        return (r - t).abs() <= diam;
    };
    let d = c.len();
    if d == 2 {
        // exact distance from the center to the restricted arc set
        let theta = c[1].atan2(c[0]).rem_euclid(2.0 * PI);
        let du = spec.distance(theta / (2.0 * PI), cells, true);
        let delta = (2.0 * PI * du).min(PI);
        let dist2 = r * r + t * t - 2.0 * t * r * delta.cos();
        return dist2 <= diam * diam;
    }
    if (r - t).abs() > diam {
        return false;
    }
    // Hyperspherical angles; each normalized coordinate must lie within the
    // arc-length slack of the Cantor set at its latitude.
    let mut scale = t;
    for j in 0..d - 1 {
        let tail: f64 = c[j + 1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let (u, span, periodic) = if j < d - 2 {
            (tail.atan2(c[j]) / PI, PI, false)
        } else {
            (c[d - 1].atan2(c[d - 2]).rem_euclid(2.0 * PI) / (2.0 * PI), 2.0 * PI, true)
        };
        let slack = if scale > 0.0 { diam / (scale * span) } else { f64::INFINITY };
        if spec.distance(u, cells, periodic) > slack {
            return false;
        }
        if j < d - 2 {
            let rr = c[j..].iter().map(|x| x * x).sum::<f64>().sqrt();
            scale *= if rr > 0.0 { tail / rr } else { 0.0 };
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn middle_thirds_depth_two() {
        let s = make_cantor(&CantorSpec::new(3, &[0, 2], 2).unwrap(), Budget::default()).unwrap();
        assert_eq!(s.resolution(), 9);
        assert_eq!(s.cells(), &[0, 2, 6, 8]);
    }

    #[test]
    fn full_digit_set_is_the_interval() {
        let s = make_cantor(&CantorSpec::new(2, &[0, 1], 5).unwrap(), Budget::default()).unwrap();
        assert_eq!(s.resolution(), 32);
        assert_eq!(s.cells(), (0..32).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn cantor_budget_is_enforced() {
        let spec = CantorSpec::new(3, &[0, 2], 12).unwrap();
        match make_cantor(&spec, Budget(1000)) {
            Err(Error::Budget { needed, budget }) => {
                assert_eq!(needed, 4096);
                assert_eq!(budget, 1000);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(CantorSpec::new(1, &[0], 3).is_err());
        assert!(CantorSpec::new(3, &[0, 3], 3).is_err());
        assert!(CantorSpec::new(3, &[2, 0], 3).is_err());
        assert!(CantorSpec::new(3, &[0, 2], 0).is_err());
        assert!(CantorSpec::new(3, &[1], 2).is_err());
    }

    #[test]
    fn dimension_matching() {
        let s = CantorSpec::with_dimension(0.8, 16, 4).unwrap();
        assert_eq!((s.base, s.digits.len()), (4, 3));
        let h = CantorSpec::with_dimension(0.5, 16, 4).unwrap();
        assert_eq!(h.base, 4);
        assert_eq!(h.digits, vec![0, 3]);
    }

    #[test]
    fn product_counts() {
        let a = GridSet::new(8, vec![0], vec![8], vec![0, 1, 4, 6]).unwrap();
        let p = make_product(&[a.clone(), a], Budget::default()).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.dim(), 2);
        let full = GridSet::full_box(8, vec![0], vec![8]).unwrap();
        let sq = make_product(&[full.clone(), full], Budget::default()).unwrap();
        assert_eq!(sq, GridSet::full_box(8, vec![0, 0], vec![8, 8]).unwrap());
    }

    #[test]
    fn product_rejects_mismatched_resolutions() {
        let a = GridSet::full_box(8, vec![0], vec![8]).unwrap();
        let b = GridSet::full_box(4, vec![0], vec![4]).unwrap();
        assert!(matches!(make_product(&[a.clone(), b], Budget::default()), Err(Error::Precondition(_))));
        assert!(matches!(make_product(&[a.clone(), a], Budget(10)), Err(Error::Budget { .. })));
    }

    #[test]
    fn unit_circle_cells_hug_the_circle() {
        let s = make_sphere_subset(&SphereSubsetSpec::full(2, 1.0), 256, Budget::default()).unwrap();
        let tol = 2f64.sqrt() / 256.0 + 1e-12;
        let c = s.centers();
        for p in c.chunks(2) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() <= tol);
        }
        // band of width 2·diam around a circle of length 2π
        let expected = 2.0 * std::f64::consts::PI * 2.0 * tol * 256.0 * 256.0;
        let ratio = s.len() as f64 / expected;
        assert!((0.9..1.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sphere_shell_in_three_dimensions() {
        let s = make_sphere_subset(&SphereSubsetSpec::full(3, 2.0), 64, Budget::default()).unwrap();
        let tol = 3f64.sqrt() / 64.0 + 1e-12;
        assert!(!s.is_empty());
        for p in s.centers().chunks(3) {
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - 2.0).abs() <= tol);
        }
    }

    #[test]
    fn coarse_sphere_rejected() {
        let r = make_sphere_subset(&SphereSubsetSpec::full(2, 1.0), 8, Budget::default());
        assert!(matches!(r, Err(Error::Resolution(_))));
    }
}
