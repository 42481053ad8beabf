use crate::error::{Error, Result};

/// A finite union of axis-aligned cells of side `1/N`.
///
/// Cells are stored as row-major flattened indices relative to the bounding
/// box `origin .. origin + extent` (in cell units), first axis most
/// significant. Numeric order of the flattened index is therefore the
/// lexicographic order of index tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet {
    resolution: u64,
    origin: Vec<i64>,
    extent: Vec<u64>,
    cells: Vec<u64>,
}

impl GridSet {
    /// Builds a set from flattened indices. Duplicates are merged and the
    /// indices sorted.
    pub fn new(resolution: u64, origin: Vec<i64>, extent: Vec<u64>, mut cells: Vec<u64>) -> Result<Self> {
        validate_frame(resolution, &origin, &extent)?;
        let volume = box_volume(&extent)?;
        cells.sort_unstable();
        cells.dedup();
        if let Some(&last) = cells.last() {
            if last >= volume {
                return Err(Error::pre(format!(
                    "cell index {last} outside the declared extent {extent:?}"
                )));
            }
        }
        Ok(GridSet {
            resolution,
            origin,
            extent,
            cells,
        })
    }

    pub fn from_tuples(resolution: u64, origin: Vec<i64>, extent: Vec<u64>, tuples: &[Vec<u64>]) -> Result<Self> {
        validate_frame(resolution, &origin, &extent)?;
        let mut cells = Vec::with_capacity(tuples.len());
        for t in tuples {
            if t.len() != extent.len() {
                return Err(Error::pre(format!(
                    "index tuple of length {} in a {}-dimensional set",
                    t.len(),
                    extent.len()
                )));
            }
            for (axis, (&i, &e)) in t.iter().zip(&extent).enumerate() {
                if i >= e {
                    return Err(Error::pre(format!("index {i} on axis {axis} exceeds extent {e}")));
                }
            }
            cells.push(flatten(&extent, t));
        }
        Self::new(resolution, origin, extent, cells)
    }

    /// Every cell of the box.
    pub fn full_box(resolution: u64, origin: Vec<i64>, extent: Vec<u64>) -> Result<Self> {
        let volume = box_volume(&extent)?;
        Self::new(resolution, origin, extent, (0..volume).collect())
    }

    /// A 1-D set from absolute cell indices `k` (cell `[k/N, (k+1)/N)`); the
    /// bounding box is the tight span of the indices.
    pub fn from_absolute_1d(resolution: u64, indices: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut idx: Vec<i64> = indices.into_iter().collect();
        idx.sort_unstable();
        idx.dedup();
        let (lo, hi) = match (idx.first(), idx.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Self::new(resolution, vec![0], vec![1], Vec::new()),
        };
        let cells = idx.iter().map(|&k| (k - lo) as u64).collect();
        Self::new(resolution, vec![lo], vec![(hi - lo + 1) as u64], cells)
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn extent(&self) -> &[u64] {
        &self.extent
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_side(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn cell_diameter(&self) -> f64 {
        (self.dim() as f64).sqrt() / self.resolution as f64
    }

    /// Index tuple (relative to the origin) of a flattened index.
    pub fn decode(&self, flat: u64, out: &mut [u64]) {
        let mut rem = flat;
        for axis in (0..self.dim()).rev() {
            out[axis] = rem % self.extent[axis];
            rem /= self.extent[axis];
        }
    }

    pub fn tuple(&self, flat: u64) -> Vec<u64> {
        let mut t = vec![0; self.dim()];
        self.decode(flat, &mut t);
        t
    }

    pub fn tuples(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        self.cells.iter().map(move |&c| self.tuple(c))
    }

    /// Absolute index tuples: cell `k` on an axis is `[k/N, (k+1)/N)`.
    pub fn absolute_tuples(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        self.tuples().map(move |t| {
            t.iter()
                .zip(&self.origin)
                .map(|(&i, &o)| o + i as i64)
                .collect()
        })
    }

    /// Absolute indices of a 1-D set.
    pub fn absolute_1d(&self) -> Vec<i64> {
        debug_assert_eq!(self.dim(), 1);
        let o = self.origin[0];
        self.cells.iter().map(|&c| o + c as i64).collect()
    }

    pub fn center_into(&self, flat: u64, out: &mut [f64]) {
        let n = self.resolution as f64;
        let mut rem = flat;
        for axis in (0..self.dim()).rev() {
            let i = rem % self.extent[axis];
            rem /= self.extent[axis];
            out[axis] = (self.origin[axis] as f64 + i as f64 + 0.5) / n;
        }
    }

    pub fn center(&self, flat: u64) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        self.center_into(flat, &mut c);
        c
    }

    /// Cell centers, `dim` coordinates per cell, in cell order.
    pub fn centers(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.len() * d];
        for (k, &c) in self.cells.iter().enumerate() {
            self.center_into(c, &mut out[k * d..(k + 1) * d]);
        }
        out
    }

    /// Lower and upper absolute cell index of occupied cells, per axis.
    pub fn occupied_span(&self) -> Option<Vec<(i64, i64)>> {
        if self.is_empty() {
            return None;
        }
        let d = self.dim();
        let mut span = vec![(i64::MAX, i64::MIN); d];
        let mut t = vec![0u64; d];
        for &c in &self.cells {
            self.decode(c, &mut t);
            for axis in 0..d {
                let a = self.origin[axis] + t[axis] as i64;
                span[axis].0 = span[axis].0.min(a);
                span[axis].1 = span[axis].1.max(a);
            }
        }
        Some(span)
    }

    /// Share of the occupied bounding box covered by cells.
    pub fn occupied_fraction(&self) -> f64 {
        match self.occupied_span() {
            None => 0.0,
            Some(span) => {
                let vol: f64 = span.iter().map(|&(lo, hi)| (hi - lo + 1) as f64).product();
                self.len() as f64 / vol
            }
        }
    }

    pub fn contains_absolute(&self, abs: &[i64]) -> bool {
        if abs.len() != self.dim() {
            return false;
        }
        let mut rel = Vec::with_capacity(abs.len());
        for axis in 0..abs.len() {
            let r = abs[axis] - self.origin[axis];
            if r < 0 || r as u64 >= self.extent[axis] {
                return false;
            }
            rel.push(r as u64);
        }
        self.cells.binary_search(&flatten(&self.extent, &rel)).is_ok()
    }

    /// Set inclusion as cell collections; frames may differ but resolutions
    /// must agree.
    pub fn is_subset_of(&self, other: &GridSet) -> bool {
        self.resolution == other.resolution
            && self.dim() == other.dim()
            && self.absolute_tuples().all(|t| other.contains_absolute(&t))
    }

    /// Same cells in absolute coordinates, regardless of bounding box.
    pub fn same_cells(&self, other: &GridSet) -> bool {
        self.len() == other.len() && self.is_subset_of(other)
    }

    /// Keeps the cells for which `keep` returns true; the frame is unchanged.
    pub fn filter(&self, mut keep: impl FnMut(u64) -> bool) -> GridSet {
        GridSet {
            resolution: self.resolution,
            origin: self.origin.clone(),
            extent: self.extent.clone(),
            cells: self.cells.iter().copied().filter(|&c| keep(c)).collect(),
        }
    }

    /// Merges cells into blocks of `factor` cells per axis: resolution
    /// becomes `N / factor`, and a coarse cell is present iff it contains a
    /// fine cell. Blocks are aligned to the absolute grid.
    pub fn coarsen(&self, factor: u64) -> Result<GridSet> {
        if factor < 2 {
            return Err(Error::pre(format!("coarsening factor must be at least 2, got {factor}")));
        }
        if self.resolution % factor != 0 {
            return Err(Error::pre(format!(
                "coarsening factor {factor} does not divide the resolution {}",
                self.resolution
            )));
        }
        let k = factor as i64;
        let d = self.dim();
        let origin: Vec<i64> = self.origin.iter().map(|&o| o.div_euclid(k)).collect();
        let extent: Vec<u64> = (0..d)
            .map(|a| {
                let top = self.origin[a] + self.extent[a] as i64 - 1;
                (top.div_euclid(k) - origin[a] + 1) as u64
            })
            .collect();
        let mut t = vec![0u64; d];
        let mut coarse = vec![0u64; d];
        let mut cells = Vec::with_capacity(self.len());
        for &c in &self.cells {
            self.decode(c, &mut t);
            for a in 0..d {
                let abs = self.origin[a] + t[a] as i64;
                coarse[a] = (abs.div_euclid(k) - origin[a]) as u64;
            }
            cells.push(flatten(&extent, &coarse));
        }
        GridSet::new(self.resolution / factor, origin, extent, cells)
    }

    pub(crate) fn from_parts_unchecked(resolution: u64, origin: Vec<i64>, extent: Vec<u64>, cells: Vec<u64>) -> Self {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        GridSet {
            resolution,
            origin,
            extent,
            cells,
        }
    }
}

pub(crate) fn flatten(extent: &[u64], tuple: &[u64]) -> u64 {
    tuple
        .iter()
        .zip(extent)
        .fold(0u64, |acc, (&i, &e)| acc * e + i)
}

pub(crate) fn box_volume(extent: &[u64]) -> Result<u64> {
    let v = extent.iter().try_fold(1u128, |acc, &e| {
        let next = acc * e as u128;
        (next <= u64::MAX as u128).then_some(next)
    });
    v.map(|v| v as u64)
        .ok_or_else(|| Error::pre(format!("bounding box {extent:?} has too many cells to index")))
}

fn validate_frame(resolution: u64, origin: &[i64], extent: &[u64]) -> Result<()> {
    if resolution == 0 {
        return Err(Error::pre("resolution must be positive"));
    }
    if extent.is_empty() {
        return Err(Error::pre("dimension must be positive"));
    }
    if origin.len() != extent.len() {
        return Err(Error::pre(format!(
            "origin has {} coordinates but extent has {}",
            origin.len(),
            extent.len()
        )));
    }
    if extent.iter().any(|&e| e == 0) {
        return Err(Error::pre("extent components must be positive"));
    }
    Ok(())
}

/// Divisor chain `1 = k_0 | k_1 | ... | k_m = n` built from the prime
/// factorization of `n`, smallest primes first.
pub fn divisor_chain(n: u64) -> Vec<u64> {
    let mut chain = vec![1];
    let mut rem = n;
    let mut acc = 1;
    let mut p = 2;
    while rem > 1 {
        if p * p > rem {
            p = rem;
        }
        while rem % p == 0 {
            rem /= p;
            acc *= p;
            chain.push(acc);
        }
        p += 1;
    }
    chain
}
