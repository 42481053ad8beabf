//! Sumsets, product sets, dilated sums and additive convolution.
//!
//! Every 1-D cell `k` stands for the half-open interval `[k/N, (k+1)/N)`.
//! Results are outer covers: an output cell is present iff it meets the
//! exact sum (or product) of some pair of input cells.

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::grid::{GridSet, WeightedMeasure};
use crate::numeric::neumaier_sum;

/// Default bound on `|x|` for product-set inputs.
pub const DEFAULT_PRODUCT_BOUND: f64 = 2.0;

fn require_line(s: &GridSet, what: &str) -> Result<()> {
    if s.dim() != 1 {
        return Err(Error::pre(format!("{what} expects 1-D sets, got dimension {}", s.dim())));
    }
    Ok(())
}

fn require_same_resolution(a: &GridSet, b: &GridSet) -> Result<()> {
    if a.resolution() != b.resolution() {
        return Err(Error::pre(format!(
            "resolution mismatch: {} vs {}",
            a.resolution(),
            b.resolution()
        )));
    }
    Ok(())
}

/// `A + B`: cell pair `(i, j)` covers output cells `i + j` and `i + j + 1`.
pub fn sumset(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    require_line(a, "sumset")?;
    require_line(b, "sumset")?;
    require_same_resolution(a, b)?;
    let origin = a.origin()[0] + b.origin()[0];
    let len = (a.extent()[0] + b.extent()[0]) as usize;
    let mut bits_b = BitSet::new(len);
    for &j in b.cells() {
        bits_b.set(j as usize);
    }
    let mut acc = BitSet::new(len);
    for &i in a.cells() {
        acc.or_shifted(&bits_b, i as usize);
    }
    let base = acc.clone();
    acc.or_shifted(&base, 1);
    let cells = acc.ones().map(|k| k as u64).collect();
    Ok(GridSet::from_parts_unchecked(a.resolution(), vec![origin], vec![len as u64], cells))
}

/// Output cells met by the product of cells `[pa, pa+1)/N · [pb, pb+1)/N`,
/// as an inclusive range of absolute indices.
///
/// The product is an interval whose endpoints are corner products; an
/// endpoint belongs to it only when attained at the closed corner
/// `(pa, pb)`.
pub fn product_cover(pa: i64, pb: i64, n: u64) -> (i64, i64) {
    let (pa, pb, n) = (pa as i128, pb as i128, n as i128);
    let closed = pa * pb;
    let corners = [closed, (pa + 1) * pb, pa * (pb + 1), (pa + 1) * (pb + 1)];
    let lo = *corners.iter().min().expect("four corners");
    let hi = *corners.iter().max().expect("four corners");
    let kmin = lo.div_euclid(n);
    let kmax = if closed == hi {
        hi.div_euclid(n)
    } else {
        // ceil(hi / n) - 1
        (hi + n - 1).div_euclid(n) - 1
    };
    (kmin as i64, kmax as i64)
}

/// `A · B` with the default input bound.
pub fn productset(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    productset_within(a, b, DEFAULT_PRODUCT_BOUND)
}

/// `A · B` for sets supported in `[-bound, bound]`.
pub fn productset_within(a: &GridSet, b: &GridSet, bound: f64) -> Result<GridSet> {
    require_line(a, "productset")?;
    require_line(b, "productset")?;
    require_same_resolution(a, b)?;
    let n = a.resolution();
    let xa = a.absolute_1d();
    let xb = b.absolute_1d();
    for (name, xs) in [("first", &xa), ("second", &xb)] {
        if let (Some(&lo), Some(&hi)) = (xs.first(), xs.last()) {
            let (l, h) = (lo as f64 / n as f64, (hi + 1) as f64 / n as f64);
            if l < -bound || h > bound {
                return Err(Error::pre(format!(
                    "{name} factor spans [{l}, {h}), outside the product box [-{bound}, {bound}]"
                )));
            }
        }
    }
    let (Some(&a0), Some(&a1), Some(&b0), Some(&b1)) = (xa.first(), xa.last(), xb.first(), xb.last()) else {
        return GridSet::new(n, vec![0], vec![1], Vec::new());
    };
    // frame: extremes of the product over the occupied spans sit at the
    // corner cells
    let corner_covers: Vec<(i64, i64)> = [(a0, b0), (a0, b1), (a1, b0), (a1, b1)]
        .iter()
        .map(|&(p, q)| product_cover(p, q, n))
        .collect();
    let frame_lo = corner_covers.iter().map(|c| c.0).min().expect("four corners");
    let frame_hi = corner_covers.iter().map(|c| c.1).max().expect("four corners");
    let len = (frame_hi - frame_lo + 1) as usize;
    let mut bits = BitSet::new(len);
    for &p in &xa {
        for &q in &xb {
            let (lo, hi) = product_cover(p, q, n);
            bits.set_range((lo - frame_lo) as usize, (hi - frame_lo) as usize);
        }
    }
    let cells = bits.ones().map(|k| k as u64).collect();
    Ok(GridSet::from_parts_unchecked(n, vec![frame_lo], vec![len as u64], cells))
}

/// `c · A` as an outer cover of the dilated cells.
pub fn dilate(a: &GridSet, c: f64) -> Result<GridSet> {
    require_line(a, "dilate")?;
    if !c.is_finite() {
        return Err(Error::pre(format!("dilation coefficient {c} is not finite")));
    }
    let mut out = Vec::with_capacity(a.len() * 2);
    for p in a.absolute_1d() {
        let (x0, x1) = (c * p as f64, c * (p + 1) as f64);
        if c > 0.0 {
            // [x0, x1)
            let lo = x0.floor() as i64;
            let hi = x1.ceil() as i64 - 1;
            out.extend(lo..=hi.max(lo));
        } else if c < 0.0 {
            // (x1, x0]
            out.extend(x1.floor() as i64..=x0.floor() as i64);
        } else {
            out.push(0);
        }
    }
    GridSet::from_absolute_1d(a.resolution(), out)
}

/// `c₁A + c₂A + ⋯ + c_dA`, built as iterated sumsets of dilates.
pub fn dilated_sum(coeffs: &[f64], a: &GridSet) -> Result<GridSet> {
    require_line(a, "dilated_sum")?;
    if coeffs.len() < 2 {
        return Err(Error::pre(format!("dilated sum needs at least 2 coefficients, got {}", coeffs.len())));
    }
    if let Some(c) = coeffs.iter().find(|c| !(c.abs() <= 2.0)) {
        return Err(Error::pre(format!("coefficient {c} outside [-2, 2]")));
    }
    if coeffs.iter().all(|&c| c == 0.0) {
        return Err(Error::Degenerate("all dilation coefficients are zero".into()));
    }
    if a.is_empty() {
        return Err(Error::pre("dilated sum of an empty set"));
    }
    let mut acc = dilate(a, coeffs[0])?;
    for &c in &coeffs[1..] {
        acc = sumset(&acc, &dilate(a, c)?)?;
    }
    Ok(acc)
}

/// Pushforward of `m1 × m2` under addition: each pair's mass is split
/// equally between cells `i + j` and `i + j + 1`, the two halves of the
/// interval sum.
pub fn convolve_sum_measures(m1: &WeightedMeasure, m2: &WeightedMeasure) -> Result<WeightedMeasure> {
    require_line(m1.support(), "convolve_sum_measures")?;
    require_line(m2.support(), "convolve_sum_measures")?;
    require_same_resolution(m1.support(), m2.support())?;
    let (s1, s2) = (m1.support(), m2.support());
    let len = (s1.extent()[0] + s2.extent()[0]) as usize;
    let mut mass = vec![0.0f64; len];
    for (&i, &w1) in s1.cells().iter().zip(m1.weights()) {
        for (&j, &w2) in s2.cells().iter().zip(m2.weights()) {
            let half = 0.5 * w1 * w2;
            let k = (i + j) as usize;
            mass[k] += half;
            mass[k + 1] += half;
        }
    }
    let cells: Vec<u64> = (0..len).filter(|&k| mass[k] > 0.0).map(|k| k as u64).collect();
    let raw: Vec<f64> = cells.iter().map(|&k| mass[k as usize]).collect();
    let total = neumaier_sum(raw.iter().copied());
    let weights = raw.iter().map(|w| w / total).collect();
    let support = GridSet::from_parts_unchecked(
        s1.resolution(),
        vec![s1.origin()[0] + s2.origin()[0]],
        vec![len as u64],
        cells,
    );
    WeightedMeasure::new(support, weights)
}
