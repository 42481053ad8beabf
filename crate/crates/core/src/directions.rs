//! Deterministic low-discrepancy direction sets on the unit sphere.

use std::f64::consts::PI;

/// Default number of directions for sup-over-direction estimates.
pub const DEFAULT_DIRECTIONS: usize = 64;

const GOLDEN_FRAC: f64 = 0.618_033_988_749_894_9;

fn seed_offset(seed: u64) -> f64 {
    (seed as f64 * GOLDEN_FRAC).fract()
}

/// `count` unit vectors in `R^d`, reproducible from `seed`.
///
/// * `d = 1`: `+1, -1, +1, ...`
/// * `d = 2`: equally spaced angles `2π(k + φ)/count`; seed 0 gives `φ = 0`,
///   so the axes and diagonals are included whenever `count` is a multiple
///   of 8.
/// * `d = 3`: a Fibonacci lattice rotated about the pole by the seed.
/// * `d ≥ 4`: a Kronecker sequence pushed through Box–Muller and normalized.
pub fn sphere_directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let phi = seed_offset(seed);
    match d {
        0 => Vec::new(),
        1 => (0..count).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + phi) / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => (0..count)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let a = 2.0 * PI * ((k as f64 * GOLDEN_FRAC).fract() + phi);
                vec![r * a.cos(), r * a.sin(), z]
            })
            .collect(),
        _ => kronecker_directions(d, count, phi),
    }
}

fn kronecker_directions(d: usize, count: usize, phi: f64) -> Vec<Vec<f64>> {
    // generalized golden ratio: positive root of x^{m+1} = x + 1
    let m = d + d % 2;
    let mut g = 1.5f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (m as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=m).map(|j| (1.0 / g.powi(j as i32)).fract()).collect();
    (0..count)
        .map(|k| {
            let u: Vec<f64> = alpha
                .iter()
                .map(|a| (0.5 + phi + a * (k + 1) as f64).fract())
                .collect();
            let mut v = Vec::with_capacity(m);
            for pair in u.chunks(2) {
                let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
                let t = 2.0 * PI * pair[1];
                v.push(r * t.cos());
                v.push(r * t.sin());
            }
            v.truncate(d);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            } else {
                v[0] = 1.0;
            }
            v
        })
        .collect()
}
