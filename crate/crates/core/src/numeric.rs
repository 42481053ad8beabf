//! Small numeric kernels shared by the measure code.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Compensated (Neumaier) summation; result independent of magnitude
/// ordering effects up to one rounding.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexAccumulator {
    re: (f64, f64),
    im: (f64, f64),
}

impl ComplexAccumulator {
    pub fn add(&mut self, z: Complex64) {
        neumaier_step(&mut self.re, z.re);
        neumaier_step(&mut self.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

fn neumaier_step(acc: &mut (f64, f64), v: f64) {
    let t = acc.0 + v;
    if acc.0.abs() >= v.abs() {
        acc.1 += (acc.0 - t) + v;
    } else {
        acc.1 += (v - t) + acc.0;
    }
    acc.0 = t;
}

/// `exp(-2πi x)`, with `x` reduced modulo 1 before scaling so large phases
/// keep full relative accuracy.
pub fn cis_neg(x: f64) -> Complex64 {
    let r = x - x.round();
    let (s, c) = (2.0 * PI * r).sin_cos();
    Complex64::new(c, -s)
}

/// `sin(πx)`, exactly zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}
