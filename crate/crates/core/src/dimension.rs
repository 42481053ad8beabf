//! Box-counting dimension, Lebesgue-positivity verdicts and the exact
//! algebra of the projection condition and its thresholds.

use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fit::{fit_line, growth_fit_from_samples, DecayFit};
use crate::grid::GridSet;

pub type Rational = Ratio<i128>;

/// Minimum ladder length for box dimension and positivity probes.
pub const MIN_LADDER: usize = 4;
/// Occupied fraction required at the two finest levels for `positive`.
pub const POSITIVE_FRACTION: f64 = 0.98;
/// Allowed dip between consecutive fractions for `positive`.
pub const MONOTONE_SLACK: f64 = 0.02;
/// Per-octave factor below which fractions count as decaying.
pub const NULL_FACTOR: f64 = 0.9;

fn check_ladder(sets: &[GridSet]) -> Result<Vec<&GridSet>> {
    if sets.len() < MIN_LADDER {
        return Err(Error::pre(format!(
            "need at least {MIN_LADDER} ladder points, got {}",
            sets.len()
        )));
    }
    let mut sorted: Vec<&GridSet> = sets.iter().collect();
    sorted.sort_by_key(|s| s.resolution());
    if sorted.windows(2).any(|w| w[0].resolution() == w[1].resolution()) {
        return Err(Error::pre("ladder resolutions must be distinct"));
    }
    Ok(sorted)
}

/// Slope of `ln(count)` against `ln(N)` over a resolution ladder.
pub fn box_dimension(sets: &[GridSet]) -> Result<DecayFit> {
    let sorted = check_ladder(sets)?;
    let n: Vec<f64> = sorted.iter().map(|s| s.resolution() as f64).collect();
    let counts: Vec<f64> = sorted.iter().map(|s| s.len() as f64).collect();
    growth_fit_from_samples(&n, &counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Positive,
    Null,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Positive => "positive",
            Verdict::Null => "null",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityVerdict {
    /// `(N, occupied fraction)` by increasing resolution.
    pub occupied_fractions: Vec<(u64, f64)>,
    pub verdict: Verdict,
    /// Fitted factor by which the occupied fraction changes per doubling of
    /// the resolution.
    pub trend: f64,
}

/// Occupied-fraction decision rule over a resolution ladder.
///
/// `positive`: fraction ≥ 0.98 at the two finest levels and no drop larger
/// than 0.02 between consecutive levels. `null`: fitted per-octave factor
/// below 0.9. Otherwise `inconclusive`.
pub fn positivity_verdict(sets: &[GridSet]) -> Result<PositivityVerdict> {
    let sorted = check_ladder(sets)?;
    let fractions: Vec<(u64, f64)> = sorted.iter().map(|s| (s.resolution(), s.occupied_fraction())).collect();
    let k = fractions.len();
    let trend = if fractions.iter().all(|f| f.1 > 0.0) {
        let x: Vec<f64> = fractions.iter().map(|f| (f.0 as f64).log2()).collect();
        let y: Vec<f64> = fractions.iter().map(|f| f.1.ln()).collect();
        fit_line(&x, &y)?.slope.exp()
    } else {
        0.0
    };
    let positive = fractions[k - 2..].iter().all(|f| f.1 >= POSITIVE_FRACTION)
        && fractions.windows(2).all(|w| w[1].1 >= w[0].1 - MONOTONE_SLACK);
    let verdict = if positive {
        Verdict::Positive
    } else if trend < NULL_FACTOR {
        Verdict::Null
    } else {
        Verdict::Inconclusive
    };
    Ok(PositivityVerdict {
        occupied_fractions: fractions,
        verdict,
        trend,
    })
}

/// Parses a decimal (`1.6`, `-0.25`, `3`, `2e-1`) or fraction (`2/3`)
/// exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::pre(format!("`{text}` is not a decimal or fraction"));
    if let Some((p, q)) = t.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| bad())?;
        let q: i128 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{int}{frac}");
    let num: i128 = if all.is_empty() { 0 } else { all.parse().map_err(|_| bad())? };
    let scale = exp - frac.len() as i32;
    if scale.abs() > 30 {
        return Err(bad());
    }
    let pow = 10i128.pow(scale.unsigned_abs());
    let r = if scale >= 0 {
        Rational::from_integer(num.checked_mul(pow).ok_or_else(bad)?)
    } else {
        Rational::new(num, pow)
    };
    Ok(if neg { -r } else { r })
}

/// The shortest decimal that round-trips `x`, as an exact rational.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::pre(format!("{x} is not finite")));
    }
    parse_rational(&format!("{x:e}"))
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Inputs of the projection condition
/// `max{min{γ_F, s_E}/α, (s_E + s_F - l_F + 1 - α)/d} > 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionCondition {
    pub s_e: Rational,
    pub s_f: Rational,
    pub gamma_f: Rational,
    pub l_f: Rational,
    pub alpha: Rational,
    pub d: u32,
}

impl ProjectionCondition {
    pub fn from_f64(s_e: f64, s_f: f64, gamma_f: f64, l_f: f64, alpha: f64, d: u32) -> Result<Self> {
        let c = ProjectionCondition {
            s_e: rational_from_f64(s_e)?,
            s_f: rational_from_f64(s_f)?,
            gamma_f: rational_from_f64(gamma_f)?,
            l_f: rational_from_f64(l_f)?,
            alpha: rational_from_f64(alpha)?,
            d,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_alpha(&self, alpha: Rational) -> Self {
        ProjectionCondition { alpha, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Rational::zero();
        let one = Rational::from_integer(1);
        let dd = Rational::from_integer(self.d as i128);
        if self.d < 2 {
            return Err(Error::pre(format!("ambient dimension {} must be ≥ 2", self.d)));
        }
        for (name, v) in [("s_E", &self.s_e), ("s_F", &self.s_f)] {
            if *v < zero || *v > dd {
                return Err(Error::pre(format!("{name} = {v} must lie in [0, {}]", self.d)));
            }
        }
        if self.gamma_f < zero || self.l_f < zero {
            return Err(Error::pre("γ_F and l_F must be ≥ 0"));
        }
        if self.alpha < zero || self.alpha > one {
            return Err(Error::pre(format!("α = {} must lie in [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// A branch value of the condition: exact, or `+∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Branch {
    Finite(Rational),
    Infinite,
}

impl Branch {
    pub fn exceeds_one(&self) -> bool {
        match self {
            Branch::Finite(r) => *r > Rational::from_integer(1),
            Branch::Infinite => true,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Branch::Finite(r) => to_f64(r),
            Branch::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Finite(r) => write!(f, "{r}"),
            Branch::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Branch::Finite(r) => s.serialize_f64(to_f64(r)),
            Branch::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionVerdict {
    Holds,
    Fails,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub branch1: Branch,
    pub branch2: Rational,
    pub verdict: ConditionVerdict,
}

/// Evaluates both branches exactly. At `α = 0` the first branch is `+∞`
/// when `min{γ_F, s_E} > 0` and `0` otherwise.
pub fn check_condition(c: &ProjectionCondition) -> Result<ConditionReport> {
    c.validate()?;
    let m = c.gamma_f.min(c.s_e);
    let branch1 = if c.alpha.is_zero() {
        if m > Rational::zero() {
            Branch::Infinite
        } else {
            Branch::Finite(Rational::zero())
        }
    } else {
        Branch::Finite(m / c.alpha)
    };
    let one = Rational::from_integer(1);
    let branch2 = (c.s_e + c.s_f - c.l_f + one - c.alpha) / Rational::from_integer(c.d as i128);
    let holds = branch1.exceeds_one() || branch2 > one;
    Ok(ConditionReport {
        branch1,
        branch2,
        verdict: if holds { ConditionVerdict::Holds } else { ConditionVerdict::Fails },
    })
}

/// Supremum of the α ∈ [0, 1] for which the condition holds:
/// `min(1, max(min{γ_F, s_E}, s_E + s_F - l_F + 1 - d))`, floored at 0.
pub fn best_alpha(c: &ProjectionCondition) -> Result<Rational> {
    c.validate()?;
    let one = Rational::from_integer(1);
    let first = c.gamma_f.min(c.s_e);
    let second = c.s_e + c.s_f - c.l_f + one - Rational::from_integer(c.d as i128);
    Ok(first.max(second).min(one).max(Rational::zero()))
}

/// JSON record printed by the `check` subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub branch1: Branch,
    pub branch2: f64,
    pub verdict: ConditionVerdict,
    pub best_alpha: f64,
    pub branch1_exact: String,
    pub branch2_exact: String,
    pub best_alpha_exact: String,
}

pub fn check_summary(c: &ProjectionCondition) -> Result<CheckSummary> {
    let r = check_condition(c)?;
    let a = best_alpha(c)?;
    Ok(CheckSummary {
        branch1_exact: r.branch1.to_string(),
        branch2_exact: r.branch2.to_string(),
        best_alpha_exact: a.to_string(),
        branch1: r.branch1,
        branch2: to_f64(&r.branch2),
        verdict: r.verdict,
        best_alpha: to_f64(&a),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdTable {
    pub d: u32,
    pub k: u32,
    /// `1/2 + 1/(2(2d - 1))`
    pub sum_product: Rational,
    /// `(d + k - 1)/2`
    pub spherical_simplex: Rational,
    /// `(d + k + 1)/2`
    pub euclidean_simplex: Rational,
    /// `d/2`
    pub falconer: Rational,
}

pub fn threshold_table(d: u32, k: u32) -> Result<ThresholdTable> {
    if d < 2 {
        return Err(Error::pre(format!("dimension {d} must be ≥ 2")));
    }
    if k < 1 || k > d {
        return Err(Error::pre(format!("k = {k} must lie in [1, {d}]")));
    }
    let (di, ki) = (d as i128, k as i128);
    Ok(ThresholdTable {
        d,
        k,
        sum_product: Rational::new(1, 2) + Rational::new(1, 2 * (2 * di - 1)),
        spherical_simplex: Rational::new(di + ki - 1, 2),
        euclidean_simplex: Rational::new(di + ki + 1, 2),
        falconer: Rational::new(di, 2),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdRow {
    pub d: u32,
    pub k: u32,
    pub sum_product: f64,
    pub spherical_simplex: f64,
    pub euclidean_simplex: f64,
    pub falconer: f64,
    pub sum_product_exact: String,
}

impl From<&ThresholdTable> for ThresholdRow {
    fn from(t: &ThresholdTable) -> Self {
        ThresholdRow {
            d: t.d,
            k: t.k,
            sum_product: to_f64(&t.sum_product),
            spherical_simplex: to_f64(&t.spherical_simplex),
            euclidean_simplex: to_f64(&t.euclidean_simplex),
            falconer: to_f64(&t.falconer),
            sum_product_exact: t.sum_product.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::sumset;
    use crate::grid::{make_cantor, Budget, CantorSpec};

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn cond(s_e: &str, s_f: &str, g: &str, l: &str, a: &str, d: u32) -> ProjectionCondition {
        ProjectionCondition {
            s_e: q(s_e),
            s_f: q(s_f),
            gamma_f: q(g),
            l_f: q(l),
            alpha: q(a),
            d,
        }
    }

    fn cantor_ladder(depths: std::ops::RangeInclusive<u32>) -> Vec<GridSet> {
        depths
            .map(|n| make_cantor(&CantorSpec::new(3, &[0, 2], n).unwrap(), Budget::default()).unwrap())
            .collect()
    }

    #[test]
    fn parsing() {
        assert_eq!(q("1.6"), Rational::new(8, 5));
        assert_eq!(q("-0.25"), Rational::new(-1, 4));
        assert_eq!(q("2/3"), Rational::new(2, 3));
        assert_eq!(q("2e-1"), Rational::new(1, 5));
        assert_eq!(q("3"), Rational::from_integer(3));
        assert_eq!(rational_from_f64(0.79).unwrap(), Rational::new(79, 100));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn box_dimension_examples() {
        let full: Vec<GridSet> = (4..8).map(|k| GridSet::full_box(1 << k, vec![0], vec![1 << k]).unwrap()).collect();
        assert!((box_dimension(&full).unwrap().exponent - 1.0).abs() < 0.01);
        let point: Vec<GridSet> = (4..8).map(|k| GridSet::new(1 << k, vec![0], vec![1], vec![0]).unwrap()).collect();
        assert!(box_dimension(&point).unwrap().exponent.abs() < 1e-12);
        let c = box_dimension(&cantor_ladder(4..=12)).unwrap();
        assert!((c.exponent - 0.6309).abs() < 0.03);
        assert!(box_dimension(&full[..3]).is_err());
    }

    #[test]
    fn verdicts() {
        let full: Vec<GridSet> = (4..8).map(|k| GridSet::full_box(1 << k, vec![0], vec![1 << k]).unwrap()).collect();
        assert_eq!(positivity_verdict(&full).unwrap().verdict, Verdict::Positive);
        let ladder = cantor_ladder(4..=10);
        let v = positivity_verdict(&ladder).unwrap();
        assert_eq!(v.verdict, Verdict::Null);
        for (n, f) in &v.occupied_fractions {
            let depth = (*n as f64).log(3.0).round() as i32;
            assert!((f - (2.0f64 / 3.0).powi(depth)).abs() < 1e-12);
        }
        let sums: Vec<GridSet> = ladder.iter().map(|c| sumset(c, c).unwrap()).collect();
        assert_eq!(positivity_verdict(&sums).unwrap().verdict, Verdict::Positive);
    }

    #[test]
    fn condition_examples() {
        let r = check_condition(&cond("1.6", "1.6", "0", "0.8", "1", 2)).unwrap();
        assert_eq!(r.branch2, Rational::new(6, 5));
        assert_eq!(r.verdict, ConditionVerdict::Holds);

        let r = check_condition(&cond("1.1", "0.8", "0", "1", "0", 2)).unwrap();
        assert_eq!(r.branch1, Branch::Finite(Rational::zero()));
        assert_eq!(r.branch2, Rational::new(19, 20));
        assert_eq!(r.verdict, ConditionVerdict::Fails);

        let c = cond("1.2", "1.2", "0", "0.6", "0.8", 2);
        let r = check_condition(&c).unwrap();
        assert_eq!(r.branch2, Rational::from_integer(1));
        assert_eq!(r.verdict, ConditionVerdict::Fails);
        assert_eq!(check_condition(&c.with_alpha(q("0.79"))).unwrap().verdict, ConditionVerdict::Holds);

        let r = check_condition(&cond("0.5", "0.5", "0.3", "0.5", "0", 2)).unwrap();
        assert_eq!(r.branch1, Branch::Infinite);
        assert_eq!(r.verdict, ConditionVerdict::Holds);
    }

    #[test]
    fn best_alpha_examples() {
        assert_eq!(best_alpha(&cond("1.2", "1.2", "0", "0.6", "0", 2)).unwrap(), q("0.8"));
        assert_eq!(best_alpha(&cond("1.5", "1.5", "0", "0.75", "0", 2)).unwrap(), q("1"));
        assert_eq!(best_alpha(&cond("1.5", "1", "1.2", "1", "0", 2)).unwrap(), q("1"));
        assert_eq!(best_alpha(&cond("0.1", "0.1", "0", "1", "0", 2)).unwrap(), q("0"));
    }

    #[test]
    fn best_alpha_separates_on_grid() {
        let c = cond("1.3", "1.1", "0.4", "0.9", "0", 3);
        let a = best_alpha(&c).unwrap();
        for k in 0..=1000 {
            let alpha = Rational::new(k, 1000);
            let v = check_condition(&c.with_alpha(alpha)).unwrap().verdict;
            if alpha < a {
                assert_eq!(v, ConditionVerdict::Holds, "α={alpha}");
            } else if alpha > a {
                assert_eq!(v, ConditionVerdict::Fails, "α={alpha}");
            }
        }
    }

    #[test]
    fn optimal_alpha_closed_form() {
        for d in 2..=6i128 {
            for k in 0..=20 {
                let eps = Rational::new(k, 100);
                let s_a = Rational::new(1, 2) + eps;
                let dd = Rational::from_integer(d);
                let c = ProjectionCondition {
                    s_e: dd * s_a,
                    s_f: dd * s_a,
                    gamma_f: Rational::zero(),
                    l_f: s_a,
                    alpha: Rational::zero(),
                    d: d as u32,
                };
                let one = Rational::from_integer(1);
                let closed = (Rational::from_integer(2 * d - 1) * s_a + one - dd).min(one).max(Rational::zero());
                let a = best_alpha(&c).unwrap();
                assert_eq!(a, closed);
                let closed = Rational::new(1, 2) + eps * Rational::from_integer(2 * d - 1);
                if closed <= one {
                    assert_eq!(a, closed);
                }
            }
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold_table(2, 1).unwrap().sum_product, Rational::new(2, 3));
        assert_eq!(threshold_table(3, 2).unwrap().spherical_simplex, Rational::from_integer(2));
        assert_eq!(threshold_table(4, 2).unwrap().euclidean_simplex, Rational::new(7, 2));
        assert_eq!(threshold_table(5, 3).unwrap().falconer, Rational::new(5, 2));
        assert!(threshold_table(2, 3).is_err());
    }

    #[test]
    fn summary_json() {
        let s = check_summary(&cond("1", "1", "0.5", "1", "0", 2)).unwrap();
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["branch1"], "inf");
        assert_eq!(j["verdict"], "holds");
    }
}
