//! Seeded experiment sweeps: a JSON config names an experiment kind and a
//! parameter grid; every grid point becomes one report row carrying the
//! measured values next to the predictions of [`crate::dimension`].

mod config;
mod report;
mod svg;

pub use config::{
    ConditionGrid, DecayGrid, Experiment, ExperimentConfig, Outputs, PinnedGrid, ProjectionGrid, SetChoice,
    SimplexGrid, SumproductGrid, TubeGrid,
};
pub use report::{emit_report, read_report, report_csv, report_json, Format};
pub use svg::report_svg;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arithmetic::dilated_sum;
use crate::configurations::simplex_spectrum;
use crate::dimension::{
    best_alpha, check_condition, positivity_verdict, rational_from_f64, threshold_table, ConditionVerdict,
    ProjectionCondition, Rational, Verdict,
};
use crate::directions::sphere_directions;
use crate::error::{Error, Result};
use crate::fit::DecayFit;
use crate::grid::{make_cantor, make_product, make_sphere_subset, uniform_measure, Budget, CantorSpec, GridSet, SphereSubsetSpec};
use crate::projection::{pinned_distances, project_measure, tube_profile};
use crate::seed;
use crate::spectral::decay_samples;

/// Distance allowed between a measured exponent and its prediction.
pub const EXPONENT_TOLERANCE: f64 = 0.1;
/// Largest decay exponent counted as "no decay".
pub const NON_DECAY: f64 = 0.05;

pub type Fields = BTreeMap<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Failed,
    Skipped,
}

/// Samples and fit behind an exponent, for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub fit: DecayFit,
    /// `+1` when the fitted line is `intercept + exponent·ln x`, `-1` when
    /// it is `intercept - exponent·ln x`.
    pub sign: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub index: usize,
    pub seed: u64,
    pub params: Fields,
    pub measured: Fields,
    pub predicted: Fields,
    pub agree: Option<bool>,
    pub status: RowStatus,
    pub error: Option<String>,
    pub series: Option<Series>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub package: String,
    pub version: String,
    pub kind: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

/// A grid point before any measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct RowPlan {
    pub index: usize,
    pub seed: u64,
    pub params: Fields,
    pub predicted: Fields,
    task: Task,
}

#[derive(Clone, Debug, PartialEq)]
enum Task {
    Sumproduct { spec: CantorSpec, d: usize, levels: u32 },
    Projection { spec: CantorSpec, d: usize, levels: u32 },
    Tube { spec: CantorSpec, d: usize, directions: usize, deltas: Vec<f64> },
    Decay { spec: CantorSpec, d: usize, directions: usize, freqs: Option<Vec<f64>> },
    Pinned { sphere: SphereSubsetSpec, resolutions: Vec<u64> },
    Simplex { sphere: SphereSubsetSpec, resolution: u64, k: usize, samples: u64, bins: u64 },
    Condition(ProjectionCondition),
}

fn f(x: f64) -> Value {
    json!(x)
}

fn q(r: &Rational) -> Value {
    use num_traits::ToPrimitive;
    json!(r.to_f64())
}

fn set_params(spec: &CantorSpec) -> Fields {
    let mut p = Fields::new();
    p.insert("s_a".into(), f(spec.nominal_dimension()));
    p.insert("base".into(), json!(spec.base));
    p.insert("digits".into(), json!(spec.digits));
    p.insert("depth".into(), json!(spec.depth));
    p
}

fn sphere_params(s: &SphereSubsetSpec) -> Fields {
    let mut p = Fields::new();
    p.insert("d".into(), json!(s.dim));
    p.insert("radius".into(), f(s.radius));
    p.insert("dimension".into(), f(s.nominal_dimension()));
    p.insert("angular".into(), serde_json::to_value(&s.angular).expect("spec serializes"));
    p
}

fn product_condition(s_a: f64, d: usize, alpha: f64) -> Result<ProjectionCondition> {
    let s = rational_from_f64(s_a)?;
    let dd = Rational::from_integer(d as i128);
    Ok(ProjectionCondition {
        s_e: dd * s,
        s_f: dd * s,
        gamma_f: Rational::from_integer(0),
        l_f: s,
        alpha: rational_from_f64(alpha)?,
        d: d as u32,
    })
}

/// The closed form `min(1, max(min{γ_F, s_E}, s_E + s_F - l_F + 1 - d))`,
/// floored at 0, and the verdict it implies for the given α.
fn closed_form(c: &ProjectionCondition) -> (Rational, bool) {
    let one = Rational::from_integer(1);
    let m = c.gamma_f.min(c.s_e).max(c.s_e + c.s_f - c.l_f + one - Rational::from_integer(c.d as i128));
    (m.min(one).max(Rational::from_integer(0)), c.alpha < m)
}

fn verdict_name(holds: bool) -> Value {
    json!(if holds { "holds" } else { "fails" })
}

/// Expands the config into row plans and their predictions.
pub fn plan_rows(cfg: &ExperimentConfig) -> Result<Vec<RowPlan>> {
    cfg.validate()?;
    let mut plans: Vec<(Fields, Fields, Task)> = Vec::new();
    match &cfg.experiment {
        Experiment::Sumproduct(g) => {
            let thr = threshold_table(g.d, 1)?.sum_product;
            for choice in &g.sets {
                let spec = choice.spec(g.depth, g.max_base)?;
                for r in 0..g.replicates {
                    let mut p = set_params(&spec);
                    p.insert("d".into(), json!(g.d));
                    p.insert("levels".into(), json!(g.levels));
                    p.insert("replicate".into(), json!(r));
                    let mut pred = Fields::new();
                    pred.insert("threshold".into(), q(&thr));
                    let above = rational_from_f64(spec.nominal_dimension())? > thr;
                    pred.insert("expect".into(), json!(if above { "positive" } else { "no claim" }));
                    plans.push((p, pred, Task::Sumproduct { spec: spec.clone(), d: g.d as usize, levels: g.levels }));
                }
            }
        }
        Experiment::Projection(g) => {
            for choice in &g.sets {
                let spec = choice.spec(g.depth, g.max_base)?;
                for r in 0..g.replicates {
                    let mut p = set_params(&spec);
                    p.insert("d".into(), json!(g.d));
                    p.insert("levels".into(), json!(g.levels));
                    p.insert("replicate".into(), json!(r));
                    let mut pred = Fields::new();
                    for alpha in [0.0, 1.0] {
                        let c = product_condition(spec.nominal_dimension(), g.d as usize, alpha)?;
                        let holds = check_condition(&c)?.verdict == ConditionVerdict::Holds;
                        pred.insert(format!("alpha{alpha}"), verdict_name(holds));
                    }
                    let c = product_condition(spec.nominal_dimension(), g.d as usize, 0.0)?;
                    pred.insert("best_alpha".into(), q(&best_alpha(&c)?));
                    plans.push((p, pred, Task::Projection { spec: spec.clone(), d: g.d as usize, levels: g.levels }));
                }
            }
        }
        Experiment::Tube(g) => {
            for choice in &g.sets {
                for &depth in &g.depths {
                    let spec = choice.spec(depth, g.max_base)?;
                    let deltas = g.deltas.clone().unwrap_or_else(|| default_deltas(&spec));
                    let mut p = set_params(&spec);
                    p.insert("d".into(), json!(g.d));
                    p.insert("directions".into(), json!(g.directions));
                    let mut pred = Fields::new();
                    let s_a = spec.nominal_dimension();
                    pred.insert("exponent".into(), f((g.d - 1) as f64 * s_a));
                    pred.insert("l_f".into(), f(s_a));
                    plans.push((
                        p,
                        pred,
                        Task::Tube {
                            spec,
                            d: g.d as usize,
                            directions: g.directions,
                            deltas,
                        },
                    ));
                }
            }
        }
        Experiment::Decay(g) => {
            for choice in &g.sets {
                for &depth in &g.depths {
                    let spec = choice.spec(depth, g.max_base)?;
                    let mut p = set_params(&spec);
                    p.insert("d".into(), json!(g.d));
                    let mut pred = Fields::new();
                    pred.insert("gamma_f".into(), f(0.0));
                    plans.push((
                        p,
                        pred,
                        Task::Decay {
                            spec,
                            d: g.d as usize,
                            directions: g.directions,
                            freqs: g.freqs.clone(),
                        },
                    ));
                }
            }
        }
        Experiment::Pinned(g) => {
            for sphere in &g.spheres {
                let thr = threshold_table(sphere.dim as u32, 1)?.falconer;
                for r in 0..g.pins {
                    let mut p = sphere_params(sphere);
                    p.insert("resolutions".into(), json!(g.resolutions));
                    p.insert("pin".into(), json!(r));
                    let mut pred = Fields::new();
                    pred.insert("threshold".into(), q(&thr));
                    let above = rational_from_f64(sphere.nominal_dimension())? > thr;
                    pred.insert("expect".into(), json!(if above { "positive" } else { "no claim" }));
                    plans.push((
                        p,
                        pred,
                        Task::Pinned {
                            sphere: sphere.clone(),
                            resolutions: g.resolutions.clone(),
                        },
                    ));
                }
            }
        }
        Experiment::Simplex(g) => {
            for sphere in &g.spheres {
                for &k in &g.k {
                    let thr = threshold_table(sphere.dim as u32, k)?.spherical_simplex;
                    let mut p = sphere_params(sphere);
                    p.insert("k".into(), json!(k));
                    p.insert("resolution".into(), json!(g.resolution));
                    p.insert("samples".into(), json!(g.samples));
                    p.insert("bins".into(), json!(g.bins));
                    let mut pred = Fields::new();
                    pred.insert("threshold".into(), q(&thr));
                    let above = rational_from_f64(sphere.nominal_dimension())? > thr;
                    pred.insert("expect".into(), json!(if above { "positive" } else { "no claim" }));
                    plans.push((
                        p,
                        pred,
                        Task::Simplex {
                            sphere: sphere.clone(),
                            resolution: g.resolution,
                            k: k as usize,
                            samples: g.samples,
                            bins: g.bins,
                        },
                    ));
                }
            }
        }
        Experiment::Condition(g) => {
            for &d in &g.d {
                for &s_e in &g.s_e {
                    for &s_f in &g.s_f {
                        for &gamma in &g.gamma_f {
                            for &l in &g.l_f {
                                for &alpha in &g.alpha {
                                    let c = ProjectionCondition::from_f64(s_e, s_f, gamma, l, alpha, d)?;
                                    let mut p = Fields::new();
                                    p.insert("s_e".into(), f(s_e));
                                    p.insert("s_f".into(), f(s_f));
                                    p.insert("gamma_f".into(), f(gamma));
                                    p.insert("l_f".into(), f(l));
                                    p.insert("alpha".into(), f(alpha));
                                    p.insert("d".into(), json!(d));
                                    let (a, holds) = closed_form(&c);
                                    let mut pred = Fields::new();
                                    pred.insert("best_alpha".into(), json!(a.to_string()));
                                    pred.insert("verdict".into(), verdict_name(holds));
                                    plans.push((p, pred, Task::Condition(c)));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(plans
        .into_iter()
        .enumerate()
        .map(|(index, (params, predicted, task))| RowPlan {
            index,
            seed: seed::derive(cfg.seed, index as u64),
            params,
            predicted,
            task,
        })
        .collect())
}

/// `δ = b^{-2-j/2}`, `j = 0..=8`, kept at or above one cell.
fn default_deltas(spec: &CantorSpec) -> Vec<f64> {
    let b = spec.base as f64;
    let n = b.powi(spec.depth as i32);
    (0..=8)
        .map(|j| b.powf(-2.0 - j as f64 / 2.0))
        .filter(|&delta| delta * n >= 1.0 - 1e-9)
        .collect()
}

/// `{b^j, 1.5·b^j : j ≥ 1}` below the anti-alias guard `N/4`: the
/// frequencies where a base-`b` Cantor transform keeps its size.
fn adic_frequencies(base: u64, resolution: u64) -> Vec<f64> {
    let guard = resolution as f64 / 4.0;
    let mut out = Vec::new();
    let mut p = base as f64;
    while p < guard {
        out.extend([p, 1.5 * p].into_iter().filter(|&t| t < guard));
        p *= base as f64;
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn random_cell_center(set: &GridSet, rng: &mut impl Rng) -> Vec<f64> {
    set.center(set.cells()[rng.gen_range(0..set.len())])
}

struct Outcome {
    measured: Fields,
    agree: Option<bool>,
    series: Option<Series>,
}

fn verdict_value(v: Verdict) -> Value {
    json!(v.to_string())
}

/// Seeded sum-product probe: coefficients are centers of random cells of
/// the finest `A`; the ladder holds `c₁A + ⋯ + c_dA` for the last `levels`
/// depths.
pub fn sumproduct_probe(
    spec: &CantorSpec,
    d: usize,
    levels: u32,
    seed_value: u64,
    budget: Budget,
) -> Result<(crate::dimension::PositivityVerdict, Vec<f64>)> {
    if levels < 1 || levels > spec.depth {
        return Err(Error::pre(format!("{levels} ladder levels for depth {}", spec.depth)));
    }
    let finest = make_cantor(spec, budget)?;
    let mut rng = seed::stream(seed_value, 0);
    let coeffs: Vec<f64> = (0..d).map(|_| random_cell_center(&finest, &mut rng)[0]).collect();
    let ladder = (spec.depth + 1 - levels..=spec.depth)
        .map(|n| dilated_sum(&coeffs, &make_cantor(&spec.with_depth(n), budget)?))
        .collect::<Result<Vec<_>>>()?;
    Ok((positivity_verdict(&ladder)?, coeffs))
}

fn expect_positive(plan: &RowPlan, key: &str) -> bool {
    plan.predicted.get(key).and_then(Value::as_str) == Some("positive")
}

fn run_task(plan: &RowPlan, budget: Budget) -> Result<Outcome> {
    let mut measured = Fields::new();
    match &plan.task {
        Task::Sumproduct { spec, d, levels } => {
            let (v, coeffs) = sumproduct_probe(spec, *d, *levels, plan.seed, budget)?;
            measured.insert("verdict".into(), verdict_value(v.verdict));
            measured.insert("finest_fraction".into(), f(v.occupied_fractions.last().map(|x| x.1).unwrap_or(0.0)));
            measured.insert("trend".into(), f(v.trend));
            measured.insert("coefficients".into(), json!(coeffs));
            let positive = v.verdict == Verdict::Positive;
            let agree = if expect_positive(plan, "expect") { positive } else { !positive };
            Ok(Outcome {
                measured,
                agree: Some(agree),
                series: None,
            })
        }
        Task::Projection { spec, d, levels } => {
            if *levels < 1 || *levels > spec.depth {
                return Err(Error::pre(format!("{levels} ladder levels for depth {}", spec.depth)));
            }
            let finest = make_product(&vec![make_cantor(spec, budget)?; *d], budget)?;
            let mut rng = seed::stream(plan.seed, 0);
            let y = random_cell_center(&finest, &mut rng);
            let mut ladder = Vec::new();
            for n in spec.depth + 1 - levels..=spec.depth {
                let a = make_cantor(&spec.with_depth(n), budget)?;
                let e = uniform_measure(&make_product(&vec![a; *d], budget)?)?;
                ladder.push(project_measure(&e, &y)?.support().clone());
            }
            let v = positivity_verdict(&ladder)?;
            measured.insert("verdict".into(), verdict_value(v.verdict));
            measured.insert("finest_fraction".into(), f(v.occupied_fractions.last().map(|x| x.1).unwrap_or(0.0)));
            measured.insert("trend".into(), f(v.trend));
            measured.insert("y".into(), json!(y));
            let positive = v.verdict == Verdict::Positive;
            let r0 = plan.predicted.get("alpha0").and_then(Value::as_str);
            let r1 = plan.predicted.get("alpha1").and_then(Value::as_str);
            let agree = (r0 == r1).then(|| (r0 == Some("holds")) == positive);
            Ok(Outcome { measured, agree, series: None })
        }
        Task::Tube { spec, d, directions, deltas } => {
            let a = make_cantor(spec, budget)?;
            let m = uniform_measure(&make_product(&vec![a; *d], budget)?)?;
            let s_f = *d as f64 * spec.nominal_dimension();
            let dirs = sphere_directions(*d, *directions, plan.seed);
            let p = tube_profile(&m, &dirs, deltas, s_f)?;
            measured.insert("exponent".into(), f(p.exponent));
            measured.insert("l_f".into(), f(p.l_f));
            measured.insert("residual".into(), f(p.residual));
            let e_pred = plan.predicted["exponent"].as_f64().unwrap_or(f64::NAN);
            let l_pred = plan.predicted["l_f"].as_f64().unwrap_or(f64::NAN);
            let agree = (p.exponent - e_pred).abs() <= EXPONENT_TOLERANCE && (p.l_f - l_pred).abs() <= EXPONENT_TOLERANCE;
            let (xs, ys): (Vec<f64>, Vec<f64>) = p.samples.iter().copied().unzip();
            let fit = crate::fit::growth_fit_from_samples(&xs, &ys)?;
            Ok(Outcome {
                measured,
                agree: Some(agree),
                series: Some(Series {
                    x_label: "delta".into(),
                    y_label: "max tube mass".into(),
                    points: p.samples,
                    fit,
                    sign: 1.0,
                }),
            })
        }
        Task::Decay { spec, d, directions, freqs } => {
            let a = make_cantor(spec, budget)?;
            let set = if *d == 1 { a } else { make_product(&vec![a; *d], budget)? };
            let m = uniform_measure(&set)?;
            let t = freqs.clone().unwrap_or_else(|| adic_frequencies(spec.base, m.resolution()));
            let mut dirs = if *d == 1 { vec![vec![1.0]] } else { sphere_directions(*d, *directions, plan.seed) };
            if *d > 1 {
                dirs.extend((0..*d).map(|i| (0..*d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()));
            }
            let samples = decay_samples(&m, &t, &dirs)?;
            let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
            let fit = crate::fit::decay_fit_from_samples(&xs, &ys)?;
            measured.insert("gamma".into(), f(fit.exponent));
            measured.insert("residual".into(), f(fit.residual));
            Ok(Outcome {
                measured,
                agree: Some(fit.exponent <= NON_DECAY),
                series: Some(Series {
                    x_label: "t".into(),
                    y_label: "sup |transform|".into(),
                    points: samples,
                    fit,
                    sign: -1.0,
                }),
            })
        }
        Task::Pinned { sphere, resolutions } => {
            let finest = *resolutions.iter().max().expect("validated nonempty");
            let top = make_sphere_subset(sphere, finest, budget)?;
            let mut rng = seed::stream(plan.seed, 0);
            let pin = random_cell_center(&top, &mut rng);
            let ladder = resolutions
                .iter()
                .map(|&n| pinned_distances(&make_sphere_subset(sphere, n, budget)?, &pin))
                .collect::<Result<Vec<_>>>()?;
            let v = positivity_verdict(&ladder)?;
            measured.insert("verdict".into(), verdict_value(v.verdict));
            measured.insert("finest_fraction".into(), f(v.occupied_fractions.last().map(|x| x.1).unwrap_or(0.0)));
            measured.insert("trend".into(), f(v.trend));
            measured.insert("pin".into(), json!(pin));
            let agree = expect_positive(plan, "expect").then_some(v.verdict == Verdict::Positive);
            Ok(Outcome { measured, agree, series: None })
        }
        Task::Simplex { sphere, resolution, k, samples, bins } => {
            let e = make_sphere_subset(sphere, *resolution, budget)?;
            let s = simplex_spectrum(&e, *k, *samples, *bins, plan.seed)?;
            measured.insert("occupied".into(), json!(s.occupied_bins));
            measured.insert("volume_estimate".into(), f(s.volume_estimate));
            measured.insert("box_fraction".into(), f(s.box_fraction));
            measured.insert("reachable_fraction".into(), json!(s.reachable_fraction));
            measured.insert("late_growth".into(), f(s.late_growth()));
            let saturated = s.late_growth() < 0.01;
            let agree = expect_positive(plan, "expect")
                .then(|| saturated && s.reachable_fraction.is_some_and(|x| x >= 0.5));
            Ok(Outcome { measured, agree, series: None })
        }
        Task::Condition(c) => {
            let r = check_condition(c)?;
            let a = best_alpha(c)?;
            measured.insert("branch1".into(), json!(r.branch1.to_string()));
            measured.insert("branch2".into(), json!(r.branch2.to_string()));
            measured.insert("verdict".into(), verdict_name(r.verdict == ConditionVerdict::Holds));
            measured.insert("best_alpha".into(), json!(a.to_string()));
            let agree = plan.predicted.get("best_alpha") == measured.get("best_alpha")
                && plan.predicted.get("verdict") == measured.get("verdict");
            Ok(Outcome {
                measured,
                agree: Some(agree),
                series: None,
            })
        }
    }
}

fn run_row(plan: &RowPlan, budget: Budget) -> ReportRow {
    let (status, outcome, error) = match run_task(plan, budget) {
        Ok(o) => (RowStatus::Ok, Some(o), None),
        Err(e @ Error::Budget { .. }) => (RowStatus::Skipped, None, Some(e.to_string())),
        Err(e) => (RowStatus::Failed, None, Some(e.to_string())),
    };
    let (measured, agree, series) = match outcome {
        Some(o) => (o.measured, o.agree, o.series),
        None => (Fields::new(), None, None),
    };
    ReportRow {
        index: plan.index,
        seed: plan.seed,
        params: plan.params.clone(),
        measured,
        predicted: plan.predicted.clone(),
        agree,
        status,
        error,
        series,
    }
}

/// Runs every grid point of `cfg` (rows in parallel, reported in grid
/// order). Row failures are recorded in the row; budget exhaustion marks the
/// row skipped.
pub fn run_sweep(cfg: &ExperimentConfig, budget: Budget) -> Result<ExperimentReport> {
    let plans = plan_rows(cfg)?;
    let rows: Vec<ReportRow> = plans.par_iter().map(|p| run_row(p, budget)).collect();
    Ok(ExperimentReport {
        provenance: Provenance {
            seed: cfg.seed,
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            kind: cfg.experiment.kind().into(),
            rows: rows.len(),
        },
        config: cfg.clone(),
        rows,
    })
}

/// Recomputes every row's predictions from the stored config and checks
/// them against the stored values.
pub fn verify_predictions(r: &ExperimentReport) -> Result<()> {
    let plans = plan_rows(&r.config)?;
    if plans.len() != r.rows.len() {
        return Err(Error::Config(format!(
            "config expands to {} rows, report has {}",
            plans.len(),
            r.rows.len()
        )));
    }
    for (plan, row) in plans.iter().zip(&r.rows) {
        if plan.predicted != row.predicted || plan.params != row.params {
            return Err(Error::Config(format!("row {} predictions are stale", row.index)));
        }
    }
    Ok(())
}
