use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fraclab::arithmetic::{dilated_sum, productset, productset_within, sumset};
use fraclab::configurations::simplex_spectrum;
use fraclab::dimension::{check_summary, parse_rational, threshold_table, ProjectionCondition, ThresholdRow};
use fraclab::directions::{sphere_directions, DEFAULT_DIRECTIONS};
use fraclab::grid::{
    make_cantor, make_product, make_sphere_subset, uniform_measure, AngularSpec, Budget, CantorSpec, GridSet,
    SphereSubsetSpec, WeightedMeasure, DEFAULT_CELL_BUDGET,
};
use fraclab::harness::{emit_report, read_report, report_json, run_sweep, verify_predictions, ExperimentConfig};
use fraclab::io::{read_bytes, read_measure, read_set, write_measure, write_set, write_text, SetFormat};
use fraclab::projection::{multi_project_at, pinned_distances, project_measure, tube_csv, tube_profile};
use fraclab::seed::DEFAULT_SEED;
use fraclab::spectral::{
    decay_samples, default_frequencies, energy_integral, energy_integral_off_diagonal, fit_summary_json, samples_csv,
};
use fraclab::{Error, Result};

#[derive(Parser)]
#[command(name = "fraclab", version, about = "Desk-scale experiments on discretized fractal sets")]
struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true, env = "FRACLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FRACLAB_THREADS")]
    threads: Option<usize>,
    /// Largest number of cells any single construction may hold.
    #[arg(long, global = true, env = "FRACLAB_CELL_BUDGET")]
    cell_budget: Option<u64>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Cantor,
    Interval,
    Sphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Frs1,
    Frsj,
}

#[derive(Args)]
struct GenerateArgs {
    kind: GenKind,
    /// Cantor base (also the angular base for sphere subsets).
    #[arg(long)]
    base: Option<u64>,
    /// Allowed digits, comma separated.
    #[arg(long, value_delimiter = ',')]
    digits: Vec<u64>,
    #[arg(long)]
    depth: Option<u32>,
    /// Cartesian power of the generated set.
    #[arg(long, default_value_t = 1)]
    power: usize,
    /// Grid resolution for intervals and spheres.
    #[arg(long)]
    resolution: Option<u64>,
    /// Ambient dimension of a sphere.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Write the uniform measure (FRM1) instead of the set.
    #[arg(long)]
    measure: bool,
    #[arg(long, value_enum, default_value = "frs1")]
    format: FileFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Cantor set, interval or sphere subset.
    Generate(GenerateArgs),
    /// Minkowski sum A + B.
    Sumset { a: PathBuf, b: PathBuf },
    /// Product set A·B (optionally restricted to |x| ≤ bound).
    Product {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        bound: Option<f64>,
    },
    /// c₁A + ⋯ + c_kA for one-dimensional A.
    DilatedSum {
        a: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        coeffs: Vec<f64>,
    },
    /// Push a measure forward under x ↦ x·y.
    Project {
        measure: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        y: Vec<f64>,
    },
    /// Push a measure forward under x ↦ (x·y₁, …, x·y_k).
    MultiProject {
        measure: PathBuf,
        /// One projection vector per flag, comma separated.
        #[arg(long, required = true, allow_hyphen_values = true)]
        y: Vec<String>,
        /// Output resolution (default: the input resolution).
        #[arg(long)]
        resolution: Option<u64>,
    },
    /// Fourier decay profile and fitted exponent.
    Decay {
        measure: PathBuf,
        #[arg(long, value_delimiter = ',')]
        freqs: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
        directions: usize,
    },
    /// s-energy of a measure.
    Energy {
        measure: PathBuf,
        #[arg(long)]
        s: f64,
        /// Drop the diagonal (self-pair) term.
        #[arg(long)]
        off_diagonal: bool,
    },
    /// Tube masses through the origin and the fitted exponent.
    Tube {
        measure: PathBuf,
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
        directions: usize,
        /// Dimension of the measure, used to derive l_F.
        #[arg(long)]
        s_f: f64,
    },
    /// Pinned distance set {|x - y| : x ∈ E}.
    Pinned {
        set: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        pin: Vec<f64>,
    },
    /// Evaluate the projection condition exactly.
    Check {
        #[arg(long)]
        s_e: String,
        #[arg(long)]
        s_f: String,
        #[arg(long)]
        gamma_f: String,
        #[arg(long)]
        l_f: String,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        d: u32,
    },
    /// Dimension thresholds for a range of (d, k).
    Thresholds {
        #[arg(long, default_value_t = 2)]
        d_min: u32,
        #[arg(long, default_value_t = 6)]
        d_max: u32,
        /// Only this k (default: every 1 ≤ k ≤ d).
        #[arg(long)]
        k: Option<u32>,
    },
    /// Occupancy of the (k+1)-point configuration spectrum.
    Simplex {
        set: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Bins per unit distance.
        #[arg(long, default_value_t = 16)]
        bins: u64,
    },
    /// Run an experiment config.
    Sweep { config: PathBuf },
    /// Re-emit a stored JSON report as csv, json or svg (by --out extension).
    Report { report: PathBuf },
}

struct Ctx {
    seed: u64,
    seed_given: bool,
    budget: Budget,
    out: Option<PathBuf>,
}

impl Ctx {
    fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Precondition("this subcommand needs --out <path>".into()))
    }
}

/// Writes to stdout, ignoring a reader that has gone away.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("json value serializes")));
}

fn set_summary(s: &GridSet) -> Value {
    json!({
        "dim": s.dim(),
        "resolution": s.resolution(),
        "cells": s.len(),
        "occupied_fraction": s.occupied_fraction(),
    })
}

fn measure_summary(m: &WeightedMeasure) -> Value {
    json!({
        "dim": m.dim(),
        "resolution": m.resolution(),
        "cells": m.support().len(),
        "total_mass": m.total_mass(),
    })
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Precondition(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn generate(a: &GenerateArgs, ctx: &Ctx) -> Result<()> {
    let cantor = || -> Result<CantorSpec> {
        let base = a.base.ok_or_else(|| Error::Precondition("--base is required".into()))?;
        let depth = a.depth.ok_or_else(|| Error::Precondition("--depth is required".into()))?;
        CantorSpec::new(base, &a.digits, depth)
    };
    let resolution = || a.resolution.ok_or_else(|| Error::Precondition("--resolution is required".into()));
    let (set, nominal) = match a.kind {
        GenKind::Cantor => {
            let spec = cantor()?;
            let one = make_cantor(&spec, ctx.budget)?;
            (power(one, a.power, ctx.budget)?, a.power as f64 * spec.nominal_dimension())
        }
        GenKind::Interval => {
            let n = resolution()?;
            ctx.budget.check((n as u128).pow(a.power as u32))?;
            let one = GridSet::full_box(n, vec![0], vec![n])?;
            (power(one, a.power, ctx.budget)?, a.power as f64)
        }
        GenKind::Sphere => {
            let angular = if a.base.is_some() { AngularSpec::Cantor(cantor()?) } else { AngularSpec::Full };
            let spec = SphereSubsetSpec {
                dim: a.dim,
                radius: a.radius,
                angular,
            };
            (make_sphere_subset(&spec, resolution()?, ctx.budget)?, spec.nominal_dimension())
        }
    };
    let path = ctx.out()?;
    if a.measure {
        write_measure(path, &uniform_measure(&set)?)?;
    } else {
        let f = match a.format {
            FileFormat::Frs1 => SetFormat::Frs1,
            FileFormat::Frsj => SetFormat::Frsj,
        };
        write_set(path, &set, f)?;
    }
    let mut v = set_summary(&set);
    v["nominal_dimension"] = json!(nominal);
    print(&v);
    Ok(())
}

fn power(one: GridSet, p: usize, budget: Budget) -> Result<GridSet> {
    if p == 0 {
        return Err(Error::Precondition("--power must be positive".into()));
    }
    if p == 1 {
        return Ok(one);
    }
    make_product(&vec![one; p], budget)
}

fn finish_set(set: &GridSet, ctx: &Ctx) -> Result<()> {
    write_set(ctx.out()?, set, SetFormat::Frs1)?;
    print(&set_summary(set));
    Ok(())
}

fn finish_measure(m: &WeightedMeasure, ctx: &Ctx) -> Result<()> {
    write_measure(ctx.out()?, m)?;
    print(&measure_summary(m));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        seed_given: cli.seed.is_some(),
        budget: Budget(cli.cell_budget.unwrap_or(DEFAULT_CELL_BUDGET)),
        out: cli.out,
    };
    match cli.command {
        Command::Generate(a) => generate(&a, &ctx),
        Command::Sumset { a, b } => finish_set(&sumset(&read_set(&a)?, &read_set(&b)?)?, &ctx),
        Command::Product { a, b, bound } => {
            let (a, b) = (read_set(&a)?, read_set(&b)?);
            let p = match bound {
                Some(x) => productset_within(&a, &b, x)?,
                None => productset(&a, &b)?,
            };
            finish_set(&p, &ctx)
        }
        Command::DilatedSum { a, coeffs } => finish_set(&dilated_sum(&coeffs, &read_set(&a)?)?, &ctx),
        Command::Project { measure, y } => finish_measure(&project_measure(&read_measure(&measure)?, &y)?, &ctx),
        Command::MultiProject { measure, y, resolution } => {
            let m = read_measure(&measure)?;
            let ys = y.iter().map(|t| parse_vector(t)).collect::<Result<Vec<_>>>()?;
            let out = resolution.unwrap_or(m.resolution());
            finish_measure(&multi_project_at(&m, &ys, out, ctx.budget)?, &ctx)
        }
        Command::Decay { measure, freqs, directions } => {
            let m = read_measure(&measure)?;
            let freqs = if freqs.is_empty() { default_frequencies(m.resolution()) } else { freqs };
            let dirs = sphere_directions(m.dim(), directions, ctx.seed);
            let samples = decay_samples(&m, &freqs, &dirs)?;
            let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
            let fit = fraclab::fit::decay_fit_from_samples(&xs, &ys)?;
            if let Some(p) = &ctx.out {
                write_text(p, &samples_csv(&samples))?;
            }
            emit(&format!("{}\n", fit_summary_json(&fit)));
            Ok(())
        }
        Command::Energy { measure, s, off_diagonal } => {
            let m = read_measure(&measure)?;
            let value = if off_diagonal {
                energy_integral_off_diagonal(&m, s)?
            } else {
                energy_integral(&m, s)?
            };
            let v = json!({ "s": s, "energy": value, "off_diagonal": off_diagonal });
            if let Some(p) = &ctx.out {
                write_text(p, &format!("{}\n", v))?;
            }
            print(&v);
            Ok(())
        }
        Command::Tube { measure, deltas, directions, s_f } => {
            let m = read_measure(&measure)?;
            let deltas = if deltas.is_empty() { default_deltas(m.resolution()) } else { deltas };
            let dirs = sphere_directions(m.dim(), directions, ctx.seed);
            let p = tube_profile(&m, &dirs, &deltas, s_f)?;
            if let Some(path) = &ctx.out {
                write_text(path, &tube_csv(&p))?;
            }
            print(&serde_json::to_value(&p).expect("profile serializes"));
            Ok(())
        }
        Command::Pinned { set, pin } => {
            let d = pinned_distances(&read_set(&set)?, &pin)?;
            if let Some(p) = &ctx.out {
                write_set(p, &d, SetFormat::Frs1)?;
            }
            print(&set_summary(&d));
            Ok(())
        }
        Command::Check { s_e, s_f, gamma_f, l_f, alpha, d } => {
            let c = ProjectionCondition {
                s_e: parse_rational(&s_e)?,
                s_f: parse_rational(&s_f)?,
                gamma_f: parse_rational(&gamma_f)?,
                l_f: parse_rational(&l_f)?,
                alpha: parse_rational(&alpha)?,
                d,
            };
            let v = serde_json::to_value(check_summary(&c)?).expect("summary serializes");
            if let Some(p) = &ctx.out {
                write_text(p, &format!("{}\n", v))?;
            }
            print(&v);
            Ok(())
        }
        Command::Thresholds { d_min, d_max, k } => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for d in d_min..=d_max {
                let ks: Vec<u32> = match k {
                    Some(k) => vec![k],
                    None => (1..=d).collect(),
                };
                for k in ks {
                    w.serialize(ThresholdRow::from(&threshold_table(d, k)?))
                        .map_err(|e| Error::Config(format!("csv: {e}")))?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
            let text = String::from_utf8(bytes).expect("csv output is utf-8");
            match &ctx.out {
                Some(p) => write_text(p, &text)?,
                None => emit(&text),
            }
            Ok(())
        }
        Command::Simplex { set, k, samples, bins } => {
            let s = simplex_spectrum(&read_set(&set)?, k, samples, bins, ctx.seed)?;
            if let Some(p) = &ctx.out {
                write_text(p, &s.saturation_csv())?;
            }
            let mut v = s.summary_json();
            v["late_growth"] = json!(s.late_growth());
            print(&v);
            Ok(())
        }
        Command::Sweep { config } => {
            let bytes = read_bytes(&config)?;
            let text = String::from_utf8(bytes).map_err(|e| Error::Format {
                path: config.clone(),
                reason: e.to_string(),
            })?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if ctx.seed_given {
                cfg.seed = ctx.seed;
            }
            let report = run_sweep(&cfg, ctx.budget)?;
            let mut targets: Vec<PathBuf> = [&cfg.outputs.csv, &cfg.outputs.json, &cfg.outputs.svg]
                .into_iter()
                .flatten()
                .cloned()
                .collect();
            targets.extend(ctx.out.clone());
            if targets.is_empty() {
                verify_predictions(&report)?;
                emit(&report_json(&report));
            }
            for t in &targets {
                emit_report(&report, t)?;
            }
            let agree = report.rows.iter().filter(|r| r.agree == Some(true)).count();
            let disagree = report.rows.iter().filter(|r| r.agree == Some(false)).count();
            log::info!("{} rows, {agree} agree, {disagree} disagree", report.rows.len());
            Ok(())
        }
        Command::Report { report } => {
            let r = read_report(&report)?;
            match &ctx.out {
                Some(p) => emit_report(&r, p),
                None => {
                    verify_predictions(&r)?;
                    emit(&report_json(&r));
                    Ok(())
                }
            }
        }
    }
}

/// `δ = 2^{-1-j/2}` down to one cell, at most 12 radii.
fn default_deltas(resolution: u64) -> Vec<f64> {
    let floor = 1.0 / resolution as f64;
    (0..12)
        .map(|j| 2f64.powf(-1.0 - j as f64 / 2.0))
        .take_while(|&d| d >= floor)
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
