use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CantorSpec, SphereSubsetSpec};

fn default_d() -> u32 {
    2
}
fn default_levels() -> u32 {
    4
}
fn default_one() -> u32 {
    1
}
fn default_max_base() -> u64 {
    16
}
fn default_directions() -> usize {
    crate::directions::DEFAULT_DIRECTIONS
}
fn default_samples() -> u64 {
    1_000_000
}
fn default_bins() -> u64 {
    16
}

/// A one-dimensional Cantor set: either a target dimension (realized by
/// [`CantorSpec::with_dimension`]) or an explicit digit set. The depth comes
/// from the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetChoice {
    Dimension(f64),
    Digits { base: u64, digits: Vec<u64> },
}

impl SetChoice {
    pub fn spec(&self, depth: u32, max_base: u64) -> Result<CantorSpec> {
        match self {
            SetChoice::Dimension(s) => CantorSpec::with_dimension(*s, max_base, depth),
            SetChoice::Digits { base, digits } => CantorSpec::new(*base, digits, depth),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumproductGrid {
    pub sets: Vec<SetChoice>,
    #[serde(default = "default_d")]
    pub d: u32,
    pub depth: u32,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default = "default_one")]
    pub replicates: u32,
    #[serde(default = "default_max_base")]
    pub max_base: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionGrid {
    pub sets: Vec<SetChoice>,
    #[serde(default = "default_d")]
    pub d: u32,
    pub depth: u32,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default = "default_one")]
    pub replicates: u32,
    #[serde(default = "default_max_base")]
    pub max_base: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeGrid {
    pub sets: Vec<SetChoice>,
    #[serde(default = "default_d")]
    pub d: u32,
    pub depths: Vec<u32>,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    #[serde(default = "default_max_base")]
    pub max_base: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayGrid {
    pub sets: Vec<SetChoice>,
    #[serde(default = "default_d")]
    pub d: u32,
    pub depths: Vec<u32>,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default)]
    pub freqs: Option<Vec<f64>>,
    #[serde(default = "default_max_base")]
    pub max_base: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedGrid {
    pub spheres: Vec<SphereSubsetSpec>,
    pub resolutions: Vec<u64>,
    #[serde(default = "default_one")]
    pub pins: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexGrid {
    pub spheres: Vec<SphereSubsetSpec>,
    pub resolution: u64,
    pub k: Vec<u32>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_bins")]
    pub bins: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionGrid {
    pub s_e: Vec<f64>,
    pub s_f: Vec<f64>,
    pub gamma_f: Vec<f64>,
    pub l_f: Vec<f64>,
    pub alpha: Vec<f64>,
    pub d: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Experiment {
    Sumproduct(SumproductGrid),
    Projection(ProjectionGrid),
    Tube(TubeGrid),
    Decay(DecayGrid),
    Pinned(PinnedGrid),
    Simplex(SimplexGrid),
    Condition(ConditionGrid),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Sumproduct(_) => "sumproduct",
            Experiment::Projection(_) => "projection",
            Experiment::Tube(_) => "tube",
            Experiment::Decay(_) => "decay",
            Experiment::Pinned(_) => "pinned",
            Experiment::Simplex(_) => "simplex",
            Experiment::Condition(_) => "condition",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
    #[serde(default)]
    pub outputs: Outputs,
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("grid axis {name} is empty")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Rejects empty grid axes; value checks happen per row.
    pub fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::Sumproduct(g) => {
                nonempty("sets", &g.sets)?;
                if g.replicates == 0 {
                    return Err(Error::Config("replicates must be positive".into()));
                }
            }
            Experiment::Projection(g) => {
                nonempty("sets", &g.sets)?;
                if g.replicates == 0 {
                    return Err(Error::Config("replicates must be positive".into()));
                }
            }
            Experiment::Tube(g) => {
                nonempty("sets", &g.sets)?;
                nonempty("depths", &g.depths)?;
            }
            Experiment::Decay(g) => {
                nonempty("sets", &g.sets)?;
                nonempty("depths", &g.depths)?;
            }
            Experiment::Pinned(g) => {
                nonempty("spheres", &g.spheres)?;
                nonempty("resolutions", &g.resolutions)?;
                if g.pins == 0 {
                    return Err(Error::Config("pins must be positive".into()));
                }
            }
            Experiment::Simplex(g) => {
                nonempty("spheres", &g.spheres)?;
                nonempty("k", &g.k)?;
            }
            Experiment::Condition(g) => {
                nonempty("s_e", &g.s_e)?;
                nonempty("s_f", &g.s_f)?;
                nonempty("gamma_f", &g.gamma_f)?;
                nonempty("l_f", &g.l_f)?;
                nonempty("alpha", &g.alpha)?;
                nonempty("d", &g.d)?;
            }
        }
        Ok(())
    }
}
