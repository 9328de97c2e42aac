//! Run configuration: one TOML file holding everything that determines a
//! command's outputs. Every command writes its resolved configuration to
//! `resolved-config.toml` in its output directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mural_core::distance::Bandwidth;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MuralError, Result};
use crate::eval::experiments::{Knob, SwissRollExperiment};
use crate::eval::generate::{MissingnessRecipe, SwissRollConfig};
use crate::pipeline::PipelineSettings;

pub const RESOLVED_CONFIG: &str = "resolved-config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Csv,
    Bin,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Bin => "bin",
        }
    }
}

/// Bandwidth written as `knn:<k>` or `fixed:<epsilon>`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BandwidthChoice(pub Bandwidth);

impl fmt::Display for BandwidthChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Bandwidth::AdaptiveKnn(k) => write!(f, "knn:{k}"),
            Bandwidth::Fixed(eps) => write!(f, "fixed:{eps:?}"),
        }
    }
}

impl FromStr for BandwidthChoice {
    type Err = MuralError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || MuralError::Config(format!("bandwidth `{s}`: expected knn:<k> or fixed:<epsilon>"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let b = match kind.trim() {
            "knn" => Bandwidth::AdaptiveKnn(value.trim().parse().map_err(|_| bad())?),
            "fixed" => Bandwidth::Fixed(value.trim().parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        Ok(BandwidthChoice(b))
    }
}

impl Serialize for BandwidthChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BandwidthChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub forest: Option<PathBuf>,
    pub distance: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub experiment: String,
    pub knob: Option<Knob>,
    /// Knob values; empty means the knob's default sweep.
    pub values: Vec<String>,
    pub seeds: Vec<u64>,
    pub roll: SwissRollConfig,
    pub recipe: MissingnessRecipe,
    pub ks: Vec<usize>,
    pub distortion_pairs: usize,
    pub geodesic_k: usize,
    /// Record wall-clock time in the report (makes it non-reproducible).
    pub timing: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        let exp = SwissRollExperiment::default();
        EvalSettings {
            experiment: "swissroll".into(),
            knob: None,
            values: Vec::new(),
            seeds: exp.seeds,
            roll: exp.roll,
            recipe: exp.recipe,
            ks: exp.ks,
            distortion_pairs: exp.distortion_pairs,
            geodesic_k: exp.geodesic_k,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub k: usize,
    pub seed: u64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        ClusterSettings { k: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TswdSettings {
    pub cohort_a: Option<String>,
    pub cohort_b: Option<String>,
    pub allow_overlap: bool,
    pub per_tree: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub pipeline: PipelineSettings,
    pub bandwidth: BandwidthChoice,
    pub format: MatrixFormat,
    /// Also write the affinity and diffusion matrices.
    pub affinity: bool,
    pub eval: EvalSettings,
    pub cluster: ClusterSettings,
    pub tswd: TswdSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MuralError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| MuralError::Config(e.to_string().replace('\n', " ").trim().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| MuralError::Internal(format!("config serialization: {e}")))
    }

    pub fn experiment(&self) -> SwissRollExperiment {
        SwissRollExperiment {
            roll: self.eval.roll.clone(),
            recipe: self.eval.recipe.clone(),
            pipeline: self.pipeline.clone(),
            seeds: self.eval.seeds.clone(),
            ks: self.eval.ks.clone(),
            distortion_pairs: self.eval.distortion_pairs,
            geodesic_k: self.eval.geodesic_k,
        }
    }
}
