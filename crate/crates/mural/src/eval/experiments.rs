//! Multi-seed Swiss-roll experiments: MURAL against the mean-imputation
//! baseline, and one-knob ablation sweeps.

use std::fmt;
use std::str::FromStr;

use mural_core::data::standardize;
use mural_core::distance::DistanceMatrix;
use mural_core::forest::{EntropyMode, ForestConfig};
use mural_core::metrics::{distortion, precision_at_k};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{gen_swiss_roll_5d, MissingnessRecipe, SwissRollConfig};
use super::geodesic::geodesic_correlation_points;
use super::report::{EvalReport, MetricSummary};
use crate::error::{MuralError, Result};
use crate::pipeline::{dense_rows, fit_pipeline, mean_imputation_distances, PipelineSettings};

pub const MURAL: &str = "MURAL";
pub const MEAN_IMPUTATION: &str = "MeanImputation";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwissRollExperiment {
    pub roll: SwissRollConfig,
    pub recipe: MissingnessRecipe,
    /// The forest seed is replaced by the trial seed.
    pub pipeline: PipelineSettings,
    pub seeds: Vec<u64>,
    pub ks: Vec<usize>,
    pub distortion_pairs: usize,
    /// Neighbours in the complete-data graph behind the geodesic proxy.
    pub geodesic_k: usize,
}

impl Default for SwissRollExperiment {
    fn default() -> Self {
        SwissRollExperiment {
            roll: SwissRollConfig::default(),
            recipe: MissingnessRecipe::default(),
            pipeline: PipelineSettings::default(),
            seeds: (0..5).collect(),
            ks: vec![5, 10, 100],
            distortion_pairs: 10_000,
            geodesic_k: 10,
        }
    }
}

/// Metric values of one method on one trial, in a fixed order.
type Scores = Vec<(String, f64)>;

fn score(est: &DistanceMatrix, truth: &DistanceMatrix, points: &[Vec<f64>], exp: &SwissRollExperiment, seed: u64) -> Result<Scores> {
    let mut out = Vec::new();
    for &k in &exp.ks {
        out.push((format!("P@{k}"), precision_at_k(est, truth, k)?));
    }
    out.push(("distortion".to_string(), distortion(est, truth, exp.distortion_pairs, seed)?));
    out.push(("geodesic_rho".to_string(), geodesic_correlation_points(est, points, exp.geodesic_k, seed)?));
    Ok(out)
}

/// One seed: generate, induce missingness, and score MURAL (with `forest`)
/// and optionally the baseline against the complete-data neighbours.
fn trial(exp: &SwissRollExperiment, forest: &ForestConfig, seed: u64, baseline: bool) -> Result<Vec<(String, Scores)>> {
    let sample = gen_swiss_roll_5d(&exp.roll, seed)?;
    let raw = exp.recipe.apply(&sample, seed)?;
    let (complete, _) = standardize(&sample.dataset);
    let points = dense_rows(&complete);
    let truth = DistanceMatrix::euclidean(&points);

    let settings = PipelineSettings { forest: ForestConfig { seed, ..forest.clone() }, ..exp.pipeline.clone() };
    let model = fit_pipeline(&raw, &settings)?;
    let dm = mural_core::distance::forest_distance_matrix(&model.forest, model.forest.training_assignments())?;
    let mut out = vec![(MURAL.to_string(), score(&dm, &truth, &points, exp, seed)?)];
    drop(dm);
    if baseline {
        let base = mean_imputation_distances(&raw)?;
        out.push((MEAN_IMPUTATION.to_string(), score(&base, &truth, &points, exp, seed)?));
    }
    Ok(out)
}

/// Merges per-seed results (already in seed order) into summaries.
fn summarize(per_seed: Vec<Vec<(String, Scores)>>, rename: impl Fn(&str) -> String) -> Vec<MetricSummary> {
    let mut rows = Vec::new();
    let Some(first) = per_seed.first() else { return rows };
    for (m, (method, scores)) in first.iter().enumerate() {
        for (s, (metric, _)) in scores.iter().enumerate() {
            let values = per_seed.iter().map(|t| t[m].1[s].1).collect();
            rows.push(MetricSummary::new(rename(method), metric.clone(), values));
        }
    }
    rows
}

fn run_trials(exp: &SwissRollExperiment, forest: &ForestConfig, baseline: bool) -> Result<Vec<Vec<(String, Scores)>>> {
    exp.seeds.par_iter().map(|&s| trial(exp, forest, s, baseline)).collect()
}

fn snapshot<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| MuralError::Internal(format!("config snapshot: {e}")))
}

/// MURAL and mean imputation on the induced-missingness Swiss roll, one
/// trial per seed.
pub fn run_swissroll(exp: &SwissRollExperiment) -> Result<EvalReport> {
    let per_seed = run_trials(exp, &exp.pipeline.forest, true)?;
    Ok(EvalReport {
        experiment: "swissroll".into(),
        seeds: exp.seeds.clone(),
        config: snapshot(exp)?,
        rows: summarize(per_seed, str::to_string),
        wall_clock_seconds: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Knob {
    Trees,
    Depth,
    SplitVars,
    MnarLevels,
    EntropyDims,
}

impl Knob {
    pub const ALL: [Knob; 5] = [Knob::Trees, Knob::Depth, Knob::SplitVars, Knob::MnarLevels, Knob::EntropyDims];

    pub fn name(self) -> &'static str {
        match self {
            Knob::Trees => "trees",
            Knob::Depth => "depth",
            Knob::SplitVars => "split-vars",
            Knob::MnarLevels => "mnar-levels",
            Knob::EntropyDims => "entropy-dims",
        }
    }

    pub fn default_values(self) -> Vec<String> {
        let v: &[&str] = match self {
            Knob::Trees => &["10", "100", "500"],
            Knob::Depth => &["2", "5", "10"],
            Knob::SplitVars => &["1", "3", "5"],
            Knob::MnarLevels => &["0", "3"],
            Knob::EntropyDims => &["marginal", "1", "2", "3"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Sets this knob on `cfg`. `entropy-dims` takes `marginal` or a
    /// dimension count.
    pub fn apply(self, cfg: &mut ForestConfig, value: &str) -> Result<()> {
        let bad = || MuralError::Config(format!("invalid value `{value}` for knob {}", self.name()));
        if self == Knob::EntropyDims {
            cfg.entropy_mode = parse_entropy_dims(value).ok_or_else(bad)?;
            return Ok(());
        }
        let n: usize = value.parse().map_err(|_| bad())?;
        match self {
            Knob::Trees => cfg.n_trees = n,
            Knob::Depth => cfg.max_depth = n,
            Knob::SplitVars => cfg.n_candidate_vars = n,
            Knob::MnarLevels => cfg.mnar_restrict_levels = n,
            Knob::EntropyDims => unreachable!(),
        }
        cfg.validate()?;
        Ok(())
    }
}

pub fn parse_entropy_dims(value: &str) -> Option<EntropyMode> {
    if value.eq_ignore_ascii_case("marginal") {
        return Some(EntropyMode::MarginalSum);
    }
    value.parse().ok().filter(|&d| d > 0).map(|dims| EntropyMode::JointSubset { dims })
}

impl fmt::Display for Knob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Knob {
    type Err = MuralError;

    fn from_str(s: &str) -> Result<Self> {
        Knob::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| MuralError::Config(format!("unknown ablation knob `{s}`")))
    }
}

/// Sweeps `knob` over `values` with everything else at `exp`'s settings.
/// Rows are named `<knob>=<value>`; the mean-imputation baseline is added
/// once since it does not depend on the forest.
pub fn run_ablation(exp: &SwissRollExperiment, knob: Knob, values: &[String]) -> Result<EvalReport> {
    if values.is_empty() {
        return Err(MuralError::Config("ablation needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for (i, value) in values.iter().enumerate() {
        let mut cfg = exp.pipeline.forest.clone();
        knob.apply(&mut cfg, value)?;
        let per_seed = run_trials(exp, &cfg, i == 0)?;
        let label = format!("{knob}={value}");
        rows.extend(summarize(per_seed, |m| if m == MURAL { label.clone() } else { m.to_string() }));
    }
    let (base, mural): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r.method == MEAN_IMPUTATION);
    #[derive(Serialize)]
    struct Snapshot<'a> {
        knob: &'a str,
        values: &'a [String],
        experiment: &'a SwissRollExperiment,
    }
    Ok(EvalReport {
        experiment: "ablation".into(),
        seeds: exp.seeds.clone(),
        config: snapshot(&Snapshot { knob: knob.name(), values, experiment: exp })?,
        rows: mural.into_iter().chain(base).collect(),
        wall_clock_seconds: None,
    })
}
