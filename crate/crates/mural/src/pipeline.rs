//! The fit pipeline shared by the CLI and the evaluation harness:
//! missingness detection, imputation of randomly missing columns,
//! standardization and forest fitting.

use mural_core::data::{standardize, Dataset};
use mural_core::distance::{forest_distance_matrix, DistanceMatrix};
use mural_core::forest::{fit, ForestConfig, LeafAssignments, MuralForest};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::missingness::{detect_mnar, impute_random_missing, mean_impute, Classification, ColumnMissingness, MissingnessProfile};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_IMPUTE_ITERATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    /// Family-wise significance level of the missingness tests.
    pub alpha: f64,
    /// Chained-imputation sweeps over the randomly missing columns.
    pub impute_iterations: usize,
    pub forest: ForestConfig,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings { alpha: DEFAULT_ALPHA, impute_iterations: DEFAULT_IMPUTE_ITERATIONS, forest: ForestConfig::default() }
    }
}

/// Everything a forest file carries: the forest plus the missingness
/// profile needed to preprocess new rows the way the training rows were.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub forest: MuralForest,
    pub missingness: MissingnessProfile,
    pub impute_iterations: usize,
}

impl FittedModel {
    /// Imputes randomly missing cells, then applies the stored
    /// standardization. Columns that were MNAR at fit time keep their masks;
    /// any other column with masked cells is imputed.
    pub fn prepare(&self, raw: &Dataset) -> Result<Dataset> {
        let entries = (0..raw.n_cols())
            .filter(|&c| raw.column(c).mask().any())
            .map(|c| ColumnMissingness {
                column: c,
                name: raw.schema().name(c).to_string(),
                missing_count: raw.column(c).mask().count(),
                classification: if self.missingness.is_mnar(c) { Classification::Mnar } else { Classification::Random },
                p_value: 1.0,
                evidence: Vec::new(),
                insufficient_data: false,
                forced: true,
            })
            .collect();
        let profile = MissingnessProfile { alpha: self.missingness.alpha, entries };
        let imputed = impute_random_missing(raw, &profile, self.impute_iterations)?;
        Ok(self.forest.prepare(&imputed)?)
    }

    /// Leaf assignments of `raw` rows after [`FittedModel::prepare`].
    pub fn assign(&self, raw: &Dataset) -> Result<LeafAssignments> {
        Ok(self.forest.assign(&self.prepare(raw)?)?)
    }

    pub fn distances(&self, raw: &Dataset) -> Result<DistanceMatrix> {
        Ok(forest_distance_matrix(&self.forest, &self.assign(raw)?)?)
    }
}

/// Runs `detect_mnar -> impute_random_missing -> standardize -> fit`.
pub fn fit_pipeline(raw: &Dataset, settings: &PipelineSettings) -> Result<FittedModel> {
    let missingness = detect_mnar(raw, settings.alpha)?;
    let imputed = impute_random_missing(raw, &missingness, settings.impute_iterations)?;
    let (prepared, params) = standardize(&imputed);
    let mut forest = fit(&prepared, &settings.forest)?;
    forest.set_standardization(params);
    Ok(FittedModel { forest, missingness, impute_iterations: settings.impute_iterations })
}

/// Rows of a fully observed dataset as dense points.
pub fn dense_rows(d: &Dataset) -> Vec<Vec<f64>> {
    (0..d.n_rows()).map(|r| d.row(r).into_iter().map(|v| v.unwrap_or(0.0)).collect()).collect()
}

/// Euclidean distances after mean/mode imputation and standardization.
pub fn mean_imputation_distances(raw: &Dataset) -> Result<DistanceMatrix> {
    let (s, _) = standardize(&mean_impute(raw)?);
    Ok(DistanceMatrix::euclidean(&dense_rows(&s)))
}
