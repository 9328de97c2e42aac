//! Synthetic datasets: a five-dimensional Swiss roll and a latent-group
//! mixed-type table with threshold-driven missingness.

use std::f64::consts::PI;

use mural_core::data::{Column, ColumnKind, ColumnSpec, Dataset, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MuralError, Result};
use crate::missingness::{induce_mcar, mask_rows, Direction};

/// Type-7 (linear interpolation) sample quantile.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwissRollConfig {
    pub n: usize,
    /// Gaussian noise added to the three roll coordinates.
    pub noise: f64,
    /// Dimensions 4 and 5 are `slope * t + N(0, extra_noise)` and
    /// `slope * h + N(0, extra_noise)`.
    pub extra_slope: f64,
    pub extra_noise: f64,
}

impl Default for SwissRollConfig {
    fn default() -> Self {
        SwissRollConfig { n: 3000, noise: 0.0, extra_slope: 0.5, extra_noise: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SwissRollSample {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub ambient: Vec<[f64; 5]>,
    /// Complete data, columns `x1..x5`.
    pub dataset: Dataset,
}

pub fn swiss_roll_schema() -> Schema {
    Schema::new((1..=5).map(|i| ColumnSpec::new(format!("x{i}"), ColumnKind::Continuous)).collect()).expect("valid schema")
}

pub fn gen_swiss_roll_5d(cfg: &SwissRollConfig, seed: u64) -> Result<SwissRollSample> {
    if cfg.n < 10 {
        return Err(MuralError::Spec(format!("swiss roll needs n >= 10, got {}", cfg.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let (mut t, mut h, mut ambient) = (Vec::with_capacity(cfg.n), Vec::with_capacity(cfg.n), Vec::with_capacity(cfg.n));
    for _ in 0..cfg.n {
        let ti = rng.random_range(1.5 * PI..4.5 * PI);
        let hi = rng.random_range(0.0..20.0);
        let mut p = [ti * ti.cos(), hi, ti * ti.sin(), 0.0, 0.0];
        if cfg.noise > 0.0 {
            for x in &mut p[..3] {
                *x += cfg.noise * normal(&mut rng);
            }
        }
        p[3] = cfg.extra_slope * ti + cfg.extra_noise * normal(&mut rng);
        p[4] = cfg.extra_slope * hi + cfg.extra_noise * normal(&mut rng);
        t.push(ti);
        h.push(hi);
        ambient.push(p);
    }
    let columns = (0..5).map(|j| Column::continuous(ambient.iter().map(|p| Some(p[j])).collect())).collect();
    let dataset = Dataset::new(swiss_roll_schema(), columns)?;
    Ok(SwissRollSample { t, h, ambient, dataset })
}

/// Induced missingness for the Swiss-roll experiments: one MNAR column
/// masked where the roll parameter `t` exceeds a quantile, plus MCAR holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissingnessRecipe {
    pub mnar_column: usize,
    pub mnar_quantile: f64,
    pub mcar_columns: Vec<usize>,
    pub mcar_fraction: f64,
}

impl Default for MissingnessRecipe {
    fn default() -> Self {
        MissingnessRecipe { mnar_column: 0, mnar_quantile: 0.7, mcar_columns: vec![2, 4], mcar_fraction: 0.2 }
    }
}

impl MissingnessRecipe {
    pub fn apply(&self, sample: &SwissRollSample, seed: u64) -> Result<Dataset> {
        let cut = quantile(&sample.t, self.mnar_quantile);
        let rows = (0..sample.t.len()).filter(|&i| sample.t[i] > cut);
        let mut d = mask_rows(&sample.dataset, self.mnar_column, rows)?;
        for (k, &c) in self.mcar_columns.iter().enumerate() {
            d = induce_mcar(&d, c, self.mcar_fraction, seed.wrapping_mul(31).wrapping_add(k as u64 + 1))?;
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClinicalKind {
    /// Group `g` has mean `separation * ((g + j) mod groups)` for the
    /// `j`-th signal column, unit variance.
    Continuous { separation: f64 },
    /// Standard normal, independent of the group.
    Noise,
    /// Success probability rises linearly from 0.15 to 0.85 across groups.
    Binary,
    /// Rounded group position on `0..levels` plus N(0, 0.75) jitter.
    Ordinal { levels: u32 },
    /// Category `g mod cardinality` with probability 0.7, else uniform.
    Categorical { cardinality: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalColumn {
    pub name: String,
    pub kind: ClinicalKind,
}

/// Masks `column` where its value lies beyond its own `quantile`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnarRule {
    pub column: String,
    pub quantile: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalSpec {
    pub groups: usize,
    pub columns: Vec<ClinicalColumn>,
    pub mnar_rules: Vec<MnarRule>,
}

impl ClinicalSpec {
    /// Four separated continuous signals, one noise column, one binary,
    /// one ordinal and one categorical column; `c0` is masked above its
    /// 90th percentile.
    pub fn standard(groups: usize) -> Self {
        let col = |name: &str, kind| ClinicalColumn { name: name.into(), kind };
        let mut columns: Vec<ClinicalColumn> =
            (0..4).map(|j| col(&format!("c{j}"), ClinicalKind::Continuous { separation: 3.0 })).collect();
        columns.push(col("noise", ClinicalKind::Noise));
        columns.push(col("flag", ClinicalKind::Binary));
        columns.push(col("grade", ClinicalKind::Ordinal { levels: 5 }));
        columns.push(col("site", ClinicalKind::Categorical { cardinality: 4 }));
        ClinicalSpec { groups, columns, mnar_rules: vec![MnarRule { column: "c0".into(), quantile: 0.9, direction: Direction::Above }] }
    }

    fn schema(&self) -> Result<Schema> {
        let cols = self
            .columns
            .iter()
            .map(|c| {
                let kind = match c.kind {
                    ClinicalKind::Continuous { .. } | ClinicalKind::Noise => ColumnKind::Continuous,
                    ClinicalKind::Binary => ColumnKind::Binary,
                    ClinicalKind::Ordinal { levels } => ColumnKind::Ordinal { levels },
                    ClinicalKind::Categorical { cardinality } => ColumnKind::Categorical { cardinality },
                };
                ColumnSpec::new(c.name.clone(), kind)
            })
            .collect();
        Schema::new(cols).map_err(|e| MuralError::Spec(e.to_string()))
    }

    fn validate(&self, schema: &Schema) -> Result<()> {
        if self.groups == 0 {
            return Err(MuralError::Spec("at least one latent group is required".into()));
        }
        if self.columns.is_empty() {
            return Err(MuralError::Spec("no columns".into()));
        }
        for r in &self.mnar_rules {
            let c = schema.index_of(&r.column).ok_or_else(|| MuralError::Spec(format!("rule names unknown column `{}`", r.column)))?;
            if !schema.kind(c).is_continuous() {
                return Err(MuralError::Spec(format!("rule column `{}` is not continuous", r.column)));
            }
            if !(r.quantile > 0.0 && r.quantile < 1.0) {
                return Err(MuralError::Spec(format!("rule quantile {} must lie in (0, 1)", r.quantile)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ClinicalSample {
    pub dataset: Dataset,
    /// Complete data before the MNAR rules were applied.
    pub complete: Dataset,
    pub labels: Vec<usize>,
}

pub fn gen_mixed_clinical(n: usize, spec: &ClinicalSpec, seed: u64) -> Result<ClinicalSample> {
    let schema = spec.schema()?;
    spec.validate(&schema)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g_count = spec.groups;
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..g_count)).collect();
    let position = |g: usize| if g_count > 1 { g as f64 / (g_count - 1) as f64 } else { 0.0 };
    let mut signal = 0;
    let mut columns = Vec::with_capacity(spec.columns.len());
    for c in &spec.columns {
        let col = match c.kind {
            ClinicalKind::Continuous { separation } => {
                let j = signal;
                signal += 1;
                Column::continuous(
                    labels
                        .iter()
                        .map(|&g| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            Some(separation * ((g + j) % g_count) as f64 + z)
                        })
                        .collect(),
                )
            }
            ClinicalKind::Noise => Column::continuous((0..n).map(|_| Some(StandardNormal.sample(&mut rng))).collect()),
            ClinicalKind::Binary => {
                Column::discrete(labels.iter().map(|&g| Some(u32::from(rng.random_bool(0.15 + 0.7 * position(g))))).collect())
            }
            ClinicalKind::Ordinal { levels } => Column::discrete(
                labels
                    .iter()
                    .map(|&g| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        let v = (position(g) * (levels - 1) as f64 + 0.75 * z).round();
                        Some(v.clamp(0.0, (levels - 1) as f64) as u32)
                    })
                    .collect(),
            ),
            ClinicalKind::Categorical { cardinality } => Column::discrete(
                labels
                    .iter()
                    .map(|&g| Some(if rng.random_bool(0.7) { (g as u32) % cardinality } else { rng.random_range(0..cardinality) }))
                    .collect(),
            ),
        };
        columns.push(col);
    }
    let complete = Dataset::new(schema.clone(), columns)?;
    let mut dataset = complete.clone();
    for r in &spec.mnar_rules {
        let c = schema.index_of(&r.column).expect("validated");
        let observed: Vec<f64> = complete.column(c).observed().map(|(_, v)| v).collect();
        let cut = quantile(&observed, r.quantile);
        dataset = crate::missingness::induce_mnar_threshold(&dataset, c, cut, r.direction)?;
    }
    Ok(ClinicalSample { dataset, complete, labels })
}
