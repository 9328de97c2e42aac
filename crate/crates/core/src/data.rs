//! Columnar mixed-type tables with an explicit per-cell missing mask.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Code assigned to masked cells by [`discretize`].
pub const MISSING_CODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ColumnKind {
    Continuous,
    /// Levels are the integer codes `0..levels`.
    Ordinal {
        levels: u32,
    },
    Binary,
    /// Nominal codes `0..cardinality`, cardinality at least 3.
    Categorical {
        cardinality: u32,
    },
}

impl ColumnKind {
    pub fn is_continuous(self) -> bool {
        matches!(self, ColumnKind::Continuous)
    }

    /// Number of admissible codes for discrete kinds.
    pub fn code_count(self) -> Option<u32> {
        match self {
            ColumnKind::Continuous => None,
            ColumnKind::Ordinal { levels } => Some(levels),
            ColumnKind::Binary => Some(2),
            ColumnKind::Categorical { cardinality } => Some(cardinality),
        }
    }

    /// Whether a threshold on the numeric value is meaningful.
    pub fn is_ordered(self) -> bool {
        !matches!(self, ColumnKind::Categorical { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum MissingnessHint {
    #[default]
    Auto,
    ForceMnar,
    ForceRandom,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub missingness: MissingnessHint,
    pub missing_token: String,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec { name: name.into(), kind, missingness: MissingnessHint::Auto, missing_token: String::from("NA") }
    }

    pub fn with_hint(mut self, hint: MissingnessHint) -> Self {
        self.missingness = hint;
        self
    }

    pub fn with_missing_token(mut self, token: impl Into<String>) -> Self {
        self.missing_token = token.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if c.name.is_empty() {
                return Err(Error::Schema(format!("column {i} has an empty name")));
            }
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
            match c.kind {
                ColumnKind::Ordinal { levels: 0 } => {
                    return Err(Error::Schema(format!("ordinal column `{}` needs at least one level", c.name)));
                }
                ColumnKind::Categorical { cardinality } if cardinality < 3 => {
                    return Err(Error::Schema(format!(
                        "categorical column `{}` needs cardinality >= 3 (use binary for two levels)",
                        c.name
                    )));
                }
                _ => {}
            }
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn kind(&self, col: usize) -> ColumnKind {
        self.columns[col].kind
    }

    pub fn name(&self, col: usize) -> &str {
        &self.columns[col].name
    }
}

/// One bit per row; a set bit marks a missing cell.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MissingMask {
    len: usize,
    words: Vec<u64>,
}

impl MissingMask {
    pub fn new(len: usize) -> Self {
        MissingMask { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_fn(len: usize, mut masked: impl FnMut(usize) -> bool) -> Self {
        let mut m = MissingMask::new(len);
        for i in 0..len {
            if masked(i) {
                m.set(i, true);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, masked: bool) {
        assert!(i < self.len, "mask index {i} out of range {}", self.len);
        let bit = 1u64 << (i % 64);
        if masked {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    pub fn iter_masked(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Values {
    Continuous(Vec<f64>),
    Discrete(Vec<u32>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Continuous(v) => v.len(),
            Values::Discrete(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A column's values plus its missing mask. Masked cells hold `0.0` / `0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Column {
    values: Values,
    mask: MissingMask,
}

impl Column {
    pub fn continuous(cells: Vec<Option<f64>>) -> Self {
        let mask = MissingMask::from_fn(cells.len(), |i| cells[i].is_none());
        let values = cells.into_iter().map(|c| c.unwrap_or(0.0)).collect();
        Column { values: Values::Continuous(values), mask }
    }

    pub fn discrete(cells: Vec<Option<u32>>) -> Self {
        let mask = MissingMask::from_fn(cells.len(), |i| cells[i].is_none());
        let values = cells.into_iter().map(|c| c.unwrap_or(0)).collect();
        Column { values: Values::Discrete(values), mask }
    }

    /// Builds a column from raw storage; masked cells are normalised to zero.
    pub fn from_parts(mut values: Values, mask: MissingMask) -> Self {
        match &mut values {
            Values::Continuous(v) => mask.iter_masked().for_each(|i| v[i] = 0.0),
            Values::Discrete(v) => mask.iter_masked().for_each(|i| v[i] = 0),
        }
        Column { values, mask }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn mask(&self) -> &MissingMask {
        &self.mask
    }

    pub fn is_masked(&self, row: usize) -> bool {
        self.mask.get(row)
    }

    /// Numeric view of a cell; discrete codes are widened to `f64`.
    #[inline]
    pub fn get(&self, row: usize) -> Option<f64> {
        if self.mask.get(row) {
            return None;
        }
        Some(match &self.values {
            Values::Continuous(v) => v[row],
            Values::Discrete(v) => v[row] as f64,
        })
    }

    pub fn observed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len()).filter_map(move |i| self.get(i).map(|v| (i, v)))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Dataset {
    schema: Schema,
    n_rows: usize,
    columns: Vec<Column>,
}

impl Dataset {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::Dataset(format!("{} columns supplied for a schema of {}", columns.len(), schema.len())));
        }
        let n_rows = columns.first().map_or(0, Column::len);
        for (j, col) in columns.iter().enumerate() {
            let spec = &schema.columns()[j];
            if col.len() != n_rows || col.mask.len() != n_rows {
                return Err(Error::Dataset(format!("column `{}` has {} rows, expected {n_rows}", spec.name, col.len())));
            }
            match (&col.values, spec.kind.code_count()) {
                (Values::Continuous(v), None) => {
                    if let Some(i) = (0..n_rows).find(|&i| !col.mask.get(i) && !v[i].is_finite()) {
                        return Err(Error::Dataset(format!("column `{}` row {i}: non-finite value", spec.name)));
                    }
                }
                (Values::Discrete(v), Some(k)) => {
                    if let Some(i) = (0..n_rows).find(|&i| !col.mask.get(i) && v[i] >= k) {
                        return Err(Error::Dataset(format!("column `{}` row {i}: code {} outside 0..{k}", spec.name, v[i])));
                    }
                }
                _ => {
                    return Err(Error::Dataset(format!("column `{}` storage does not match its kind", spec.name)));
                }
            }
        }
        Ok(Dataset { schema, n_rows, columns })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, col: usize) -> &Column {
        &self.columns[col]
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.columns[col].get(row)
    }

    pub fn is_masked(&self, row: usize, col: usize) -> bool {
        self.columns[col].is_masked(row)
    }

    pub fn row(&self, row: usize) -> Vec<Option<f64>> {
        self.columns.iter().map(|c| c.get(row)).collect()
    }

    pub fn masked_count(&self) -> usize {
        self.columns.iter().map(|c| c.mask.count()).sum()
    }

    /// Returns a copy with column `col` replaced, re-validating it.
    pub fn with_column(&self, col: usize, column: Column) -> Result<Dataset> {
        let mut columns = self.columns.clone();
        columns[col] = column;
        Dataset::new(self.schema.clone(), columns)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let mask = MissingMask::from_fn(rows.len(), |i| c.mask.get(rows[i]));
                let values = match &c.values {
                    Values::Continuous(v) => Values::Continuous(rows.iter().map(|&r| v[r]).collect()),
                    Values::Discrete(v) => Values::Discrete(rows.iter().map(|&r| v[r]).collect()),
                };
                Column { values, mask }
            })
            .collect();
        Dataset { schema: self.schema.clone(), n_rows: rows.len(), columns }
    }

    pub fn into_parts(self) -> (Schema, Vec<Column>) {
        (self.schema, self.columns)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ColumnScaling {
    pub mean: f64,
    pub std_dev: f64,
    /// Set when the column had fewer than two observed values or zero
    /// variance; such columns are left unscaled.
    pub zero_variance: bool,
}

/// Per-column scaling, `None` for non-continuous columns.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StandardizationParams {
    pub columns: Vec<Option<ColumnScaling>>,
}

impl StandardizationParams {
    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.columns.iter().enumerate().filter_map(|(j, s)| s.filter(|s| s.zero_variance).map(|_| j))
    }

    /// Applies stored parameters to another dataset with the same schema.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if self.columns.len() != d.n_cols() {
            return Err(Error::Dimension(format!("scaling covers {} columns, dataset has {}", self.columns.len(), d.n_cols())));
        }
        let columns = d
            .columns
            .iter()
            .zip(&self.columns)
            .map(|(c, s)| match (s, &c.values) {
                (Some(s), Values::Continuous(v)) if !s.zero_variance => {
                    let scaled = v.iter().enumerate().map(|(i, &x)| if c.mask.get(i) { 0.0 } else { (x - s.mean) / s.std_dev }).collect();
                    Column { values: Values::Continuous(scaled), mask: c.mask.clone() }
                }
                _ => c.clone(),
            })
            .collect();
        Dataset::new(d.schema.clone(), columns)
    }
}

/// Centres and scales every continuous column by the mean and sample
/// standard deviation of its observed cells. Discrete columns and masks are
/// untouched.
pub fn standardize(d: &Dataset) -> (Dataset, StandardizationParams) {
    let columns = d
        .columns
        .iter()
        .map(|c| match &c.values {
            Values::Continuous(_) => {
                let observed: Vec<f64> = c.observed().map(|(_, v)| v).collect();
                let n = observed.len();
                let mean = if n == 0 { 0.0 } else { observed.iter().sum::<f64>() / n as f64 };
                let var = if n < 2 { 0.0 } else { observed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64 };
                let std_dev = libm::sqrt(var);
                Some(ColumnScaling { mean, std_dev, zero_variance: std_dev.is_nan() || std_dev <= 0.0 })
            }
            Values::Discrete(_) => None,
        })
        .collect();
    let params = StandardizationParams { columns };
    let scaled = params.apply(d).expect("parameters computed from this dataset");
    (scaled, params)
}

/// Sturges' rule: `ceil(log2 n) + 1`.
pub fn sturges_bin_count(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::ZeroCount);
    }
    let ceil_log2 = if n == 1 { 0 } else { (usize::BITS - (n - 1).leading_zeros()) as usize };
    Ok(ceil_log2 + 1)
}

/// How continuous values are cut into bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum BinningScheme {
    #[default]
    EqualWidth,
    Quantile,
}

/// Equal-width bins over `[min, max]`; the last bin is closed on the right.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EqualWidthBins {
    min: f64,
    scale: f64,
    last: u32,
}

impl EqualWidthBins {
    pub(crate) fn new(min: f64, max: f64, n_bins: usize) -> Self {
        let range = max - min;
        let scale = if range > 0.0 { n_bins as f64 / range } else { 0.0 };
        EqualWidthBins { min, scale, last: n_bins as u32 - 1 }
    }

    #[inline]
    pub(crate) fn code(&self, v: f64) -> u32 {
        let pos = (v - self.min) * self.scale;
        if pos <= 0.0 {
            0
        } else {
            (libm::floor(pos) as u32).min(self.last)
        }
    }
}

/// Quantile edges; a value's code is the number of edges at or below it.
#[derive(Debug, Clone)]
pub(crate) struct QuantileBins {
    edges: Vec<f64>,
}

impl QuantileBins {
    pub(crate) fn new(sorted: &[f64], n_bins: usize) -> Self {
        let n = sorted.len();
        let mut edges: Vec<f64> = (1..n_bins).map(|j| sorted[((j * n) / n_bins).min(n - 1)]).collect();
        edges.dedup();
        QuantileBins { edges }
    }

    #[inline]
    pub(crate) fn code(&self, v: f64) -> u32 {
        self.edges.partition_point(|&e| e <= v) as u32
    }
}

/// Cuts observed values into `n_bins` equal-width bins spanning their
/// observed range. Masked cells get [`MISSING_CODE`].
pub fn discretize(values: &[f64], mask: &MissingMask, n_bins: usize) -> Result<Vec<u32>> {
    discretize_with(values, mask, n_bins, BinningScheme::EqualWidth)
}

pub fn discretize_with(values: &[f64], mask: &MissingMask, n_bins: usize, scheme: BinningScheme) -> Result<Vec<u32>> {
    if n_bins == 0 {
        return Err(Error::ZeroBins);
    }
    if mask.len() != values.len() {
        return Err(Error::Dimension(format!("{} values, mask of {}", values.len(), mask.len())));
    }
    let observed: Vec<f64> = (0..values.len()).filter(|&i| !mask.get(i)).map(|i| values[i]).collect();
    if observed.is_empty() {
        return Err(Error::AllMasked(String::from("<values>")));
    }
    let code: alloc::boxed::Box<dyn Fn(f64) -> u32> = match scheme {
        BinningScheme::EqualWidth => {
            let (lo, hi) = observed.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let bins = EqualWidthBins::new(lo, hi, n_bins);
            alloc::boxed::Box::new(move |v| bins.code(v))
        }
        BinningScheme::Quantile => {
            let mut sorted = observed;
            sorted.sort_by(f64::total_cmp);
            let bins = QuantileBins::new(&sorted, n_bins);
            alloc::boxed::Box::new(move |v| bins.code(v))
        }
    };
    Ok((0..values.len()).map(|i| if mask.get(i) { MISSING_CODE } else { code(values[i]) }).collect())
}
