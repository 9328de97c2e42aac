//! Missingness classification, chained imputation of randomly missing
//! columns, the mean-imputation baseline, and induced missingness.

use std::fmt::Write as _;

use mural_core::data::{Column, ColumnKind, Dataset, MissingMask, MissingnessHint, Values};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{MuralError, Result};

/// Columns masked or observed in fewer rows than this are not tested.
pub const MIN_GROUP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Mnar,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    RankSum,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub other: usize,
    pub other_name: String,
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMissingness {
    pub column: usize,
    pub name: String,
    pub missing_count: usize,
    pub classification: Classification,
    /// Bonferroni-adjusted minimum p-value over the pairwise tests.
    pub p_value: f64,
    pub evidence: Vec<Evidence>,
    /// Too few masked or observed rows; classified by the schema hint.
    pub insufficient_data: bool,
    /// A `mnar`/`random` schema hint overrode the test.
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessProfile {
    pub alpha: f64,
    pub entries: Vec<ColumnMissingness>,
}

impl MissingnessProfile {
    pub fn entry(&self, column: usize) -> Option<&ColumnMissingness> {
        self.entries.iter().find(|e| e.column == column)
    }

    pub fn is_mnar(&self, column: usize) -> bool {
        self.entry(column).is_some_and(|e| e.classification == Classification::Mnar)
    }

    pub fn columns_with(&self, class: Classification) -> Vec<usize> {
        self.entries.iter().filter(|e| e.classification == class).map(|e| e.column).collect()
    }

    /// One line per column: name, missing count, p-value, classification.
    pub fn report(&self) -> String {
        let mut out = format!("# alpha={}\n", self.alpha);
        for e in &self.entries {
            let class = match e.classification {
                Classification::Mnar => "MNAR",
                Classification::Random => "Random",
            };
            let mut flags = String::new();
            if e.insufficient_data {
                flags.push_str(" insufficient-data");
            }
            if e.forced {
                flags.push_str(" forced");
            }
            writeln!(out, "{}\t{}\t{:.6e}\t{class}{flags}", e.name, e.missing_count, e.p_value).expect("string write");
        }
        out
    }
}

/// Average ranks (1-based) of `values`, plus the tie correction term
/// `sum (t^3 - t)`.
fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Two-sided Mann-Whitney test with the normal approximation and tie
/// correction. Returns `(z, p)`.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    if a.is_empty() || b.is_empty() {
        return (0.0, 1.0);
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = average_ranks(&all);
    let ra: f64 = ranks[..a.len()].iter().sum();
    let u = ra - na * (na + 1.0) / 2.0;
    let n = na + nb;
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var.is_nan() || var <= 0.0 {
        return (0.0, 1.0);
    }
    let z = (u - na * nb / 2.0) / var.sqrt();
    (z, statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0))
}

/// Pearson chi-square independence test on a contingency table given as
/// rows of counts. Empty rows and columns are dropped. Returns `(stat, p)`.
pub fn chi_square_test(table: &[Vec<u64>]) -> (f64, f64) {
    let width = table.first().map_or(0, Vec::len);
    let col_tot: Vec<u64> = (0..width).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let cols: Vec<usize> = (0..width).filter(|&c| col_tot[c] > 0).collect();
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return (0.0, 1.0);
    }
    let n: u64 = col_tot.iter().sum();
    let mut stat = 0.0;
    for r in &rows {
        let rt: u64 = r.iter().sum();
        for &c in &cols {
            let e = rt as f64 * col_tot[c] as f64 / n as f64;
            let d = r[c] as f64 - e;
            stat += d * d / e;
        }
    }
    let df = ((rows.len() - 1) * (cols.len() - 1)) as f64;
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    (stat, dist.sf(stat))
}

fn pairwise(d: &Dataset, v: usize, u: usize) -> Option<Evidence> {
    let mask = d.column(v).mask();
    let cu = d.column(u);
    let kind = d.schema().kind(u);
    let (test, statistic, p_value) = match (kind, cu.values()) {
        (ColumnKind::Continuous, _) => {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (r, x) in cu.observed() {
                if mask.get(r) {
                    a.push(x);
                } else {
                    b.push(x);
                }
            }
            if a.is_empty() || b.is_empty() {
                return None;
            }
            let (z, p) = rank_sum_test(&a, &b);
            (TestKind::RankSum, z, p)
        }
        (_, Values::Discrete(codes)) => {
            let k = kind.code_count().expect("discrete") as usize;
            let mut table = vec![vec![0u64; 2]; k];
            for r in 0..d.n_rows() {
                if !cu.is_masked(r) {
                    table[codes[r] as usize][usize::from(mask.get(r))] += 1;
                }
            }
            if table.iter().all(|row| row[1] == 0) || table.iter().all(|row| row[0] == 0) {
                return None;
            }
            let (s, p) = chi_square_test(&table);
            (TestKind::ChiSquare, s, p)
        }
        _ => return None,
    };
    Some(Evidence { other: u, other_name: d.schema().name(u).to_string(), test, statistic, p_value })
}

/// Classifies every column with masked cells. For column `v` and every
/// other column `u`, rows where `v` is masked are compared with rows where
/// it is observed (rank-sum for continuous `u`, chi-square for discrete `u`).
/// The column's p-value is the Bonferroni-adjusted minimum.
pub fn detect_mnar(d: &Dataset, alpha: f64) -> Result<MissingnessProfile> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MuralError::Config(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let targets: Vec<usize> = (0..d.n_cols()).filter(|&v| d.column(v).mask().any()).collect();
    let entries = targets
        .par_iter()
        .map(|&v| {
            let spec = &d.schema().columns()[v];
            let missing_count = d.column(v).mask().count();
            let insufficient = missing_count < MIN_GROUP || d.n_rows() - missing_count < MIN_GROUP;
            let evidence: Vec<Evidence> =
                if insufficient { Vec::new() } else { (0..d.n_cols()).filter(|&u| u != v).filter_map(|u| pairwise(d, v, u)).collect() };
            let min_p = evidence.iter().map(|e| e.p_value).fold(1.0, f64::min);
            let p_value = (min_p * evidence.len().max(1) as f64).min(1.0);
            let tested = if p_value <= alpha { Classification::Mnar } else { Classification::Random };
            let (classification, forced) = match spec.missingness {
                MissingnessHint::ForceMnar => (Classification::Mnar, true),
                MissingnessHint::ForceRandom => (Classification::Random, true),
                MissingnessHint::Auto if insufficient => (Classification::Random, false),
                MissingnessHint::Auto => (tested, false),
            };
            ColumnMissingness {
                column: v,
                name: spec.name.clone(),
                missing_count,
                classification,
                p_value,
                evidence,
                insufficient_data: insufficient,
                forced,
            }
        })
        .collect();
    Ok(MissingnessProfile { alpha, entries })
}

fn observed_mean(c: &Column) -> Option<f64> {
    let (s, n) = c.observed().fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Most frequent observed code, ties to the smallest.
fn observed_mode(c: &Column, count: u32) -> Option<u32> {
    let mut freq = vec![0usize; count as usize];
    for (_, v) in c.observed() {
        freq[v as usize] += 1;
    }
    let best = freq.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
    (*best.1 > 0).then_some(best.0 as u32)
}

/// Per-column fill value: observed mean or mode.
fn fill_value(d: &Dataset, col: usize) -> Result<f64> {
    let c = d.column(col);
    let v = match d.schema().kind(col).code_count() {
        None => observed_mean(c),
        Some(k) => observed_mode(c, k).map(f64::from),
    };
    v.ok_or_else(|| mural_core::Error::AllMasked(d.schema().name(col).to_string()).into())
}

fn replace_column(d: &Dataset, col: usize, filled: &[f64], mask: MissingMask) -> Result<Dataset> {
    let values = match d.column(col).values() {
        Values::Continuous(_) => Values::Continuous(filled.to_vec()),
        Values::Discrete(_) => Values::Discrete(filled.iter().map(|&v| v as u32).collect()),
    };
    Ok(d.with_column(col, Column::from_parts(values, mask))?)
}

/// Fills every masked cell with its column's observed mean (continuous) or
/// mode (discrete).
pub fn mean_impute(d: &Dataset) -> Result<Dataset> {
    let mut out = d.clone();
    for col in 0..d.n_cols() {
        if !d.column(col).mask().any() {
            continue;
        }
        let fill = fill_value(d, col)?;
        let filled: Vec<f64> = (0..d.n_rows()).map(|r| d.value(r, col).unwrap_or(fill)).collect();
        out = replace_column(&out, col, &filled, MissingMask::new(d.n_rows()))?;
    }
    Ok(out)
}

/// A shallow CART learner used as the per-column model of the chained
/// imputer.
#[derive(Debug, Clone)]
enum Cart {
    Leaf(f64),
    Split { var: usize, threshold: f64, left: Box<Cart>, right: Box<Cart> },
}

const CART_DEPTH: usize = 3;
const CART_MIN_LEAF: usize = 5;

impl Cart {
    fn predict(&self, x: impl Fn(usize) -> f64 + Copy) -> f64 {
        match self {
            Cart::Leaf(v) => *v,
            Cart::Split { var, threshold, left, right } => {
                if x(*var) <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    /// `classes = Some(k)` grows a Gini classification tree over codes
    /// `0..k`; `None` a least-squares regression tree.
    fn fit(cols: &[Vec<f64>], predictors: &[usize], y: &[f64], rows: &mut [usize], classes: Option<usize>, depth: usize) -> Cart {
        let leaf = |rows: &[usize]| match classes {
            None => Cart::Leaf(rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64),
            Some(k) => {
                let mut freq = vec![0usize; k];
                rows.iter().for_each(|&r| freq[y[r] as usize] += 1);
                let best = freq.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).expect("k >= 1");
                Cart::Leaf(best.0 as f64)
            }
        };
        if depth == CART_DEPTH || rows.len() < 2 * CART_MIN_LEAF {
            return leaf(rows);
        }
        // (impurity after split, var, threshold)
        let mut best: Option<(f64, usize, f64)> = None;
        let n = rows.len();
        for &var in predictors {
            let x = &cols[var];
            rows.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            match classes {
                None => {
                    let (tot, tot2) = rows.iter().fold((0.0, 0.0), |(s, s2), &r| (s + y[r], s2 + y[r] * y[r]));
                    let (mut s, mut s2) = (0.0, 0.0);
                    for i in 0..n - 1 {
                        let yr = y[rows[i]];
                        s += yr;
                        s2 += yr * yr;
                        let nl = i + 1;
                        if nl < CART_MIN_LEAF || n - nl < CART_MIN_LEAF || x[rows[i]] == x[rows[i + 1]] {
                            continue;
                        }
                        let nr = (n - nl) as f64;
                        let sse = (s2 - s * s / nl as f64) + ((tot2 - s2) - (tot - s) * (tot - s) / nr);
                        if best.is_none_or(|b| sse < b.0) {
                            best = Some((sse, var, 0.5 * (x[rows[i]] + x[rows[i + 1]])));
                        }
                    }
                }
                Some(k) => {
                    let mut total = vec![0usize; k];
                    rows.iter().for_each(|&r| total[y[r] as usize] += 1);
                    let mut left = vec![0usize; k];
                    for i in 0..n - 1 {
                        left[y[rows[i]] as usize] += 1;
                        let nl = i + 1;
                        if nl < CART_MIN_LEAF || n - nl < CART_MIN_LEAF || x[rows[i]] == x[rows[i + 1]] {
                            continue;
                        }
                        let nr = n - nl;
                        let gini = |c: &mut dyn Iterator<Item = usize>, m: usize| {
                            let m = m as f64;
                            m * (1.0 - c.map(|v| (v as f64 / m).powi(2)).sum::<f64>())
                        };
                        let g = gini(&mut left.iter().copied(), nl) + gini(&mut total.iter().zip(&left).map(|(t, l)| t - l), nr);
                        if best.is_none_or(|b| g < b.0) {
                            best = Some((g, var, 0.5 * (x[rows[i]] + x[rows[i + 1]])));
                        }
                    }
                }
            }
        }
        let Some((_, var, threshold)) = best else { return leaf(rows) };
        let x = &cols[var];
        rows.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let cut = rows.partition_point(|&r| x[r] <= threshold);
        let (l, r) = rows.split_at_mut(cut);
        Cart::Split {
            var,
            threshold,
            left: Box::new(Cart::fit(cols, predictors, y, l, classes, depth + 1)),
            right: Box::new(Cart::fit(cols, predictors, y, r, classes, depth + 1)),
        }
    }
}

/// Chained-equation imputation of the Random-classified columns of
/// `profile`. Columns start from their mean or mode, then for `iterations`
/// cycles each target is refitted with a depth-3 tree on the current values
/// of every column that is not MNAR and its masked cells are re-predicted.
/// MNAR columns keep their masks and are not used as predictors.
pub fn impute_random_missing(d: &Dataset, profile: &MissingnessProfile, iterations: usize) -> Result<Dataset> {
    let targets: Vec<usize> = profile.columns_with(Classification::Random).into_iter().filter(|&c| d.column(c).mask().any()).collect();
    if targets.is_empty() {
        return Ok(d.clone());
    }
    let n = d.n_rows();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d.n_cols());
    for c in 0..d.n_cols() {
        let fill = if targets.contains(&c) { fill_value(d, c)? } else { 0.0 };
        cols.push((0..n).map(|r| d.value(r, c).unwrap_or(fill)).collect());
    }
    let usable: Vec<usize> = (0..d.n_cols()).filter(|&c| !d.column(c).mask().any() || targets.contains(&c)).collect();
    for _ in 0..iterations {
        for &t in &targets {
            let predictors: Vec<usize> = usable.iter().copied().filter(|&c| c != t).collect();
            let mask = d.column(t).mask();
            let mut rows: Vec<usize> = (0..n).filter(|&r| !mask.get(r)).collect();
            let classes = d.schema().kind(t).code_count().map(|k| k as usize);
            let model = if predictors.is_empty() {
                None
            } else {
                let y = cols[t].clone();
                Some(Cart::fit(&cols, &predictors, &y, &mut rows, classes, 0))
            };
            if let Some(model) = model {
                let preds: Vec<(usize, f64)> = mask.iter_masked().map(|r| (r, model.predict(|v| cols[v][r]))).collect();
                for (r, v) in preds {
                    cols[t][r] = v;
                }
            }
        }
    }
    let mut out = d.clone();
    for &t in &targets {
        out = replace_column(&out, t, &cols[t], MissingMask::new(n))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Above,
    Below,
}

fn continuous_column(d: &Dataset, col: usize) -> Result<&[f64]> {
    match d.column(col).values() {
        Values::Continuous(v) if col < d.n_cols() => Ok(v),
        _ => Err(MuralError::Config(format!("column `{}` is not continuous", d.schema().name(col)))),
    }
}

/// Adds `rows` to the mask of `col`.
pub fn mask_rows(d: &Dataset, col: usize, rows: impl IntoIterator<Item = usize>) -> Result<Dataset> {
    let c = d.column(col);
    let mut mask = c.mask().clone();
    for r in rows {
        mask.set(r, true);
    }
    Ok(d.with_column(col, Column::from_parts(c.values().clone(), mask))?)
}

/// Masks cells strictly above (or below) `threshold`.
pub fn induce_mnar_threshold(d: &Dataset, col: usize, threshold: f64, direction: Direction) -> Result<Dataset> {
    let v = continuous_column(d, col)?;
    let hit: Vec<usize> = (0..d.n_rows())
        .filter(|&r| {
            !d.column(col).is_masked(r)
                && match direction {
                    Direction::Above => v[r] > threshold,
                    Direction::Below => v[r] < threshold,
                }
        })
        .collect();
    mask_rows(d, col, hit)
}

/// Masks `floor(fraction * n_rows)` distinct uniformly drawn rows of `col`.
pub fn induce_mcar(d: &Dataset, col: usize, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(MuralError::Config(format!("fraction {fraction} must lie in [0, 1)")));
    }
    let n = d.n_rows();
    let count = (fraction * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rand::seq::index::sample(&mut rng, n, count).into_vec();
    mask_rows(d, col, rows)
}
