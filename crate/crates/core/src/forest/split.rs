//! Split search: thresholds by residual-entropy gain, four-way MNAR and
//! binary splits, and the per-node candidate loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::config::{ForestConfig, ResidualCount};
use super::entropy::{encode, partition_gain, Sweep};
use super::features::Features;
use super::tree::SplitSpec;
use crate::data::ColumnKind;
use crate::{Error, Result};

/// Gains closer than this are ties; the earlier (smaller) candidate wins.
pub(crate) const GAIN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub gain: f64,
}

/// Result of a node-level split decision.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitDecision {
    Leaf,
    Split { spec: SplitSpec, children: Vec<Vec<usize>>, gain: f64 },
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) * 0.5;
    if mid < b {
        mid
    } else {
        a
    }
}

fn shuffle<R: Rng + ?Sized>(v: &mut [usize], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

pub(crate) struct Threshold {
    pub choice: ThresholdChoice,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Best threshold on `var` over the rows of `rows` where `var` is observed.
/// Residual bins are computed once from those rows.
pub(crate) fn threshold_search<R: Rng + ?Sized>(
    features: &Features,
    rows: &[usize],
    var: usize,
    residual: &[usize],
    cfg: &ForestConfig,
    rng: &mut R,
) -> Result<Threshold> {
    if residual.is_empty() {
        return Err(Error::EmptyResidual);
    }
    let col = features.column(var);
    let observed: Vec<usize> = rows.iter().copied().filter(|&r| !col[r].is_nan()).collect();
    let m = observed.len();
    if m < 2 * cfg.min_leaf {
        return Err(Error::Unsplittable);
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| col[observed[a]].total_cmp(&col[observed[b]]).then(a.cmp(&b)));
    let value = |k: usize| col[observed[order[k]]];

    // Left sizes at which a cut separates distinct values and keeps both sides
    // at least `min_leaf`.
    let mut cuts: Vec<usize> = (cfg.min_leaf.max(1)..=m - cfg.min_leaf).filter(|&k| value(k - 1) < value(k)).collect();
    if cuts.is_empty() {
        return Err(Error::Unsplittable);
    }
    let limit = cfg.max_threshold_candidates;
    if cuts.len() > limit {
        let len = cuts.len();
        let mut thinned: Vec<usize> = if limit == 1 {
            vec![cuts[len / 2]]
        } else {
            (0..limit).map(|j| cuts[(j * (len - 1) + (limit - 1) / 2) / (limit - 1)]).collect()
        };
        thinned.dedup();
        cuts = thinned;
    }

    let targets = encode(features, &observed, residual, cfg.entropy_mode, cfg.binning, rng);
    let mut sweep = Sweep::new(&targets);
    let mut best: Option<(usize, f64)> = None;
    let mut next = 0;
    for k in 1..m {
        sweep.move_left(order[k - 1]);
        if next < cuts.len() && cuts[next] == k {
            next += 1;
            let g = sweep.gain(m);
            if best.is_none_or(|(_, bg)| g > bg + GAIN_TIE) {
                best = Some((k, g));
            }
        }
    }
    let (k, gain) = best.expect("at least one cut evaluated");
    debug_assert_eq!(sweep.n_left(), m - 1);
    let threshold = midpoint(value(k - 1), value(k));
    let left = order[..k].iter().map(|&p| observed[p]).collect();
    let right = order[k..].iter().map(|&p| observed[p]).collect();
    Ok(Threshold { choice: ThresholdChoice { threshold, gain }, left, right })
}

/// Gain of an explicit partition of `rows` (children in `groups` order).
pub(crate) fn groups_gain<R: Rng + ?Sized>(
    features: &Features,
    rows: &[usize],
    groups: &[&[usize]],
    residual: &[usize],
    cfg: &ForestConfig,
    rng: &mut R,
) -> f64 {
    // Position of each row id inside `rows`.
    let mut label = vec![usize::MAX; features.n_rows()];
    for (g, members) in groups.iter().enumerate() {
        for &r in *members {
            label[r] = g;
        }
    }
    let group: Vec<usize> = rows.iter().map(|&r| label[r]).collect();
    let targets = encode(features, rows, residual, cfg.entropy_mode, cfg.binning, rng);
    partition_gain(&targets, &group, groups.len())
}

struct Candidate {
    spec: SplitSpec,
    children: Vec<Vec<usize>>,
    gain: f64,
}

struct NodeContext<'a, R: Rng + ?Sized> {
    features: &'a Features,
    rows: &'a [usize],
    path: &'a [usize],
    cfg: &'a ForestConfig,
    rng: &'a mut R,
    /// Variables with masked cells are off limits, also as aux variables.
    restricted: bool,
}

impl<R: Rng + ?Sized> NodeContext<'_, R> {
    /// Residual variables: everything but `exclude` (and the path, when
    /// configured), optionally subsampled.
    fn residual(&mut self, exclude: &[usize]) -> Vec<usize> {
        let mut vars: Vec<usize> = (0..self.features.n_cols())
            .filter(|v| !exclude.contains(v) && !(self.cfg.exclude_path_vars && self.path.contains(v)))
            .collect();
        if let ResidualCount::Count(c) = self.cfg.n_residual_vars {
            if c < vars.len() {
                for i in 0..c {
                    let j = self.rng.random_range(i..vars.len());
                    vars.swap(i, j);
                }
                vars.truncate(c);
                vars.sort_unstable();
            }
        }
        vars
    }

    fn evaluate(&mut self, var: usize) -> Option<Candidate> {
        if self.features.is_mnar(var) {
            let col = self.features.column(var);
            let (missing, measured): (Vec<usize>, Vec<usize>) = self.rows.iter().partition(|&&r| col[r].is_nan());
            if !missing.is_empty() {
                if measured.is_empty() {
                    return None;
                }
                return self.mnar_four_way(var, &measured, &missing);
            }
        }
        match self.features.kind(var) {
            ColumnKind::Continuous | ColumnKind::Ordinal { .. } => self.two_way(var),
            ColumnKind::Binary => self.binary_four_way(var),
            ColumnKind::Categorical { .. } => self.one_vs_rest(var),
        }
    }

    fn two_way(&mut self, var: usize) -> Option<Candidate> {
        let residual = self.residual(&[var]);
        let t = threshold_search(self.features, self.rows, var, &residual, self.cfg, self.rng).ok()?;
        Some(Candidate {
            spec: SplitSpec::Continuous { var, threshold: t.choice.threshold },
            gain: t.choice.gain,
            children: vec![t.left, t.right],
        })
    }

    fn aux_pool(&mut self, var: usize, rows: &[usize], allow_binary: bool) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..self.features.n_cols())
            .filter(|&v| v != var && !(self.restricted && self.features.is_mnar(v)))
            .filter(|&v| match self.features.kind(v) {
                ColumnKind::Continuous | ColumnKind::Ordinal { .. } => true,
                ColumnKind::Binary => allow_binary,
                ColumnKind::Categorical { .. } => false,
            })
            .filter(|&v| {
                let c = self.features.column(v);
                rows.iter().all(|&r| !c[r].is_nan())
            })
            .collect();
        shuffle(&mut pool, self.rng);
        pool
    }

    fn mnar_four_way(&mut self, var: usize, measured: &[usize], missing: &[usize]) -> Option<Candidate> {
        for aux in self.aux_pool(var, missing, true) {
            let residual = self.residual(&[var, aux]);
            if residual.is_empty() {
                continue;
            }
            let Ok(m) = threshold_search(self.features, measured, var, &residual, self.cfg, self.rng) else {
                // The measured branch does not depend on the aux choice.
                return None;
            };
            let Ok(s) = threshold_search(self.features, missing, aux, &residual, self.cfg, self.rng) else {
                continue;
            };
            let groups: [&[usize]; 4] = [&m.left, &m.right, &s.left, &s.right];
            let gain = groups_gain(self.features, self.rows, &groups, &residual, self.cfg, self.rng);
            return Some(Candidate {
                spec: SplitSpec::MnarFourWay {
                    var,
                    measured_threshold: m.choice.threshold,
                    aux_var: aux,
                    aux_threshold: s.choice.threshold,
                },
                children: vec![m.left, m.right, s.left, s.right],
                gain,
            });
        }
        None
    }

    fn binary_four_way(&mut self, var: usize) -> Option<Candidate> {
        let col = self.features.column(var);
        let (ones, zeros): (Vec<usize>, Vec<usize>) = self.rows.iter().partition(|&&r| col[r] > 0.5);
        if zeros.is_empty() || ones.is_empty() {
            return None;
        }
        for aux in self.aux_pool(var, self.rows, false) {
            let residual = self.residual(&[var, aux]);
            if residual.is_empty() {
                continue;
            }
            let Ok(t0) = threshold_search(self.features, &zeros, aux, &residual, self.cfg, self.rng) else {
                continue;
            };
            let Ok(t1) = threshold_search(self.features, &ones, aux, &residual, self.cfg, self.rng) else {
                continue;
            };
            let groups: [&[usize]; 4] = [&t0.left, &t0.right, &t1.left, &t1.right];
            let gain = groups_gain(self.features, self.rows, &groups, &residual, self.cfg, self.rng);
            return Some(Candidate {
                spec: SplitSpec::BinaryFourWay {
                    var,
                    aux_var: aux,
                    aux_threshold_0: t0.choice.threshold,
                    aux_threshold_1: t1.choice.threshold,
                },
                children: vec![t0.left, t0.right, t1.left, t1.right],
                gain,
            });
        }
        // No aux variable can be thresholded on both branches: plain 0/1 split.
        if zeros.len() < self.cfg.min_leaf || ones.len() < self.cfg.min_leaf {
            return None;
        }
        let residual = self.residual(&[var]);
        if residual.is_empty() {
            return None;
        }
        let gain = groups_gain(self.features, self.rows, &[&zeros, &ones], &residual, self.cfg, self.rng);
        Some(Candidate { spec: SplitSpec::Continuous { var, threshold: 0.5 }, children: vec![zeros, ones], gain })
    }

    fn one_vs_rest(&mut self, var: usize) -> Option<Candidate> {
        let residual = self.residual(&[var]);
        if residual.is_empty() {
            return None;
        }
        let col = self.features.column(var);
        let ColumnKind::Categorical { cardinality } = self.features.kind(var) else { unreachable!("one-vs-rest on a categorical column") };
        let mut counts = vec![0usize; cardinality as usize];
        for &r in self.rows {
            counts[col[r] as usize] += 1;
        }
        let n = self.rows.len();
        let targets = encode(self.features, self.rows, &residual, self.cfg.entropy_mode, self.cfg.binning, self.rng);
        let mut best: Option<(u32, f64)> = None;
        for (c, &size) in counts.iter().enumerate() {
            if size < self.cfg.min_leaf || n - size < self.cfg.min_leaf {
                continue;
            }
            let group: Vec<usize> = self.rows.iter().map(|&r| usize::from(col[r] as usize != c)).collect();
            let g = partition_gain(&targets, &group, 2);
            if best.is_none_or(|(_, bg)| g > bg + GAIN_TIE) {
                best = Some((c as u32, g));
            }
        }
        let (category, gain) = best?;
        let (hit, rest): (Vec<usize>, Vec<usize>) = self.rows.iter().partition(|&&r| col[r] as u32 == category);
        Some(Candidate { spec: SplitSpec::Category { var, category }, children: vec![hit, rest], gain })
    }
}

/// Decides how a node holding `rows` at `depth` splits. `path` lists the
/// variables used by its ancestors.
pub(crate) fn decide<R: Rng + ?Sized>(
    features: &Features,
    rows: &[usize],
    depth: usize,
    path: &[usize],
    cfg: &ForestConfig,
    rng: &mut R,
) -> SplitDecision {
    if depth >= cfg.max_depth || rows.len() < 2 * cfg.min_leaf {
        return SplitDecision::Leaf;
    }
    let restricted = depth < cfg.mnar_restrict_levels;
    let mut pool: Vec<usize> = (0..features.n_cols()).filter(|&v| !(restricted && features.is_mnar(v))).collect();
    shuffle(&mut pool, rng);

    let mut ctx = NodeContext { features, rows, path, cfg, rng, restricted };
    let mut best: Option<Candidate> = None;
    let mut found = 0;
    for var in pool {
        if found == cfg.n_candidate_vars {
            break;
        }
        if let Some(c) = ctx.evaluate(var) {
            found += 1;
            if best.as_ref().is_none_or(|b| c.gain > b.gain + GAIN_TIE) {
                best = Some(c);
            }
        }
    }
    match best {
        Some(c) => SplitDecision::Split { spec: c.spec, children: c.children, gain: c.gain },
        None => SplitDecision::Leaf,
    }
}
