//! Residual-entropy information gain over discretised non-split variables.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::config::EntropyMode;
use super::features::Features;
use crate::data::{sturges_bin_count, BinningScheme, EqualWidthBins, QuantileBins};

/// One discretised residual target over a fixed row set: `codes[p]` is the
/// class of the row at position `p`.
#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub codes: Vec<u32>,
    pub n_classes: usize,
}

/// Shannon entropy in bits of a count vector.
pub(crate) fn entropy(counts: &[u32], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * libm::log2(p);
        }
    }
    h
}

/// Codes one variable over `rows`. Bins are computed from these rows only;
/// masked cells get their own class.
fn code_var(features: &Features, rows: &[usize], var: usize, binning: BinningScheme) -> Target {
    let col = features.column(var);
    match features.kind(var).code_count() {
        Some(k) => {
            let missing = k;
            let codes = rows.iter().map(|&r| if col[r].is_nan() { missing } else { col[r] as u32 }).collect();
            Target { codes, n_classes: k as usize + 1 }
        }
        None => {
            let n_bins = sturges_bin_count(rows.len().max(1)).expect("nonzero");
            let missing = n_bins as u32;
            let coder: CodeFn = match binning {
                BinningScheme::EqualWidth => {
                    let (lo, hi) = rows
                        .iter()
                        .map(|&r| col[r])
                        .filter(|v| !v.is_nan())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    if lo > hi {
                        CodeFn::Constant
                    } else {
                        CodeFn::Width(EqualWidthBins::new(lo, hi, n_bins))
                    }
                }
                BinningScheme::Quantile => {
                    let mut sorted: Vec<f64> = rows.iter().map(|&r| col[r]).filter(|v| !v.is_nan()).collect();
                    if sorted.is_empty() {
                        CodeFn::Constant
                    } else {
                        sorted.sort_by(f64::total_cmp);
                        CodeFn::Quantile(QuantileBins::new(&sorted, n_bins))
                    }
                }
            };
            let codes = rows
                .iter()
                .map(|&r| {
                    let v = col[r];
                    if v.is_nan() {
                        missing
                    } else {
                        coder.code(v)
                    }
                })
                .collect();
            Target { codes, n_classes: n_bins + 1 }
        }
    }
}

enum CodeFn {
    Constant,
    Width(EqualWidthBins),
    Quantile(QuantileBins),
}

impl CodeFn {
    fn code(&self, v: f64) -> u32 {
        match self {
            CodeFn::Constant => 0,
            CodeFn::Width(b) => b.code(v),
            CodeFn::Quantile(b) => b.code(v),
        }
    }
}

/// Relabels combined codes densely as `0..distinct`.
fn densify(keys: Vec<u64>) -> Target {
    let mut uniq = keys.clone();
    uniq.sort_unstable();
    uniq.dedup();
    let codes = keys.iter().map(|k| uniq.binary_search(k).expect("present") as u32).collect();
    Target { codes, n_classes: uniq.len() }
}

/// Discretises the residual variables over `rows` according to `mode`.
pub(crate) fn encode<R: Rng + ?Sized>(
    features: &Features,
    rows: &[usize],
    residual: &[usize],
    mode: EntropyMode,
    binning: BinningScheme,
    rng: &mut R,
) -> Vec<Target> {
    match mode {
        EntropyMode::MarginalSum => residual.iter().map(|&v| code_var(features, rows, v, binning)).collect(),
        EntropyMode::JointSubset { dims } => {
            let mut pool: Vec<usize> = residual.to_vec();
            let take = dims.min(pool.len());
            for i in 0..take {
                let j = rng.random_range(i..pool.len());
                pool.swap(i, j);
            }
            pool.truncate(take);
            pool.sort_unstable();
            let mut joint: Option<Target> = None;
            for v in pool {
                let t = code_var(features, rows, v, binning);
                joint = Some(match joint {
                    None => t,
                    Some(acc) => {
                        let radix = t.n_classes as u64;
                        let keys = acc.codes.iter().zip(&t.codes).map(|(&a, &b)| a as u64 * radix + b as u64).collect();
                        densify(keys)
                    }
                });
            }
            joint.into_iter().collect()
        }
    }
}

/// Gain of splitting positions `0..n` into groups, where `group[p]` names the
/// child holding position `p`.
pub(crate) fn partition_gain(targets: &[Target], group: &[usize], n_groups: usize) -> f64 {
    let n = group.len();
    let mut sizes = vec![0usize; n_groups];
    for &g in group {
        sizes[g] += 1;
    }
    let mut total = 0.0;
    for t in targets {
        let mut parent = vec![0u32; t.n_classes];
        let mut child = vec![0u32; t.n_classes * n_groups];
        for (p, &c) in t.codes.iter().enumerate() {
            parent[c as usize] += 1;
            child[group[p] * t.n_classes + c as usize] += 1;
        }
        let mut g = entropy(&parent, n);
        for (a, &size) in sizes.iter().enumerate() {
            if size > 0 {
                g -= size as f64 / n as f64 * entropy(&child[a * t.n_classes..(a + 1) * t.n_classes], size);
            }
        }
        total += g;
    }
    total
}

/// Incremental two-way sweep state: the left child's class counts per target.
pub(crate) struct Sweep<'a> {
    targets: &'a [Target],
    parent: Vec<Vec<u32>>,
    left: Vec<Vec<u32>>,
    parent_h: Vec<f64>,
    right_buf: Vec<u32>,
    n_left: usize,
}

impl<'a> Sweep<'a> {
    pub(crate) fn new(targets: &'a [Target]) -> Self {
        let parent: Vec<Vec<u32>> = targets
            .iter()
            .map(|t| {
                let mut c = vec![0u32; t.n_classes];
                for &k in &t.codes {
                    c[k as usize] += 1;
                }
                c
            })
            .collect();
        let n = targets.first().map_or(0, |t| t.codes.len());
        let parent_h = parent.iter().map(|c| entropy(c, n)).collect();
        let left = targets.iter().map(|t| vec![0u32; t.n_classes]).collect();
        let width = targets.iter().map(|t| t.n_classes).max().unwrap_or(0);
        Sweep { targets, parent, left, parent_h, right_buf: vec![0; width], n_left: 0 }
    }

    pub(crate) fn move_left(&mut self, position: usize) {
        for (t, l) in self.targets.iter().zip(self.left.iter_mut()) {
            l[t.codes[position] as usize] += 1;
        }
        self.n_left += 1;
    }

    pub(crate) fn n_left(&self) -> usize {
        self.n_left
    }

    pub(crate) fn gain(&mut self, n: usize) -> f64 {
        let n_right = n - self.n_left;
        let (wl, wr) = (self.n_left as f64 / n as f64, n_right as f64 / n as f64);
        let mut total = 0.0;
        for ((p, l), h) in self.parent.iter().zip(&self.left).zip(&self.parent_h) {
            let right = &mut self.right_buf[..p.len()];
            for ((r, &pc), &lc) in right.iter_mut().zip(p).zip(l) {
                *r = pc - lc;
            }
            total += h - wl * entropy(l, self.n_left) - wr * entropy(right, n_right);
        }
        total
    }
}
