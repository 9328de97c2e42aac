//! Tree metrics, the forest-averaged distance matrix, Gaussian affinities and
//! the row-stochastic diffusion operator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::forest::{LeafAssignments, MuralForest, TreeShape};
use crate::{Error, Result};

/// Dense symmetric matrix with a zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Evaluates `f(i, j)` for `i < j` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DistanceMatrix { n, data }
    }

    /// Validates symmetry, a zero diagonal and finite non-negative entries.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for n = {n}", data.len())));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::Dimension(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                let v = data[i * n + j];
                if !(v.is_finite() && v >= 0.0) || v != data[j * n + i] {
                    return Err(Error::Dimension(format!("entry ({i}, {j}) is negative, non-finite or asymmetric")));
                }
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    /// Euclidean distances between the given points.
    pub fn euclidean(points: &[Vec<f64>]) -> Self {
        DistanceMatrix::from_fn(points.len(), |i, j| {
            let s: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            libm::sqrt(s)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Principal submatrix on `rows` (in that order).
    pub fn select(&self, rows: &[usize]) -> DistanceMatrix {
        DistanceMatrix::from_fn(rows.len(), |a, b| self.get(rows[a], rows[b]))
    }
}

/// Path lengths between all leaves of one tree.
#[derive(Debug, Clone)]
pub struct LeafDistances {
    leaves: Vec<usize>,
    slot: Vec<u32>,
    dist: Vec<f64>,
}

impl LeafDistances {
    /// Leaf node indices in depth-first order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    /// Position of a leaf node in [`Self::leaves`].
    pub fn ordinal(&self, leaf: usize) -> Option<usize> {
        self.slot.get(leaf).filter(|&&s| s != u32::MAX).map(|&s| s as usize)
    }

    /// Distance between two leaf nodes (by node index).
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let (a, b) = (self.ordinal(a).expect("leaf node"), self.ordinal(b).expect("leaf node"));
        self.dist[a * self.leaves.len() + b]
    }

    fn table(&self) -> &[f64] {
        &self.dist
    }
}

/// Sum of edge weights along the unique path between every pair of leaves.
///
/// Each pair is written once, at its lowest common ancestor: for leaves under
/// different children `c1`, `c2` of node `u` the distance is
/// `(r(a) - r(u)) + (r(b) - r(u))` with `r` the weighted depth.
pub fn tree_leaf_distances<T: TreeShape + ?Sized>(tree: &T) -> LeafDistances {
    let nn = tree.node_count();
    let leaves = tree.leaves_dfs();
    let l = leaves.len();
    let mut slot = vec![u32::MAX; nn];
    for (k, &leaf) in leaves.iter().enumerate() {
        slot[leaf] = k as u32;
    }
    // Leaf ordinal range of every subtree; parents precede children.
    let mut lo = vec![usize::MAX; nn];
    let mut hi = vec![0usize; nn];
    for (k, &leaf) in leaves.iter().enumerate() {
        lo[leaf] = k;
        hi[leaf] = k + 1;
    }
    for n in (1..nn).rev() {
        let p = tree.parent(n).expect("non-root");
        lo[p] = lo[p].min(lo[n]);
        hi[p] = hi[p].max(hi[n]);
    }
    let depth = tree.root_distances();
    let mut dist = vec![0.0; l * l];
    for u in 0..nn {
        let ch = tree.children(u);
        for (x, &c1) in ch.iter().enumerate() {
            for &c2 in &ch[x + 1..] {
                for a in lo[c1]..hi[c1] {
                    let da = depth[leaves[a]] - depth[u];
                    for b in lo[c2]..hi[c2] {
                        let v = da + (depth[leaves[b]] - depth[u]);
                        dist[a * l + b] = v;
                        dist[b * l + a] = v;
                    }
                }
            }
        }
    }
    LeafDistances { leaves, slot, dist }
}

/// Forest-averaged tree distance between every pair of assigned rows:
/// `D(i, j) = (1/k) * sum_t d_t(leaf_t(i), leaf_t(j))`.
pub fn forest_distance_matrix(forest: &MuralForest, assignments: &LeafAssignments) -> Result<DistanceMatrix> {
    let trees = forest.trees();
    if assignments.n_trees() != trees.len() {
        return Err(Error::Dimension(format!("{} trees, assignments for {}", trees.len(), assignments.n_trees())));
    }
    let n = assignments.n_rows();
    let mut acc = vec![0.0f64; n * n];
    for (t, tree) in trees.iter().enumerate() {
        let ld = tree_leaf_distances(tree);
        let l = ld.leaves().len();
        let ord: Vec<usize> = assignments
            .tree(t)
            .iter()
            .map(|&leaf| ld.ordinal(leaf as usize).ok_or(Error::Dimension(format!("tree {t}: node {leaf} is not a leaf"))))
            .collect::<Result<_>>()?;
        let table = ld.table();
        let add_row = |i: usize, row: &mut [f64]| {
            let src = &table[ord[i] * l..(ord[i] + 1) * l];
            for j in i + 1..n {
                row[j] += src[ord[j]];
            }
        };
        #[cfg(feature = "std")]
        {
            use rayon::prelude::*;
            acc.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| add_row(i, row));
        }
        #[cfg(not(feature = "std"))]
        acc.chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| add_row(i, row));
    }
    let k = trees.len() as f64;
    for i in 0..n {
        for j in i + 1..n {
            let v = acc[i * n + j] / k;
            acc[i * n + j] = v;
            acc[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix { n, data: acc })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Bandwidth {
    Fixed(f64),
    /// `eps = (median_i of the k-th smallest nonzero distance from i)^2`,
    /// falling back to the largest when a row has fewer than k.
    AdaptiveKnn(usize),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::AdaptiveKnn(5)
    }
}

/// Maps a distance and bandwidth to an affinity.
pub trait Kernel {
    fn eval(&self, distance: f64, epsilon: f64) -> f64;
}

/// `exp(-d^2 / eps)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl Kernel for Gaussian {
    fn eval(&self, distance: f64, epsilon: f64) -> f64 {
        libm::exp(-distance * distance / epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AffinityMatrix {
    n: usize,
    data: Vec<f64>,
    epsilon: f64,
}

impl AffinityMatrix {
    /// Validates symmetry, a unit diagonal and entries in `[0, 1]`.
    pub fn from_dense(n: usize, data: Vec<f64>, epsilon: f64) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for n = {n}", data.len())));
        }
        for i in 0..n {
            if data[i * n + i] != 1.0 {
                return Err(Error::Dimension(format!("diagonal entry {i} is not 1")));
            }
            for j in i + 1..n {
                let v = data[i * n + j];
                if !(0.0..=1.0).contains(&v) || v != data[j * n + i] {
                    return Err(Error::Dimension(format!("entry ({i}, {j}) outside [0, 1] or asymmetric")));
                }
            }
        }
        Ok(AffinityMatrix { n, data, epsilon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Resolves a bandwidth choice to a concrete `eps`.
pub fn resolve_bandwidth(d: &DistanceMatrix, bandwidth: Bandwidth) -> Result<f64> {
    match bandwidth {
        Bandwidth::Fixed(eps) if eps.is_finite() && eps > 0.0 => Ok(eps),
        Bandwidth::Fixed(eps) => Err(Error::Config(format!("bandwidth {eps} must be positive"))),
        Bandwidth::AdaptiveKnn(0) => Err(Error::ZeroCount),
        Bandwidth::AdaptiveKnn(k) => {
            let mut kth = Vec::with_capacity(d.n());
            let mut buf = Vec::with_capacity(d.n());
            for i in 0..d.n() {
                buf.clear();
                buf.extend(d.row(i).iter().enumerate().filter(|&(j, &v)| j != i && v > 0.0).map(|(_, &v)| v));
                if !buf.is_empty() {
                    let rank = k.min(buf.len()) - 1;
                    let (_, v, _) = buf.select_nth_unstable_by(rank, f64::total_cmp);
                    kth.push(*v);
                }
            }
            if kth.is_empty() {
                return Err(Error::DegenerateBandwidth);
            }
            let m = median(kth);
            Ok(m * m)
        }
    }
}

/// Gaussian affinity `K(i, j) = exp(-D(i, j)^2 / eps)`.
pub fn affinity(d: &DistanceMatrix, bandwidth: Bandwidth) -> Result<AffinityMatrix> {
    affinity_with(d, bandwidth, &Gaussian)
}

pub fn affinity_with<K: Kernel + ?Sized>(d: &DistanceMatrix, bandwidth: Bandwidth, kernel: &K) -> Result<AffinityMatrix> {
    let epsilon = resolve_bandwidth(d, bandwidth)?;
    let n = d.n();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = kernel.eval(0.0, epsilon);
        for j in i + 1..n {
            let v = kernel.eval(d.get(i, j), epsilon);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(AffinityMatrix { n, data, epsilon })
}

/// Row-stochastic Markov matrix `P = D^-1 K` together with the degrees.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DiffusionOperator {
    n: usize,
    data: Vec<f64>,
    degrees: Vec<f64>,
}

impl DiffusionOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Row sums of the affinity matrix it was built from.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }
}

pub fn diffusion(k: &AffinityMatrix) -> Result<DiffusionOperator> {
    let n = k.n();
    let mut data = Vec::with_capacity(n * n);
    let mut degrees = Vec::with_capacity(n);
    for i in 0..n {
        let row = k.row(i);
        let s: f64 = row.iter().sum();
        if s.is_nan() || s <= 0.0 {
            return Err(Error::ZeroRow(i));
        }
        degrees.push(s);
        data.extend(row.iter().map(|v| v / s));
    }
    Ok(DiffusionOperator { n, data, degrees })
}
