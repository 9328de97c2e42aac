//! Tree-sliced Wasserstein distances between row cohorts, an exact
//! min-cost-flow oracle, and importance attribution over split variables.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::forest::{LeafAssignments, MuralForest, MuralTree, TreeShape};
use crate::{Error, Result};

/// Subtree mass `D(t, mu)` for every node of one tree.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CohortDistribution {
    masses: Vec<f64>,
}

impl CohortDistribution {
    /// Wraps node masses; the root must carry mass 1 and every internal
    /// node the sum of its children.
    pub fn from_masses<T: TreeShape + ?Sized>(tree: &T, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != tree.node_count() {
            return Err(Error::TreeMismatch);
        }
        if masses.iter().any(|m| !(0.0..=1.0 + 1e-12).contains(m)) || (masses[0] - 1.0).abs() > 1e-9 {
            return Err(Error::Mass("node masses must lie in [0, 1] with root mass 1".into()));
        }
        for n in 0..masses.len() {
            let ch = tree.children(n);
            if !ch.is_empty() {
                let s: f64 = ch.iter().map(|&c| masses[c]).sum();
                if (s - masses[n]).abs() > 1e-9 {
                    return Err(Error::Mass(format!("node {n}: children sum to {s}, node holds {}", masses[n])));
                }
            }
        }
        Ok(CohortDistribution { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, node: usize) -> f64 {
        self.masses[node]
    }
}

/// Uniform mass over the given leaves (one entry per cohort row), summed
/// bottom-up.
pub fn cohort_distribution<T: TreeShape + ?Sized>(tree: &T, leaves: &[usize]) -> Result<CohortDistribution> {
    if leaves.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let nn = tree.node_count();
    let mut counts = vec![0u64; nn];
    for &l in leaves {
        if l >= nn || !tree.is_leaf(l) {
            return Err(Error::Dimension(format!("node {l} is not a leaf")));
        }
        counts[l] += 1;
    }
    for n in (1..nn).rev() {
        let p = tree.parent(n).expect("non-root");
        counts[p] += counts[n];
    }
    let m = leaves.len() as f64;
    Ok(CohortDistribution { masses: counts.iter().map(|&c| c as f64 / m).collect() })
}

/// `sum over non-root t of w_t * |D(t, mu) - D(t, nu)|`.
pub fn tree_wasserstein<T: TreeShape + ?Sized>(tree: &T, mu: &CohortDistribution, nu: &CohortDistribution) -> Result<f64> {
    let nn = tree.node_count();
    if mu.masses.len() != nn || nu.masses.len() != nn {
        return Err(Error::TreeMismatch);
    }
    Ok((1..nn).map(|t| tree.edge_weight(t) * (mu.masses[t] - nu.masses[t]).abs()).sum())
}

/// Per-tree distributions of one cohort over a whole forest.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestCohort {
    per_tree: Vec<CohortDistribution>,
    size: usize,
}

impl ForestCohort {
    pub fn new(forest: &MuralForest, assignments: &LeafAssignments, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyCohort);
        }
        if assignments.n_trees() != forest.trees().len() {
            return Err(Error::TreeMismatch);
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= assignments.n_rows()) {
            return Err(Error::Dimension(format!("row {r} out of range")));
        }
        let per_tree = forest
            .trees()
            .iter()
            .enumerate()
            .map(|(t, tree)| {
                let leaves: Vec<usize> = rows.iter().map(|&r| assignments.leaf(t, r)).collect();
                cohort_distribution(tree, &leaves)
            })
            .collect::<Result<_>>()?;
        Ok(ForestCohort { per_tree, size: rows.len() })
    }

    pub fn tree(&self, t: usize) -> &CohortDistribution {
        &self.per_tree[t]
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Tswd {
    pub mean: f64,
    /// Population standard deviation over trees.
    pub std_dev: f64,
    pub per_tree: Vec<f64>,
}

pub fn per_tree_wasserstein(forest: &MuralForest, a: &ForestCohort, b: &ForestCohort) -> Result<Vec<f64>> {
    let trees = forest.trees();
    if a.per_tree.len() != trees.len() || b.per_tree.len() != trees.len() {
        return Err(Error::TreeMismatch);
    }
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        trees.par_iter().enumerate().map(|(t, tree)| tree_wasserstein(tree, a.tree(t), b.tree(t))).collect()
    }
    #[cfg(not(feature = "std"))]
    trees.iter().enumerate().map(|(t, tree)| tree_wasserstein(tree, a.tree(t), b.tree(t))).collect()
}

/// Mean and spread of the per-tree Wasserstein distance between two cohorts
/// (row indices into `assignments`).
pub fn forest_tswd(forest: &MuralForest, assignments: &LeafAssignments, cohort_a: &[usize], cohort_b: &[usize]) -> Result<Tswd> {
    let a = ForestCohort::new(forest, assignments, cohort_a)?;
    let b = ForestCohort::new(forest, assignments, cohort_b)?;
    let per_tree = per_tree_wasserstein(forest, &a, &b)?;
    let k = per_tree.len() as f64;
    let mean = per_tree.iter().sum::<f64>() / k;
    let var = per_tree.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / k;
    Ok(Tswd { mean, std_dev: libm::sqrt(var), per_tree })
}

/// Largest support accepted by [`brute_force_emd`].
pub const EMD_MAX_SUPPORT: usize = 64;

const FLOW_EPS: f64 = 1e-15;

/// Exact 1-Wasserstein distance under the ground metric `d` by successive
/// shortest paths on the bipartite transport network.
pub fn brute_force_emd(d: &DistanceMatrix, mu: &[f64], nu: &[f64]) -> Result<f64> {
    let n = d.n();
    if n > EMD_MAX_SUPPORT {
        return Err(Error::SupportTooLarge(n));
    }
    if mu.len() != n || nu.len() != n {
        return Err(Error::Dimension(format!("{n} support points, masses of length {} and {}", mu.len(), nu.len())));
    }
    for m in [mu, nu] {
        let s: f64 = m.iter().sum();
        if m.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::Mass(format!("masses must be non-negative and sum to 1 (got {s})")));
        }
    }
    // Mass shared at a point stays put at zero cost.
    let mut supply: Vec<f64> = mu.iter().zip(nu).map(|(a, b)| (a - b).max(0.0)).collect();
    let mut demand: Vec<f64> = mu.iter().zip(nu).map(|(a, b)| (b - a).max(0.0)).collect();
    let mut flow = vec![0.0f64; n * n];
    // Nodes 0..n are sources, n..2n sinks. Dijkstra on reduced costs with
    // node potentials; clamping at zero keeps the predecessor graph a tree.
    let mut potential = vec![0.0f64; 2 * n];
    let mut dist = vec![0.0f64; 2 * n];
    let mut pred = vec![usize::MAX; 2 * n];
    let mut done = vec![false; 2 * n];
    let mut rounds = 0usize;
    while supply.iter().any(|&s| s > FLOW_EPS) && demand.iter().any(|&s| s > FLOW_EPS) {
        rounds += 1;
        if rounds > 4 * n * n + 16 {
            return Err(Error::Mass("transport solver failed to converge".into()));
        }
        dist.iter_mut().for_each(|x| *x = f64::INFINITY);
        pred.iter_mut().for_each(|x| *x = usize::MAX);
        done.iter_mut().for_each(|x| *x = false);
        for i in 0..n {
            if supply[i] > FLOW_EPS {
                dist[i] = 0.0;
            }
        }
        loop {
            let next = (0..2 * n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
            let Some(u) = next else { break };
            done[u] = true;
            if u < n {
                for j in 0..n {
                    let v = n + j;
                    let rc = (d.get(u, j) + potential[u] - potential[v]).max(0.0);
                    if !done[v] && dist[u] + rc < dist[v] {
                        dist[v] = dist[u] + rc;
                        pred[v] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if flow[i * n + j] > FLOW_EPS {
                        let rc = (potential[u] - potential[i] - d.get(i, j)).max(0.0);
                        if !done[i] && dist[u] + rc < dist[i] {
                            dist[i] = dist[u] + rc;
                            pred[i] = u;
                        }
                    }
                }
            }
        }
        let sink = (0..n).filter(|&j| demand[j] > FLOW_EPS && dist[n + j].is_finite()).min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]));
        let Some(sink) = sink else { break };
        let reach = dist.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max);
        for v in 0..2 * n {
            potential[v] += if dist[v].is_finite() { dist[v] } else { reach };
        }
        // Walk back to the originating source, collecting the bottleneck.
        let mut path = Vec::new();
        let mut at = n + sink;
        let mut bottleneck = demand[sink];
        while pred[at] != usize::MAX {
            let p = pred[at];
            if at < n {
                bottleneck = bottleneck.min(flow[at * n + (p - n)]);
            }
            path.push((p, at));
            at = p;
        }
        bottleneck = bottleneck.min(supply[at]);
        supply[at] -= bottleneck;
        demand[sink] -= bottleneck;
        for (from, to) in path {
            if from < n {
                flow[from * n + (to - n)] += bottleneck;
            } else {
                flow[to * n + (from - n)] -= bottleneck;
            }
        }
    }
    let mut cost = 0.0;
    for i in 0..n {
        for j in 0..n {
            cost += flow[i * n + j] * d.get(i, j);
        }
    }
    Ok(cost)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ImportanceEntry {
    pub var: usize,
    pub name: String,
    /// Share of the total contribution; all zero when degenerate.
    pub share: f64,
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeatureImportanceReport {
    /// Sorted by share, descending; ties by variable index.
    pub entries: Vec<ImportanceEntry>,
    /// Set when no node separates the cohorts, so nothing is normalised.
    pub degenerate: bool,
}

impl FeatureImportanceReport {
    pub fn share(&self, var: usize) -> f64 {
        self.entries.iter().find(|e| e.var == var).map_or(0.0, |e| e.share)
    }
}

/// Adds every node's `w_t * |D(t, mu) - D(t, nu)|` to the variable credited
/// by its parent's split.
pub fn tree_contributions(tree: &MuralTree, mu: &CohortDistribution, nu: &CohortDistribution, totals: &mut [f64]) -> Result<()> {
    let nn = tree.len();
    if mu.masses.len() != nn || nu.masses.len() != nn {
        return Err(Error::TreeMismatch);
    }
    for p in 0..nn {
        let node = tree.node(p);
        if let Some(split) = node.split() {
            for (pos, &c) in node.children().iter().enumerate() {
                let var = split.credited_var(pos);
                totals[var] += tree.edge_weight(c) * (mu.masses[c] - nu.masses[c]).abs();
            }
        }
    }
    Ok(())
}

pub fn feature_importance(
    forest: &MuralForest,
    assignments: &LeafAssignments,
    cohort_a: &[usize],
    cohort_b: &[usize],
) -> Result<FeatureImportanceReport> {
    let a = ForestCohort::new(forest, assignments, cohort_a)?;
    let b = ForestCohort::new(forest, assignments, cohort_b)?;
    let schema = forest.schema();
    let mut totals = vec![0.0; schema.len()];
    for (t, tree) in forest.trees().iter().enumerate() {
        tree_contributions(tree, a.tree(t), b.tree(t), &mut totals)?;
    }
    Ok(importance_report(&totals, |v| String::from(schema.name(v))))
}

/// Normalises raw per-variable totals into a sorted report.
pub fn importance_report(totals: &[f64], name: impl Fn(usize) -> String) -> FeatureImportanceReport {
    let sum: f64 = totals.iter().sum();
    let degenerate = sum.is_nan() || sum <= 0.0;
    let mut entries: Vec<ImportanceEntry> = totals
        .iter()
        .enumerate()
        .map(|(var, &raw)| ImportanceEntry { var, name: name(var), share: if degenerate { 0.0 } else { raw / sum }, raw })
        .collect();
    entries.sort_by(|x, y| y.share.total_cmp(&x.share).then(x.var.cmp(&y.var)));
    FeatureImportanceReport { entries, degenerate }
}
