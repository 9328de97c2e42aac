//! Unsupervised tree construction.
//!
//! Each node draws its split variable at random and places the threshold
//! where the discretised entropy of the *other* variables drops the most.
//! Variables with masked cells split four ways: measured rows are thresholded
//! on the variable itself, missing rows on a randomly chosen fully observed
//! auxiliary variable. Binary variables split four ways in the same fashion,
//! with an auxiliary threshold under each value.

mod config;
mod entropy;
mod features;
mod split;
mod tree;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub use config::{EntropyMode, ForestConfig, ResidualCount};
pub use split::{SplitDecision, ThresholdChoice};
pub use tree::{MuralTree, Node, NodeKind, SplitSpec, Topology, TreeShape};

use crate::data::{Dataset, Schema, StandardizationParams};
use crate::{Error, Result};
use features::Features;

/// Leaf node index of every row in every tree.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LeafAssignments {
    n_rows: usize,
    per_tree: Vec<Vec<u32>>,
}

impl LeafAssignments {
    pub fn new(n_rows: usize, per_tree: Vec<Vec<u32>>) -> Result<Self> {
        if per_tree.iter().any(|t| t.len() != n_rows) {
            return Err(Error::Dimension(format!("assignment length differs from {n_rows} rows")));
        }
        Ok(LeafAssignments { n_rows, per_tree })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_trees(&self) -> usize {
        self.per_tree.len()
    }

    pub fn tree(&self, t: usize) -> &[u32] {
        &self.per_tree[t]
    }

    pub fn leaf(&self, tree: usize, row: usize) -> usize {
        self.per_tree[tree][row] as usize
    }

    /// Restriction to a subset of rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> LeafAssignments {
        LeafAssignments { n_rows: rows.len(), per_tree: self.per_tree.iter().map(|t| rows.iter().map(|&r| t[r]).collect()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MuralForest {
    trees: Vec<MuralTree>,
    config: ForestConfig,
    schema: Schema,
    standardization: Option<StandardizationParams>,
    assignments: LeafAssignments,
}

impl MuralForest {
    pub fn from_parts(
        trees: Vec<MuralTree>,
        config: ForestConfig,
        schema: Schema,
        standardization: Option<StandardizationParams>,
        assignments: LeafAssignments,
    ) -> Result<Self> {
        let forest = MuralForest { trees, config, schema, standardization, assignments };
        forest.validate()?;
        Ok(forest)
    }

    /// Structural consistency of every tree against the stored assignments.
    pub fn validate(&self) -> Result<()> {
        if self.assignments.n_trees() != self.trees.len() {
            return Err(Error::Dimension(format!("{} trees, {} assignment vectors", self.trees.len(), self.assignments.n_trees())));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            tree.validate(self.assignments.n_rows)?;
            for leaf in tree.leaf_indices() {
                if let NodeKind::Leaf { rows } = &tree.node(leaf).kind {
                    if rows.iter().any(|&r| self.assignments.leaf(t, r) != leaf) {
                        return Err(Error::Dataset(format!("tree {t}: leaf {leaf} disagrees with assignments")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn trees(&self) -> &[MuralTree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn standardization(&self) -> Option<&StandardizationParams> {
        self.standardization.as_ref()
    }

    pub fn set_standardization(&mut self, params: StandardizationParams) {
        self.standardization = Some(params);
    }

    pub fn training_assignments(&self) -> &LeafAssignments {
        &self.assignments
    }

    /// Applies the stored standardisation (if any) to raw data with the
    /// forest's schema.
    pub fn prepare(&self, raw: &Dataset) -> Result<Dataset> {
        self.check_schema(raw)?;
        match &self.standardization {
            Some(p) => p.apply(raw),
            None => Ok(raw.clone()),
        }
    }

    fn check_schema(&self, d: &Dataset) -> Result<()> {
        let same = d.schema().len() == self.schema.len()
            && d.schema().columns().iter().zip(self.schema.columns()).all(|(a, b)| a.name == b.name && a.kind == b.kind);
        if same {
            Ok(())
        } else {
            Err(Error::Schema("dataset columns do not match the forest schema".into()))
        }
    }

    /// Routes every row of an already prepared dataset through every tree.
    pub fn assign(&self, d: &Dataset) -> Result<LeafAssignments> {
        self.check_schema(d)?;
        let features = Features::new(d);
        let per_tree =
            self.trees.iter().map(|tree| (0..d.n_rows()).map(|r| tree.route_with(|v| features.get(r, v)) as u32).collect()).collect();
        Ok(LeafAssignments { n_rows: d.n_rows(), per_tree })
    }
}

/// Per-tree generator: the forest seed with the tree index as stream id.
pub fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

#[allow(clippy::too_many_arguments)]
fn grow<R: Rng + ?Sized>(
    features: &Features,
    rows: Vec<usize>,
    depth: usize,
    parent: Option<usize>,
    edge_weight: f64,
    path: &mut Vec<usize>,
    cfg: &ForestConfig,
    rng: &mut R,
    nodes: &mut Vec<Node>,
) -> usize {
    let at = nodes.len();
    let n_rows = rows.len();
    nodes.push(Node { parent, edge_weight, depth, n_rows, kind: NodeKind::Leaf { rows: Vec::new() } });
    match split::decide(features, &rows, depth, path, cfg, rng) {
        SplitDecision::Leaf => {
            let mut rows = rows;
            rows.sort_unstable();
            nodes[at].kind = NodeKind::Leaf { rows };
        }
        SplitDecision::Split { spec, children, .. } => {
            drop(rows);
            let weight = if spec.is_four_way() { cfg.four_way_edge_weight } else { 1.0 };
            let mark = path.len();
            path.push(spec.var());
            path.extend(spec.aux_var());
            let ids = children.into_iter().map(|c| grow(features, c, depth + 1, Some(at), weight, path, cfg, rng, nodes)).collect();
            path.truncate(mark);
            nodes[at].kind = NodeKind::Internal { split: spec, children: ids };
        }
    }
    at
}

fn build_tree(features: &Features, cfg: &ForestConfig, index: usize) -> MuralTree {
    let mut rng = tree_rng(cfg.seed, index);
    let mut nodes = Vec::new();
    let mut path = Vec::new();
    let rows = (0..features.n_rows()).collect();
    grow(features, rows, 0, None, 0.0, &mut path, cfg, &mut rng, &mut nodes);
    MuralTree::from_nodes(nodes)
}

/// Fits `config.n_trees` trees on all rows of `d`. Variables that still have
/// masked cells are split with the four-way missing/measured rule.
///
/// The output depends only on `(d, config)`; trees are built in parallel
/// when the `std` feature is enabled.
pub fn fit(d: &Dataset, config: &ForestConfig) -> Result<MuralForest> {
    config.validate()?;
    let required = 2 * config.min_leaf;
    if d.n_rows() < required {
        return Err(Error::TooFewRows { rows: d.n_rows(), required });
    }
    let features = Features::new(d);

    #[cfg(feature = "std")]
    let trees: Vec<MuralTree> = {
        use rayon::prelude::*;
        (0..config.n_trees).into_par_iter().map(|t| build_tree(&features, config, t)).collect()
    };
    #[cfg(not(feature = "std"))]
    let trees: Vec<MuralTree> = (0..config.n_trees).map(|t| build_tree(&features, config, t)).collect();

    let per_tree = trees
        .iter()
        .map(|tree| {
            let mut leaf_of = vec![0u32; d.n_rows()];
            for leaf in tree.leaf_indices() {
                if let NodeKind::Leaf { rows } = &tree.node(leaf).kind {
                    for &r in rows {
                        leaf_of[r] = leaf as u32;
                    }
                }
            }
            leaf_of
        })
        .collect();
    Ok(MuralForest {
        trees,
        config: config.clone(),
        schema: d.schema().clone(),
        standardization: None,
        assignments: LeafAssignments { n_rows: d.n_rows(), per_tree },
    })
}

fn check_rows(d: &Dataset, rows: &[usize]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= d.n_rows()) {
        return Err(Error::Dimension(format!("row {r} out of range")));
    }
    Ok(())
}

/// Residual-entropy gain (bits) of splitting `rows` into `partition`.
///
/// Continuous residual variables are binned once over `rows` with Sturges'
/// bin count; masked cells form their own class.
pub fn residual_info_gain<R: Rng + ?Sized>(
    d: &Dataset,
    rows: &[usize],
    partition: &[Vec<usize>],
    residual_vars: &[usize],
    mode: EntropyMode,
    rng: &mut R,
) -> Result<f64> {
    check_rows(d, rows)?;
    if residual_vars.is_empty() {
        return Err(Error::EmptyResidual);
    }
    if residual_vars.iter().any(|&v| v >= d.n_cols()) {
        return Err(Error::Dimension("residual variable out of range".into()));
    }
    let mut slot = vec![usize::MAX; d.n_rows()];
    for (p, &r) in rows.iter().enumerate() {
        if slot[r] != usize::MAX {
            return Err(Error::BadPartition);
        }
        slot[r] = p;
    }
    let mut group = vec![usize::MAX; rows.len()];
    for (g, part) in partition.iter().enumerate() {
        for &r in part {
            let p = *slot.get(r).ok_or(Error::BadPartition)?;
            if p == usize::MAX || group[p] != usize::MAX {
                return Err(Error::BadPartition);
            }
            group[p] = g;
        }
    }
    if group.contains(&usize::MAX) {
        return Err(Error::BadPartition);
    }
    let features = Features::new(d);
    let targets = entropy::encode(&features, rows, residual_vars, mode, crate::data::BinningScheme::EqualWidth, rng);
    Ok(entropy::partition_gain(&targets, &group, partition.len()))
}

/// Best threshold on `var` over `rows`: the midpoint between consecutive
/// distinct observed values that maximises the residual gain with both sides
/// holding at least `config.min_leaf` rows. Ties go to the smaller threshold.
pub fn best_threshold<R: Rng + ?Sized>(
    d: &Dataset,
    rows: &[usize],
    var: usize,
    residual_vars: &[usize],
    config: &ForestConfig,
    rng: &mut R,
) -> Result<ThresholdChoice> {
    check_rows(d, rows)?;
    if var >= d.n_cols() || !d.schema().kind(var).is_ordered() {
        return Err(Error::Config(format!("variable {var} cannot be thresholded")));
    }
    let features = Features::new(d);
    split::threshold_search(&features, rows, var, residual_vars, config, rng).map(|t| t.choice)
}

/// One node's split decision, as taken during fitting.
pub fn split_node<R: Rng + ?Sized>(d: &Dataset, rows: &[usize], depth: usize, config: &ForestConfig, rng: &mut R) -> Result<SplitDecision> {
    check_rows(d, rows)?;
    config.validate()?;
    let features = Features::new(d);
    Ok(split::decide(&features, rows, depth, &[], config, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnKind, ColumnSpec, Schema};
    use alloc::string::ToString;

    fn continuous(cols: Vec<Vec<Option<f64>>>) -> Dataset {
        let specs = (0..cols.len()).map(|j| ColumnSpec::new(format!("x{j}"), ColumnKind::Continuous)).collect();
        Dataset::new(Schema::new(specs).unwrap(), cols.into_iter().map(Column::continuous).collect()).unwrap()
    }

    fn cfg(min_leaf: usize) -> ForestConfig {
        ForestConfig { min_leaf, n_trees: 1, ..ForestConfig::default() }
    }

    #[test]
    fn gain_examples() {
        let d = Dataset::new(
            Schema::new(vec![ColumnSpec::new("a", ColumnKind::Binary), ColumnSpec::new("c", ColumnKind::Continuous)]).unwrap(),
            vec![Column::discrete(vec![Some(0), Some(0), Some(1), Some(1)]), Column::continuous(vec![Some(3.0); 4])],
        )
        .unwrap();
        let rng = &mut tree_rng(0, 0);
        let rows = [0, 1, 2, 3];
        let sep = [vec![0, 1], vec![2, 3]];
        let mix = [vec![0, 2], vec![1, 3]];
        assert_eq!(residual_info_gain(&d, &rows, &sep, &[0], EntropyMode::MarginalSum, rng).unwrap(), 1.0);
        assert_eq!(residual_info_gain(&d, &rows, &mix, &[0], EntropyMode::MarginalSum, rng).unwrap(), 0.0);
        assert_eq!(residual_info_gain(&d, &rows, &sep, &[1], EntropyMode::MarginalSum, rng).unwrap(), 0.0);
        assert_eq!(residual_info_gain(&d, &[], &[], &[1], EntropyMode::MarginalSum, rng), Err(Error::EmptyRows));
        assert_eq!(residual_info_gain(&d, &rows, &sep, &[], EntropyMode::MarginalSum, rng), Err(Error::EmptyResidual));
        let overlap = [vec![0, 1, 2], vec![2, 3]];
        assert_eq!(residual_info_gain(&d, &rows, &overlap, &[0], EntropyMode::MarginalSum, rng), Err(Error::BadPartition));
    }

    #[test]
    fn threshold_between_separated_groups() {
        // Residual variable flips exactly between 2 and 10.
        let d = continuous(vec![vec![Some(1.0), Some(2.0), Some(10.0), Some(11.0)], vec![Some(0.0), Some(0.0), Some(5.0), Some(5.0)]]);
        let c = best_threshold(&d, &[0, 1, 2, 3], 0, &[1], &cfg(1), &mut tree_rng(0, 0)).unwrap();
        assert!(c.threshold > 2.0 && c.threshold < 10.0);
        assert!((c.gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_variable_is_unsplittable() {
        let d = continuous(vec![vec![Some(4.0); 10], (0..10).map(|i| Some(i as f64)).collect()]);
        let rows: Vec<usize> = (0..10).collect();
        assert_eq!(best_threshold(&d, &rows, 0, &[1], &cfg(2), &mut tree_rng(0, 0)), Err(Error::Unsplittable));
    }

    #[test]
    fn leaf_at_max_depth() {
        let d = continuous(vec![(0..20).map(|i| Some(i as f64)).collect(), (0..20).map(|i| Some((i % 3) as f64)).collect()]);
        let rows: Vec<usize> = (0..20).collect();
        let c = ForestConfig { max_depth: 2, min_leaf: 2, ..ForestConfig::default() };
        assert_eq!(split_node(&d, &rows, 2, &c, &mut tree_rng(0, 0)).unwrap(), SplitDecision::Leaf);
        assert!(matches!(split_node(&d, &rows, 1, &c, &mut tree_rng(0, 0)).unwrap(), SplitDecision::Split { .. }));
    }

    #[test]
    fn restricted_mnar_variable_alone_gives_leaf() {
        // x0 has masked cells, x1 is constant: nothing else to split on.
        let x0 = (0..20).map(|i| if i % 4 == 0 { None } else { Some(i as f64) }).collect();
        let d = continuous(vec![x0, vec![Some(1.0); 20]]);
        let rows: Vec<usize> = (0..20).collect();
        let c = ForestConfig { min_leaf: 2, mnar_restrict_levels: 3, ..ForestConfig::default() };
        assert_eq!(split_node(&d, &rows, 0, &c, &mut tree_rng(0, 0)).unwrap(), SplitDecision::Leaf);
    }

    #[test]
    fn mnar_four_way_partitions_rows() {
        // 6 measured + 6 missing rows in x0; x1, x2 fully observed.
        let x0 = (0..12).map(|i| if i < 6 { Some(i as f64) } else { None }).collect();
        let x1 = (0..12).map(|i| Some(((i * 7) % 12) as f64)).collect();
        let x2 = (0..12).map(|i| Some((i / 3) as f64)).collect();
        let d = continuous(vec![x0, x1, x2]);
        let rows: Vec<usize> = (0..12).collect();
        let c = ForestConfig { min_leaf: 2, mnar_restrict_levels: 0, n_candidate_vars: 3, ..ForestConfig::default() };
        // Search seeds until the MNAR variable is the chosen split.
        let mut hit = false;
        for seed in 0..64 {
            let decision = split_node(&d, &rows, 0, &ForestConfig { seed, ..c.clone() }, &mut tree_rng(seed, 0)).unwrap();
            if let SplitDecision::Split { spec: SplitSpec::MnarFourWay { var, aux_var, .. }, children, .. } = decision {
                assert_eq!(var, 0);
                assert_ne!(aux_var, 0);
                assert_eq!(children.len(), 4);
                assert!(children.iter().all(|c| c.len() >= 2));
                let mut all: Vec<usize> = children.concat();
                all.sort_unstable();
                assert_eq!(all, rows);
                assert!(children[..2].concat().iter().all(|&r| r < 6));
                assert!(children[2..].concat().iter().all(|&r| r >= 6));
                hit = true;
                break;
            }
        }
        assert!(hit, "no seed produced an MNAR split");
    }

    #[test]
    fn binary_variable_splits_four_ways() {
        let b = (0..40).map(|i| Some((i % 2) as u32)).collect();
        let x = (0..40).map(|i| Some(i as f64)).collect();
        let y = (0..40).map(|i| Some(((i / 10) % 2) as f64)).collect();
        let d = Dataset::new(
            Schema::new(vec![
                ColumnSpec::new("b", ColumnKind::Binary),
                ColumnSpec::new("x", ColumnKind::Continuous),
                ColumnSpec::new("y", ColumnKind::Continuous),
            ])
            .unwrap(),
            vec![Column::discrete(b), Column::continuous(x), Column::continuous(y)],
        )
        .unwrap();
        let forest = fit(&d, &ForestConfig { n_trees: 20, min_leaf: 3, ..ForestConfig::default() }).unwrap();
        let four = forest
            .trees()
            .iter()
            .flat_map(|t| t.nodes())
            .filter_map(|n| n.split())
            .filter(|s| matches!(s, SplitSpec::BinaryFourWay { .. }))
            .count();
        assert!(four > 0);
        forest.validate().unwrap();
    }

    #[test]
    fn categorical_one_vs_rest() {
        let cat = (0..30).map(|i| Some((i % 3) as u32)).collect();
        let y = (0..30).map(|i| Some(if i % 3 == 2 { 10.0 } else { 0.0 })).collect();
        let d = Dataset::new(
            Schema::new(vec![
                ColumnSpec::new("c", ColumnKind::Categorical { cardinality: 3 }),
                ColumnSpec::new("y", ColumnKind::Continuous),
            ])
            .unwrap(),
            vec![Column::discrete(cat), Column::continuous(y)],
        )
        .unwrap();
        let rows: Vec<usize> = (0..30).collect();
        let c = ForestConfig { min_leaf: 2, n_candidate_vars: 2, ..ForestConfig::default() };
        let decision = split_node(&d, &rows, 0, &c, &mut tree_rng(1, 0)).unwrap();
        match decision {
            SplitDecision::Split { spec: SplitSpec::Category { var: 0, category }, gain, .. } => {
                assert_eq!(category, 2);
                assert!(gain > 0.9);
            }
            SplitDecision::Split { spec: SplitSpec::Continuous { var: 1, .. }, .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_leaf_forest() {
        let d = continuous(vec![(0..12).map(|i| Some(i as f64)).collect()]);
        let f = fit(&d, &ForestConfig { n_trees: 1, max_depth: 0, ..ForestConfig::default() }).unwrap();
        assert_eq!(f.trees()[0].len(), 1);
        assert_eq!(f.trees()[0].node(0).n_rows, 12);
        let tiny = continuous(vec![(0..9).map(|i| Some(i as f64)).collect()]);
        assert_eq!(fit(&tiny, &ForestConfig::default()).unwrap_err(), Error::TooFewRows { rows: 9, required: 10 });
    }

    #[test]
    fn routing_reproduces_training_leaves() {
        let x0: Vec<Option<f64>> = (0..200).map(|i| if i % 7 == 0 { None } else { Some((i as f64).sin()) }).collect();
        let x1 = (0..200).map(|i| Some((i as f64 * 0.37).cos())).collect();
        let x2 = (0..200).map(|i| Some(i as f64)).collect();
        let d = continuous(vec![x0, x1, x2]);
        let f = fit(&d, &ForestConfig { n_trees: 8, mnar_restrict_levels: 1, ..ForestConfig::default() }).unwrap();
        assert_eq!(&f.assign(&d).unwrap(), f.training_assignments());
        f.validate().unwrap();
        let _ = f.schema().name(0).to_string();
    }

    #[test]
    fn forest_is_deterministic() {
        let x0 = (0..100).map(|i| Some(((i * 37) % 101) as f64)).collect();
        let x1 = (0..100).map(|i| Some(((i * 53) % 97) as f64)).collect();
        let d = continuous(vec![x0, x1]);
        let c = ForestConfig { n_trees: 5, seed: 9, ..ForestConfig::default() };
        assert_eq!(fit(&d, &c).unwrap(), fit(&d, &c).unwrap());
        assert_ne!(fit(&d, &c).unwrap(), fit(&d, &ForestConfig { seed: 10, ..c }).unwrap());
    }
}
