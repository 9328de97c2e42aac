use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::BinningScheme;
use crate::{Error, Result};

/// How the entropy of the residual variables is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum EntropyMode {
    /// Sum of per-variable (marginal) gains.
    MarginalSum,
    /// Gain on the joint distribution of `dims` residual variables drawn at
    /// random per evaluation.
    JointSubset { dims: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ResidualCount {
    All,
    /// Random subset of this size, redrawn at every node.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ForestConfig {
    pub n_trees: usize,
    /// A node at this depth is always a leaf; 0 gives single-leaf trees.
    pub max_depth: usize,
    /// Splittable variables evaluated per node; the best gain wins.
    pub n_candidate_vars: usize,
    pub entropy_mode: EntropyMode,
    pub n_residual_vars: ResidualCount,
    /// Nodes shallower than this never split on a variable with missing cells.
    pub mnar_restrict_levels: usize,
    pub min_leaf: usize,
    pub max_threshold_candidates: usize,
    pub seed: u64,
    pub binning: BinningScheme,
    /// Weight of each edge below a four-way node. 2.0 keeps the length of the
    /// unflattened two-level path.
    pub four_way_edge_weight: f64,
    /// Drop variables split on by ancestors from the residual set.
    pub exclude_path_vars: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 10,
            n_candidate_vars: 1,
            entropy_mode: EntropyMode::MarginalSum,
            n_residual_vars: ResidualCount::All,
            mnar_restrict_levels: 3,
            min_leaf: 5,
            max_threshold_candidates: 64,
            seed: 0,
            binning: BinningScheme::EqualWidth,
            four_way_edge_weight: 1.0,
            exclude_path_vars: false,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_trees", self.n_trees),
            ("n_candidate_vars", self.n_candidate_vars),
            ("min_leaf", self.min_leaf),
            ("max_threshold_candidates", self.max_threshold_candidates),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if let EntropyMode::JointSubset { dims: 0 } = self.entropy_mode {
            return Err(Error::Config("entropy dims must be at least 1".into()));
        }
        if let ResidualCount::Count(0) = self.n_residual_vars {
            return Err(Error::Config("n_residual_vars must be at least 1".into()));
        }
        if !(self.four_way_edge_weight.is_finite() && self.four_way_edge_weight > 0.0) {
            return Err(Error::Config("four_way_edge_weight must be positive".into()));
        }
        Ok(())
    }
}
