use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("column `{0}` has no observed values")]
    AllMasked(String),
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("row set is empty")]
    EmptyRows,
    #[error("residual variable set is empty")]
    EmptyResidual,
    #[error("partition does not cover the row set exactly")]
    BadPartition,
    #[error("no threshold satisfies the minimum leaf size")]
    Unsplittable,
    #[error("dataset has {rows} rows; at least {required} are needed")]
    TooFewRows { rows: usize, required: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("row has {got} values, schema has {expected} columns")]
    RowWidth { expected: usize, got: usize },
    #[error("matrix dimension mismatch: {0}")]
    Dimension(String),
    #[error("no nonzero neighbour distance to set an adaptive bandwidth")]
    DegenerateBandwidth,
    #[error("affinity row {0} sums to zero")]
    ZeroRow(usize),
    #[error("distributions are defined over different trees")]
    TreeMismatch,
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("support of {0} points exceeds the oracle limit")]
    SupportTooLarge(usize),
    #[error("mass vector invalid: {0}")]
    Mass(String),
    #[error("k = {k} is out of range for n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("need at least two clusters")]
    SingleCluster,
}
