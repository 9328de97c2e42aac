use alloc::vec::Vec;

use crate::data::{ColumnKind, Dataset};

/// Column-major numeric copy of a dataset with `NaN` marking masked cells.
#[derive(Debug, Clone)]
pub(crate) struct Features {
    cols: Vec<Vec<f64>>,
    kinds: Vec<ColumnKind>,
    has_missing: Vec<bool>,
    n_rows: usize,
}

impl Features {
    pub(crate) fn new(d: &Dataset) -> Self {
        let cols: Vec<Vec<f64>> = d.columns().iter().map(|c| (0..d.n_rows()).map(|i| c.get(i).unwrap_or(f64::NAN)).collect()).collect();
        let has_missing = d.columns().iter().map(|c| c.mask().any()).collect();
        let kinds = d.schema().columns().iter().map(|c| c.kind).collect();
        Features { cols, kinds, has_missing, n_rows: d.n_rows() }
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub(crate) fn n_cols(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub(crate) fn column(&self, var: usize) -> &[f64] {
        &self.cols[var]
    }

    #[inline]
    pub(crate) fn get(&self, row: usize, var: usize) -> Option<f64> {
        let v = self.cols[var][row];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub(crate) fn kind(&self, var: usize) -> ColumnKind {
        self.kinds[var]
    }

    /// Variables with any masked cell are treated as MNAR by the splitter.
    pub(crate) fn is_mnar(&self, var: usize) -> bool {
        self.has_missing[var]
    }
}
