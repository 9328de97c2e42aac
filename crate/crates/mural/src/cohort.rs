//! Cohort selection: conjunctions of column comparisons, or row-id files.
//!
//! ```text
//! expr      := '@' path | clause ( ('&' | 'and') clause )*
//! clause    := column op number | column 'missing' | column 'observed'
//! op        := '<' | '<=' | '>' | '>=' | '==' | '!='
//! ```
//!
//! Comparisons are evaluated on raw (unstandardized) values; discrete
//! columns compare their integer codes. A masked cell fails every
//! comparison. A row-id file lists zero-based row indices separated by
//! whitespace or commas; `#` starts a comment.

use std::fs;
use std::path::Path;

use mural_core::data::Dataset;

use crate::error::{MuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Op {
    fn holds(self, x: f64, y: f64) -> bool {
        match self {
            Op::Lt => x < y,
            Op::Le => x <= y,
            Op::Gt => x > y,
            Op::Ge => x >= y,
            Op::Eq => x == y,
            Op::Ne => x != y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Compare { column: usize, op: Op, literal: f64 },
    Missing(usize),
    Observed(usize),
}

impl Condition {
    pub fn matches(&self, d: &Dataset, row: usize) -> bool {
        match *self {
            Condition::Compare { column, op, literal } => d.value(row, column).is_some_and(|v| op.holds(v, literal)),
            Condition::Missing(c) => d.is_masked(row, c),
            Condition::Observed(c) => !d.is_masked(row, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cohort {
    Conditions(Vec<Condition>),
    Rows(Vec<usize>),
}

const OPS: [(&str, Op); 6] = [("<=", Op::Le), (">=", Op::Ge), ("==", Op::Eq), ("!=", Op::Ne), ("<", Op::Lt), (">", Op::Gt)];

fn split_conjunction(expr: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    for piece in expr.split('&') {
        let mut rest = piece;
        while let Some(at) = find_word(rest, "and") {
            parts.push(&rest[..at]);
            rest = &rest[at + 3..];
        }
        parts.push(rest);
    }
    parts
}

/// Byte offset of `word` as a whitespace-delimited token.
fn find_word(s: &str, word: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut from = 0;
    while let Some(i) = s[from..].find(word).map(|i| i + from) {
        let before = i == 0 || bytes[i - 1].is_ascii_whitespace();
        let after = i + word.len() == s.len() || bytes[i + word.len()].is_ascii_whitespace();
        if before && after && i > 0 {
            return Some(i);
        }
        from = i + word.len();
    }
    None
}

fn parse_clause(clause: &str, d: &Dataset, expr: &str) -> Result<Condition> {
    let err = |message: String| MuralError::Expr { expr: expr.to_string(), message };
    let clause = clause.trim();
    if clause.is_empty() {
        return Err(err("empty clause".into()));
    }
    let column = |name: &str| {
        let name = name.trim();
        d.schema().index_of(name).ok_or_else(|| err(format!("unknown column `{name}`")))
    };
    for (suffix, unary) in [("missing", true), ("observed", false)] {
        if let Some(head) = clause.strip_suffix(suffix) {
            if head.ends_with(char::is_whitespace) {
                let c = column(head)?;
                return Ok(if unary { Condition::Missing(c) } else { Condition::Observed(c) });
            }
        }
    }
    let (at, token, op) = OPS
        .iter()
        .filter_map(|&(tok, op)| clause.find(tok).map(|at| (at, tok, op)))
        .min_by_key(|&(at, tok, _)| (at, usize::MAX - tok.len()))
        .ok_or_else(|| err(format!("no operator in `{clause}`")))?;
    let column = column(&clause[..at])?;
    let text = clause[at + token.len()..].trim();
    let literal: f64 = text.parse().map_err(|_| err(format!("`{text}` is not a number")))?;
    if !literal.is_finite() {
        return Err(err(format!("`{text}` is not finite")));
    }
    Ok(Condition::Compare { column, op, literal })
}

fn parse_row_file(path: &Path, n_rows: usize, expr: &str) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| MuralError::io(path, e))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let r: usize =
                tok.parse().map_err(|_| MuralError::Expr { expr: expr.to_string(), message: format!("`{tok}` is not a row index") })?;
            if r >= n_rows {
                return Err(MuralError::Expr { expr: expr.to_string(), message: format!("row {r} out of range (n = {n_rows})") });
            }
            rows.push(r);
        }
    }
    rows.sort_unstable();
    rows.dedup();
    Ok(rows)
}

pub fn parse_cohort(expr: &str, d: &Dataset) -> Result<Cohort> {
    let trimmed = expr.trim();
    if let Some(path) = trimmed.strip_prefix('@') {
        return Ok(Cohort::Rows(parse_row_file(Path::new(path.trim()), d.n_rows(), expr)?));
    }
    let conditions = split_conjunction(trimmed).into_iter().map(|c| parse_clause(c, d, expr)).collect::<Result<_>>()?;
    Ok(Cohort::Conditions(conditions))
}

/// Sorted row indices selected by `expr`; an empty selection is an error.
pub fn select_rows(expr: &str, d: &Dataset) -> Result<Vec<usize>> {
    let rows = match parse_cohort(expr, d)? {
        Cohort::Rows(rows) => rows,
        Cohort::Conditions(cs) => (0..d.n_rows()).filter(|&r| cs.iter().all(|c| c.matches(d, r))).collect(),
    };
    if rows.is_empty() {
        return Err(MuralError::Expr { expr: expr.to_string(), message: "selects no rows".into() });
    }
    Ok(rows)
}

/// Number of rows present in both sorted selections.
pub fn overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
