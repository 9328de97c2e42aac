//! Plain-text schema files.
//!
//! One column per line as whitespace-separated `key=value` pairs:
//!
//! ```text
//! # comment
//! name=age kind=continuous missingness=auto missing_token=NA
//! name=gcs kind=ordinal:15
//! name=sex kind=binary missing_token=
//! name=site kind=categorical:4 missingness=mnar
//! ```
//!
//! `name` and `kind` are required. `missingness` is one of
//! `auto|mnar|random` (default `auto`); `missing_token` defaults to `NA`
//! and may be empty. Empty cells are always treated as missing.

use mural_core::data::{ColumnKind, ColumnSpec, MissingnessHint, Schema};

use crate::error::{MuralError, Result};

pub fn parse_kind(text: &str) -> Option<ColumnKind> {
    let (head, arg) = match text.split_once(':') {
        Some((h, a)) => (h, Some(a.parse::<u32>().ok()?)),
        None => (text, None),
    };
    match (head, arg) {
        ("continuous", None) => Some(ColumnKind::Continuous),
        ("binary", None) => Some(ColumnKind::Binary),
        ("ordinal", Some(levels)) => Some(ColumnKind::Ordinal { levels }),
        ("categorical", Some(cardinality)) => Some(ColumnKind::Categorical { cardinality }),
        _ => None,
    }
}

pub fn kind_label(kind: ColumnKind) -> String {
    match kind {
        ColumnKind::Continuous => "continuous".into(),
        ColumnKind::Binary => "binary".into(),
        ColumnKind::Ordinal { levels } => format!("ordinal:{levels}"),
        ColumnKind::Categorical { cardinality } => format!("categorical:{cardinality}"),
    }
}

fn hint_label(h: MissingnessHint) -> &'static str {
    match h {
        MissingnessHint::Auto => "auto",
        MissingnessHint::ForceMnar => "mnar",
        MissingnessHint::ForceRandom => "random",
    }
}

pub fn parse_schema(text: &str) -> Result<Schema> {
    let mut columns = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| MuralError::SchemaFile { line: line_no, message };
        let (mut name, mut kind, mut hint, mut token) = (None, None, MissingnessHint::Auto, String::from("NA"));
        for pair in line.split_whitespace() {
            let (k, v) = pair.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{pair}`")))?;
            match k {
                "name" => name = Some(v.to_string()),
                "kind" => kind = Some(parse_kind(v).ok_or_else(|| err(format!("unknown kind `{v}`")))?),
                "missingness" => {
                    hint = match v {
                        "auto" => MissingnessHint::Auto,
                        "mnar" => MissingnessHint::ForceMnar,
                        "random" => MissingnessHint::ForceRandom,
                        _ => return Err(err(format!("unknown missingness `{v}`"))),
                    }
                }
                "missing_token" => token = v.to_string(),
                _ => return Err(err(format!("unknown key `{k}`"))),
            }
        }
        let name = name.ok_or_else(|| err("missing `name`".into()))?;
        let kind = kind.ok_or_else(|| err("missing `kind`".into()))?;
        columns.push(ColumnSpec::new(name, kind).with_hint(hint).with_missing_token(token));
    }
    Ok(Schema::new(columns)?)
}

pub fn render_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for c in schema.columns() {
        out.push_str(&format!(
            "name={} kind={} missingness={} missing_token={}\n",
            c.name,
            kind_label(c.kind),
            hint_label(c.missingness),
            c.missing_token
        ));
    }
    out
}
