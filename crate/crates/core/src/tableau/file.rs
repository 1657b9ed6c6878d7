//! TOML tableau files.
//!
//! ```toml
//! name = "erk43"
//! stages = 4
//! c = [0.0, 0.5, 0.5, 1.0]
//!
//! # a_ij with 1-based row > col; omitted entries are zero
//! [[a]]
//! row = 2
//! col = 1
//! terms = [{ weight = 0.5, phi = 1, scale = 0.5 }]
//!
//! # b_i with 1-based stage; omitted entries are zero
//! [[b]]
//! stage = 1
//! terms = [
//!     { weight = 1.0, phi = 1, scale = 1.0 },
//!     { weight = -3.0, phi = 2, scale = 1.0 },
//! ]
//! ```
//!
//! Each term means `weight · φ_phi(−scale · τA)`. Syntax errors carry the
//! TOML line and column; semantic errors name the line and field.

use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use super::{validate_term, MethodTableau, PhiCombo, PhiTerm};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableauDoc {
    name: String,
    stages: Spanned<usize>,
    c: Spanned<Vec<f64>>,
    #[serde(default)]
    a: Vec<Spanned<AEntry>>,
    #[serde(default)]
    b: Vec<Spanned<BEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AEntry {
    row: usize,
    col: usize,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BEntry {
    stage: usize,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    weight: f64,
    phi: i64,
    scale: f64,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    src: &'a str,
    origin: &'a Path,
}

impl Ctx<'_> {
    fn err(&self, offset: usize, field: &str, msg: impl std::fmt::Display) -> Error {
        Error::Parse {
            path: self.origin.to_path_buf(),
            message: format!("line {}, field `{field}`: {msg}", line_of(self.src, offset)),
        }
    }

    fn combo(&self, offset: usize, field: &str, terms: &[TermDoc]) -> Result<PhiCombo> {
        let mut out = Vec::with_capacity(terms.len());
        for (k, t) in terms.iter().enumerate() {
            let field = format!("{field}.terms[{k}]");
            if t.phi < 1 {
                return Err(self.err(offset, &field, format!("phi index {} must be >= 1", t.phi)));
            }
            let term = PhiTerm {
                weight: t.weight,
                phi_index: t.phi as usize,
                arg_scale: t.scale,
            };
            validate_term(&term).map_err(|m| self.err(offset, &field, m))?;
            out.push(term);
        }
        PhiCombo::new(out)
    }
}

/// Parses a tableau document; `origin` is only used in error messages.
pub fn parse_tableau(src: &str, origin: &Path) -> Result<MethodTableau> {
    let doc: TableauDoc = toml::from_str(src).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })?;
    let ctx = Ctx { src, origin };

    let s = *doc.stages.get_ref();
    if s == 0 {
        return Err(ctx.err(doc.stages.span().start, "stages", "must be >= 1"));
    }
    if doc.c.get_ref().len() != s {
        return Err(ctx.err(
            doc.c.span().start,
            "c",
            format!("expected {s} nodes, got {}", doc.c.get_ref().len()),
        ));
    }

    let mut a: Vec<Vec<Option<PhiCombo>>> = (0..s).map(|i| vec![None; i]).collect();
    for (k, entry) in doc.a.iter().enumerate() {
        let at = entry.span().start;
        let e = entry.get_ref();
        let field = format!("a[{k}]");
        if e.row < 1 || e.row > s || e.col < 1 || e.col >= e.row {
            return Err(ctx.err(
                at,
                &field,
                format!(
                    "(row {}, col {}) must satisfy 1 <= col < row <= {s}",
                    e.row, e.col
                ),
            ));
        }
        let slot = &mut a[e.row - 1][e.col - 1];
        if slot.is_some() {
            return Err(ctx.err(at, &field, format!("duplicate entry a_{}{}", e.row, e.col)));
        }
        *slot = Some(ctx.combo(at, &field, &e.terms)?);
    }

    let mut b: Vec<Option<PhiCombo>> = vec![None; s];
    for (k, entry) in doc.b.iter().enumerate() {
        let at = entry.span().start;
        let e = entry.get_ref();
        let field = format!("b[{k}]");
        if e.stage < 1 || e.stage > s {
            return Err(ctx.err(at, &field, format!("stage {} outside 1..={s}", e.stage)));
        }
        if b[e.stage - 1].is_some() {
            return Err(ctx.err(at, &field, format!("duplicate entry b_{}", e.stage)));
        }
        b[e.stage - 1] = Some(ctx.combo(at, &field, &e.terms)?);
    }

    let a = a
        .into_iter()
        .map(|row| row.into_iter().map(Option::unwrap_or_default).collect())
        .collect();
    let b = b.into_iter().map(Option::unwrap_or_default).collect();
    let c_at = doc.c.span().start;
    MethodTableau::new(doc.name, doc.c.into_inner(), a, b).map_err(|e| ctx.err(c_at, "c", e))
}

pub fn load_tableau(path: &Path) -> Result<MethodTableau> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tableau(&src, path)
}
