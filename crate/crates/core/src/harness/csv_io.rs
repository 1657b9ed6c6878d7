//! CSV form of a convergence report:
//!
//! ```text
//! tau,err_l1,err_l2,err_linf
//! 1.2500000000000000e-1,...
//! # fitted_order_l1=...,l2=...,linf=...
//! ```
//!
//! Values use 17 significant digits so they read back bit-identically.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problems::Norm;

use super::{ConvergenceReport, ConvergenceRow};

const FITTED_PREFIX: &str = "# fitted_order";

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".to_string()
    }
}

pub fn write_csv<W: Write>(report: &ConvergenceReport, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("tau".to_string())
        .chain(report.norms.iter().map(|n| format!("err_{n}")))
        .collect();
    w.write_record(&header)?;
    for row in &report.rows {
        w.write_record(
            std::iter::once(fmt_f64(row.tau)).chain(row.errors.iter().map(|&e| fmt_f64(e))),
        )?;
    }
    let mut out = w.into_inner().map_err(|e| e.into_error())?;

    let fitted: Vec<String> = report
        .norms
        .iter()
        .zip(&report.fitted_orders)
        .enumerate()
        .map(|(k, (n, o))| {
            let value = o.map_or_else(|| "nan".to_string(), fmt_f64);
            if k == 0 {
                format!("_{n}={value}")
            } else {
                format!("{n}={value}")
            }
        })
        .collect();
    writeln!(out, "{FITTED_PREFIX}{}", fitted.join(","))
}

/// Writes the report to `path`.
pub fn emit_csv(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(report, &mut buf).map_err(|e| Error::io(path, e))?;
    buf.flush().map_err(|e| Error::io(path, e))
}

/// The data content of an emitted CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub norms: Vec<Norm>,
    pub rows: Vec<ConvergenceRow>,
    pub fitted_orders: Vec<Option<f64>>,
}

impl From<&ConvergenceReport> for CsvTable {
    fn from(r: &ConvergenceReport) -> Self {
        Self {
            norms: r.norms.clone(),
            rows: r.rows.clone(),
            fitted_orders: r.fitted_orders.clone(),
        }
    }
}

pub fn parse_csv(text: &str, origin: &Path) -> Result<CsvTable> {
    let perr = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let header = rdr.headers().map_err(|e| perr(e.to_string()))?.clone();
    if header.get(0) != Some("tau") {
        return Err(perr("first column must be `tau`".into()));
    }
    let norms = header
        .iter()
        .skip(1)
        .map(|h| {
            h.strip_prefix("err_")
                .ok_or_else(|| perr(format!("unexpected column `{h}`")))?
                .parse::<Norm>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut vals = rec.iter().map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| perr(format!("line {line}: `{v}`: {e}")))
        });
        let tau = vals.next().ok_or_else(|| perr(format!("line {line}: empty row")))??;
        let errors = vals.collect::<Result<Vec<_>>>()?;
        rows.push(ConvergenceRow { tau, errors });
    }

    let comment = text
        .lines()
        .rev()
        .find(|l| l.starts_with(FITTED_PREFIX))
        .ok_or_else(|| perr("missing fitted-order comment".into()))?;
    let body = &comment[FITTED_PREFIX.len()..];
    let body = body.strip_prefix('_').unwrap_or(body);
    let fitted_orders = if body.is_empty() {
        Vec::new()
    } else {
        body.split(',')
            .map(|kv| {
                let (_, v) = kv
                    .split_once('=')
                    .ok_or_else(|| perr(format!("malformed fitted-order entry `{kv}`")))?;
                let x: f64 = v
                    .parse()
                    .map_err(|e| perr(format!("fitted order `{v}`: {e}")))?;
                Ok(x.is_finite().then_some(x))
            })
            .collect::<Result<Vec<_>>>()?
    };
    if fitted_orders.len() != norms.len() {
        return Err(perr(format!(
            "{} fitted orders for {} norms",
            fitted_orders.len(),
            norms.len()
        )));
    }
    Ok(CsvTable {
        norms,
        rows,
        fitted_orders,
    })
}
