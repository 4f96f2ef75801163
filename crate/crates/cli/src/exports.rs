//! Deterministic CSV writers for tables, plot data and debug matrices.
//!
//! All floats are written with Rust's shortest round-trip formatting, so
//! export -> import -> export is byte-identical.

use std::path::Path;

use anyhow::{bail, Context, Result};
use spinline::nalgebra;
use spinline::two_qubit::ScanStatus;

pub const TABLE_HEADER: &str = "n_s,n_r,n_c,t0,w1";

/// One cell of a critical-length table; `result` is empty when the cell is
/// missing or its scan was not certified.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub n_sender: usize,
    pub n_ext_receiver: usize,
    pub result: Option<(usize, f64, f64)>,
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    let mut sorted: Vec<&TableRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.n_sender, r.n_ext_receiver));
    for row in sorted {
        match row.result {
            Some((nc, t0, w1)) => {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.n_sender, row.n_ext_receiver, nc, t0, w1
                ));
            }
            None => out.push_str(&format!("{},{},,,\n", row.n_sender, row.n_ext_receiver)),
        }
    }
    out
}

pub fn parse_table_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TABLE_HEADER => {}
        other => bail!("bad table header: {other:?}"),
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            bail!("bad table row: {line}");
        }
        let result = if f[2].is_empty() {
            None
        } else {
            Some((f[2].parse()?, f[3].parse()?, f[4].parse()?))
        };
        rows.push(TableRow { n_sender: f[0].parse()?, n_ext_receiver: f[1].parse()?, result });
    }
    Ok(rows)
}

/// |f_n(t0)| profile over the chain nodes.
pub fn profile_csv(t0: f64, f_profile: &[f64]) -> String {
    let mut out = format!("# t0={t0}\n# columns: n,f_abs\n");
    for (i, f) in f_profile.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, f));
    }
    out
}

fn status_label(status: ScanStatus) -> &'static str {
    match status {
        ScanStatus::AtLength => "at_length",
        ScanStatus::Certified => "certified",
        ScanStatus::OpenEnded => "open_ended",
        ScanStatus::Infeasible => "infeasible",
    }
}

/// One eigenvalue-lattice point with its critical length.
#[derive(Debug, Clone)]
pub struct LatticeRow {
    pub lambda: (f64, f64, f64),
    pub n_critical: usize,
    pub epsilon: f64,
    pub t0: f64,
    pub status: ScanStatus,
}

pub fn lattice_csv(rows: &[LatticeRow]) -> String {
    let mut out =
        String::from("# columns: lambda1,lambda2,lambda3,n_c,epsilon_at_nc,t0,status\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.lambda.0,
            r.lambda.1,
            r.lambda.2,
            r.n_critical,
            r.epsilon,
            r.t0,
            status_label(r.status)
        ));
    }
    out
}

/// Discrepancy-versus-length rows of the two uniform-mixture targets.
pub fn accuracy_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("# columns: n,epsilon_mixed3,epsilon_mixed4\n");
    for (n, e3, e4) in rows {
        out.push_str(&format!("{n},{e3},{e4}\n"));
    }
    out
}

/// Dense real matrix as plain CSV (debug exchange format).
pub fn matrix_csv(m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<nalgebra::DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().context("bad matrix entry"))
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("empty matrix");
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        bail!("ragged matrix rows");
    }
    Ok(nalgebra::DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip_is_bit_identical() {
        let rows = vec![
            TableRow { n_sender: 1, n_ext_receiver: 1, result: Some((4, 5.564_1, 0.956_76)) },
            TableRow { n_sender: 2, n_ext_receiver: 1, result: None },
        ];
        let text = table_csv(&rows);
        let parsed = parse_table_csv(&text).unwrap();
        assert_eq!(parsed, rows);
        assert_eq!(table_csv(&parsed), text);
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(table_csv(&[]), format!("{TABLE_HEADER}\n"));
    }

    #[test]
    fn matrix_round_trip() {
        let m = nalgebra::DMatrix::from_fn(3, 2, |i, j| (i as f64) / 3.0 + j as f64);
        let text = matrix_csv(&m);
        let parsed = parse_matrix_csv(&text).unwrap();
        assert_eq!(parsed, m);
        assert_eq!(matrix_csv(&parsed), text);
    }
}
