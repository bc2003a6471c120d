//! CSV, JSON and plot-data writers. Files are written to a sibling temporary
//! path and renamed into place.

use std::fmt::Write as _;
use std::path::Path;

use super::{ConvergenceTable, EstimateRecord, GapTable, LimitCurve};
use crate::error::Result;

pub const RECORD_CSV_HEADER: &str = "quantity,k,lambda,r,L_or_n,mean,stderr,reps,seed,boundary_mode";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn records_csv(records: &[EstimateRecord]) -> String {
    let mut out = String::from(RECORD_CSV_HEADER);
    out.push('\n');
    for r in records {
        let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.quantity.as_str(),
            r.k_or_j,
            lambda,
            r.r,
            r.l_or_n,
            r.mean,
            r.stderr,
            r.reps,
            r.master_seed,
            r.boundary_mode.as_str()
        );
    }
    out
}

pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("n,mean,stderr,target,target_stderr,gap,combined_stderr\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.n, row.mean, row.stderr, table.target.value, table.target.stderr, row.gap, row.combined_stderr
        );
    }
    out
}

pub fn gap_csv(table: &GapTable) -> String {
    let mut out =
        String::from("n,binomial_mean,binomial_stderr,poisson_mean,poisson_stderr,gap,gap_stderr,scaled_gap\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.n,
            row.binomial_mean,
            row.binomial_stderr,
            row.poisson_mean,
            row.poisson_stderr,
            row.gap,
            row.gap_stderr,
            row.scaled_gap
        );
    }
    out
}

pub fn curve_csv(curve: &LimitCurve) -> String {
    let mut out = String::from("s,value,stderr\n");
    for ((s, v), e) in curve.s_grid.iter().zip(&curve.values).zip(&curve.stderrs) {
        let _ = writeln!(out, "{s},{v},{e}");
    }
    out
}

/// Rows of `(x, y, yerr)` for whitespace-separated plot files.
pub trait PlotData {
    fn plot_rows(&self) -> Vec<(f64, f64, Option<f64>)>;
}

impl PlotData for ConvergenceTable {
    fn plot_rows(&self) -> Vec<(f64, f64, Option<f64>)> {
        self.rows.iter().map(|r| (r.n as f64, r.gap, None)).collect()
    }
}

impl PlotData for GapTable {
    fn plot_rows(&self) -> Vec<(f64, f64, Option<f64>)> {
        self.rows
            .iter()
            .map(|r| (r.n as f64, r.gap, Some(r.gap_stderr)))
            .collect()
    }
}

impl PlotData for LimitCurve {
    fn plot_rows(&self) -> Vec<(f64, f64, Option<f64>)> {
        self.s_grid
            .iter()
            .zip(&self.values)
            .zip(&self.stderrs)
            .map(|((s, v), e)| (*s, *v, Some(*e)))
            .collect()
    }
}

/// Twelve significant digits in scientific notation.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn plot_text(data: &impl PlotData) -> String {
    let mut out = String::new();
    for (x, y, e) in data.plot_rows() {
        match e {
            Some(e) => {
                let _ = writeln!(out, "{} {} {}", sig12(x), sig12(y), sig12(e));
            }
            None => {
                let _ = writeln!(out, "{} {}", sig12(x), sig12(y));
            }
        }
    }
    out
}
