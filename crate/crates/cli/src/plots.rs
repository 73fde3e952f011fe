//! CSV emission for plotting. Column layouts are fixed:
//!
//! - `alpha_K.csv`: `alpha,K`
//! - `theta_T.csv`: `T,theta`  (T in h-space)
//! - `<check>_bounds.csv`: `label,t,s,lhs,rhs,ratio` with one row per
//!   bound-vs-value sample of a checked inequality.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dichoscope_core::error::{Error, Result};

use crate::reportdoc::ReportDoc;

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("plot data io error: {e}"))
}

/// Write plot CSVs for every curve and sampled inequality in the report.
/// Returns the written paths; a report without curves or samples produces
/// no files (a warning is logged).
pub fn emit_plot_data(doc: &ReportDoc, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut alpha_count = 0usize;
    let mut theta_count = 0usize;
    for outcome in &doc.checks {
        if let Some(curve) = &outcome.curve {
            let path = match curve.kind.as_str() {
                "alpha_K" => {
                    alpha_count += 1;
                    if alpha_count == 1 {
                        dir.join("alpha_K.csv")
                    } else {
                        dir.join(format!("alpha_K_{alpha_count}.csv"))
                    }
                }
                "theta_T" => {
                    theta_count += 1;
                    if theta_count == 1 {
                        dir.join("theta_T.csv")
                    } else {
                        dir.join(format!("theta_T_{theta_count}.csv"))
                    }
                }
                other => dir.join(format!("curve_{other}.csv")),
            };
            fs::create_dir_all(dir).map_err(io_err)?;
            let mut f = fs::File::create(&path).map_err(io_err)?;
            match curve.kind.as_str() {
                "alpha_K" => writeln!(f, "alpha,K").map_err(io_err)?,
                "theta_T" => writeln!(f, "T,theta").map_err(io_err)?,
                _ => writeln!(f, "x,y").map_err(io_err)?,
            }
            for (x, y) in &curve.points {
                writeln!(f, "{x},{y}").map_err(io_err)?;
            }
            written.push(path);
        }
        let samples = outcome
            .report
            .iter()
            .chain(outcome.extra_report.iter())
            .flat_map(|r| r.samples.iter());
        let mut rows = samples.peekable();
        if rows.peek().is_some() {
            fs::create_dir_all(dir).map_err(io_err)?;
            let name = outcome.name.replace(':', "_");
            let path = dir.join(format!("{name}_bounds.csv"));
            let mut f = fs::File::create(&path).map_err(io_err)?;
            writeln!(f, "label,t,s,lhs,rhs,ratio").map_err(io_err)?;
            for w in rows {
                let ratio = if w.rhs != 0.0 { w.lhs / w.rhs } else { f64::NAN };
                writeln!(f, "{},{},{},{},{},{}", w.label, w.t, w.s, w.lhs, w.rhs, ratio)
                    .map_err(io_err)?;
            }
            written.push(path);
        }
    }
    if written.is_empty() {
        log::warn!("report contains no curves or bound samples; no plot files written");
    }
    Ok(written)
}
