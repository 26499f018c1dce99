//! CSV artifacts. Every float is written with 17 significant digits.
//!
//! | file | columns |
//! |---|---|
//! | `trace_<solver>.csv` | `k,objective,residual_norm,u_norm,w_norm,rho` |
//! | `certify_samples.csv` | `u1x,u1y,value,s1,det_b1,det_b2,det_b2_subset2,tol_det` |
//! | `zero_level_s1.csv`, `zero_level_det_b2.csv` | `u1x,u1y` |
//! | `ce_trace_<i>.csv` | `k,x1,x2,x3,w1,w2,w3,rho,state_norm` |
//! | `ce_scan.csv` | `beta,sigma,growth_rate,converged` |
//! | `audit.csv` | `k,step_sq,step_sq_partial_sum` |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::counterexample::{CeTrace, ScanRow};
use crate::error::{Error, Result};
use crate::quasiconvexity::CertSample;
use crate::solvers::SolverTrace;

pub const TRACE_HEADER: &str = "k,objective,residual_norm,u_norm,w_norm,rho";
pub const SAMPLES_HEADER: &str = "u1x,u1y,value,s1,det_b1,det_b2,det_b2_subset2,tol_det";
pub const POINTS_HEADER: &str = "u1x,u1y";
pub const CE_TRACE_HEADER: &str = "k,x1,x2,x3,w1,w2,w3,rho,state_norm";
pub const CE_SCAN_HEADER: &str = "beta,sigma,growth_rate,converged";
pub const AUDIT_HEADER: &str = "k,step_sq,step_sq_partial_sum";

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(",")
}

fn write_lines(path: &Path, header: &str, lines: impl Iterator<Item = String>) -> Result<()> {
    let io = |source| Error::Io {
        context: format!("writing {}", path.display()),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{header}").map_err(io)?;
    for l in lines {
        writeln!(w, "{l}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_trace(path: &Path, trace: &SolverTrace) -> Result<()> {
    write_lines(
        path,
        TRACE_HEADER,
        trace.records.iter().map(|r| {
            format!(
                "{},{}",
                r.k,
                row(&[r.objective, r.residual_norm, r.u_norm, r.w_norm, r.rho])
            )
        }),
    )
}

pub fn write_samples(path: &Path, samples: &[CertSample]) -> Result<()> {
    write_lines(
        path,
        SAMPLES_HEADER,
        samples.iter().map(|s| {
            row(&[
                s.u1[0],
                s.u1[1],
                s.value,
                s.s1,
                s.det_b1,
                s.det_b2,
                s.det_b2_subset2,
                s.tol_det,
            ])
        }),
    )
}

pub fn write_points(path: &Path, points: &[[f64; 2]]) -> Result<()> {
    write_lines(path, POINTS_HEADER, points.iter().map(|p| row(p)))
}

pub fn write_ce_trace(path: &Path, trace: &CeTrace) -> Result<()> {
    write_lines(
        path,
        CE_TRACE_HEADER,
        trace.iterates.iter().map(|it| {
            format!(
                "{},{}",
                it.k,
                row(&[it.x[0], it.x[1], it.x[2], it.w[0], it.w[1], it.w[2], it.rho, it.state_norm()])
            )
        }),
    )
}

pub fn write_scan(path: &Path, rows: &[ScanRow]) -> Result<()> {
    write_lines(
        path,
        CE_SCAN_HEADER,
        rows.iter().map(|r| format!("{},{}", row(&[r.beta, r.sigma, r.growth_rate]), r.converged)),
    )
}

/// `step_sq_partial_sums` is cumulative; the per-step value is recovered by
/// differencing.
pub fn write_audit(path: &Path, partial_sums: &[f64]) -> Result<()> {
    write_lines(
        path,
        AUDIT_HEADER,
        partial_sums.iter().enumerate().map(|(k, &s)| {
            let prev = if k == 0 { 0.0 } else { partial_sums[k - 1] };
            format!("{k},{}", row(&[s - prev, s]))
        }),
    )
}
