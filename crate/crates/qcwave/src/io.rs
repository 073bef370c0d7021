//! CSV and JSON serialization of fields, traces, ensembles and tables.
//!
//! Floats are written with 17 significant digits so that a run's output is
//! a pure function of its inputs, byte for byte.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::density::{DensityMatrix, Summary};
use crate::dynamics::EvolutionTrace;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Dof};
use crate::grid::{Grid, Grid1D, Grid2D};
use crate::spectra::{DotLevel, LevelTable};
use crate::trajectories::TrajectoryEnsemble;

/// Fixed 17-significant-digit rendering.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// `x,re,im` (1D) or `x1,x2,re,im` (2D, axis 1 outermost).
pub fn write_field_csv<W: Write>(w: W, field: &ComplexField) -> Result<()> {
    let mut out = writer(w);
    match field.grid() {
        Grid::One(g) => {
            out.write_record(["x", "re", "im"])?;
            for (i, v) in field.values().iter().enumerate() {
                out.write_record([fmt_f64(g.x(i)), fmt_f64(v.re), fmt_f64(v.im)])?;
            }
        }
        Grid::Two(g) => {
            out.write_record(["x1", "x2", "re", "im"])?;
            let (n1, n2) = g.shape();
            for i in 0..n1 {
                for j in 0..n2 {
                    let v = field.values()[g.index(i, j)];
                    out.write_record([fmt_f64(g.axis1.x(i)), fmt_f64(g.axis2.x(j)), fmt_f64(v.re), fmt_f64(v.im)])?;
                }
            }
        }
    }
    finish(out)
}

fn parse(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse {s:?} as a number")))
}

/// Rebuild a uniform axis from its sorted distinct coordinates.
fn axis_from(coords: &[f64]) -> Result<Grid1D> {
    let n = coords.len();
    if n < 2 {
        return Err(Error::Parse("need at least two distinct coordinates".into()));
    }
    let g = Grid1D::new(coords[0], coords[n - 1], n)?;
    let tol = 1e-9 * g.dx();
    if coords.iter().enumerate().any(|(i, &x)| (x - g.x(i)).abs() > tol.max(1e-12 * x.abs())) {
        return Err(Error::Parse("coordinates are not uniformly spaced".into()));
    }
    Ok(g)
}

/// Inverse of [`write_field_csv`]; the number of columns selects 1D or 2D.
pub fn read_field_csv<R: Read>(r: R, dofs: Vec<Dof>, hbar: f64) -> Result<ComplexField> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let two_d = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "re", "im"] => false,
        ["x1", "x2", "re", "im"] => true,
        other => return Err(Error::Parse(format!("unexpected header {other:?}"))),
    };
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let vals = rec.iter().map(|s| parse(s, line)).collect::<Result<Vec<f64>>>()?;
        rows.push(vals);
    }
    if two_d {
        let mut x1: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        x1.dedup();
        let n2 = rows.len() / x1.len().max(1);
        let x2: Vec<f64> = rows.iter().take(n2).map(|r| r[1]).collect();
        let g = Grid2D::new(axis_from(&x1)?, axis_from(&x2)?);
        if rows.len() != g.len() {
            return Err(Error::Parse("2D field rows do not form a full grid".into()));
        }
        let values = rows.iter().map(|r| Complex64::new(r[2], r[3])).collect();
        ComplexField::new(g, values, dofs, hbar)
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let g = axis_from(&xs)?;
        let values = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
        ComplexField::new(g, values, dofs, hbar)
    }
}

/// `x,Q` diagnostic dump.
pub fn write_q_csv<W: Write>(w: W, grid: &Grid1D, q: &[f64]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["x", "Q"])?;
    for (i, v) in q.iter().enumerate() {
        out.write_record([fmt_f64(grid.x(i)), fmt_f64(*v)])?;
    }
    finish(out)
}

/// `t,norm,hj_residual,continuity_residual`; unsampled residuals are empty.
pub fn write_trace_csv<W: Write>(w: W, trace: &EvolutionTrace) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "norm", "hj_residual", "continuity_residual"])?;
    for k in 0..trace.times.len() {
        out.write_record([
            fmt_f64(trace.times[k]),
            fmt_f64(trace.norms[k]),
            fmt_opt(trace.hj_residual[k]),
            fmt_opt(trace.continuity_residual[k]),
        ])?;
    }
    finish(out)
}

/// `particle_id,t,x[,y],vx[,vy],branch_id`.
pub fn write_trajectories_csv<W: Write>(w: W, ensemble: &TrajectoryEnsemble) -> Result<()> {
    let mut out = writer(w);
    let header: &[&str] = if ensemble.n_dof == 2 {
        &["particle_id", "t", "x", "y", "vx", "vy", "branch_id"]
    } else {
        &["particle_id", "t", "x", "vx", "branch_id"]
    };
    out.write_record(header)?;
    for p in 0..ensemble.n_particles() {
        for (k, &t) in ensemble.times.iter().enumerate() {
            let mut rec = vec![p.to_string(), fmt_f64(t)];
            rec.extend(ensemble.position(p, k).iter().map(|&x| fmt_f64(x)));
            rec.extend(ensemble.velocity(p, k).iter().map(|&x| fmt_f64(x)));
            rec.push(ensemble.branch_id[p].to_string());
            out.write_record(&rec)?;
        }
    }
    finish(out)
}

/// `n,E_n,Q_n,E_n_lambda`.
pub fn write_levels_csv<W: Write>(w: W, table: &LevelTable) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["n", "E_n", "Q_n", "E_n_lambda"])?;
    for r in &table.rows {
        out.write_record([r.n.to_string(), fmt_f64(r.e_n), fmt_f64(r.q_n), fmt_f64(r.e_n_lambda)])?;
    }
    finish(out)
}

/// `t,lambda,n,E`.
pub fn write_predictions_csv<W: Write>(w: W, levels: &[DotLevel]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "lambda", "n", "E"])?;
    for l in levels {
        out.write_record([fmt_f64(l.t), fmt_f64(l.lambda), l.n.to_string(), fmt_f64(l.energy)])?;
    }
    finish(out)
}

/// `t,lambda`.
pub fn write_schedule_csv<W: Write>(w: W, table: &[(f64, f64)]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "lambda"])?;
    for (t, l) in table {
        out.write_record([fmt_f64(*t), fmt_f64(*l)])?;
    }
    finish(out)
}

/// Row-major matrix dump: `row,<label>_re,<label>_im,...`.
pub fn write_matrix_csv<W: Write, M: DensityMatrix>(w: W, rho: &M) -> Result<()> {
    let mut out = writer(w);
    let labels = rho.labels();
    let mut header = vec!["row".to_string()];
    for l in labels {
        header.push(format!("{l}_re"));
        header.push(format!("{l}_im"));
    }
    out.write_record(&header)?;
    let m = rho.entries();
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        for j in 0..m.ncols() {
            rec.push(fmt_f64(m[(i, j)].re));
            rec.push(fmt_f64(m[(i, j)].im));
        }
        out.write_record(&rec)?;
    }
    finish(out)
}

/// `{trace, purity, min_eigenvalue, offdiag_maxabs}` as pretty JSON.
pub fn write_summary_json<W: Write>(mut w: W, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Generic table with a header and pre-formatted cells.
pub fn write_table_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::ShapeMismatch {
                expected: header.len(),
                got: r.len(),
            });
        }
        out.write_record(r)?;
    }
    finish(out)
}
