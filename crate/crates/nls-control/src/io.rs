//! Plain-text artifact formats.
//!
//! Everything is CSV with a header row, '.' decimal separator, and an
//! optional leading `#` preamble line naming the config hash and base seed,
//! so a rerun of the same config is byte-identical and every file carries
//! its own provenance. Readers skip any number of leading `#` lines, which
//! keeps the emitted files loadable as inputs (a forward run's final state
//! can serve as the next run's target).

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::control::{AdmissibleSet, ControlPath};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};
use crate::norms::lp_norm;
use crate::trajectory::{TimeGrid, Trajectory};

fn write_preamble(w: &mut impl Write, preamble: &str) -> Result<()> {
    if !preamble.is_empty() {
        writeln!(w, "{preamble}")?;
    }
    Ok(())
}

fn coord_header(d: usize) -> &'static str {
    if d == 1 {
        "x"
    } else {
        "x,y"
    }
}

fn coord_row(grid: SpatialGrid, idx: usize) -> String {
    let c = grid.coords(idx);
    if grid.dim() == 1 {
        format!("{}", c[0])
    } else {
        format!("{},{}", c[0], c[1])
    }
}

/// One row per grid point, in flat index order: coordinates, then the real
/// and imaginary parts.
pub fn write_field_csv(w: &mut impl Write, field: &ComplexField, preamble: &str) -> Result<()> {
    write_preamble(w, preamble)?;
    let grid = field.grid();
    writeln!(w, "{},re,im", coord_header(grid.dim()))?;
    for (idx, z) in field.values().iter().enumerate() {
        writeln!(w, "{},{},{}", coord_row(grid, idx), z.re, z.im)?;
    }
    Ok(())
}

struct CsvBody {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_csv_body(r: impl BufRead, what: &str) -> Result<CsvBody> {
    let mut header = None;
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(trimmed.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            trimmed.split(',').map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            Error::InvalidParam(format!("{what} line {}: {e}", lineno + 1))
        })?);
    }
    let header = header
        .ok_or_else(|| Error::InvalidParam(format!("{what}: missing header row")))?;
    Ok(CsvBody { header, rows })
}

/// Inverse of [`write_field_csv`] for a known grid: validates the point
/// count and the stored coordinates.
pub fn read_field_csv(r: impl BufRead, grid: SpatialGrid) -> Result<ComplexField> {
    let body = read_csv_body(r, "field file")?;
    let d = grid.dim();
    if body.header.len() != d + 2 {
        return Err(Error::InvalidParam(format!(
            "field file: expected {} columns, found {}",
            d + 2,
            body.header.len()
        )));
    }
    if body.rows.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "field file has {} points, grid has {}",
            body.rows.len(),
            grid.len()
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (idx, row) in body.rows.iter().enumerate() {
        if row.len() != d + 2 {
            return Err(Error::InvalidParam(format!("field file row {idx}: ragged row")));
        }
        let c = grid.coords(idx);
        for a in 0..d {
            if (row[a] - c[a]).abs() > 1e-9 * grid.length().max(1.0) {
                return Err(Error::GridMismatch(format!(
                    "field file row {idx}: coordinate {} does not match the grid",
                    row[a]
                )));
            }
        }
        values.push(Complex64::new(row[d], row[d + 1]));
    }
    ComplexField::from_values(grid, values)
}

/// `t, u_1, ..., u_m`, one row per control node.
pub fn write_control_csv(w: &mut impl Write, u: &ControlPath, preamble: &str) -> Result<()> {
    write_preamble(w, preamble)?;
    let names: Vec<String> = (1..=u.channels()).map(|j| format!("u_{j}")).collect();
    writeln!(w, "t,{}", names.join(","))?;
    for (k, row) in u.node_values().iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        writeln!(w, "{},{}", u.time().node(k), vals.join(","))?;
    }
    Ok(())
}

/// Inverse of [`write_control_csv`] for a known time grid and admissible
/// set; node times must match to roundoff.
pub fn read_control_csv(
    r: impl BufRead,
    time: TimeGrid,
    set: AdmissibleSet,
) -> Result<ControlPath> {
    let body = read_csv_body(r, "control file")?;
    let m = set.channels();
    if body.header.len() != m + 1 {
        return Err(Error::NodeMismatch(format!(
            "control file: expected {} columns, found {}",
            m + 1,
            body.header.len()
        )));
    }
    if body.rows.len() != time.steps() + 1 {
        return Err(Error::NodeMismatch(format!(
            "control file has {} rows, time grid has {} nodes",
            body.rows.len(),
            time.steps() + 1
        )));
    }
    let mut values = Vec::with_capacity(body.rows.len());
    for (k, row) in body.rows.iter().enumerate() {
        if row.len() != m + 1 {
            return Err(Error::NodeMismatch(format!("control file row {k}: ragged row")));
        }
        if (row[0] - time.node(k)).abs() > 1e-9 * time.t_final().max(1.0) {
            return Err(Error::NodeMismatch(format!(
                "control file row {k}: node time {} does not match the grid",
                row[0]
            )));
        }
        values.push(row[1..].to_vec());
    }
    ControlPath::new(time, set, values)
}

/// Per-node scalar diagnostics of a trajectory: mass, `L^4`, and sup norms.
pub fn write_norms_csv(w: &mut impl Write, traj: &Trajectory, preamble: &str) -> Result<()> {
    write_preamble(w, preamble)?;
    writeln!(w, "t,mass,l4,linf")?;
    for i in 0..traj.len() {
        let f = traj.field(i);
        writeln!(
            w,
            "{},{},{},{}",
            traj.node_time(i),
            lp_norm(f, 2.0)?,
            lp_norm(f, 4.0)?,
            f.max_abs(),
        )?;
    }
    Ok(())
}

/// Long-format dump of every stored node: `t`, coordinates, re, im.
pub fn write_trajectory_csv(w: &mut impl Write, traj: &Trajectory, preamble: &str) -> Result<()> {
    write_preamble(w, preamble)?;
    let grid = traj.grid();
    writeln!(w, "t,{},re,im", coord_header(grid.dim()))?;
    for i in 0..traj.len() {
        let t = traj.node_time(i);
        for (idx, z) in traj.field(i).values().iter().enumerate() {
            writeln!(w, "{},{},{},{}", t, coord_row(grid, idx), z.re, z.im)?;
        }
    }
    Ok(())
}
