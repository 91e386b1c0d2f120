//! CSV writers. Every number is written in scientific notation with 17
//! significant digits.

use std::io::{self, Write};

use hawkes_epi::simulator::MeanPath;
use hawkes_epi::{EventLog, GridScan, PathRecord, State};

pub const STATE_HEADER: &str = "t,S_h,I_h,Q_h,R_h,S_r,I_r";
pub const EVENT_HEADER: &str = "t,mark";
pub const GRID_HEADER: &str = "x,y,r0";
pub const CONTOUR_HEADER: &str = "x,y";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn row<W: Write>(w: &mut W, cells: &[f64]) -> io::Result<()> {
    if let Some(bad) = cells.iter().find(|c| !c.is_finite()) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("non-finite CSV cell {bad}")));
    }
    let line: Vec<String> = cells.iter().map(|&c| num(c)).collect();
    writeln!(w, "{}", line.join(","))
}

fn states<'a, W: Write>(w: &mut W, rows: impl Iterator<Item = (f64, &'a State)>) -> io::Result<()> {
    writeln!(w, "{STATE_HEADER}")?;
    for (t, s) in rows {
        let a = s.to_array();
        row(w, &[t, a[0], a[1], a[2], a[3], a[4], a[5]])?;
    }
    Ok(())
}

pub fn write_path<W: Write>(w: &mut W, path: &PathRecord) -> io::Result<()> {
    states(w, path.grid.iter().copied().zip(&path.states))
}

pub fn write_mean<W: Write>(w: &mut W, mean: &MeanPath) -> io::Result<()> {
    states(w, mean.grid.iter().copied().zip(&mean.states))
}

/// Events of one channel from several logs, in the order given.
pub fn write_events<'a, W: Write>(w: &mut W, logs: impl Iterator<Item = &'a EventLog>) -> io::Result<()> {
    writeln!(w, "{EVENT_HEADER}")?;
    for log in logs {
        for (t, m) in log.iter() {
            row(w, &[t, m])?;
        }
    }
    Ok(())
}

pub fn write_grid<W: Write>(w: &mut W, scan: &GridScan) -> io::Result<()> {
    writeln!(w, "{GRID_HEADER}")?;
    for (x, y, z) in scan.rows() {
        row(w, &[x, y, z])?;
    }
    Ok(())
}

pub fn write_contour<W: Write>(w: &mut W, scan: &GridScan) -> io::Result<()> {
    writeln!(w, "{CONTOUR_HEADER}")?;
    for &(x, y) in &scan.contour {
        row(w, &[x, y])?;
    }
    Ok(())
}
