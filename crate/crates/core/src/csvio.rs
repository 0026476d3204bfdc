//! CSV persistence. Floats are written with 17 significant digits so every
//! `f64` round-trips bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::{GridField, PeriodicGrid};
use crate::params::ModelParams;
use crate::reconstruct::PlaneField;
use crate::solver::{flux_with, Snapshot, Trajectory};
use crate::spectral::Spectral;

pub const INDEX_FILE: &str = "snapshots_index.csv";
pub const SERIES_FILE: &str = "series.csv";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn snapshot_csv(grid: PeriodicGrid, h: &GridField, p: &GridField) -> String {
    let mut out = String::from("x,h,p\n");
    for (j, x) in grid.nodes().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(x),
            fmt_f64(h.values()[j]),
            fmt_f64(p.values()[j])
        );
    }
    out
}

pub fn series_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from("t,dt,mass,min_h,lyapunov,energy,dissipation\n");
    for r in records {
        let row = [
            r.t,
            r.dt,
            r.mass,
            r.min_h,
            r.lyapunov,
            r.energy,
            r.dissipation,
        ]
        .map(fmt_f64);
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn plane_csv(field: &PlaneField, name: &str) -> String {
    let mut out = format!("x,y,{name}\n");
    let grid = field.grid();
    for (j, x) in grid.nodes().enumerate() {
        for (q, &y) in field.y().iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(field.get(j, q))
            );
        }
    }
    out
}

fn parse_rows(text: &str, what: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidParam(format!("{what}: empty file")))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|s| s.trim().to_string())
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    if let Some((i, r)) = rows
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != header.len())
    {
        return Err(Error::InvalidParam(format!(
            "{what}: row {} has {} columns, header has {}",
            i + 2,
            r.len(),
            header.len()
        )));
    }
    Ok((header, rows))
}

fn column(header: &[String], rows: &[Vec<String>], name: &str, what: &str) -> Result<Vec<f64>> {
    let k = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidParam(format!("{what}: no `{name}` column")))?;
    rows.iter()
        .map(|r| {
            r[k].parse::<f64>()
                .map_err(|_| Error::InvalidParam(format!("{what}: bad number `{}`", r[k])))
        })
        .collect()
}

/// Reads an `x,h,p` snapshot file.
pub fn read_snapshot_csv(text: &str, what: &str) -> Result<(GridField, GridField)> {
    let (header, rows) = parse_rows(text, what)?;
    let grid = PeriodicGrid::new(rows.len())?;
    let h = GridField::new(grid, column(&header, &rows, "h", what)?)?;
    let p = GridField::new(grid, column(&header, &rows, "p", what)?)?;
    Ok((h, p))
}

/// Recovers `dh/dt` from a stored `(h, p)` pair: from the flux when the
/// viscoelastic term is off, otherwise by inverting `p = beta h_xxxx - delta w_xx`
/// for the mean-free `w`.
pub fn recover_rate(
    h: &GridField,
    p: &GridField,
    phi: &GridField,
    params: &ModelParams,
) -> Result<GridField> {
    let s = Spectral::new(h.grid());
    if !params.chi() {
        return Ok(s.flux_divergence(&flux_with(&s, h, p, phi)));
    }
    let wxx = s
        .deriv(h, 4)?
        .scale(params.beta())
        .sub(p)
        .scale(1.0 / params.delta());
    Ok(s.apply(&wxx, |idx| {
        let k = s.wavenumber(idx);
        if idx == 0 || s.is_nyquist(idx) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-1.0 / (k * k), 0.0)
        }
    }))
}

fn snapshot_name(i: usize) -> String {
    format!("snap_{i:05}.csv")
}

/// Writes every snapshot, the index and the series; returns the written paths.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut index = String::from("index,t,file\n");
    for (i, s) in traj.snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        let path = dir.join(&name);
        std::fs::write(&path, snapshot_csv(s.h.grid(), &s.h, &s.p))?;
        written.push(path);
        let _ = writeln!(index, "{i},{},{name}", fmt_f64(s.t));
    }
    let path = dir.join(INDEX_FILE);
    std::fs::write(&path, index)?;
    written.push(path);
    let path = dir.join(SERIES_FILE);
    std::fs::write(&path, series_csv(&traj.diagnostics))?;
    written.push(path);
    Ok(written)
}

/// Loads the snapshots listed in a trajectory directory, recovering `dh/dt`.
pub fn read_trajectory(dir: &Path, params: &ModelParams) -> Result<Vec<Snapshot>> {
    let index_path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&index_path)?;
    let what = index_path.display().to_string();
    let (header, rows) = parse_rows(&text, &what)?;
    let ts = column(&header, &rows, "t", &what)?;
    let k = header
        .iter()
        .position(|h| h == "file")
        .ok_or_else(|| Error::InvalidParam(format!("{what}: no `file` column")))?;
    let mut out = Vec::with_capacity(rows.len());
    for (row, t) in rows.iter().zip(ts) {
        let path = dir.join(&row[k]);
        let (h, p) = read_snapshot_csv(
            &std::fs::read_to_string(&path)?,
            &path.display().to_string(),
        )?;
        let phi = crate::forcing::eval_Phi(params.forcing(), h.grid(), t)?;
        let w = recover_rate(&h, &p, &phi, params)?;
        out.push(Snapshot {
            t,
            h,
            p,
            w: Some(w),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_params, RawParams};
    use crate::solver::pressure_of;
    use std::f64::consts::PI;

    #[test]
    fn floats_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            1.0 - f64::EPSILON,
        ] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let g = PeriodicGrid::new(16).unwrap();
        let h = g.sample(|x| 1.0 + 0.1 * (2.0 * PI * x).sin());
        let p = g.sample(|x| (2.0 * PI * x).cos() / 3.0);
        let (h2, p2) = read_snapshot_csv(&snapshot_csv(g, &h, &p), "mem").unwrap();
        assert_eq!(h, h2);
        assert_eq!(p, p2);
        assert!(read_snapshot_csv("x,h,p\n0,1\n", "mem").is_err());
    }

    #[test]
    fn rate_recovery_matches_rate_solve() {
        let g = PeriodicGrid::new(32).unwrap();
        let params = validate_params(RawParams::new(12.0, 12.0, 3.0)).unwrap();
        let s = Spectral::new(g);
        let h = s.dealias(&g.sample(|x| 1.0 + 0.2 * (2.0 * PI * x).sin()));
        let w = s.dealias(&g.sample(|x| 0.3 * (2.0 * PI * x).cos() - 0.1 * (4.0 * PI * x).sin()));
        let p = pressure_of(&h, Some(&w), &params).unwrap();
        let back = recover_rate(&h, &p, &g.zeros(), &params).unwrap();
        assert!(back.sub(&w).max_abs() < 1e-10);
    }
}
