//! CSV snapshot and series files, and a run directory writer that removes
//! everything it wrote when a run is abandoned.

use std::fs;
use std::path::{Path, PathBuf};

use dnls_core::integrator::NormSample;
use dnls_core::{ChebGrid, FieldState, Trajectory};
use num_complex::Complex64;

use crate::error::{HarnessError, Result};

/// Step of the public snapshot resample.
pub const SNAPSHOT_STEP: f64 = 0.5;

pub const SNAPSHOT_HEADER: &str = "x,re_u,im_u,density";
pub const RAW_HEADER: &str = "x,re_u,im_u";
pub const SERIES_HEADER: &str = "t,center_density,mass,sup_density";
pub const BALANCE_HEADER: &str = "t,mass,drive_power";

/// 17 significant digits; parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(fields: &[f64]) -> String {
    let mut s = fields.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

/// Snapshot resampled on `[-L, L]` with step [`SNAPSHOT_STEP`].
pub fn snapshot_csv(grid: &ChebGrid, state: &FieldState) -> Result<String> {
    let l = grid.half_length();
    let (xs, vs) = grid.resample_uniform(&grid.embed(&state.values), -l, l, SNAPSHOT_STEP)?;
    let mut out = format!("{SNAPSHOT_HEADER}\n");
    for (x, v) in xs.iter().zip(&vs) {
        out.push_str(&row(&[*x, v.re, v.im, v.norm_sqr()]));
    }
    Ok(out)
}

/// Nodal values on the interior nodes.
pub fn raw_snapshot_csv(grid: &ChebGrid, state: &FieldState) -> String {
    let mut out = format!("{RAW_HEADER}\n");
    for (x, v) in grid.interior_nodes().iter().zip(&state.values) {
        out.push_str(&row(&[*x, v.re, v.im]));
    }
    out
}

pub fn series_csv(traj: &Trajectory) -> String {
    let mut out = format!("{SERIES_HEADER}\n");
    for ((t, c), s) in traj.center_series.iter().zip(&traj.norm_series) {
        out.push_str(&row(&[*t, *c, s.mass, s.sup_density]));
    }
    out
}

pub fn balance_csv(traj: &Trajectory) -> String {
    let mut out = format!("{BALANCE_HEADER}\n");
    for s in &traj.norm_series {
        out.push_str(&row(&[s.t, s.mass, s.drive_power]));
    }
    out
}

/// Parses a numeric CSV with the given header.
pub fn parse_table(path: &Path, body: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = body.lines();
    if lines.next().map(str::trim) != Some(header) {
        return Err(HarnessError::data(path, format!("expected header `{header}`")));
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let vals: std::result::Result<Vec<f64>, _> = l.split(',').map(|c| c.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == width => Ok(v),
                _ => Err(HarnessError::data(path, format!("row {} is malformed", k + 2))),
            }
        })
        .collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn read_table(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    parse_table(path, &read_text(path)?, header)
}

/// Reloads a raw snapshot; the nodes must match `grid`.
pub fn read_raw_snapshot(path: &Path, grid: &ChebGrid, t: f64) -> Result<FieldState> {
    let rows = read_table(path, RAW_HEADER)?;
    if rows.len() != grid.interior_len() {
        return Err(HarnessError::data(path, format!("{} rows for {} interior nodes", rows.len(), grid.interior_len())));
    }
    if rows.iter().zip(grid.interior_nodes()).any(|(r, x)| r[0] != *x) {
        return Err(HarnessError::data(path, "node coordinates do not match the grid"));
    }
    let values = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
    Ok(FieldState { t, values })
}

/// Center series and norm samples from `series.csv` and `balance.csv`.
pub fn read_series(series: &Path, balance: &Path) -> Result<(Vec<(f64, f64)>, Vec<NormSample>)> {
    let s = read_table(series, SERIES_HEADER)?;
    let b = read_table(balance, BALANCE_HEADER)?;
    if s.len() != b.len() || s.iter().zip(&b).any(|(r, q)| r[0] != q[0]) {
        return Err(HarnessError::data(balance, "does not line up with the series file"));
    }
    let center = s.iter().map(|r| (r[0], r[1])).collect();
    let norms = s
        .iter()
        .zip(&b)
        .map(|(r, q)| NormSample { t: r[0], mass: r[2], sup_density: r[3], drive_power: q[2] })
        .collect();
    Ok((center, norms))
}

/// Writes files below one run directory and remembers them, so a failed
/// run can be rolled back.
#[derive(Debug)]
pub struct RunWriter {
    root: PathBuf,
    files: Vec<PathBuf>,
    created_dirs: Vec<PathBuf>,
}

impl RunWriter {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let mut w = Self { root: root.clone(), files: Vec::new(), created_dirs: Vec::new() };
        w.ensure_dir(&root)?;
        Ok(w)
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d).map_err(|e| HarnessError::io(&d, e))?;
            self.created_dirs.push(d);
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files written so far, relative to the root.
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn write(&mut self, rel: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        if let Err(e) = fs::write(&path, contents) {
            let _ = fs::remove_file(&path);
            return Err(HarnessError::io(&path, e));
        }
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    /// Removes every file written and every directory created.
    pub fn rollback(self) {
        for f in &self.files {
            let _ = fs::remove_file(self.root.join(f));
        }
        for d in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}
