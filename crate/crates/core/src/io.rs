//! File formats: measures, measure pairs, isometries, barycenter results,
//! trajectories and ODE reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::barycenter::BarycenterResult;
use crate::error::{Error, Result};
use crate::hyperbolic::MoebiusIsometry;
use crate::measure::{make_grid, Measure};

/// `{ "dim": d, "resolution": r, "density": [...] }`, density in node order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeasureFile {
    pub dim: usize,
    pub resolution: usize,
    pub density: Vec<f64>,
}

impl MeasureFile {
    pub fn from_measure(mu: &Measure) -> Self {
        Self {
            dim: mu.grid().dim(),
            resolution: mu.grid().resolution(),
            density: mu.density().to_vec(),
        }
    }

    /// Rebuilds the grid and renormalizes the density to unit mass.
    pub fn into_measure(self) -> Result<Measure> {
        let grid = make_grid(self.dim, self.resolution)?;
        Measure::from_samples(&grid, self.density)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IsometryFile {
    pub rotation: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

impl IsometryFile {
    pub fn from_isometry(phi: &MoebiusIsometry) -> Self {
        let r = phi.rotation();
        Self {
            rotation: (0..r.nrows()).map(|i| r.row(i).iter().cloned().collect()).collect(),
            translation: phi.translation().iter().cloned().collect(),
        }
    }

    pub fn into_isometry(self) -> Result<MoebiusIsometry> {
        let d = self.translation.len();
        if self.rotation.len() != d || self.rotation.iter().any(|row| row.len() != d) {
            return Err(Error::Format(format!("rotation must be a {d}x{d} matrix")));
        }
        let flat: Vec<f64> = self.rotation.into_iter().flatten().collect();
        MoebiusIsometry::new(
            DMatrix::from_row_slice(d, d, &flat),
            DVector::from_vec(self.translation),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BarycenterFile {
    pub point: Vec<f64>,
    pub grad_norm: f64,
    pub iters: usize,
    pub hess_min_eig: f64,
}

impl From<&BarycenterResult> for BarycenterFile {
    fn from(r: &BarycenterResult) -> Self {
        Self {
            point: r.point.coords().iter().cloned().collect(),
            grad_norm: r.gradient_norm,
            iters: r.iterations,
            hess_min_eig: r.hessian_min_eigenvalue,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OdeReport {
    pub alpha: f64,
    pub dt: f64,
    pub steps: usize,
    pub residual_sup: f64,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_measure(path: &Path) -> Result<Measure> {
    from_json::<MeasureFile>(&read_text(path)?)?.into_measure()
}

/// A pair file is a JSON array of exactly two measure objects on one grid.
pub fn read_pair(path: &Path) -> Result<(Measure, Measure)> {
    let files: Vec<MeasureFile> = from_json(&read_text(path)?)?;
    if files.len() != 2 {
        return Err(Error::Format(format!("expected two measures, found {}", files.len())));
    }
    let mut it = files.into_iter();
    let mu = it.next().unwrap().into_measure()?;
    let mu1 = it.next().unwrap().into_measure()?;
    mu.grid().check_same(mu1.grid())?;
    Ok((mu, mu1))
}

pub fn read_isometry(path: &Path) -> Result<MoebiusIsometry> {
    from_json::<IsometryFile>(&read_text(path)?)?.into_isometry()
}

/// CSV with header `t,node_0,...,node_{N-1}`, floats with 17 significant digits.
pub fn trajectory_csv(rows: &[(f64, &[f64])]) -> String {
    let n = rows.first().map_or(0, |r| r.1.len());
    let mut out = String::from("t");
    for i in 0..n {
        write!(out, ",node_{i}").unwrap();
    }
    out.push('\n');
    for (t, density) in rows {
        write!(out, "{t:.16e}").unwrap();
        for v in density.iter() {
            write!(out, ",{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}
