//! File plumbing and the JSON shapes written by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use convex_billiards::dynamics::PhasePoint;
use convex_billiards::geometry::{Body, BodySpec, ChartPoint};
use convex_billiards::io::to_json;
use convex_billiards::linalg::{Matrix, Vector};
use serde::{Deserialize, Serialize};

pub fn load_body(path: &Path) -> anyhow::Result<Body> {
    let text = fs::read_to_string(path).with_context(|| format!("reading body spec {}", path.display()))?;
    let spec: BodySpec = serde_json::from_str(&text).with_context(|| format!("parsing body spec {}", path.display()))?;
    Body::from_spec(&spec).with_context(|| format!("building body from {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn write(&self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.0.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write(name, &to_json(value))
    }
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> anyhow::Result<Matrix> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    anyhow::ensure!(n > 0 && rows.iter().all(|r| r.len() == c), "matrix rows must be nonempty and of equal length");
    Ok(Matrix::from_fn(n, c, |i, j| rows[i][j]))
}

/// A phase point as stored on disk: chart coordinates and outgoing velocity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointJson {
    pub chart: usize,
    pub coords: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default, skip_deserializing)]
    pub p: Vec<f64>,
    #[serde(default, skip_deserializing)]
    pub cos_angle: f64,
}

impl PointJson {
    pub fn of(x: &PhasePoint) -> Self {
        Self {
            chart: x.s.chart,
            coords: x.s.coords.clone(),
            v: x.v.iter().copied().collect(),
            p: x.p.iter().copied().collect(),
            cos_angle: x.cos_angle,
        }
    }

    pub fn resolve(&self, body: &Body) -> anyhow::Result<PhasePoint> {
        anyhow::ensure!(self.coords.len() == body.dim(), "point has {} chart coordinates, body needs {}", self.coords.len(), body.dim());
        anyhow::ensure!(self.v.len() == body.ambient_dim(), "velocity has {} components, body needs {}", self.v.len(), body.ambient_dim());
        let s = ChartPoint::new(self.chart, self.coords.clone());
        Ok(PhasePoint::new(body, &s, &Vector::from_column_slice(&self.v))?)
    }
}

/// An aligned plain-text table.
pub fn table(header: &[&str], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ");
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for row in body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}
