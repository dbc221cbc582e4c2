//! Hemisphere graph atlas of the parameter sphere `S^d ⊂ R^{d+1}`.
//!
//! Chart `2k` covers `{y : y_k > 0}` and chart `2k + 1` covers `{y : y_k < 0}`.
//! Local coordinates are the remaining `d` components of `y`, in increasing
//! axis order, and the chart domain is the open unit ball.

use serde::{Deserialize, Serialize};

use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: usize,
    pub coords: Vec<f64>,
}

/// Derivatives of the inverse chart `c -> y(c)` up to second order.
#[derive(Debug, Clone)]
pub struct SphereJet {
    pub y: Vector,
    /// `(d+1) x d`, column `j` is `dy/dc_j`.
    pub dy: Matrix,
    /// `ddy[i * d + j] = d^2 y / dc_i dc_j`.
    pub ddy: Vec<Vector>,
}

pub fn chart_axis(chart: usize) -> usize {
    chart / 2
}

pub fn chart_sign(chart: usize) -> f64 {
    if chart % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn chart_count(ambient: usize) -> usize {
    2 * ambient
}

impl ChartPoint {
    pub fn new(chart: usize, coords: Vec<f64>) -> Self {
        Self { chart, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn radius_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn in_domain(&self) -> bool {
        self.radius_sq() < 1.0 && self.coords.iter().all(|c| c.is_finite())
    }

    /// Pole of the chart, i.e. the point with zero coordinates.
    pub fn pole(chart: usize, d: usize) -> Self {
        Self::new(chart, vec![0.0; d])
    }

    pub fn sphere_point(&self) -> Vector {
        let d = self.dim();
        let axis = chart_axis(self.chart);
        let w = (1.0 - self.radius_sq()).max(0.0).sqrt();
        let mut y = Vector::zeros(d + 1);
        let mut idx = 0;
        for k in 0..=d {
            if k == axis {
                y[k] = chart_sign(self.chart) * w;
            } else {
                y[k] = self.coords[idx];
                idx += 1;
            }
        }
        y
    }

    pub fn jet(&self) -> SphereJet {
        let d = self.dim();
        let n = d + 1;
        let axis = chart_axis(self.chart);
        let sign = chart_sign(self.chart);
        let w = (1.0 - self.radius_sq()).sqrt();
        let y = self.sphere_point();
        let mut dy = Matrix::zeros(n, d);
        let mut idx = 0;
        for k in 0..n {
            if k != axis {
                dy[(k, idx)] = 1.0;
                idx += 1;
            }
        }
        for i in 0..d {
            dy[(axis, i)] = -sign * self.coords[i] / w;
        }
        let mut ddy = vec![Vector::zeros(n); d * d];
        let w3 = w * w * w;
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                ddy[i * d + j][axis] =
                    -sign * (delta / w + self.coords[i] * self.coords[j] / w3);
            }
        }
        SphereJet { y, dy, ddy }
    }

    /// Chart whose pole is nearest to `y` (largest |y_k|), with coordinates.
    pub fn nearest_chart(y: &Vector) -> Self {
        let n = y.len();
        let mut axis = 0;
        for k in 1..n {
            if y[k].abs() > y[axis].abs() {
                axis = k;
            }
        }
        let chart = 2 * axis + usize::from(y[axis] < 0.0);
        Self::in_chart(y, chart).expect("largest component is nonzero on the sphere")
    }

    /// Coordinates of the sphere point `y` in a given chart, if `y` lies in
    /// that chart's hemisphere.
    pub fn in_chart(y: &Vector, chart: usize) -> Option<Self> {
        let axis = chart_axis(chart);
        if axis >= y.len() || chart_sign(chart) * y[axis] <= 0.0 {
            return None;
        }
        let coords: Vec<f64> = (0..y.len()).filter(|k| *k != axis).map(|k| y[k]).collect();
        Some(Self::new(chart, coords))
    }

    /// Same point re-expressed in the nearest-pole chart.
    pub fn reanchored(&self) -> Self {
        Self::nearest_chart(&self.sphere_point())
    }
}

/// Projection of a sphere point onto the coordinates of `chart` together with
/// its first and second derivatives along a sphere jet.
pub(crate) fn project_jet(jet: &SphereJet, chart: usize) -> (Vector, Matrix, Vec<Vector>) {
    let axis = chart_axis(chart);
    let n = jet.y.len();
    let d = n - 1;
    let rows: Vec<usize> = (0..n).filter(|k| *k != axis).collect();
    let c = Vector::from_iterator(d, rows.iter().map(|k| jet.y[*k]));
    let dc = Matrix::from_fn(d, d, |r, col| jet.dy[(rows[r], col)]);
    let ddc = jet
        .ddy
        .iter()
        .map(|v| Vector::from_iterator(d, rows.iter().map(|k| v[*k])))
        .collect();
    (c, dc, ddc)
}
