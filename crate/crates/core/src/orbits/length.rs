//! Perimeter of a closed polygon inscribed in the boundary, as a function of
//! the chart coordinates of its vertices.

use crate::geometry::{Body, ChartPoint, SurfaceData};
use crate::linalg::{Matrix, Vector};

use super::OrbitError;

/// Length, gradient and Hessian with respect to the stacked vertex coordinates.
#[derive(Debug, Clone)]
pub struct LengthJet {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

fn surfaces(body: &Body, pts: &[ChartPoint]) -> Result<Vec<SurfaceData>, OrbitError> {
    pts.iter().map(|s| body.surface(s).map_err(OrbitError::from)).collect()
}

/// `sum_i |phi(s_{i+1}) - phi(s_i)|` over the closed polygon and its gradient.
pub fn length_functional(body: &Body, pts: &[ChartPoint]) -> Result<(f64, Vector), OrbitError> {
    let jet = length_jet(body, pts, false)?;
    Ok((jet.value, jet.gradient))
}

pub fn length_jet(body: &Body, pts: &[ChartPoint], with_hessian: bool) -> Result<LengthJet, OrbitError> {
    let m = pts.len();
    if m < 2 {
        return Err(OrbitError::Period(m));
    }
    let d = body.dim();
    let sd = surfaces(body, pts)?;
    let scale = body.outer_radius();
    let mut value = 0.0;
    let mut gradient = Vector::zeros(m * d);
    let mut hessian = Matrix::zeros(if with_hessian { m * d } else { 0 }, if with_hessian { m * d } else { 0 });
    for i in 0..m {
        let j = (i + 1) % m;
        let chord = &sd[j].point - &sd[i].point;
        let len = chord.norm();
        if len <= 1e-9 * scale {
            return Err(OrbitError::CoincidentVertices(i, j));
        }
        value += len;
        let u = chord / len;
        let gi = -(sd[i].tangents.transpose() * &u);
        let gj = sd[j].tangents.transpose() * &u;
        {
            let mut r = gradient.rows_mut(i * d, d);
            r += &gi;
        }
        {
            let mut r = gradient.rows_mut(j * d, d);
            r += &gj;
        }
        if !with_hessian {
            continue;
        }
        let n = u.len();
        let proj = (Matrix::identity(n, n) - &u * u.transpose()) / len;
        let ti = &sd[i].tangents;
        let tj = &sd[j].tangents;
        let mut hii = ti.transpose() * &proj * ti;
        let mut hjj = tj.transpose() * &proj * tj;
        let hij = -(ti.transpose() * &proj * tj);
        for a in 0..d {
            for b in 0..d {
                hii[(a, b)] -= u.dot(&sd[i].second_derivs[a * d + b]);
                hjj[(a, b)] += u.dot(&sd[j].second_derivs[a * d + b]);
            }
        }
        let mut add = |r: usize, c: usize, blk: &Matrix| {
            let mut v = hessian.view_mut((r * d, c * d), (d, d));
            v += blk;
        };
        add(i, i, &hii);
        add(j, j, &hjj);
        add(i, j, &hij);
        add(j, i, &hij.transpose());
    }
    Ok(LengthJet { value, gradient, hessian })
}
