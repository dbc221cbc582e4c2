//! Local stable and unstable manifolds as polynomial graphs over the linear
//! eigenspaces of a hyperbolic periodic orbit.

use serde::Serialize;

use crate::dynamics::{billiard_map, billiard_map_inverse, displaced_phase_point, jacobi_coords, JacobiFrame, PhasePoint};
use crate::geometry::{halton_ball, Body};
use crate::linalg::{columns_to_matrix, lstsq, orthogonal_complement, singular_values, symplectic_inverse, Matrix, Vector};
use crate::orbits::{hyperbolicity_certificate, PeriodicOrbit};

use super::ManifoldError;

const DEFECT_GOAL: f64 = 1e-9;
const DEFECT_LIMIT: f64 = 1e-8;
/// Seeds are placed this close to the orbit before being pushed out.
const SEED_SIZE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Stable,
    Unstable,
}

/// Graph `xi = T t + N h(t)` in Jacobi coordinates at `points[0]` of the
/// orbit, for `|t| <= radius`.
#[derive(Debug, Clone)]
pub struct LocalManifold {
    pub side: Side,
    pub period: usize,
    pub frame: JacobiFrame,
    /// Orthonormal basis of the linear eigenspace (`2d x d`).
    pub tangent: Matrix,
    /// Orthonormal basis of its orthogonal complement.
    pub normal: Matrix,
    /// Expansion of the push-out map (`f^m` or `f^{-m}`) on the eigenspace,
    /// in `tangent` coordinates.
    pub rate: Matrix,
    pub order: usize,
    exponents: Vec<Vec<usize>>,
    /// One row per monomial, one column per normal coordinate.
    coeffs: Matrix,
    pub radius: f64,
    pub invariance_defect: f64,
}

fn monomials(d: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(d, left - e, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    rec(d, order, &mut Vec::new(), &mut all);
    all.retain(|e| e.iter().sum::<usize>() >= 2);
    all.sort_by_key(|e| e.iter().sum::<usize>());
    all
}

fn monomial_row(exponents: &[Vec<usize>], t: &Vector) -> Vec<f64> {
    exponents.iter().map(|e| e.iter().zip(t.iter()).map(|(k, x)| x.powi(*k as i32)).product()).collect()
}

impl LocalManifold {
    pub fn dim(&self) -> usize {
        self.tangent.ncols()
    }

    /// Normal offset `h(t)`.
    pub fn height(&self, t: &Vector) -> Vector {
        let d = self.dim();
        if self.exponents.is_empty() {
            return Vector::zeros(d);
        }
        let row = Matrix::from_row_slice(1, self.exponents.len(), &monomial_row(&self.exponents, t));
        (row * &self.coeffs).transpose().column(0).into_owned()
    }

    /// Jacobi coordinates of the graph point over `t`.
    pub fn coords(&self, t: &Vector) -> Vector {
        &self.tangent * t + &self.normal * self.height(t)
    }

    pub fn point(&self, body: &Body, t: &Vector) -> Result<PhasePoint, ManifoldError> {
        Ok(displaced_phase_point(body, &self.frame, &self.coords(t))?)
    }

    /// Splits Jacobi coordinates into eigenspace and normal parts.
    pub fn split(&self, xi: &Vector) -> (Vector, Vector) {
        (self.tangent.transpose() * xi, self.normal.transpose() * xi)
    }

    /// Distance of a phase point from the graph, measured in the normal
    /// coordinates over its own eigenspace component.
    pub fn graph_distance(&self, y: &PhasePoint) -> f64 {
        let (a, b) = self.split(&jacobi_coords(&self.frame, y));
        (b - self.height(&a)).norm()
    }

    /// One period of the map that expands along the manifold.
    pub fn push_out(&self, body: &Body, x: &PhasePoint) -> Result<PhasePoint, ManifoldError> {
        let mut y = x.clone();
        for _ in 0..self.period {
            y = match self.side {
                Side::Unstable => billiard_map(body, &y)?,
                Side::Stable => billiard_map_inverse(body, &y)?,
            };
        }
        Ok(y)
    }

    /// One period of the map that contracts along the manifold.
    pub fn pull_in(&self, body: &Body, x: &PhasePoint) -> Result<PhasePoint, ManifoldError> {
        let mut y = x.clone();
        for _ in 0..self.period {
            y = match self.side {
                Side::Unstable => billiard_map_inverse(body, &y)?,
                Side::Stable => billiard_map(body, &y)?,
            };
        }
        Ok(y)
    }

    /// Largest expansion factor of the push-out map on the eigenspace.
    pub fn expansion(&self) -> f64 {
        singular_values(&self.rate)[0]
    }

    /// Smallest expansion factor of the push-out map on the eigenspace.
    pub fn min_expansion(&self) -> f64 {
        *singular_values(&self.rate).last().expect("nonempty")
    }

    /// A manifold point over `t` obtained by pushing a tiny linear seed out,
    /// which is accurate to the seed's squared size.
    pub fn refined_point(&self, body: &Body, t: &Vector) -> Result<PhasePoint, ManifoldError> {
        let inv = self.rate.clone().try_inverse().ok_or(ManifoldError::NotAGraph(f64::INFINITY))?;
        let mut seed = t.clone();
        let mut depth = 0;
        while seed.norm() > SEED_SIZE && depth < 400 {
            seed = &inv * seed;
            depth += 1;
        }
        let mut y = displaced_phase_point(body, &self.frame, &(&self.tangent * seed))?;
        for _ in 0..depth {
            y = self.push_out(body, &y)?;
        }
        Ok(y)
    }
}

/// Polynomial local manifold of `orbit` at `points[0]` with terms up to
/// `order`, on the largest radius (halving from 0.05) where the invariance
/// defect stays below `1e-9`.
pub fn local_manifold(body: &Body, orbit: &PeriodicOrbit, side: Side, order: usize) -> Result<LocalManifold, ManifoldError> {
    let cert = hyperbolicity_certificate(orbit, 10_000)?;
    let d = orbit.dim();
    let space = match side {
        Side::Stable => cert.stable[0].clone(),
        Side::Unstable => cert.unstable[0].clone(),
    };
    let tangent = space.clone().qr().q().columns(0, d).into_owned();
    let cols: Vec<Vector> = tangent.column_iter().map(|c| c.into_owned()).collect();
    let normal = columns_to_matrix(&orthogonal_complement(&cols, 2 * d), 2 * d);
    let push = match side {
        Side::Unstable => orbit.monodromy.clone(),
        Side::Stable => symplectic_inverse(&orbit.monodromy),
    };
    let rate = tangent.transpose() * &push * &tangent;
    let frame = JacobiFrame { base: orbit.points[0].clone(), basis: orbit.frames[0].clone() };
    let exponents = if order >= 2 { monomials(d, order) } else { Vec::new() };
    let mut lm = LocalManifold {
        side,
        period: orbit.period,
        frame,
        tangent,
        normal,
        rate,
        order,
        exponents,
        coeffs: Matrix::zeros(0, d),
        radius: 0.05 * body.outer_radius(),
        invariance_defect: f64::INFINITY,
    };
    lm.coeffs = Matrix::zeros(lm.exponents.len(), d);
    let mut best = f64::INFINITY;
    for _ in 0..30 {
        if fit(body, &mut lm).is_ok() {
            lm.invariance_defect = invariance_defect(body, &lm).unwrap_or(f64::INFINITY);
            best = best.min(lm.invariance_defect);
            if lm.invariance_defect < DEFECT_GOAL {
                return Ok(lm);
            }
        }
        lm.radius *= 0.5;
    }
    if best < DEFECT_LIMIT && lm.invariance_defect < DEFECT_LIMIT {
        return Ok(lm);
    }
    Err(ManifoldError::Invariance(best))
}

fn sample_params(d: usize, radius: f64, n: usize) -> Vec<Vector> {
    if d == 1 {
        (0..n).map(|i| Vector::from_element(1, radius * (2.0 * i as f64 / (n - 1) as f64 - 1.0))).collect()
    } else {
        halton_ball(&vec![0.0; d], radius, n).into_iter().map(Vector::from_vec).collect()
    }
}

fn fit(body: &Body, lm: &mut LocalManifold) -> Result<(), ManifoldError> {
    let d = lm.dim();
    let nm = lm.exponents.len();
    if nm == 0 {
        return Ok(());
    }
    let params = sample_params(d, lm.radius, (8 * nm).max(41));
    let mut rows = Vec::with_capacity(params.len());
    let mut rhs = Vec::with_capacity(params.len());
    for t in &params {
        let y = lm.refined_point(body, t)?;
        let (a, b) = lm.split(&jacobi_coords(&lm.frame, &y));
        // Scale the monomials to the unit ball for conditioning.
        rows.push(monomial_row(&lm.exponents, &(a / lm.radius)));
        rhs.push(b);
    }
    let design = Matrix::from_fn(rows.len(), nm, |i, j| rows[i][j]);
    let mut coeffs = Matrix::zeros(nm, d);
    for k in 0..d {
        let b = Vector::from_fn(rhs.len(), |i, _| rhs[i][k]);
        let c = lstsq(&design, &b, 1e-14);
        coeffs.set_column(k, &c);
    }
    for (i, e) in lm.exponents.iter().enumerate() {
        let s = lm.radius.powi(e.iter().sum::<usize>() as i32);
        let mut row = coeffs.row_mut(i);
        row /= s;
    }
    lm.coeffs = coeffs;
    Ok(())
}

/// Largest normal distance from the graph of the contracted image of graph
/// points on a validation grid offset from the fitting samples.
fn invariance_defect(body: &Body, lm: &LocalManifold) -> Result<f64, ManifoldError> {
    let d = lm.dim();
    let reach = 0.97 * lm.radius;
    let params = sample_params(d, reach, 37);
    let mut worst: f64 = 0.0;
    for t in params {
        let x = lm.point(body, &t)?;
        let y = lm.pull_in(body, &x)?;
        worst = worst.max(lm.graph_distance(&y));
    }
    Ok(worst)
}
