//! Periodic orbits: variational search, symplectic spectral classes,
//! hyperbolicity certificates and orbit-growth diagnostics.

mod entropy;
mod length;
mod search;
mod spectral;

pub use entropy::{count_and_entropy, lyapunov_exponent, EntropyReport, EntropyRow, LyapunovReport, LyapunovRun};
pub use length::{length_functional, length_jet, LengthJet};
pub use search::{find_periodic, polish, PeriodicSearch, SeedSpec};
pub use spectral::{
    classify, classify_matrix, hyperbolicity_certificate, HyperbolicityReport, SpectralClass, SpectralKind,
    DEFAULT_CLASSIFY_TOL,
};

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{iterate, DynamicsError, PhasePoint};
use crate::geometry::{Body, ChartPoint, GeometryError};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("period must be at least 2, got {0}")]
    Period(usize),
    #[error("consecutive vertices {0} and {1} coincide")]
    CoincidentVertices(usize, usize),
    #[error("orbit stopped early: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("monodromy spectrum is not closed under lambda -> 1/lambda (defect {0:.3e})")]
    NotSymplectic(f64),
    #[error("no hyperbolic splitting: {0}")]
    NotHyperbolic(String),
    #[error("rotation-class seeding needs a planar body, got boundary dimension {0}")]
    NeedsPlanar(usize),
    #[error("splitting angle {0:.3e} is below 1e-6")]
    IllConditioned(f64),
}

/// A closed billiard orbit with the data of its tangent cocycle.
///
/// Jacobi frames `F_0, .., F_{m-1}` are transported by reflection along the
/// orbit; the frame carried back to `x_0` after `m` bounces is identified
/// with `F_0` through the orthogonal matrix `F_m^T F_0`.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub period: usize,
    pub points: Vec<PhasePoint>,
    /// `taus[i]` is the flight time from `points[i]` to `points[i + 1]`.
    pub taus: Vec<f64>,
    /// `ks[i]` is the curvature operator at `points[i]` in `frames[i]`.
    pub ks: Vec<Matrix>,
    pub frames: Vec<Matrix>,
    /// `steps[i]` maps Jacobi coordinates at `points[i]` to `points[i + 1]`.
    pub steps: Vec<Matrix>,
    /// Derivative of `f^m` at `points[0]` in `frames[0]`.
    pub monodromy: Matrix,
    /// Phase-space distance between `f^m(points[0])` and `points[0]`.
    pub residual: f64,
    /// Perimeter of the bounce polygon.
    pub length: f64,
    /// Near-zero Hessian direction of the length functional at the orbit.
    pub family: bool,
    /// No reflection point is visited twice.
    pub simple: bool,
}

fn polar_orthogonal(q: &Matrix) -> Matrix {
    let svd = q.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

impl PeriodicOrbit {
    /// Orbit through `x0`, closed after `m` bounces.
    pub fn from_point(body: &Body, x0: &PhasePoint, m: usize) -> Result<Self, OrbitError> {
        if m < 2 {
            return Err(OrbitError::Period(m));
        }
        let trace = iterate(body, x0, m);
        if let Some(e) = trace.truncated {
            return Err(e.into());
        }
        let d = x0.dim();
        let q = polar_orthogonal(&(trace.frames[m].transpose() * &trace.frames[0]));
        let mut back = Matrix::zeros(2 * d, 2 * d);
        back.view_mut((0, 0), (d, d)).copy_from(&q.transpose());
        back.view_mut((d, d), (d, d)).copy_from(&q.transpose());
        let mut steps = trace.step_matrices();
        steps[m - 1] = &back * &steps[m - 1];
        let monodromy = &back * &trace.monodromy;
        let mut ks = Vec::with_capacity(m);
        ks.push(q.transpose() * &trace.ks[m - 1] * &q);
        ks.extend(trace.ks[..m - 1].iter().cloned());
        let residual = trace.points[m].distance(x0);
        let points: Vec<PhasePoint> = trace.points[..m].to_vec();
        let length = trace.taus.iter().sum();
        let simple = distinct_points(&points, 1e-7 * body.outer_radius());
        Ok(Self {
            period: m,
            points,
            taus: trace.taus,
            ks,
            frames: trace.frames[..m].to_vec(),
            steps,
            monodromy,
            residual,
            length,
            family: false,
            simple,
        })
    }

    /// Orbit through the closed polygon with vertices `pts`.
    pub fn from_vertices(body: &Body, pts: &[ChartPoint]) -> Result<Self, OrbitError> {
        let p0 = body.point(&pts[0]);
        let p1 = body.point(&pts[1 % pts.len()]);
        let x0 = PhasePoint::new(body, &pts[0], &(p1 - p0))?;
        Self::from_point(body, &x0, pts.len())
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn vertices(&self) -> Vec<ChartPoint> {
        self.points.iter().map(|x| x.s.clone()).collect()
    }

    /// Same orbit started at `points[j]`.
    pub fn rotated(&self, body: &Body, j: usize) -> Result<Self, OrbitError> {
        let mut o = Self::from_point(body, &self.points[j % self.period], self.period)?;
        o.family = self.family;
        Ok(o)
    }

    /// Derivative of `f^m` at `points[j]` in `frames[j]`, as a cyclic product.
    pub fn monodromy_at(&self, j: usize) -> Matrix {
        let m = self.period;
        let n = self.monodromy.nrows();
        (0..m).fold(Matrix::identity(n, n), |acc, i| &self.steps[(j + i) % m] * acc)
    }

    /// Largest distance from `f(points[i])` to `points[i + 1]`.
    pub fn closure_defect(&self, body: &Body) -> Result<f64, OrbitError> {
        let mut worst: f64 = 0.0;
        for i in 0..self.period {
            let y = crate::dynamics::billiard_map(body, &self.points[i])?;
            worst = worst.max(y.distance(&self.points[(i + 1) % self.period]));
        }
        Ok(worst)
    }

    pub fn base_points(&self) -> Vec<Vector> {
        self.points.iter().map(|x| x.p.clone()).collect()
    }

    /// Smallest distance between two of its reflection points.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.period {
            for j in i + 1..self.period {
                best = best.min((&self.points[i].p - &self.points[j].p).norm());
            }
        }
        best
    }
}

fn distinct_points(points: &[PhasePoint], tol: f64) -> bool {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (&points[i].p - &points[j].p).norm() < tol {
                return false;
            }
        }
    }
    true
}

/// Integers attached to the perturbation theory in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Constants {
    pub d: u64,
    pub k: u64,
    /// `4 * C(2d + 3, 4)`, the period threshold.
    pub m_d: u64,
    /// `C(2d + k, k + 1)`, the number of degree-`(k+1)` monomials in `2d` variables.
    pub ell: u64,
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub fn constants(d: u64, k: u64) -> Constants {
    Constants { d, k, m_d: 4 * binomial(2 * d + 3, 4), ell: binomial(2 * d + k, k + 1) }
}
