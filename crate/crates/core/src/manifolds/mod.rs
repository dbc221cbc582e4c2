//! Invariant manifolds of hyperbolic periodic orbits, heteroclinic
//! connections, and the normal-curvature perturbation that makes a
//! connection transverse.

mod donnay;
mod hetero;
mod local;
mod tangle;

pub use donnay::{donnay_perturb, omega_at, transversality_at, DonnayPerturbation};
pub use hetero::{find_heteroclinic, heteroclinic_datum, phase_coords, HeteroclinicDatum, HeteroclinicSearch};
pub use local::{local_manifold, LocalManifold, Side};
pub use tangle::{tangle_diagnostics, TangleReport};

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{tangent_map, DynamicsError, JacobiFrame, PhasePoint};
use crate::geometry::{Body, GeometryError, SurfaceData};
use crate::linalg::{min_singular_value, singular_values, symmetrize, Matrix};
use crate::orbits::OrbitError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("local manifold invariance defect {0:.3e} stays above 1e-8")]
    Invariance(f64),
    #[error("subspace is not a graph over the position coordinates (condition {0:.3e})")]
    NotAGraph(f64),
    #[error("global manifold growth needs a planar body")]
    NeedsPlanar,
    #[error("manifolds did not meet within the growth budget")]
    NoIntersection,
    #[error("epsilon {epsilon:.3e} is outside (0, {epsilon0:.3e})")]
    Epsilon { epsilon: f64, epsilon0: f64 },
    #[error("no bump support avoids the protected reflection points")]
    Support,
    #[error("orbit left the manifold tube after {0} steps")]
    Escaped(usize),
}

/// Tangent space `{(J, A J)}` in Jacobi coordinates of `frame`, with `A`
/// symmetric when the space is Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianGraph {
    pub frame: JacobiFrame,
    pub matrix: Matrix,
}

impl LagrangianGraph {
    /// Graph of the column span of a `2d x d` basis `[Y; Z]`, i.e. `A = Z Y^{-1}`.
    pub fn from_basis(frame: JacobiFrame, basis: &Matrix) -> Result<Self, ManifoldError> {
        let d = basis.ncols();
        let y = basis.rows(0, d).into_owned();
        let z = basis.rows(d, d).into_owned();
        let sv = singular_values(&y);
        let cond = sv[0] / sv[d - 1].max(f64::MIN_POSITIVE);
        if !(cond < 1e10) {
            return Err(ManifoldError::NotAGraph(cond));
        }
        let yi = y.try_inverse().ok_or(ManifoldError::NotAGraph(cond))?;
        Ok(Self { frame, matrix: z * yi })
    }

    pub fn basis(&self) -> Matrix {
        let d = self.matrix.nrows();
        let mut b = Matrix::zeros(2 * d, d);
        b.view_mut((0, 0), (d, d)).fill_with_identity();
        b.view_mut((d, 0), (d, d)).copy_from(&self.matrix);
        b
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).norm()
    }

    /// Image under one bounce, `A' = (K (I + tau A) + A)(I + tau A)^{-1}`.
    pub fn pushed(&self, body: &Body) -> Result<Self, ManifoldError> {
        let (m, frame) = tangent_map(body, &self.frame.base, &self.frame)?;
        let d = self.matrix.nrows();
        let tau = m[(0, d)];
        let k = m.view((d, 0), (d, d)).into_owned();
        let s = Matrix::identity(d, d) + &self.matrix * tau;
        let cond = {
            let sv = singular_values(&s);
            sv[0] / sv[d - 1].max(f64::MIN_POSITIVE)
        };
        let si = s.clone().try_inverse().ok_or(ManifoldError::NotAGraph(cond))?;
        Ok(Self { frame, matrix: (k * s + &self.matrix) * si })
    }
}

/// `P^v_N` from `v^perp` (frame coordinates) to the tangent plane in an
/// orthonormal tangent basis: projection along `v`.
pub fn projection_matrix(sd: &SurfaceData, v: &crate::linalg::Vector, frame: &Matrix) -> Matrix {
    let cos = v.dot(&sd.normal);
    let mut pe = frame.clone();
    for mut col in pe.column_iter_mut() {
        let k = col.dot(&sd.normal) / cos;
        col.axpy(-k, v, 1.0);
    }
    let u = sd.tangents.clone().qr().q().columns(0, sd.dim()).into_owned();
    u.transpose() * pe
}

/// Converts a graph matrix in frame coordinates, `P^* A P`, to the operator
/// `A` on the tangent plane.
pub fn tangent_plane_operator(graph: &Matrix, p: &Matrix) -> Option<Matrix> {
    let pi = p.clone().try_inverse()?;
    Some(symmetrize(&(pi.transpose() * graph * pi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transversality {
    pub transverse: bool,
    /// `sigma_min(B - A - 2 eps cos I)`.
    pub margin: f64,
    /// `sigma / (2 cos)` for the least nonzero singular value `sigma` of `B - A`;
    /// infinite when `A = B`.
    pub epsilon_bound: f64,
}

/// Transversality of the perturbed stable and unstable graphs at a
/// heteroclinic point, in tangent-plane operators.
pub fn transversality_check(a: &Matrix, b: &Matrix, epsilon: f64, cos_angle: f64) -> Transversality {
    let d = a.nrows();
    let diff = b - a;
    let shifted = &diff - Matrix::identity(d, d) * (2.0 * epsilon * cos_angle);
    let margin = min_singular_value(&shifted);
    let scale = 1e-12 * (1.0 + a.norm() + b.norm());
    let sigma = singular_values(&diff).into_iter().filter(|s| *s > scale).fold(f64::INFINITY, f64::min);
    let epsilon_bound = if sigma.is_finite() { sigma / (2.0 * cos_angle) } else { f64::INFINITY };
    Transversality { transverse: margin > scale, margin, epsilon_bound }
}

pub(crate) fn phase_distance_to(points: &[PhasePoint], x: &PhasePoint) -> f64 {
    points.iter().map(|q| q.distance(x)).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::iterate;
    use crate::geometry::ChartPoint;
    use crate::linalg::{min_principal_angle, Vector};

    #[test]
    fn equal_graphs_split_by_the_shift() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, -0.5]);
        let t = transversality_check(&a, &a, 0.1, 0.5);
        assert!(t.transverse);
        assert!((t.margin - 0.1).abs() < 1e-14);
        assert!(t.epsilon_bound.is_infinite());
    }

    #[test]
    fn shift_at_an_eigenvalue_is_not_transverse() {
        let a = Matrix::zeros(1, 1);
        let b = Matrix::from_element(1, 1, 0.3);
        let t = transversality_check(&a, &b, 0.3, 0.5);
        assert!(!t.transverse);
        assert!((t.epsilon_bound - 0.3).abs() < 1e-14);
    }

    #[test]
    fn graph_update_matches_subspace_propagation() {
        let body = Body::ellipsoid(&[1.4, 1.1, 0.9]).unwrap();
        let x = PhasePoint::new(&body, &ChartPoint::new(0, vec![0.1, 0.2]), &Vector::from_vec(vec![-1.0, 0.1, 0.3]))
            .unwrap();
        let frame = JacobiFrame::canonical(&x);
        let a = Matrix::from_row_slice(2, 2, &[0.4, -0.1, -0.1, 0.7]);
        let g = LagrangianGraph { frame: frame.clone(), matrix: a };
        let pushed = g.pushed(&body).unwrap();
        let tr = iterate(&body, &x, 1);
        let direct = &tr.monodromy * g.basis();
        assert!(min_principal_angle(&direct, &pushed.basis()) < 1e-9);
        assert!(pushed.symmetry_defect() < 1e-9);
    }
}
