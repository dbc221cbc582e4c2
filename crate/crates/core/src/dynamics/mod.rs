//! The billiard map, its exact derivative in Jacobi coordinates, and the
//! first-order effect of a normal perturbation of the boundary.
//!
//! Phase points carry the *outgoing* unit velocity at a boundary point, so
//! `<v, N(p)> >= 0` with `N` the inward normal. Jacobi frames are orthonormal
//! bases of `v^perp`; along an orbit they are pushed by the reflection at each
//! new point, which makes every one-bounce derivative the block matrix
//! `[[I, tau I], [K, I + tau K]]` with `K` the curvature operator at the new
//! point.

mod field;
mod tangent;

pub use field::{hamiltonian_h, perturbation_field, pullback_field, symplectic_pairing, BoundaryField, BumpField, ZeroField};
pub use tangent::{
    ambient_derivative, ambient_derivative_inverse, iterate, iterate_from, k_operator, k_operator_from_surface,
    frame_to_chart, reflect_columns, tangent_map, AmbientTangent, OrbitTrace,
};

use thiserror::Error;

use crate::geometry::{Body, ChartPoint, GeometryError, SurfaceData};
use crate::linalg::{orthogonal_complement, columns_to_matrix, Matrix, Vector};

/// Rays with `<v, N> <= GRAZING_TOL` are treated as tangent to the boundary.
pub const GRAZING_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("grazing ray: <v, N> = {cos:.3e}")]
    Grazing { cos: f64 },
    #[error("collision solve failed from chart {}:{:?}", at.chart, at.coords)]
    NewtonDivergence { at: ChartPoint },
    #[error("velocity points out of the body: <v, N> = {cos:.3e}")]
    Outward { cos: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub s: ChartPoint,
    pub p: Vector,
    pub v: Vector,
    pub cos_angle: f64,
}

/// Reflection across the tangent hyperplane with unit normal `n`.
pub fn reflect(w: &Vector, n: &Vector) -> Vector {
    w - n * (2.0 * w.dot(n))
}

impl PhasePoint {
    /// Phase point at `s` with velocity `v` (normalized here).
    pub fn new(body: &Body, s: &ChartPoint, v: &Vector) -> Result<Self, DynamicsError> {
        let sd = body.surface(s)?;
        Self::on_surface(&sd, s, v)
    }

    pub(crate) fn on_surface(sd: &SurfaceData, s: &ChartPoint, v: &Vector) -> Result<Self, DynamicsError> {
        let v = v.normalize();
        let cos = v.dot(&sd.normal);
        if cos < 0.0 {
            return Err(DynamicsError::Outward { cos });
        }
        Ok(Self { s: s.clone(), p: sd.point.clone(), v, cos_angle: cos })
    }

    /// Phase point at `s` whose velocity makes angle `theta` with the inward
    /// normal, tilted along the unit tangent direction `dir` (ambient).
    pub fn from_angle(body: &Body, s: &ChartPoint, dir: &Vector, theta: f64) -> Result<Self, DynamicsError> {
        let sd = body.surface(s)?;
        let mut t = dir - &sd.normal * dir.dot(&sd.normal);
        t.normalize_mut();
        let v = &sd.normal * theta.cos() + t * theta.sin();
        Self::on_surface(&sd, s, &v)
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// Time reversal `(p, v) -> (p, -R_p v)`: the reversed outgoing velocity
    /// is the negated incoming one.
    pub fn reversed(&self, body: &Body) -> Result<Self, DynamicsError> {
        let sd = body.surface(&self.s)?;
        let w = -reflect(&self.v, &sd.normal);
        Self::on_surface(&sd, &self.s, &w)
    }

    /// Euclidean distance in `R^{d+1} x R^{d+1}`.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        ((&self.p - &other.p).norm_squared() + (&self.v - &other.v).norm_squared()).sqrt()
    }
}

/// Orthonormal basis of `v^perp` at a phase point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiFrame {
    pub base: PhasePoint,
    /// `(d+1) x d`, orthonormal columns orthogonal to `base.v`.
    pub basis: Matrix,
}

impl JacobiFrame {
    /// Deterministic frame obtained by Gram-Schmidt on the coordinate axes.
    pub fn canonical(x: &PhasePoint) -> Self {
        let n = x.v.len();
        let cols = orthogonal_complement(std::slice::from_ref(&x.v), n);
        Self { base: x.clone(), basis: columns_to_matrix(&cols, n) }
    }

    /// Frame rotated by an orthogonal `d x d` matrix, so `e'_j = sum_i e_i Q_ij`.
    pub fn rotated(&self, q: &Matrix) -> Self {
        Self { base: self.base.clone(), basis: &self.basis * q }
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.basis.ncols();
        let gram = self.basis.transpose() * &self.basis - Matrix::identity(d, d);
        gram.norm() + (self.basis.transpose() * &self.base.v).norm()
    }
}

/// Phase point whose line is displaced from `frame.base` by the Jacobi
/// coordinates `xi = (a, b)`: through `p + E a`, direction `v + E b`.
pub fn displaced_phase_point(body: &Body, frame: &JacobiFrame, xi: &Vector) -> Result<PhasePoint, DynamicsError> {
    let d = frame.basis.ncols();
    let x = &frame.base;
    let q = &x.p + &frame.basis * xi.rows(0, d);
    let w = (&x.v + &frame.basis * xi.rows(d, d)).normalize();
    let (s, _) = body
        .intersect_line(&q, &w, &x.s, 0.0)
        .ok_or_else(|| DynamicsError::NewtonDivergence { at: x.s.clone() })?;
    PhasePoint::new(body, &s, &w)
}

/// Jacobi coordinates of the line of `y` relative to the frame at `x`.
pub fn jacobi_coords(frame: &JacobiFrame, y: &PhasePoint) -> Vector {
    let d = frame.basis.ncols();
    let x = &frame.base;
    let dp = &y.p - &x.p;
    // Slide along the line of y back to the hyperplane through p orthogonal to v.
    let t = -dp.dot(&x.v) / y.v.dot(&x.v);
    let a = frame.basis.transpose() * (dp + &y.v * t);
    // Exact inverse of the direction map `b -> normalize(v + E b)`.
    let b = frame.basis.transpose() * &y.v / y.v.dot(&x.v);
    let mut out = Vector::zeros(2 * d);
    out.rows_mut(0, d).copy_from(&a);
    out.rows_mut(d, d).copy_from(&b);
    out
}

/// Outcome of one bounce.
#[derive(Debug, Clone)]
pub struct Bounce {
    pub next: PhasePoint,
    pub tau: f64,
    pub surface: SurfaceData,
}

/// Flight time and next boundary point along the ray of `x`.
pub fn free_flight(body: &Body, x: &PhasePoint) -> Result<(f64, ChartPoint), DynamicsError> {
    let (tau, s, _) = flight(body, x)?;
    Ok((tau, s))
}

fn ellipsoid_far_root(axes: &[f64], p: &Vector, v: &Vector) -> Option<f64> {
    let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
    for k in 0..axes.len() {
        let inv = 1.0 / (axes[k] * axes[k]);
        a += v[k] * v[k] * inv;
        b += 2.0 * p[k] * v[k] * inv;
        c += p[k] * p[k] * inv;
    }
    let disc = b * b - 4.0 * a * c;
    (disc >= 0.0).then(|| (-b + disc.sqrt()) / (2.0 * a))
}

fn flight(body: &Body, x: &PhasePoint) -> Result<(f64, ChartPoint, SurfaceData), DynamicsError> {
    if x.cos_angle <= GRAZING_TOL {
        return Err(DynamicsError::Grazing { cos: x.cos_angle });
    }
    let scale = 2.0 * body.outer_radius();
    let accept = |s: ChartPoint, t: f64| -> Option<(f64, ChartPoint)> {
        if !(t > 1e-9 * scale) {
            return None;
        }
        let mid = &x.p + &x.v * (0.5 * t);
        body.contains(&mid).then_some((t, s))
    };
    let mut found = None;
    if let Some(t0) = ellipsoid_far_root(body.semi_axes(), &x.p, &x.v) {
        let q = &x.p + &x.v * t0;
        let y0 = q.component_div(&Vector::from_column_slice(body.semi_axes())).normalize();
        if let Some((s, t)) = body.intersect_line(&x.p, &x.v, &ChartPoint::nearest_chart(&y0), t0) {
            found = accept(s, t);
        }
    }
    if found.is_none() {
        found = bisect_flight(body, x, scale).and_then(|(s, t)| accept(s, t));
    }
    let (tau, s) = found.ok_or_else(|| DynamicsError::NewtonDivergence { at: x.s.clone() })?;
    let sd = body.surface(&s)?;
    Ok((tau, s, sd))
}

/// Bracketing fallback on the inside indicator along the ray, then a Newton
/// polish from the bracket.
fn bisect_flight(body: &Body, x: &PhasePoint, scale: f64) -> Option<(ChartPoint, f64)> {
    let mut lo = 1e-7 * scale;
    if !body.contains(&(&x.p + &x.v * lo)) {
        return None;
    }
    let mut hi = scale;
    while body.contains(&(&x.p + &x.v * hi)) {
        hi *= 2.0;
        if hi > 1e3 * scale {
            return None;
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if body.contains(&(&x.p + &x.v * mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = &x.p + &x.v * hi;
    let (seed, _) = body.radial(&q)?;
    body.intersect_line(&x.p, &x.v, &seed, hi)
}

/// One bounce with the surface data at the new point.
pub fn bounce(body: &Body, x: &PhasePoint) -> Result<Bounce, DynamicsError> {
    let (tau, s, sd) = flight(body, x)?;
    let mut v = reflect(&x.v, &sd.normal);
    v.normalize_mut();
    let cos = v.dot(&sd.normal);
    let next = PhasePoint { s, p: sd.point.clone(), v, cos_angle: cos.max(0.0) };
    Ok(Bounce { next, tau, surface: sd })
}

pub fn billiard_map(body: &Body, x: &PhasePoint) -> Result<PhasePoint, DynamicsError> {
    Ok(bounce(body, x)?.next)
}

/// Inverse billiard map through time reversal, `f^{-1} = I f I`.
pub fn billiard_map_inverse(body: &Body, x: &PhasePoint) -> Result<PhasePoint, DynamicsError> {
    billiard_map(body, &x.reversed(body)?)?.reversed(body)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> Body {
        Body::sphere(2, 1.0).unwrap()
    }

    #[test]
    fn jacobi_chart_inverts_displacement() {
        let body = Body::ellipsoid(&[1.4, 1.1, 0.9]).unwrap();
        let x = PhasePoint::new(&body, &ChartPoint::new(1, vec![0.1, -0.2]), &Vector::from_vec(vec![0.3, -1.0, 0.2]))
            .unwrap();
        let frame = JacobiFrame::canonical(&x);
        let xi = Vector::from_vec(vec![0.2, -0.1, 0.3, 0.25]);
        let y = displaced_phase_point(&body, &frame, &xi).unwrap();
        assert!((jacobi_coords(&frame, &y) - xi).norm() < 1e-13);
    }

    #[test]
    fn diameter_of_unit_circle() {
        let body = circle();
        let x = PhasePoint::new(&body, &ChartPoint::pole(0, 1), &Vector::from_vec(vec![-1.0, 0.0])).unwrap();
        let (tau, s) = free_flight(&body, &x).unwrap();
        assert!((tau - 2.0).abs() < 1e-12);
        assert!((body.point(&s) - Vector::from_vec(vec![-1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn circle_chord_length_and_angle_advance() {
        let body = circle();
        for psi in [0.3f64, 0.9, 1.4] {
            let s = ChartPoint::pole(0, 1);
            let x = PhasePoint::from_angle(&body, &s, &Vector::from_vec(vec![0.0, 1.0]), std::f64::consts::FRAC_PI_2 - psi)
                .unwrap();
            let b = bounce(&body, &x).unwrap();
            assert!((b.tau - 2.0 * psi.sin()).abs() < 1e-12);
            let angle = b.next.p[1].atan2(b.next.p[0]);
            assert!((angle - 2.0 * psi).abs() < 1e-12);
            assert!((b.next.cos_angle - psi.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_north_pole_to_antipode() {
        let body = Body::sphere(3, 1.0).unwrap();
        let x = PhasePoint::new(&body, &ChartPoint::pole(4, 2), &Vector::from_vec(vec![0.0, 0.0, -1.0])).unwrap();
        let b = bounce(&body, &x).unwrap();
        assert!((b.tau - 2.0).abs() < 1e-12);
        assert!((b.next.p[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn grazing_is_rejected() {
        let body = circle();
        let x = PhasePoint::new(&body, &ChartPoint::pole(0, 1), &Vector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!(matches!(free_flight(&body, &x), Err(DynamicsError::Grazing { .. })));
    }

    #[test]
    fn inverse_undoes_map() {
        let body = Body::ellipsoid(&[1.4, 1.1, 0.9]).unwrap();
        let x = PhasePoint::new(&body, &ChartPoint::new(2, vec![0.3, -0.2]), &Vector::from_vec(vec![0.2, -0.9, 0.3]))
            .unwrap();
        let y = billiard_map(&body, &x).unwrap();
        let back = billiard_map_inverse(&body, &y).unwrap();
        assert!(back.distance(&x) < 1e-12);
    }

    #[test]
    fn canonical_frame_is_orthonormal() {
        let body = Body::ellipsoid(&[1.4, 1.1, 0.9]).unwrap();
        let x = PhasePoint::new(&body, &ChartPoint::new(2, vec![0.3, -0.2]), &Vector::from_vec(vec![0.2, -0.9, 0.3]))
            .unwrap();
        assert!(JacobiFrame::canonical(&x).orthonormality_defect() < 1e-14);
    }
}
