//! First-order response of the billiard map to a normal displacement
//! `phi_eps = phi + eps * u * N` of the boundary.

use crate::geometry::{Body, Bump, ChartPoint, SurfaceData};
use crate::linalg::{Matrix, Vector};

use super::{ambient_derivative_inverse, bounce, AmbientTangent, DynamicsError, PhasePoint};

/// Scalar field on the boundary: value and tangential gradient at a point.
pub trait BoundaryField {
    fn eval(&self, s: &ChartPoint, sd: &SurfaceData) -> (f64, Vector);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl BoundaryField for ZeroField {
    fn eval(&self, _s: &ChartPoint, sd: &SurfaceData) -> (f64, Vector) {
        (0.0, Vector::zeros(sd.point.len()))
    }
}

/// Normal component of a bump displacement, `u = psi <n_b, N>`.
///
/// Adding `bump` scaled by `eps` to `body` moves the boundary by `eps * u` in
/// the normal direction up to a reparametrization and `O(eps^2)`.
#[derive(Debug, Clone)]
pub struct BumpField {
    pub bump: Bump,
    pub direction: Vector,
}

impl BumpField {
    pub fn new(body: &Body, bump: Bump) -> Result<Self, DynamicsError> {
        let direction = body.surface(&bump.center)?.normal;
        Ok(Self { bump, direction })
    }

    /// The body displaced by `eps` times this field.
    pub fn displaced(&self, body: &Body, eps: f64) -> Result<Body, DynamicsError> {
        let bump = Bump::new(self.bump.center.clone(), self.bump.radius, &self.bump.hessian * eps);
        Ok(body.add_bump(bump)?)
    }
}

impl BoundaryField for BumpField {
    fn eval(&self, s: &ChartPoint, sd: &SurfaceData) -> (f64, Vector) {
        let n = sd.point.len();
        let Some(psi) = self.bump.pulled_back(&s.jet()) else {
            return (0.0, Vector::zeros(n));
        };
        let d = sd.dim();
        let c = self.direction.dot(&sd.normal);
        let du = Vector::from_fn(d, |j, _| psi.grad[j] * c + psi.value * self.direction.dot(&sd.normal_derivative(j)));
        let g_inv: Matrix = sd.first_form.clone().try_inverse().expect("first form is SPD");
        (psi.value * c, &sd.tangents * (g_inv * du))
    }
}

/// The field `chi = (chi_1, chi_2)` at `x`, with `chi_1` tangent to the
/// boundary and `chi_2` orthogonal to `v`.
pub fn perturbation_field<F: BoundaryField + ?Sized>(
    body: &Body,
    field: &F,
    x: &PhasePoint,
) -> Result<AmbientTangent, DynamicsError> {
    let sd = body.surface(&x.s)?;
    let n = &sd.normal;
    let cos = x.v.dot(n);
    if cos <= super::GRAZING_TOL {
        return Err(DynamicsError::Grazing { cos });
    }
    let (u, grad_u) = field.eval(&x.s, &sd);
    let tangential_v = &x.v - n * cos;
    // Projection onto v^perp along N.
    let onto_vperp = |w: &Vector| w - n * (w.dot(&x.v) / cos);
    let chi1 = &tangential_v * (-2.0 * u / cos);
    let shape = sd.shape_operator();
    let chi2 = onto_vperp(&(&shape * &tangential_v)) * (2.0 * u) - onto_vperp(&grad_u) * (2.0 * cos);
    Ok(AmbientTangent { dp: chi1, dv: chi2 })
}

/// `(f^* chi)(x) = Df(x)^{-1} chi(f(x))`.
pub fn pullback_field<F: BoundaryField + ?Sized>(
    body: &Body,
    field: &F,
    x: &PhasePoint,
) -> Result<AmbientTangent, DynamicsError> {
    let y = bounce(body, x)?.next;
    let chi = perturbation_field(body, field, &y)?;
    ambient_derivative_inverse(body, x, &chi)
}

/// Generating function `h = 2 u <v, N>` of the field.
pub fn hamiltonian_h<F: BoundaryField + ?Sized>(body: &Body, field: &F, x: &PhasePoint) -> Result<f64, DynamicsError> {
    let sd = body.surface(&x.s)?;
    let (u, _) = field.eval(&x.s, &sd);
    Ok(2.0 * u * x.v.dot(&sd.normal))
}

/// `omega(a, b) = <a.dp, b.dv> - <b.dp, a.dv>`.
pub fn symplectic_pairing(a: &AmbientTangent, b: &AmbientTangent) -> f64 {
    a.dp.dot(&b.dv) - b.dp.dot(&a.dv)
}
