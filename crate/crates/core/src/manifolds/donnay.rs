//! Normal-curvature bump at a heteroclinic reflection point.

use crate::dynamics::{k_operator_from_surface, PhasePoint};
use crate::geometry::{Body, Bump};
use crate::linalg::{singular_values, symmetrize, Matrix};

use super::hetero::orbit_clearance;
use super::{
    projection_matrix, tangent_plane_operator, transversality_check, HeteroclinicDatum, ManifoldError, Transversality,
};

#[derive(Debug, Clone)]
pub struct DonnayPerturbation {
    pub body: Body,
    pub bump: Option<Bump>,
    pub epsilon: f64,
    /// Supremum of admissible `epsilon` for this bump support (convexity).
    pub epsilon0: f64,
    /// `-2 <v,N> (P^v_N)^* P^v_N` at `z`, in the canonical frame.
    pub omega: Matrix,
    /// Change of the curvature operator at `z` in the same frame.
    pub delta_k: Matrix,
}

/// `-2 <v,N> (P^v_N)^* P^v_N` in the frame `frame` at `x`.
pub fn omega_at(body: &Body, x: &PhasePoint, frame: &Matrix) -> Result<Matrix, ManifoldError> {
    let sd = body.surface(&x.s)?;
    let p = projection_matrix(&sd, &x.v, frame);
    Ok(symmetrize(&(p.transpose() * p * (-2.0 * x.cos_angle))))
}

/// Adds a bump centred at `pi(z)` whose second fundamental form there is
/// `epsilon` times the first, so the curvature operator at `z` shifts by
/// `epsilon * omega`. The support avoids both periodic orbits and the rest
/// of the orbit of `z`.
pub fn donnay_perturb(
    body: &Body,
    datum: &HeteroclinicDatum,
    epsilon: f64,
) -> Result<DonnayPerturbation, ManifoldError> {
    let z = &datum.z;
    let frame = &datum.frame().basis;
    let omega = omega_at(body, z, frame)?;
    let d = z.dim();

    let mut protected: Vec<_> = datum.source.base_points();
    protected.extend(datum.target.base_points());
    let gap = protected.iter().map(|p| (p - &z.p).norm()).fold(orbit_clearance(body, z), f64::min);
    let center = z.s.reanchored();
    let sd = body.surface(&center)?;
    let stretch = singular_values(&sd.tangents)[0];
    let radius = (gap / (4.5 * stretch)).min(0.95 * (1.0 - center.radius_sq().sqrt()));
    if !(radius > 1e-9) {
        return Err(ManifoldError::Support);
    }
    let bump_at = |eps: f64| Bump::new(center.clone(), radius, &sd.first_form * eps);

    let admissible = |eps: f64| body.perturb(bump_at(eps)).is_ok();
    let (mut lo, mut hi) = (0.0, 1e-3);
    while admissible(hi) && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let epsilon0 = lo;
    if !(epsilon >= 0.0 && epsilon < epsilon0) {
        return Err(ManifoldError::Epsilon { epsilon, epsilon0 });
    }
    if epsilon == 0.0 {
        return Ok(DonnayPerturbation {
            body: body.clone(),
            bump: None,
            epsilon,
            epsilon0,
            omega,
            delta_k: Matrix::zeros(d, d),
        });
    }
    let bump = bump_at(epsilon);
    let out = body.perturb(bump.clone())?;
    let before = k_operator_from_surface(&body.surface(&z.s)?, &z.v, frame)?;
    let after = k_operator_from_surface(&out.surface(&z.s)?, &z.v, frame)?;
    Ok(DonnayPerturbation { body: out, bump: Some(bump), epsilon, epsilon0, omega, delta_k: after - before })
}

/// Transversality of the datum's graphs after a shift by `epsilon`, with
/// both graphs converted to operators on the tangent plane at `pi(z)`.
pub fn transversality_at(body: &Body, datum: &HeteroclinicDatum, epsilon: f64) -> Result<Transversality, ManifoldError> {
    let z = &datum.z;
    let sd = body.surface(&z.s)?;
    let p = projection_matrix(&sd, &z.v, &datum.frame().basis);
    let convert = |m: &Matrix| tangent_plane_operator(m, &p).ok_or(ManifoldError::NotAGraph(f64::INFINITY));
    let a = convert(&datum.stable.matrix)?;
    let b = convert(&datum.unstable.matrix)?;
    Ok(transversality_check(&a, &b, epsilon, z.cos_angle))
}
