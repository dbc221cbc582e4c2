//! Finite-difference references used to verify the analytic derivatives.

use crate::dynamics::{billiard_map, reflect_columns, DynamicsError, JacobiFrame};
use crate::geometry::Body;
use crate::linalg::{Matrix, Vector};

pub use crate::dynamics::{displaced_phase_point, jacobi_coords};

/// Central-difference matrix of the billiard map in Jacobi coordinates,
/// with the target frame obtained by reflecting `frame` at the new point.
pub fn fd_tangent_map(body: &Body, frame: &JacobiFrame, h: f64) -> Result<Matrix, DynamicsError> {
    let d = frame.basis.ncols();
    let x_bar = billiard_map(body, &frame.base)?;
    let n_bar = body.surface(&x_bar.s)?.normal;
    let e_bar = reflect_columns(&frame.basis, &n_bar);
    let target = JacobiFrame { base: x_bar, basis: e_bar };
    let mut m = Matrix::zeros(2 * d, 2 * d);
    for k in 0..2 * d {
        let mut xi = Vector::zeros(2 * d);
        xi[k] = h;
        let plus = billiard_map(body, &displaced_phase_point(body, frame, &xi)?)?;
        let minus = billiard_map(body, &displaced_phase_point(body, frame, &(-xi))?)?;
        let col = (jacobi_coords(&target, &plus) - jacobi_coords(&target, &minus)) / (2.0 * h);
        m.set_column(k, &col);
    }
    Ok(m)
}

/// Central-difference gradient of a scalar function of `R^n`.
pub fn fd_gradient(f: impl Fn(&Vector) -> f64, x: &Vector, h: f64) -> Vector {
    Vector::from_fn(x.len(), |i, _| {
        let mut p = x.clone();
        p[i] += h;
        let mut m = x.clone();
        m[i] -= h;
        (f(&p) - f(&m)) / (2.0 * h)
    })
}
