use crate::geometry::{Body, SurfaceData};
use crate::linalg::{bounce_block, symmetrize, Matrix, Vector};

use super::{bounce, reflect, DynamicsError, JacobiFrame, PhasePoint, GRAZING_TOL};

/// `K = -2 <v,N> (P^v_N)^* L P^v_N` in the frame `e`, where `P^v_N` projects
/// `v^perp` onto the tangent plane along `v`.
pub fn k_operator_from_surface(sd: &SurfaceData, v: &Vector, e: &Matrix) -> Result<Matrix, DynamicsError> {
    let cos = v.dot(&sd.normal);
    if cos <= GRAZING_TOL {
        return Err(DynamicsError::Grazing { cos });
    }
    let a = frame_to_chart(sd, v, e);
    Ok(symmetrize(&(a.transpose() * &sd.second_form * a * (-2.0 * cos))))
}

/// Chart coordinates of the frame vectors after projecting them onto the
/// tangent plane along `v`; `K` is `-2 <v,N> A^T II A` for this matrix `A`.
pub fn frame_to_chart(sd: &SurfaceData, v: &Vector, e: &Matrix) -> Matrix {
    let cos = v.dot(&sd.normal);
    let mut pe = e.clone();
    for mut col in pe.column_iter_mut() {
        let k = col.dot(&sd.normal) / cos;
        col.axpy(-k, v, 1.0);
    }
    let g_inv = sd.first_form.clone().try_inverse().expect("first form is SPD");
    g_inv * sd.tangents.transpose() * pe
}

pub fn k_operator(body: &Body, x: &PhasePoint, frame: &JacobiFrame) -> Result<Matrix, DynamicsError> {
    let sd = body.surface(&x.s)?;
    k_operator_from_surface(&sd, &x.v, &frame.basis)
}

/// One-bounce derivative in Jacobi coordinates. The frame at the new point is
/// the reflection of `frame`, and the matrix is `[[I, tau I], [K, I + tau K]]`.
pub fn tangent_map(body: &Body, x: &PhasePoint, frame: &JacobiFrame) -> Result<(Matrix, JacobiFrame), DynamicsError> {
    let b = bounce(body, x)?;
    let e = reflect_columns(&frame.basis, &b.surface.normal);
    let k = k_operator_from_surface(&b.surface, &b.next.v, &e)?;
    Ok((bounce_block(&k, b.tau), JacobiFrame { base: b.next, basis: e }))
}

/// Tangent vector to phase space in ambient form: `dp` tangent to the
/// boundary at `p`, `dv` orthogonal to `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientTangent {
    pub dp: Vector,
    pub dv: Vector,
}

impl AmbientTangent {
    pub fn norm(&self) -> f64 {
        (self.dp.norm_squared() + self.dv.norm_squared()).sqrt()
    }
}

fn project_along(w: &Vector, onto_normal: &Vector, along: &Vector) -> Vector {
    w - along * (w.dot(onto_normal) / along.dot(onto_normal))
}

fn ambient_k(k: &Matrix, e: &Matrix) -> Matrix {
    e * k * e.transpose()
}

/// `Df(x)` acting on ambient tangent vectors.
pub fn ambient_derivative(body: &Body, x: &PhasePoint, xi: &AmbientTangent) -> Result<AmbientTangent, DynamicsError> {
    let frame = JacobiFrame::canonical(x);
    let b = bounce(body, x)?;
    let n_bar = &b.surface.normal;
    let e_bar = reflect_columns(&frame.basis, n_bar);
    let k = ambient_k(&k_operator_from_surface(&b.surface, &b.next.v, &e_bar)?, &e_bar);
    let j = &xi.dp - &x.v * xi.dp.dot(&x.v);
    let jp = &xi.dv - &x.v * xi.dv.dot(&x.v);
    let j_bar = reflect(&(j + &jp * b.tau), n_bar);
    let jp_bar = reflect(&jp, n_bar) + &k * &j_bar;
    Ok(AmbientTangent { dp: project_along(&j_bar, n_bar, &b.next.v), dv: jp_bar })
}

/// `Df(x)^{-1}` applied to a tangent vector based at `f(x)`.
pub fn ambient_derivative_inverse(
    body: &Body,
    x: &PhasePoint,
    xi_bar: &AmbientTangent,
) -> Result<AmbientTangent, DynamicsError> {
    let frame = JacobiFrame::canonical(x);
    let b = bounce(body, x)?;
    let n_bar = &b.surface.normal;
    let v_bar = &b.next.v;
    let e_bar = reflect_columns(&frame.basis, n_bar);
    let k = ambient_k(&k_operator_from_surface(&b.surface, v_bar, &e_bar)?, &e_bar);
    let j_bar = &xi_bar.dp - v_bar * xi_bar.dp.dot(v_bar);
    let jp_bar = &xi_bar.dv - v_bar * xi_bar.dv.dot(v_bar);
    let jp = reflect(&(jp_bar - &k * &j_bar), n_bar);
    let j = reflect(&j_bar, n_bar) - &jp * b.tau;
    let n = body.surface(&x.s)?.normal;
    Ok(AmbientTangent { dp: project_along(&j, &n, &x.v), dv: jp })
}

/// Reflects every column of `e` across the hyperplane orthogonal to `n`.
pub fn reflect_columns(e: &Matrix, n: &Vector) -> Matrix {
    let mut out = e.clone();
    for mut col in out.column_iter_mut() {
        let r = reflect(&col.clone_owned(), n);
        col.copy_from(&r);
    }
    out
}

/// `n` bounces with transported frames and the accumulated monodromy.
#[derive(Debug, Clone)]
pub struct OrbitTrace {
    /// `points[0]` is the start, `points[i]` the phase point after `i` bounces.
    pub points: Vec<PhasePoint>,
    pub taus: Vec<f64>,
    /// Curvature operator at `points[i + 1]` in `frames[i + 1]`.
    pub ks: Vec<Matrix>,
    pub frames: Vec<Matrix>,
    /// Product of the per-bounce matrices, latest on the left.
    pub monodromy: Matrix,
    /// Set when the run stopped early.
    pub truncated: Option<DynamicsError>,
}

impl OrbitTrace {
    pub fn steps(&self) -> usize {
        self.taus.len()
    }

    pub fn cos_angles(&self) -> Vec<f64> {
        self.points.iter().map(|x| x.cos_angle).collect()
    }

    /// Per-bounce matrices `[[I, tau I], [K, I + tau K]]`.
    pub fn step_matrices(&self) -> Vec<Matrix> {
        self.ks.iter().zip(&self.taus).map(|(k, t)| bounce_block(k, *t)).collect()
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().expect("trace holds its start point")
    }
}

/// Iterates from `x` with the canonical initial frame.
pub fn iterate(body: &Body, x: &PhasePoint, n: usize) -> OrbitTrace {
    iterate_from(body, &JacobiFrame::canonical(x), n)
}

pub fn iterate_from(body: &Body, frame: &JacobiFrame, n: usize) -> OrbitTrace {
    let d = frame.basis.ncols();
    let mut trace = OrbitTrace {
        points: vec![frame.base.clone()],
        taus: Vec::with_capacity(n),
        ks: Vec::with_capacity(n),
        frames: vec![frame.basis.clone()],
        monodromy: Matrix::identity(2 * d, 2 * d),
        truncated: None,
    };
    let mut fr = frame.clone();
    for _ in 0..n {
        match tangent_map(body, &fr.base, &fr) {
            Ok((m, next)) => {
                let k = m.view((d, 0), (d, d)).into_owned();
                trace.taus.push(m[(0, d)]);
                trace.ks.push(k);
                trace.monodromy = &m * &trace.monodromy;
                trace.points.push(next.base.clone());
                trace.frames.push(next.basis.clone());
                fr = next;
            }
            Err(e) => {
                trace.truncated = Some(e);
                break;
            }
        }
    }
    trace
}
