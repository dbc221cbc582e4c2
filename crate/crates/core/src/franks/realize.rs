//! Realizing a prescribed monodromy by curvature bumps at four consecutive
//! reflection points of a periodic orbit.

use crate::dynamics::{frame_to_chart, iterate};
use crate::geometry::{Body, Bump};
use crate::linalg::{lstsq, singular_values, symmetrize, symplectic_defect, symplectic_inverse, vec_of, Matrix};
use crate::orbits::PeriodicOrbit;

use super::{b_directional, b_map, f_property, window_directions, CurvatureProgram, FranksError, DEFAULT_FRANKS_TOL};

const MAX_NEWTON: usize = 50;
/// Largest Frobenius norm of the total curvature correction.
const TRUST_RADIUS: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct Realization {
    pub body: Body,
    /// One bump per window point; empty when the target is already met.
    pub bumps: Vec<Bump>,
    /// Curvature corrections in the transported frames of the window.
    pub delta_ks: Vec<Matrix>,
    pub iterations: usize,
    /// `|predicted monodromy - target|` at the end of the curvature Newton.
    pub residual: f64,
}

fn product(ms: &[Matrix], n: usize) -> Matrix {
    ms.iter().fold(Matrix::identity(n, n), |acc, m| m * acc)
}

/// A body that differs from `body` only near the reflection points
/// `points[start + 1 ..= start + 4]` (indices mod the period) and whose
/// monodromy along the same orbit is `target`. The window is the four
/// bounces `start .. start + 3`, so `start + 4 <= period`.
pub fn realize_target(
    body: &Body,
    orbit: &PeriodicOrbit,
    start: usize,
    target: &Matrix,
    delta: f64,
) -> Result<Realization, FranksError> {
    let m = orbit.period;
    let d = orbit.dim();
    let n = 2 * d;
    if start + 4 > m {
        return Err(FranksError::Window { start, end: start + 3, period: m });
    }
    if !orbit.simple {
        return Err(FranksError::NotSimple);
    }
    let defect = symplectic_defect(target);
    if target.shape() != (n, n) || defect > 1e-8 * (1.0 + target.norm_squared()) {
        return Err(FranksError::NotSymplectic(defect));
    }
    let distance = (target - &orbit.monodromy).norm();
    if distance >= delta {
        return Err(FranksError::TooFar { distance, delta });
    }
    if distance <= 1e-14 * (1.0 + target.norm()) {
        return Ok(Realization {
            body: body.clone(),
            bumps: Vec::new(),
            delta_ks: vec![Matrix::zeros(d, d); 4],
            iterations: 0,
            residual: distance,
        });
    }

    let trace = iterate(body, &orbit.points[0], m);
    if let Some(e) = trace.truncated.clone() {
        return Err(crate::orbits::OrbitError::from(e).into());
    }
    let raw = trace.step_matrices();
    // The orbit's monodromy is the traced one re-expressed in the starting frame.
    let back = &orbit.monodromy * symplectic_inverse(&trace.monodromy);
    let want = symplectic_inverse(&back) * target;
    let before = product(&raw[..start], n);
    let after = product(&raw[start + 4..], n);
    let ks0: [Matrix; 4] = std::array::from_fn(|i| trace.ks[start + i].clone());
    let taus: [f64; 4] = std::array::from_fn(|i| trace.taus[start + i]);

    let fp = f_property(&ks0[1], &ks0[2], taus[1], taus[2], taus[3], DEFAULT_FRANKS_TOL);
    if !fp.holds {
        return Err(FranksError::NotAdmissible { start, omega: fp.omega_min_singular, gap: fp.delta_eigen_gap });
    }
    let directions = window_directions(&CurvatureProgram::new(ks0.clone(), taus)?);

    let program = |c: &[f64]| -> Result<CurvatureProgram, FranksError> {
        let mut ks = ks0.clone();
        for ((slot, e), x) in directions.iter().zip(c) {
            ks[*slot] += e * *x;
        }
        for k in &mut ks {
            *k = symmetrize(k);
        }
        CurvatureProgram::new(ks, taus)
    };
    let residual_of = |p: &CurvatureProgram| (&after * b_map(p) * &before - &want).norm();

    let mut c = vec![0.0; directions.len()];
    let mut prog = program(&c)?;
    let mut res = residual_of(&prog);
    let goal = 1e-13 * (1.0 + want.norm());
    let mut iterations = 0;
    while res > goal && iterations < MAX_NEWTON {
        iterations += 1;
        let cols: Vec<_> = directions
            .iter()
            .map(|(slot, e)| vec_of(&(&after * b_directional(&prog, *slot, e) * &before)))
            .collect();
        let jac = crate::linalg::columns_to_matrix(&cols, n * n);
        let r = vec_of(&(&after * b_map(&prog) * &before - &want));
        let step = -lstsq(&jac, &r, 1e-12);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
            let p = program(&trial)?;
            let tr = residual_of(&p);
            if tr < res {
                c = trial;
                prog = p;
                res = tr;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        let size = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if size > TRUST_RADIUS {
            return Err(FranksError::TrustRegion(size));
        }
    }
    if res > 1e-10 * (1.0 + want.norm()) {
        return Err(FranksError::NewtonFailed(res));
    }

    let sep = orbit.min_separation();
    let mut out = body.clone();
    let mut bumps = Vec::with_capacity(4);
    let mut delta_ks = Vec::with_capacity(4);
    for i in 0..4 {
        let dk = symmetrize(&(&prog.ks[i] - &ks0[i]));
        let at = start + i + 1;
        let x = &trace.points[at];
        let center = orbit.points[at % m].s.clone();
        let sd = body.surface(&center)?;
        let a = frame_to_chart(&sd, &x.v, &trace.frames[at]);
        let a_inv = a.try_inverse().ok_or(FranksError::NotAdmissible { start, omega: 0.0, gap: 0.0 })?;
        // K = -2 cos A^T II A is linear in II at a fixed point and frame.
        let dii = symmetrize(&(a_inv.transpose() * &dk * &a_inv * (-0.5 / x.cos_angle)));
        let stretch = singular_values(&sd.tangents)[0];
        let cr = center.radius_sq().sqrt();
        let radius = (sep / (4.5 * stretch)).min(0.95 * (1.0 - cr));
        let bump = Bump::new(center, radius, dii);
        out = out.perturb(bump.clone())?;
        bumps.push(bump);
        delta_ks.push(dk);
    }
    Ok(Realization { body: out, bumps, delta_ks, iterations, residual: res })
}
