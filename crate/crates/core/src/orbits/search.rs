//! Critical points of the length functional, refined by shooting on `f^m`.

use rayon::prelude::*;

use crate::dynamics::{displaced_phase_point, iterate, jacobi_coords, JacobiFrame, PhasePoint};
use crate::geometry::{Body, ChartPoint};
use crate::linalg::{lstsq, Matrix, Vector};

use super::length::length_jet;
use super::{OrbitError, PeriodicOrbit};

/// Closure residual accepted for a periodic orbit.
pub const CLOSURE_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-7;

/// Where the search starts from.
#[derive(Debug, Clone)]
pub enum SeedSpec {
    /// Planar rotation class `(m, k)`: `count` regular-in-parameter polygons
    /// `theta_i = theta_0 + 2 pi k i / m` with `theta_0` spread over `[0, 2 pi / m)`.
    Rotation { k: usize, count: usize },
    /// Explicit vertex configurations, each of length `m`.
    Explicit(Vec<Vec<ChartPoint>>),
}

#[derive(Debug, Clone)]
pub struct PeriodicSearch {
    pub orbits: Vec<PeriodicOrbit>,
    /// Pairs of distinct orbits that share a reflection point.
    pub shared_reflection_points: Vec<(usize, usize)>,
    pub seeds_tried: usize,
}

fn rotation_seeds(m: usize, k: usize, count: usize) -> Vec<Vec<ChartPoint>> {
    let tau = std::f64::consts::TAU;
    (0..count)
        .map(|j| {
            let th0 = tau * j as f64 / (m * count) as f64;
            (0..m)
                .map(|i| {
                    let th = th0 + tau * (k * i) as f64 / m as f64;
                    ChartPoint::nearest_chart(&Vector::from_vec(vec![th.cos(), th.sin()]))
                })
                .collect()
        })
        .collect()
}

fn stacked(pts: &[ChartPoint]) -> Vector {
    Vector::from_iterator(pts.len() * pts[0].dim(), pts.iter().flat_map(|s| s.coords.iter().copied()))
}

/// Newton iteration on the gradient of the length functional with an
/// eigenvalue pseudo-inverse and a step cap. Returns the final vertices and
/// whether the Hessian has a near-zero eigenvalue there.
fn newton_length(body: &Body, seed: &[ChartPoint]) -> Option<(Vec<ChartPoint>, bool)> {
    let d = body.dim();
    let scale = body.outer_radius();
    let mut pts: Vec<ChartPoint> = seed.iter().map(|s| s.reanchored()).collect();
    for _ in 0..100 {
        let jet = length_jet(body, &pts, true).ok()?;
        let eig = jet.hessian.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let gnorm = jet.gradient.norm();
        if gnorm <= 1e-13 * scale {
            let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
            return Some((pts, lmin <= 1e-7 * lmax.max(1e-300)));
        }
        let mut step = Vector::zeros(jet.gradient.len());
        for (i, l) in eig.eigenvalues.iter().enumerate() {
            if l.abs() > 1e-10 * lmax {
                let q = eig.eigenvectors.column(i);
                step -= q * (q.dot(&jet.gradient) / l);
            }
        }
        let cap = 0.2;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        let c = stacked(&pts) + step;
        let mut next = Vec::with_capacity(pts.len());
        for (i, s) in pts.iter().enumerate() {
            let cp = ChartPoint::new(s.chart, c.rows(i * d, d).iter().copied().collect());
            if !cp.in_domain() {
                return None;
            }
            next.push(cp.reanchored());
        }
        pts = next;
    }
    None
}

/// Shooting refinement of a periodic point: Newton on `f^m(x) = x` in
/// Jacobi coordinates. Each iterate is kept only if it lowers the residual.
pub fn polish(body: &Body, orbit: &PeriodicOrbit, max_iter: usize) -> PeriodicOrbit {
    let m = orbit.period;
    let mut best = orbit.clone();
    for _ in 0..max_iter {
        if best.residual <= 1e-14 {
            break;
        }
        let x0 = &best.points[0];
        let frame = JacobiFrame::canonical(x0);
        let trace = iterate(body, x0, m);
        if trace.truncated.is_some() {
            break;
        }
        let r = jacobi_coords(&frame, trace.last());
        let n = r.len();
        let a = &best.monodromy - Matrix::identity(n, n);
        let xi = -lstsq(&a, &r, 1e-12);
        let Ok(x1) = displaced_phase_point(body, &frame, &xi) else { break };
        let Ok(mut cand) = PeriodicOrbit::from_point(body, &x1, m) else { break };
        if cand.residual < best.residual {
            cand.family = best.family;
            best = cand;
        } else {
            break;
        }
    }
    best
}

fn minimal_period_is(points: &[PhasePoint], m: usize, tol: f64) -> bool {
    (1..m).filter(|p| m % p == 0).all(|p| (0..m).any(|i| (&points[i].p - &points[(i + p) % m].p).norm() > tol))
}

/// Same base-point cycle up to cyclic shift and reversal.
fn same_cycle(a: &[Vector], b: &[Vector], tol: f64) -> bool {
    let m = a.len();
    if b.len() != m {
        return false;
    }
    (0..m).any(|shift| {
        let fwd = (0..m).all(|i| (&a[i] - &b[(i + shift) % m]).norm() < tol);
        let rev = (0..m).all(|i| (&a[i] - &b[(shift + m - i) % m]).norm() < tol);
        fwd || rev
    })
}

fn lex_less(a: &Vector, b: &Vector) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Re-roots the orbit at its lexicographically smallest reflection point and
/// orients it so the next point is the smaller of its two neighbours.
fn canonical(body: &Body, orbit: &PeriodicOrbit) -> Result<PeriodicOrbit, OrbitError> {
    let m = orbit.period;
    let pts = orbit.base_points();
    let mut j = 0;
    for i in 1..m {
        if lex_less(&pts[i], &pts[j]) {
            j = i;
        }
    }
    let next = &pts[(j + 1) % m];
    let prev = &pts[(j + m - 1) % m];
    let start = if m > 2 && lex_less(prev, next) {
        orbit.points[j].reversed(body)?
    } else {
        orbit.points[j].clone()
    };
    let mut o = PeriodicOrbit::from_point(body, &start, m)?;
    o.family = orbit.family;
    if o.residual > orbit.residual.max(CLOSURE_TOL) {
        o = polish(body, &o, 5);
    }
    Ok(o)
}

fn solve_seed(body: &Body, m: usize, seed: &[ChartPoint]) -> Option<PeriodicOrbit> {
    let (pts, family) = newton_length(body, seed)?;
    let mut orbit = PeriodicOrbit::from_vertices(body, &pts).ok()?;
    orbit.family = family;
    if orbit.residual > 1e-12 {
        orbit = polish(body, &orbit, 8);
    }
    let tol = DEDUP_TOL * body.outer_radius();
    (orbit.residual < CLOSURE_TOL && minimal_period_is(&orbit.points, m, tol)).then_some(orbit)
}

/// Periodic orbits of period `m` reached from the seeds, deduplicated up to
/// cyclic shift and reversal. One-parameter families keep one representative.
pub fn find_periodic(body: &Body, m: usize, seeds: &SeedSpec) -> Result<PeriodicSearch, OrbitError> {
    if m < 2 {
        return Err(OrbitError::Period(m));
    }
    let configs = match seeds {
        SeedSpec::Rotation { k, count } => {
            if body.dim() != 1 {
                return Err(OrbitError::NeedsPlanar(body.dim()));
            }
            rotation_seeds(m, *k, *count)
        }
        SeedSpec::Explicit(c) => c.iter().filter(|c| c.len() == m).cloned().collect(),
    };
    let found: Vec<Option<PeriodicOrbit>> = configs.par_iter().map(|c| solve_seed(body, m, c)).collect();
    let tol = DEDUP_TOL * body.outer_radius();
    let mut kept: Vec<PeriodicOrbit> = Vec::new();
    for o in found.into_iter().flatten() {
        let pts = o.base_points();
        let dup = kept.iter().any(|k| {
            same_cycle(&k.base_points(), &pts, tol)
                || (k.family && o.family && (k.length - o.length).abs() < 1e-9 * k.length)
        });
        if !dup {
            kept.push(o);
        }
    }
    let mut orbits: Vec<PeriodicOrbit> = kept.iter().map(|o| canonical(body, o)).collect::<Result<_, _>>()?;
    orbits.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then_with(|| if lex_less(&a.points[0].p, &b.points[0].p) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater })
    });
    let mut shared = Vec::new();
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            let close = orbits[i]
                .points
                .iter()
                .any(|x| orbits[j].points.iter().any(|y| (&x.p - &y.p).norm() < tol));
            if close {
                shared.push((i, j));
            }
        }
    }
    Ok(PeriodicSearch { orbits, shared_reflection_points: shared, seeds_tried: configs.len() })
}

/// Closure check by direct iteration, independent of the search.
#[cfg(test)]
pub(crate) fn closes(body: &Body, orbit: &PeriodicOrbit, tol: f64) -> bool {
    let mut x = orbit.points[0].clone();
    for _ in 0..orbit.period {
        match crate::dynamics::billiard_map(body, &x) {
            Ok(y) => x = y,
            Err(_) => return false,
        }
    }
    x.distance(&orbit.points[0]) < tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_two_orbits_are_the_axes() {
        let body = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        let res = find_periodic(&body, 2, &SeedSpec::Rotation { k: 1, count: 4 }).unwrap();
        assert_eq!(res.orbits.len(), 2);
        assert!((res.orbits[0].length - 4.0).abs() < 1e-10);
        assert!((res.orbits[1].length - 8.0).abs() < 1e-10);
        assert!(res.orbits.iter().all(|o| !o.family && closes(&body, o, 1e-9)));
        assert!(res.shared_reflection_points.is_empty());
    }

    #[test]
    fn circle_triangle_family() {
        let body = Body::sphere(2, 1.0).unwrap();
        let res = find_periodic(&body, 3, &SeedSpec::Rotation { k: 1, count: 5 }).unwrap();
        assert_eq!(res.orbits.len(), 1);
        let o = &res.orbits[0];
        assert!(o.family);
        assert!((o.length - 3.0 * 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn non_primitive_class_collapses() {
        let body = Body::ellipsoid(&[1.5, 1.0]).unwrap();
        let res = find_periodic(&body, 4, &SeedSpec::Rotation { k: 2, count: 3 }).unwrap();
        assert!(res.orbits.is_empty());
    }
}
