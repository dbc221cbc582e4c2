//! Heteroclinic points of planar billiards from grown stable and unstable
//! curves.

use std::collections::HashMap;

use crate::dynamics::{billiard_map, billiard_map_inverse, iterate, JacobiFrame, PhasePoint};
use crate::geometry::Body;
use crate::linalg::{min_principal_angle, symplectic_inverse, Matrix, Vector};
use crate::orbits::{hyperbolicity_certificate, HyperbolicityReport, PeriodicOrbit};

use super::{local_manifold, phase_distance_to, LagrangianGraph, LocalManifold, ManifoldError, Side};

/// Largest gap between neighbouring curve samples in phase coordinates.
const MAX_GAP: f64 = 0.02;
const MAX_SAMPLES: usize = 40_000;
const CELL: f64 = 0.05;
const MAX_CANDIDATES: usize = 4000;
/// Crossings flatter than this are points of a surviving coincident arc.
const MIN_ANGLE: f64 = 1e-6;
/// Convergence radius used to certify asymptotics.
const CONVERGED: f64 = 1e-6;
/// Distance from the orbit at which the linear eigenspaces are trusted.
const NEAR: f64 = 1e-4;
const LOCAL_ORDER: usize = 7;
/// Sine of the smallest crossing angle between segments that is refined.
const PARALLEL: f64 = 1e-3;
/// Bounces of a heteroclinic orbit checked for clearance on each side.
pub(crate) const ORBIT_REACH: usize = 60;

/// A point `z` of `W^s(O(x)) ∩ W^u(O(y))` with both tangent spaces as
/// graphs in the canonical frame at `z`.
#[derive(Debug, Clone)]
pub struct HeteroclinicDatum {
    /// The orbit `z` converges to in forward time.
    pub source: PeriodicOrbit,
    /// The orbit `z` converges to in backward time.
    pub target: PeriodicOrbit,
    pub z: PhasePoint,
    pub stable: LagrangianGraph,
    pub unstable: LagrangianGraph,
    /// Smallest principal angle between the two tangent spaces.
    pub angle: f64,
    /// The unstable branch through `z` lies inside the stable manifold.
    pub coincident: bool,
    /// Bounces until `f^n(z)` is within `1e-6` of `O(x)`.
    pub forward_steps: Option<usize>,
    /// Bounces until `f^{-n}(z)` is within `1e-6` of `O(y)`.
    pub backward_steps: Option<usize>,
}

impl HeteroclinicDatum {
    pub fn frame(&self) -> &JacobiFrame {
        &self.stable.frame
    }
}

#[derive(Debug, Clone)]
pub struct HeteroclinicSearch {
    pub data: Vec<HeteroclinicDatum>,
    /// Segment crossings that were handed to the refinement.
    pub candidates: usize,
    /// Refined crossings with angle below `1e-6`, dropped from `data`.
    pub tangencies: usize,
    /// Refined crossings whose asymptotics could not be certified to `1e-6`.
    pub uncertified: usize,
    pub coincident_branches: usize,
}

/// Polar angle of the reflection point and the sine of the signed angle
/// from the inward normal to the velocity, for planar bodies.
pub fn phase_coords(body: &Body, x: &PhasePoint) -> Result<(f64, f64), ManifoldError> {
    if x.dim() != 1 {
        return Err(ManifoldError::NeedsPlanar);
    }
    let n = body.surface(&x.s)?.normal;
    Ok((x.p[1].atan2(x.p[0]), n[0] * x.v[1] - n[1] * x.v[0]))
}

fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    a - t * ((a + std::f64::consts::PI) / t).floor()
}

fn coord_gap(a: (f64, f64), b: (f64, f64)) -> f64 {
    wrap(b.0 - a.0).hypot(b.1 - a.1)
}

/// One branch of a grown manifold after `level` single bounces.
struct Branch {
    sign: f64,
    level: usize,
    samples: Vec<(f64, Option<(PhasePoint, (f64, f64))>)>,
}

struct Grower<'a> {
    body: &'a Body,
    lm: LocalManifold,
    t0: f64,
    lambda: f64,
}

impl Grower<'_> {
    fn image(&self, sign: f64, s: f64, level: usize) -> Option<PhasePoint> {
        let t = Vector::from_element(1, sign * self.t0 * self.lambda.powf(s));
        let mut y = self.lm.point(self.body, &t).ok()?;
        for _ in 0..level {
            y = match self.lm.side {
                Side::Unstable => billiard_map(self.body, &y).ok()?,
                Side::Stable => billiard_map_inverse(self.body, &y).ok()?,
            };
        }
        Some(y)
    }

    fn sample(&self, sign: f64, s: f64, level: usize) -> Option<(PhasePoint, (f64, f64))> {
        let y = self.image(sign, s, level)?;
        let c = phase_coords(self.body, &y).ok()?;
        Some((y, c))
    }

    fn branch(&self, sign: f64, level: usize) -> Branch {
        let mut samples: Vec<_> = (0..=64).map(|i| i as f64 / 64.0).map(|s| (s, self.sample(sign, s, level))).collect();
        loop {
            let mut next = Vec::with_capacity(samples.len() * 2);
            let mut inserted = false;
            for w in samples.windows(2) {
                next.push(w[0].clone());
                let wide = match (&w[0].1, &w[1].1) {
                    (Some(a), Some(b)) => coord_gap(a.1, b.1) > MAX_GAP,
                    _ => true,
                };
                if wide && w[1].0 - w[0].0 > 1e-9 && samples.len() + next.len() < MAX_SAMPLES {
                    let s = 0.5 * (w[0].0 + w[1].0);
                    next.push((s, self.sample(sign, s, level)));
                    inserted = true;
                }
            }
            next.push(samples.last().expect("nonempty").clone());
            samples = next;
            if !inserted || samples.len() >= MAX_SAMPLES {
                break;
            }
        }
        Branch { sign, level, samples }
    }
}

fn grower<'a>(body: &'a Body, orbit: &PeriodicOrbit, side: Side) -> Result<Grower<'a>, ManifoldError> {
    let lm = local_manifold(body, orbit, side, LOCAL_ORDER)?;
    let lambda = lm.expansion();
    let t0 = 0.9 * lm.radius / lambda;
    Ok(Grower { body, lm, t0, lambda })
}

/// Segments `(branch, i)` joining samples `i` and `i + 1`, with unwrapped end
/// coordinates.
fn segments(branches: &[Branch]) -> Vec<(usize, usize, [f64; 4])> {
    let mut out = Vec::new();
    for (bi, b) in branches.iter().enumerate() {
        for (i, w) in b.samples.windows(2).enumerate() {
            if let (Some(p), Some(q)) = (&w[0].1, &w[1].1) {
                let (a, c) = (p.1, q.1);
                let dth = wrap(c.0 - a.0);
                if coord_gap(a, c) < 4.0 * MAX_GAP {
                    out.push((bi, i, [a.0, a.1, a.0 + dth, c.1]));
                }
            }
        }
    }
    out
}

fn cells(seg: &[f64; 4]) -> impl Iterator<Item = (i64, i64)> {
    let (x0, x1) = (seg[0].min(seg[2]), seg[0].max(seg[2]));
    let (y0, y1) = (seg[1].min(seg[3]), seg[1].max(seg[3]));
    let (i0, i1) = ((x0 / CELL).floor() as i64, (x1 / CELL).floor() as i64);
    let (j0, j1) = ((y0 / CELL).floor() as i64, (y1 / CELL).floor() as i64);
    (i0..=i1).flat_map(move |i| (j0..=j1).map(move |j| (i, j)))
}

/// Parameters `(s, t)` in `[0, 1]^2` where two segments cross.
fn crossing(a: &[f64; 4], b: &[f64; 4]) -> Option<(f64, f64)> {
    let r = (a[2] - a[0], a[3] - a[1]);
    let q = (b[2] - b[0], b[3] - b[1]);
    let den = r.0 * q.1 - r.1 * q.0;
    // Nearly parallel pieces are overlapping arcs of a surviving connection.
    if den.abs() <= PARALLEL * r.0.hypot(r.1) * q.0.hypot(q.1) {
        return None;
    }
    let w = (b[0] - a[0], b[1] - a[1]);
    let s = (w.0 * q.1 - w.1 * q.0) / den;
    let t = (w.0 * r.1 - w.1 * r.0) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)).then_some((s, t))
}

/// Newton on the curve parameters for `U(a) = S(b)` in phase coordinates.
fn refine(
    gu: &Grower,
    gs: &Grower,
    bu: &Branch,
    bs: &Branch,
    mut a: f64,
    mut b: f64,
) -> Option<PhasePoint> {
    let eval = |a: f64, b: f64| -> Option<(f64, f64)> {
        let u = gu.sample(bu.sign, a, bu.level)?.1;
        let s = gs.sample(bs.sign, b, bs.level)?.1;
        Some((wrap(u.0 - s.0), u.1 - s.1))
    };
    let h = 1e-7;
    let mut f = eval(a, b)?;
    for _ in 0..40 {
        let norm = f.0.hypot(f.1);
        if norm < 1e-13 {
            break;
        }
        let fa = eval(a + h, b)?;
        let fb = eval(a, b + h)?;
        let j = [(fa.0 - f.0) / h, (fb.0 - f.0) / h, (fa.1 - f.1) / h, (fb.1 - f.1) / h];
        let det = j[0] * j[3] - j[1] * j[2];
        if det.abs() < 1e-300 {
            return None;
        }
        let da = -(j[3] * f.0 - j[1] * f.1) / det;
        let db = -(-j[2] * f.0 + j[0] * f.1) / det;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let (na, nb) = (a + step * da, b + step * db);
            if let Some(nf) = eval(na, nb) {
                if nf.0.hypot(nf.1) < norm {
                    a = na;
                    b = nb;
                    f = nf;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved || !(-0.5..=1.5).contains(&a) || !(-0.5..=1.5).contains(&b) {
            break;
        }
    }
    (f.0.hypot(f.1) < 1e-10).then(|| gu.image(bu.sign, a, bu.level)).flatten()
}

fn polar(q: &Matrix) -> Matrix {
    let svd = q.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

fn block_diag(q: &Matrix) -> Matrix {
    let d = q.nrows();
    let mut out = Matrix::zeros(2 * d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(q);
    out.view_mut((d, d), (d, d)).copy_from(q);
    out
}

fn nearest_index(orbit: &PeriodicOrbit, x: &PhasePoint) -> usize {
    (0..orbit.period)
        .min_by(|&i, &j| orbit.points[i].distance(x).total_cmp(&orbit.points[j].distance(x)))
        .expect("nonempty orbit")
}

const CLEARANCE_POOL: usize = 64;

/// `z` and its iterates up to `reach` bounces either way.
fn orbit_of(body: &Body, z: &PhasePoint, reach: usize) -> Vec<PhasePoint> {
    let mut out = vec![z.clone()];
    for forward in [true, false] {
        let mut y = z.clone();
        for _ in 0..reach {
            let next = if forward { billiard_map(body, &y) } else { billiard_map_inverse(body, &y) };
            let Ok(next) = next else { break };
            out.push(next.clone());
            y = next;
        }
    }
    out
}

/// Smallest distance from `pi(z)` to the other reflection points of its
/// orbit within `ORBIT_REACH` bounces either way.
pub(crate) fn orbit_clearance(body: &Body, z: &PhasePoint) -> f64 {
    let mut best = f64::INFINITY;
    for forward in [true, false] {
        let mut y = z.clone();
        for _ in 0..ORBIT_REACH {
            let next = if forward { billiard_map(body, &y) } else { billiard_map_inverse(body, &y) };
            let Ok(next) = next else { break };
            best = best.min((&next.p - &z.p).norm());
            y = next;
        }
    }
    best
}

/// Steps of `step` from `z` until within `radius` of `targets`, the point
/// reached, or `None` within `budget` steps.
fn walk(
    body: &Body,
    z: &PhasePoint,
    targets: &[PhasePoint],
    radius: f64,
    budget: usize,
    forward: bool,
) -> Option<(usize, PhasePoint)> {
    let mut y = z.clone();
    for n in 0..=budget {
        if phase_distance_to(targets, &y) < radius {
            return Some((n, y));
        }
        y = if forward { billiard_map(body, &y).ok()? } else { billiard_map_inverse(body, &y).ok()? };
    }
    None
}

/// Tangent spaces of both manifolds at `z` transported from the linear
/// eigenspaces near the orbits.
pub(crate) fn datum_at(
    body: &Body,
    source: (&PeriodicOrbit, &HyperbolicityReport),
    target: (&PeriodicOrbit, &HyperbolicityReport),
    z: &PhasePoint,
    coincident: bool,
) -> Option<HeteroclinicDatum> {
    let (x, xc) = source;
    let (y, yc) = target;
    let budget = 200 * x.period.max(y.period);
    let canon = JacobiFrame::canonical(z);

    let (ns, _) = walk(body, z, &x.points, NEAR, budget, true)?;
    let tr = iterate(body, z, ns);
    if tr.truncated.is_some() {
        return None;
    }
    let j = nearest_index(x, tr.last());
    let q = polar(&(tr.frames[ns].transpose() * &x.frames[j]));
    let stable = symplectic_inverse(&tr.monodromy) * block_diag(&q) * &xc.stable[j];

    let (nu, w) = walk(body, z, &y.points, NEAR, budget, false)?;
    let tr = iterate(body, &w, nu);
    if tr.truncated.is_some() {
        return None;
    }
    let j = nearest_index(y, &w);
    let q0 = polar(&(JacobiFrame::canonical(&w).basis.transpose() * &y.frames[j]));
    let q1 = polar(&(canon.basis.transpose() * &tr.frames[nu]));
    let unstable = block_diag(&q1) * &tr.monodromy * block_diag(&q0) * &yc.unstable[j];

    let angle = min_principal_angle(&stable, &unstable);
    let stable = LagrangianGraph::from_basis(canon.clone(), &stable).ok()?;
    let unstable = LagrangianGraph::from_basis(canon, &unstable).ok()?;
    Some(HeteroclinicDatum {
        source: x.clone(),
        target: y.clone(),
        z: z.clone(),
        stable,
        unstable,
        angle,
        coincident,
        forward_steps: walk(body, z, &x.points, CONVERGED, budget, true).map(|r| r.0),
        backward_steps: walk(body, z, &y.points, CONVERGED, budget, false).map(|r| r.0),
    })
}

/// Tangent data at a known heteroclinic point `z` of any dimension,
/// transported from the eigenspaces of `x` (forward) and `y` (backward).
pub fn heteroclinic_datum(
    body: &Body,
    x: &PeriodicOrbit,
    y: &PeriodicOrbit,
    z: &PhasePoint,
) -> Result<HeteroclinicDatum, ManifoldError> {
    let xc = hyperbolicity_certificate(x, 10_000)?;
    let yc = hyperbolicity_certificate(y, 10_000)?;
    let mut dat = datum_at(body, (x, &xc), (y, &yc), z, false).ok_or(ManifoldError::NoIntersection)?;
    dat.coincident = dat.angle < MIN_ANGLE;
    Ok(dat)
}

/// Heteroclinic points from `W^u(O(y))` to `W^s(O(x))` of a planar body,
/// growing each manifold by `grow` periods from its local graph.
///
/// An unstable branch whose points also converge to `O(x)` is reported once,
/// as a coincident connection at the sample farthest from both orbits;
/// the remaining branches are intersected segment by segment and each
/// crossing is refined by Newton on the curve parameters.
pub fn find_heteroclinic(
    body: &Body,
    x: &PeriodicOrbit,
    y: &PeriodicOrbit,
    grow: usize,
) -> Result<HeteroclinicSearch, ManifoldError> {
    if body.dim() != 1 {
        return Err(ManifoldError::NeedsPlanar);
    }
    let xc = hyperbolicity_certificate(x, 10_000)?;
    let yc = hyperbolicity_certificate(y, 10_000)?;
    let gs = grower(body, x, Side::Stable)?;
    let gu = grower(body, y, Side::Unstable)?;
    let stable: Vec<Branch> = [1.0, -1.0]
        .into_iter()
        .flat_map(|sign| (0..=grow * x.period).map(move |l| (sign, l)))
        .map(|(sign, l)| gs.branch(sign, l))
        .collect();
    let bases: Vec<_> = x.points.iter().chain(&y.points).map(|q| q.p.clone()).collect();
    let base_gap = |z: &PhasePoint| bases.iter().map(|b| (b - &z.p).norm()).fold(f64::INFINITY, f64::min);
    let budget = 200 * x.period.max(y.period);

    let mut data: Vec<HeteroclinicDatum> = Vec::new();
    let mut coincident_branches = 0;
    let mut crossing_branches = Vec::new();
    for sign in [1.0, -1.0] {
        let levels: Vec<Branch> = (0..=grow * y.period).map(|l| gu.branch(sign, l)).collect();
        let mut pool: Vec<PhasePoint> =
            levels.iter().flat_map(|b| b.samples.iter().filter_map(|s| s.1.as_ref().map(|p| p.0.clone()))).collect();
        pool.sort_by(|a, b| base_gap(b).total_cmp(&base_gap(a)));
        pool.truncate(pool.len().div_ceil(4));
        let stride = pool.len().div_ceil(CLEARANCE_POOL).max(1);
        let far = pool
            .into_iter()
            .step_by(stride)
            .map(|z| {
                let c = base_gap(&z).min(orbit_clearance(body, &z));
                (z, c)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(z, _)| z);
        let on_stable = far.as_ref().filter(|z| walk(body, z, &x.points, CONVERGED, budget, true).is_some());
        match on_stable {
            Some(z) => {
                coincident_branches += 1;
                if let Some(dat) = datum_at(body, (x, &xc), (y, &yc), z, true) {
                    data.push(dat);
                }
            }
            None => crossing_branches.extend(levels),
        }
    }

    let ssegs = segments(&stable);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, seg) in ssegs.iter().enumerate() {
        for c in cells(&seg.2) {
            grid.entry(c).or_default().push(k);
        }
    }
    let exclusion = 0.5 * gu.t0.min(gs.t0);
    let mut candidates = 0;
    let mut tangencies = 0;
    let mut uncertified = 0;
    let reach = 2 * grow * x.period.max(y.period) + 4;
    let mut known: Vec<PhasePoint> = data.iter().flat_map(|d| orbit_of(body, &d.z, reach)).collect();
    let mut seen = std::collections::HashSet::new();
    let mut crossings = Vec::new();
    for (ub, ui, useg) in segments(&crossing_branches) {
        for c in cells(&useg) {
            let Some(list) = grid.get(&c) else { continue };
            for &k in list {
                if !seen.insert((ub, ui, k)) {
                    continue;
                }
                let (sb, si, sseg) = &ssegs[k];
                if let Some((p, q)) = crossing(&useg, sseg) {
                    crossings.push((ub, ui, *sb, *si, p, q));
                }
            }
        }
    }
    // Balanced growth depths keep the refinement noise smallest, so each
    // heteroclinic orbit is represented by its best-conditioned crossing.
    crossings.sort_by_key(|c| {
        let (lu, ls) = (crossing_branches[c.0].level, stable[c.2].level);
        (lu.max(ls), lu + ls)
    });
    for (ub, ui, sb, si, p, q) in crossings.into_iter().take(MAX_CANDIDATES) {
        candidates += 1;
        let bu = &crossing_branches[ub];
        let bs = &stable[sb];
        let a = bu.samples[ui].0 + p * (bu.samples[ui + 1].0 - bu.samples[ui].0);
        let b = bs.samples[si].0 + q * (bs.samples[si + 1].0 - bs.samples[si].0);
        let Some(z) = refine(&gu, &gs, bu, bs, a, b) else { continue };
        if phase_distance_to(&x.points, &z) < exclusion || phase_distance_to(&y.points, &z) < exclusion {
            continue;
        }
        if known.iter().any(|q| q.distance(&z) < 1e-7) {
            continue;
        }
        known.extend(orbit_of(body, &z, reach));
        match datum_at(body, (x, &xc), (y, &yc), &z, false) {
            Some(dat) if dat.forward_steps.is_none() || dat.backward_steps.is_none() => uncertified += 1,
            Some(dat) if dat.angle >= MIN_ANGLE => data.push(dat),
            Some(_) => tangencies += 1,
            None => uncertified += 1,
        }
    }
    if data.is_empty() {
        return Err(ManifoldError::NoIntersection);
    }
    Ok(HeteroclinicSearch { data, candidates, tangencies, uncertified, coincident_branches })
}
