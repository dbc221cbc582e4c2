//! Strictly convex bodies as embeddings of the parameter sphere.
//!
//! A body is a base ellipsoid `y -> diag(a) y` on the unit sphere followed by
//! an ordered list of compactly supported normal bumps. Each bump displaces
//! the boundary by `psi(c) * n_b`, where `c` are the coordinates of the bump's
//! chart and `n_b` is the inward normal of the body (with the earlier bumps)
//! at the bump center. Because `psi` vanishes to first order at the center,
//! the point, tangent plane and normal there are untouched and the second
//! fundamental form moves by exactly the bump Hessian.

mod chart;
mod sample;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chart::{chart_axis, chart_count, chart_sign, ChartPoint, SphereJet};
pub use sample::{halton_ball, sphere_cover};

use crate::linalg::{pencil_eigenvalues, Matrix, Vector};

/// Quasi-random samples per chart used when validating a body.
pub const DEFAULT_SAMPLES_PER_CHART: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("chart point {chart}:{coords:?} is outside the chart domain")]
    OutsideDomain { chart: usize, coords: Vec<f64> },
    #[error("strict convexity lost: minimum principal curvature {margin:.3e} at chart {}:{:?}", at.chart, at.coords)]
    ConvexityLoss { margin: f64, at: ChartPoint },
    #[error("bump support (center radius {center_radius:.6}, radius {radius:.6}) leaves its chart")]
    SupportCrossesChart { center_radius: f64, radius: f64 },
    #[error("invalid body: {0}")]
    Invalid(String),
}

/// A smooth normal bump `psi(c) = 1/2 (c - c0)^T Q (c - c0) * beta(|c - c0|^2 / r^2)`
/// with `beta(t) = exp(1 - 1/(1 - t))` on `t < 1` and zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: ChartPoint,
    pub radius: f64,
    pub hessian: Matrix,
}

/// Value, gradient and Hessian of a scalar function in chart coordinates.
#[derive(Debug, Clone)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vector,
    pub hess: Matrix,
}

impl Bump {
    pub fn new(center: ChartPoint, radius: f64, hessian: Matrix) -> Self {
        Self { center, radius, hessian }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Profile jet at chart coordinates `c` of the bump's own chart, or
    /// `None` outside the open support.
    pub fn profile(&self, c: &Vector) -> Option<ScalarJet> {
        let d = self.dim();
        let w = c - Vector::from_column_slice(&self.center.coords);
        let r2 = self.radius * self.radius;
        let rho = w.norm_squared() / r2;
        if rho >= 1.0 {
            return None;
        }
        let om = 1.0 - rho;
        let b = (1.0 - 1.0 / om).exp();
        let b1 = -b / (om * om);
        let b2 = b / om.powi(4) - 2.0 * b / om.powi(3);
        let qw = &self.hessian * &w;
        let q = 0.5 * w.dot(&qw);
        let grad_rho = &w * (2.0 / r2);
        let grad_b = &grad_rho * b1;
        let hess_b = &grad_rho * grad_rho.transpose() * b2 + Matrix::identity(d, d) * (2.0 * b1 / r2);
        let value = q * b;
        let grad = &qw * b + &grad_b * q;
        let hess = &self.hessian * b + &qw * grad_b.transpose() + &grad_b * qw.transpose() + hess_b * q;
        Some(ScalarJet { value, grad, hess })
    }

    /// Profile jet pulled back to the chart of a sphere jet, or `None` when
    /// the sphere point is outside the support.
    pub fn pulled_back(&self, jet: &SphereJet) -> Option<ScalarJet> {
        let axis = chart_axis(self.center.chart);
        if chart_sign(self.center.chart) * jet.y[axis] <= 0.0 {
            return None;
        }
        let (c, dc, ddc) = chart::project_jet(jet, self.center.chart);
        let pj = self.profile(&c)?;
        let d = jet.dy.ncols();
        let grad = dc.transpose() * &pj.grad;
        let mut hess = dc.transpose() * &pj.hess * &dc;
        for i in 0..d {
            for j in 0..d {
                hess[(i, j)] += pj.grad.dot(&ddc[i * d + j]);
            }
        }
        Some(ScalarJet { value: pj.value, grad, hess })
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PlacedBump {
    bump: Bump,
    direction: Vector,
}

/// Smooth strictly convex body in `R^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    semi_axes: Vec<f64>,
    bumps: Vec<PlacedBump>,
}

/// Geometric data at one boundary point.
#[derive(Debug, Clone)]
pub struct SurfaceData {
    pub point: Vector,
    /// `(d+1) x d`, columns are the coordinate tangent vectors `t_j`.
    pub tangents: Matrix,
    /// Inward unit normal.
    pub normal: Vector,
    pub first_form: Matrix,
    pub second_form: Matrix,
    /// `G^{-1} II`, the matrix of `L = -DN` acting on coordinate vectors.
    pub shape_matrix: Matrix,
    /// `second_derivs[i * d + j] = d^2 phi / dc_i dc_j`.
    pub second_derivs: Vec<Vector>,
}

impl SurfaceData {
    pub fn dim(&self) -> usize {
        self.tangents.ncols()
    }

    /// Coordinates of an ambient vector `u` with respect to the tangents,
    /// after discarding its normal component.
    pub fn tangent_coords(&self, u: &Vector) -> Vector {
        let g_inv = self.first_form.clone().try_inverse().expect("first form is SPD");
        g_inv * self.tangents.transpose() * u
    }

    /// Shape operator as an ambient `(d+1) x (d+1)` map, zero on the normal.
    pub fn shape_operator(&self) -> Matrix {
        let g_inv = self.first_form.clone().try_inverse().expect("first form is SPD");
        &self.tangents * &self.shape_matrix * &g_inv * self.tangents.transpose()
    }

    /// `dN/dc_j = -sum_k S_kj t_k`.
    pub fn normal_derivative(&self, j: usize) -> Vector {
        -(&self.tangents * self.shape_matrix.column(j))
    }

    /// Principal curvatures, ascending.
    pub fn principal_curvatures(&self) -> Vec<f64> {
        pencil_eigenvalues(&self.second_form, &self.first_form).unwrap_or_else(|| vec![f64::NEG_INFINITY])
    }
}

fn generalized_cross(t: &Matrix) -> Vector {
    let n = t.nrows();
    let mut out = Vector::zeros(n);
    for k in 0..n {
        let minor = t.clone().remove_row(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out[k] = sign * minor.determinant();
    }
    out
}

impl Body {
    pub fn ellipsoid(semi_axes: &[f64]) -> Result<Self, GeometryError> {
        if semi_axes.len() < 2 {
            return Err(GeometryError::Invalid("need at least two semi-axes".into()));
        }
        if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(GeometryError::Invalid("semi-axes must be positive".into()));
        }
        Ok(Self { semi_axes: semi_axes.to_vec(), bumps: Vec::new() })
    }

    pub fn sphere(ambient: usize, radius: f64) -> Result<Self, GeometryError> {
        Self::ellipsoid(&vec![radius; ambient])
    }

    /// Dimension `d` of the boundary.
    pub fn dim(&self) -> usize {
        self.semi_axes.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.semi_axes.len()
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn bumps(&self) -> impl Iterator<Item = &Bump> {
        self.bumps.iter().map(|b| &b.bump)
    }

    pub fn bump_count(&self) -> usize {
        self.bumps.len()
    }

    /// Direction along which bump `i` displaces the boundary.
    pub fn bump_direction(&self, i: usize) -> &Vector {
        &self.bumps[i].direction
    }

    /// Radius of a ball centered at the origin that contains the body.
    pub fn outer_radius(&self) -> f64 {
        let a = self.semi_axes.iter().fold(0.0f64, |m, x| m.max(*x));
        let bumps: f64 = self
            .bumps
            .iter()
            .map(|b| 0.5 * b.bump.hessian.norm() * b.bump.radius * b.bump.radius)
            .sum();
        a + bumps
    }

    fn validate_bump(&self, bump: &Bump) -> Result<(), GeometryError> {
        let d = self.dim();
        if bump.center.dim() != d || bump.center.chart >= chart_count(d + 1) {
            return Err(GeometryError::Invalid("bump center has the wrong dimension or chart".into()));
        }
        if bump.hessian.nrows() != d || bump.hessian.ncols() != d {
            return Err(GeometryError::Invalid("bump Hessian has the wrong shape".into()));
        }
        if (&bump.hessian - bump.hessian.transpose()).norm() > 1e-12 * (1.0 + bump.hessian.norm()) {
            return Err(GeometryError::Invalid("bump Hessian is not symmetric".into()));
        }
        if !(bump.radius.is_finite() && bump.radius > 0.0) {
            return Err(GeometryError::Invalid("bump radius must be positive".into()));
        }
        let cr = bump.center.radius_sq().sqrt();
        if cr + bump.radius >= 1.0 {
            return Err(GeometryError::SupportCrossesChart { center_radius: cr, radius: bump.radius });
        }
        Ok(())
    }

    /// Appends a bump without sampling convexity.
    pub fn add_bump(&self, bump: Bump) -> Result<Self, GeometryError> {
        self.validate_bump(&bump)?;
        let direction = self.surface(&bump.center)?.normal;
        let mut out = self.clone();
        out.bumps.push(PlacedBump { bump, direction });
        Ok(out)
    }

    /// Appends a bump and checks strict convexity on its support.
    pub fn perturb(&self, bump: Bump) -> Result<Self, GeometryError> {
        let out = self.add_bump(bump)?;
        let placed = &out.bumps[out.bumps.len() - 1].bump;
        let (margin, at) = out.support_margin(placed, 2_000);
        if margin <= 0.0 {
            return Err(GeometryError::ConvexityLoss { margin, at });
        }
        Ok(out)
    }

    /// Minimum principal curvature over samples of one bump's support.
    pub fn support_margin(&self, bump: &Bump, n: usize) -> (f64, ChartPoint) {
        let mut pts = vec![bump.center.clone()];
        pts.extend(
            halton_ball(&bump.center.coords, bump.radius, n)
                .into_iter()
                .map(|c| ChartPoint::new(bump.center.chart, c)),
        );
        self.min_curvature_over(&pts)
    }

    fn min_curvature_over(&self, pts: &[ChartPoint]) -> (f64, ChartPoint) {
        let mut best = (f64::INFINITY, pts[0].clone());
        for s in pts {
            let k = self.surface(s).map(|sd| sd.principal_curvatures()[0]).unwrap_or(f64::NEG_INFINITY);
            if k < best.0 {
                best = (k, s.clone());
            }
        }
        best
    }

    /// Minimum principal curvature over `n_samples` quasi-random points per
    /// chart together with samples of every bump support. Positive means the
    /// sampled boundary is strictly convex.
    pub fn convexity_margin(&self, n_samples: usize) -> f64 {
        self.convexity_witness(n_samples).0
    }

    pub fn convexity_witness(&self, n_samples: usize) -> (f64, ChartPoint) {
        let mut pts = sphere_cover(self.dim(), n_samples.max(1));
        for b in &self.bumps {
            pts.push(b.bump.center.clone());
            pts.extend(
                halton_ball(&b.bump.center.coords, b.bump.radius, n_samples.max(1))
                    .into_iter()
                    .map(|c| ChartPoint::new(b.bump.center.chart, c)),
            );
        }
        self.min_curvature_over(&pts)
    }

    /// Strict convexity check with the default sample density.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let (margin, at) = self.convexity_witness(DEFAULT_SAMPLES_PER_CHART);
        if margin > 0.0 {
            Ok(())
        } else {
            Err(GeometryError::ConvexityLoss { margin, at })
        }
    }

    /// Surface data at `s`, failing where the boundary is not strictly convex.
    pub fn evaluate(&self, s: &ChartPoint) -> Result<SurfaceData, GeometryError> {
        let sd = self.surface(s)?;
        let k = sd.principal_curvatures()[0];
        if k > 0.0 {
            Ok(sd)
        } else {
            Err(GeometryError::ConvexityLoss { margin: k, at: s.clone() })
        }
    }

    /// Surface data at `s` without the convexity check.
    pub fn surface(&self, s: &ChartPoint) -> Result<SurfaceData, GeometryError> {
        let d = self.dim();
        if s.dim() != d || s.chart >= chart_count(d + 1) || !s.in_domain() {
            return Err(GeometryError::OutsideDomain { chart: s.chart, coords: s.coords.clone() });
        }
        let jet = s.jet();
        let a = Vector::from_column_slice(&self.semi_axes);
        let mut point = jet.y.component_mul(&a);
        let mut tangents = jet.dy.clone();
        for mut col in tangents.column_iter_mut() {
            col.component_mul_assign(&a);
        }
        let mut second: Vec<Vector> = jet.ddy.iter().map(|v| v.component_mul(&a)).collect();
        for pb in &self.bumps {
            let Some(psi) = pb.bump.pulled_back(&jet) else { continue };
            point += &pb.direction * psi.value;
            for j in 0..d {
                let mut col = tangents.column_mut(j);
                col += &pb.direction * psi.grad[j];
            }
            for i in 0..d {
                for j in 0..d {
                    second[i * d + j] += &pb.direction * psi.hess[(i, j)];
                }
            }
        }
        let mut normal = generalized_cross(&tangents).normalize();
        let inward = -jet.y.component_div(&a);
        if normal.dot(&inward) < 0.0 {
            normal = -normal;
        }
        let first_form = tangents.transpose() * &tangents;
        let mut second_form = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                second_form[(i, j)] = second[i * d + j].dot(&normal);
            }
        }
        second_form = crate::linalg::symmetrize(&second_form);
        let g_inv = first_form.clone().try_inverse().ok_or_else(|| {
            GeometryError::Invalid("degenerate tangent basis".into())
        })?;
        let shape_matrix = &g_inv * &second_form;
        Ok(SurfaceData { point, tangents, normal, first_form, second_form, shape_matrix, second_derivs: second })
    }

    /// Boundary point only; cheaper than [`Body::surface`].
    pub fn point(&self, s: &ChartPoint) -> Vector {
        let jet_y = s.sphere_point();
        let a = Vector::from_column_slice(&self.semi_axes);
        let mut p = jet_y.component_mul(&a);
        if self.bumps.is_empty() {
            return p;
        }
        let jet = s.jet();
        for pb in &self.bumps {
            if let Some(psi) = pb.bump.pulled_back(&jet) {
                p += &pb.direction * psi.value;
            }
        }
        p
    }

    /// Newton solve of `phi(c) = q + t w` in `(c, t)` starting from `seed`
    /// and `t0`. The returned chart point is re-anchored to its nearest pole.
    pub fn intersect_line(&self, q: &Vector, w: &Vector, seed: &ChartPoint, t0: f64) -> Option<(ChartPoint, f64)> {
        let d = self.dim();
        let scale = self.outer_radius();
        let mut s = seed.reanchored();
        let mut t = t0;
        for _ in 0..60 {
            let sd = self.surface(&s).ok()?;
            let g = &sd.point - q - w * t;
            if g.norm() <= 1e-14 * scale {
                return Some((s.reanchored(), t));
            }
            let mut jac = Matrix::zeros(d + 1, d + 1);
            jac.view_mut((0, 0), (d + 1, d)).copy_from(&sd.tangents);
            jac.set_column(d, &(-w));
            let step = jac.lu().solve(&g)?;
            let mut c = Vector::from_column_slice(&s.coords);
            c -= step.rows(0, d);
            t -= step[d];
            s = ChartPoint::new(s.chart, c.iter().copied().collect());
            if !s.in_domain() {
                return None;
            }
            if s.radius_sq() > 0.7 {
                s = s.reanchored();
            }
        }
        let sd = self.surface(&s).ok()?;
        ((&sd.point - q - w * t).norm() <= 1e-11 * scale).then(|| (s.reanchored(), t))
    }

    /// Boundary point on the ray from the origin along `u`, with its
    /// distance from the origin. The origin is assumed interior.
    pub fn radial(&self, u: &Vector) -> Option<(ChartPoint, f64)> {
        let u = u.normalize();
        let a = Vector::from_column_slice(&self.semi_axes);
        let r0 = 1.0 / u.component_div(&a).norm();
        let y0 = (&u * r0).component_div(&a).normalize();
        let (s, r) = self.intersect_line(&Vector::zeros(u.len()), &u, &ChartPoint::nearest_chart(&y0), r0)?;
        (r > 0.0).then_some((s, r))
    }

    /// Whether `q` lies strictly inside the body.
    pub fn contains(&self, q: &Vector) -> bool {
        let n = q.norm();
        if n == 0.0 {
            return true;
        }
        match self.radial(q) {
            Some((_, r)) => n < r,
            None => false,
        }
    }

    pub fn to_spec(&self) -> BodySpec {
        BodySpec {
            dim: self.ambient_dim(),
            base: BaseSpec::Ellipsoid { semi_axes: self.semi_axes.clone() },
            bumps: self
                .bumps
                .iter()
                .map(|pb| BumpSpec {
                    chart: pb.bump.center.chart,
                    center: pb.bump.center.coords.clone(),
                    radius: pb.bump.radius,
                    hessian: pb.bump.hessian.row_iter().map(|r| r.iter().copied().collect()).collect(),
                })
                .collect(),
        }
    }

    /// Builds the body from a spec and checks strict convexity.
    pub fn from_spec(spec: &BodySpec) -> Result<Self, GeometryError> {
        let body = Self::from_spec_unchecked(spec)?;
        body.validate()?;
        Ok(body)
    }

    pub fn from_spec_unchecked(spec: &BodySpec) -> Result<Self, GeometryError> {
        let BaseSpec::Ellipsoid { semi_axes } = &spec.base;
        if semi_axes.len() != spec.dim {
            return Err(GeometryError::Invalid(format!(
                "dim {} does not match {} semi-axes",
                spec.dim,
                semi_axes.len()
            )));
        }
        let mut body = Self::ellipsoid(semi_axes)?;
        let d = body.dim();
        for b in &spec.bumps {
            if b.hessian.len() != d || b.hessian.iter().any(|r| r.len() != d) {
                return Err(GeometryError::Invalid("bump Hessian has the wrong shape".into()));
            }
            let h = Matrix::from_fn(d, d, |i, j| b.hessian[i][j]);
            body = body.add_bump(Bump::new(ChartPoint::new(b.chart, b.center.clone()), b.radius, h))?;
        }
        Ok(body)
    }
}

/// On-disk body description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub dim: usize,
    pub base: BaseSpec,
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BaseSpec {
    Ellipsoid { semi_axes: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub chart: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub hessian: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_tangents(body: &Body, s: &ChartPoint, h: f64) -> Matrix {
        let d = s.dim();
        let mut t = Matrix::zeros(d + 1, d);
        for j in 0..d {
            let mut p = s.clone();
            p.coords[j] += h;
            let mut m = s.clone();
            m.coords[j] -= h;
            t.set_column(j, &((body.point(&p) - body.point(&m)) / (2.0 * h)));
        }
        t
    }

    fn bumped_ellipsoid() -> Body {
        let q = Matrix::from_row_slice(2, 2, &[0.03, 0.01, 0.01, -0.02]);
        Body::ellipsoid(&[1.5, 1.2, 1.0])
            .unwrap()
            .add_bump(Bump::new(ChartPoint::new(4, vec![0.1, 0.2]), 0.3, q))
            .unwrap()
    }

    #[test]
    fn unit_sphere_has_identity_shape() {
        let body = Body::sphere(3, 1.0).unwrap();
        for s in sphere_cover(2, 20) {
            let sd = body.evaluate(&s).unwrap();
            assert!((&sd.second_form - &sd.first_form).norm() < 1e-12);
            assert!((&sd.shape_matrix - Matrix::identity(2, 2)).norm() < 1e-12);
        }
    }

    #[test]
    fn ellipse_major_axis_normal_points_inward() {
        let body = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        let sd = body.evaluate(&ChartPoint::pole(0, 1)).unwrap();
        assert!((sd.normal[0] + 1.0).abs() < 1e-15);
        assert!((sd.shape_matrix[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tangents_match_finite_differences() {
        let body = bumped_ellipsoid();
        for s in [ChartPoint::new(4, vec![0.15, 0.25]), ChartPoint::new(1, vec![0.3, -0.4])] {
            let sd = body.evaluate(&s).unwrap();
            assert!((fd_tangents(&body, &s, 1e-6) - &sd.tangents).norm() < 1e-8);
        }
    }

    #[test]
    fn weingarten_matches_finite_differences() {
        let body = bumped_ellipsoid();
        let s = ChartPoint::new(4, vec![0.12, 0.27]);
        let sd = body.evaluate(&s).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut p = s.clone();
            p.coords[j] += h;
            let mut m = s.clone();
            m.coords[j] -= h;
            let fd = (body.evaluate(&p).unwrap().normal - body.evaluate(&m).unwrap().normal) / (2.0 * h);
            assert!((fd - sd.normal_derivative(j)).norm() < 1e-8);
        }
    }

    #[test]
    fn bump_profile_derivatives() {
        let q = Matrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, -0.5]);
        let bump = Bump::new(ChartPoint::new(0, vec![0.1, -0.1]), 0.4, q);
        let c = Vector::from_vec(vec![0.25, 0.05]);
        let j = bump.profile(&c).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut e = Vector::zeros(2);
            e[k] = h;
            let gp = bump.profile(&(&c + &e)).unwrap();
            let gm = bump.profile(&(&c - &e)).unwrap();
            assert!(((gp.value - gm.value) / (2.0 * h) - j.grad[k]).abs() < 1e-8);
            assert!(((gp.grad - gm.grad) / (2.0 * h) - j.hess.column(k)).norm() < 1e-7);
        }
        let at_center = bump.profile(&Vector::from_vec(vec![0.1, -0.1])).unwrap();
        assert_eq!(at_center.value, 0.0);
        assert!(at_center.grad.norm() == 0.0);
        assert!((at_center.hess - &bump.hessian).norm() < 1e-15);
    }

    #[test]
    fn support_must_stay_in_chart() {
        let body = Body::sphere(2, 1.0).unwrap();
        let err = body.add_bump(Bump::new(ChartPoint::new(0, vec![0.7]), 0.4, Matrix::zeros(1, 1)));
        assert!(matches!(err, Err(GeometryError::SupportCrossesChart { .. })));
    }

    #[test]
    fn over_bumped_sphere_has_negative_margin() {
        let body = Body::sphere(2, 1.0)
            .unwrap()
            .add_bump(Bump::new(ChartPoint::pole(0, 1), 0.3, Matrix::from_element(1, 1, -3.0)))
            .unwrap();
        assert!(body.convexity_margin(500) < 0.0);
        let again = Body::sphere(2, 1.0)
            .unwrap()
            .perturb(Bump::new(ChartPoint::pole(0, 1), 0.3, Matrix::from_element(1, 1, -3.0)));
        assert!(matches!(again, Err(GeometryError::ConvexityLoss { .. })));
    }

    #[test]
    fn spec_json_round_trip() {
        let body = bumped_ellipsoid();
        let json = serde_json::to_string(&body.to_spec()).unwrap();
        let back = Body::from_spec(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, body);
    }
}
