use convex_billiards::dynamics::{
    billiard_map, billiard_map_inverse, hamiltonian_h, iterate, perturbation_field, pullback_field, symplectic_pairing,
    tangent_map, AmbientTangent, BumpField, JacobiFrame, PhasePoint,
};
use convex_billiards::geometry::{Body, Bump, ChartPoint};
use convex_billiards::linalg::{symplectic_defect, Matrix, Vector};
use convex_billiards::oracle::fd_tangent_map;
use proptest::prelude::*;

fn ellipsoid3() -> Body {
    Body::ellipsoid(&[1.3, 1.0, 0.8]).unwrap()
}

fn field_at_pole(body: &Body) -> BumpField {
    let q = Matrix::from_row_slice(2, 2, &[0.7, -0.2, -0.2, 0.4]);
    BumpField::new(body, Bump::new(ChartPoint::pole(0, 2), 0.35, q)).unwrap()
}

fn shoot_at_bump(body: &Body) -> PhasePoint {
    PhasePoint::new(body, &ChartPoint::pole(1, 2), &Vector::from_vec(vec![1.0, 0.06, 0.04])).unwrap()
}

fn difference(a: &PhasePoint, b: &PhasePoint) -> AmbientTangent {
    AmbientTangent { dp: &a.p - &b.p, dv: &a.v - &b.v }
}

#[test]
fn perturbation_field_has_second_order_remainder() {
    let body = ellipsoid3();
    let field = field_at_pole(&body);
    let x = shoot_at_bump(&body);
    let pulled = pullback_field(&body, &field, &x).unwrap();
    assert!(pulled.norm() > 1e-3);
    let residual = |eps: f64| {
        let pert = field.displaced(&body, eps).unwrap();
        let y = billiard_map(&pert, &billiard_map(&pert, &x).unwrap()).unwrap();
        let back = billiard_map_inverse(&body, &billiard_map_inverse(&body, &y).unwrap()).unwrap();
        let diff = difference(&back, &x);
        ((diff.dp - &pulled.dp * eps).norm_squared() + (diff.dv - &pulled.dv * eps).norm_squared()).sqrt()
    };
    let r: Vec<f64> = [1e-3, 5e-4, 2.5e-4].iter().map(|e| residual(*e)).collect();
    for w in r.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((1.9..=2.1).contains(&slope), "slope {slope}, residuals {r:?}");
    }
}

#[test]
fn field_is_hamiltonian() {
    let body = ellipsoid3();
    let field = field_at_pole(&body);
    let s = ChartPoint::new(0, vec![0.12, -0.08]);
    let x = PhasePoint::new(&body, &s, &Vector::from_vec(vec![-1.0, 0.3, -0.2])).unwrap();
    let chi = perturbation_field(&body, &field, &x).unwrap();
    let sd = body.surface(&s).unwrap();
    let h = 1e-6;
    for k in 0..20 {
        let a = Vector::from_vec(vec![(k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()]);
        let g = Vector::from_vec(vec![(k as f64 * 0.4).cos(), (k as f64 * 2.1).sin(), 0.5]);
        let gamma = &g - &x.v * g.dot(&x.v);
        let xi = AmbientTangent { dp: &sd.tangents * &a, dv: gamma.clone() };
        let at = |t: f64| {
            let st = ChartPoint::new(0, vec![s.coords[0] + t * a[0], s.coords[1] + t * a[1]]);
            let y = PhasePoint::new(&body, &st, &(&x.v + &gamma * t)).unwrap();
            hamiltonian_h(&body, &field, &y).unwrap()
        };
        let dh = (at(h) - at(-h)) / (2.0 * h);
        let w = symplectic_pairing(&chi, &xi);
        assert!((dh - w).abs() < 1e-6 * (1.0 + dh.abs()), "dh {dh} omega {w}");
    }
}

#[test]
fn joachimsthal_invariant_is_conserved() {
    let axes = [2.0, 1.0];
    let body = Body::ellipsoid(&axes).unwrap();
    let x = PhasePoint::new(&body, &ChartPoint::new(0, vec![0.3]), &Vector::from_vec(vec![-0.6, 0.8])).unwrap();
    let invariant = |x: &PhasePoint| x.p[0] * x.v[0] / 4.0 + x.p[1] * x.v[1];
    let j0 = invariant(&x);
    let mut y = x;
    for _ in 0..10_000 {
        y = billiard_map(&body, &y).unwrap();
    }
    assert!((invariant(&y) - j0).abs() < 1e-8);
}

#[test]
fn circle_rational_rotation_closes() {
    let body = Body::sphere(2, 1.0).unwrap();
    let (m, k) = (7, 2);
    let psi = std::f64::consts::PI * k as f64 / m as f64;
    let x = PhasePoint::from_angle(
        &body,
        &ChartPoint::pole(0, 1),
        &Vector::from_vec(vec![0.0, 1.0]),
        std::f64::consts::FRAC_PI_2 - psi,
    )
    .unwrap();
    let t = iterate(&body, &x, m);
    assert!(t.last().distance(&x) < 1e-10);
    let cos = t.cos_angles();
    assert!(cos.iter().all(|c| (c - psi.sin()).abs() < 1e-12));
}

#[test]
fn circle_diameter_monodromy_is_parabolic() {
    let body = Body::sphere(2, 1.0).unwrap();
    let x = PhasePoint::new(&body, &ChartPoint::pole(0, 1), &Vector::from_vec(vec![-1.0, 0.0])).unwrap();
    let t = iterate(&body, &x, 2);
    let m = &t.monodromy;
    assert!((m.trace() - 2.0).abs() < 1e-12);
    assert!((m.determinant() - 1.0).abs() < 1e-12);
}

fn bumped_ellipsoid() -> Body {
    let q = Matrix::from_row_slice(2, 2, &[0.05, 0.01, 0.01, -0.03]);
    ellipsoid3().perturb(Bump::new(ChartPoint::new(2, vec![0.1, -0.1]), 0.4, q)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tangent_map_is_symplectic_and_matches_fd(
        chart in 0usize..6, c0 in -0.5f64..0.5, c1 in -0.5f64..0.5,
        w0 in -1.0f64..1.0, w1 in -1.0f64..1.0, theta in 0.1f64..1.3,
    ) {
        let body = bumped_ellipsoid();
        let s = ChartPoint::new(chart, vec![c0, c1]);
        let dir = Vector::from_vec(vec![w0, w1, 0.3]);
        let x = PhasePoint::from_angle(&body, &s, &dir, theta).unwrap();
        let frame = JacobiFrame::canonical(&x);
        let (m, next) = tangent_map(&body, &x, &frame).unwrap();
        prop_assert!(symplectic_defect(&m) < 1e-9);
        prop_assert!(next.orthonormality_defect() < 1e-12);
        let fd = fd_tangent_map(&body, &frame, 1e-5).unwrap();
        prop_assert!((&m - fd).norm() < 1e-5 * m.norm());
    }

    #[test]
    fn reflection_law_and_reversal(
        chart in 0usize..6, c0 in -0.5f64..0.5, c1 in -0.5f64..0.5, theta in 0.0f64..1.4,
    ) {
        let body = bumped_ellipsoid();
        let s = ChartPoint::new(chart, vec![c0, c1]);
        let x = PhasePoint::from_angle(&body, &s, &Vector::from_vec(vec![0.2, -0.4, 0.9]), theta).unwrap();
        let y = billiard_map(&body, &x).unwrap();
        let n = body.surface(&y.s).unwrap().normal;
        prop_assert!((&y.v + &x.v).dot(&n).abs() < 1e-12);
        prop_assert!((y.v.norm() - 1.0).abs() < 1e-14);
        let back = billiard_map(&body, &y.reversed(&body).unwrap()).unwrap().reversed(&body).unwrap();
        prop_assert!(back.distance(&x) < 1e-10);
    }
}
