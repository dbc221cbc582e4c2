use convex_billiards::dynamics::{iterate, k_operator, JacobiFrame, PhasePoint};
use convex_billiards::geometry::{Body, ChartPoint};
use convex_billiards::linalg::{Matrix, Vector};
use convex_billiards::manifolds::{
    donnay_perturb, find_heteroclinic, heteroclinic_datum, local_manifold, transversality_at, transversality_check,
    HeteroclinicDatum, LagrangianGraph, ManifoldError, Side,
};
use convex_billiards::orbits::{hyperbolicity_certificate, PeriodicOrbit};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn axis_orbit(body: &Body) -> PeriodicOrbit {
    let n = body.ambient_dim();
    let mut v = Vector::zeros(n);
    v[0] = -1.0;
    let x = PhasePoint::new(body, &ChartPoint::pole(0, n - 1), &v).unwrap();
    PeriodicOrbit::from_point(body, &x, 2).unwrap()
}

fn ellipse() -> Body {
    Body::ellipsoid(&[2.0, 1.0]).unwrap()
}

fn coincident_datum(body: &Body, o: &PeriodicOrbit) -> HeteroclinicDatum {
    let res = find_heteroclinic(body, o, o, 3).unwrap();
    res.data.into_iter().find(|d| d.coincident).expect("a coincident connection")
}

#[test]
fn reversal_maps_the_stable_graph_to_the_unstable_one() {
    let body = ellipse();
    let o = axis_orbit(&body);
    let ws = local_manifold(&body, &o, Side::Stable, 7).unwrap();
    let wu = local_manifold(&body, &o, Side::Unstable, 7).unwrap();
    let r = 0.5 * ws.radius.min(wu.radius);
    for i in 0..=10 {
        let t = Vector::from_element(1, r * (i as f64 / 5.0 - 1.0));
        let y = ws.point(&body, &t).unwrap().reversed(&body).unwrap();
        assert!(wu.graph_distance(&y) < 1e-8, "{}", wu.graph_distance(&y));
    }
}

#[test]
fn spatial_local_manifolds_are_invariant_lagrangian_graphs() {
    let body = Body::ellipsoid(&[2.0, 1.2, 1.0]).unwrap();
    let o = axis_orbit(&body);
    for side in [Side::Stable, Side::Unstable] {
        let lm = local_manifold(&body, &o, side, 4).unwrap();
        assert!(lm.invariance_defect < 1e-8, "{}", lm.invariance_defect);
        let g = LagrangianGraph::from_basis(lm.frame.clone(), &lm.tangent).unwrap();
        assert!(g.symmetry_defect() < 1e-8);
        let next = g.pushed(&body).unwrap();
        assert!(next.symmetry_defect() < 1e-8);
    }
}

#[test]
fn ellipse_connection_is_coincident() {
    let body = ellipse();
    let o = axis_orbit(&body);
    let res = find_heteroclinic(&body, &o, &o, 3).unwrap();
    assert_eq!(res.coincident_branches, 2);
    for d in &res.data {
        assert!(d.coincident);
        assert!(d.angle < 1e-6, "{}", d.angle);
        assert!(d.forward_steps.is_some() && d.backward_steps.is_some());
        assert!((&d.stable.matrix - &d.unstable.matrix).norm() < 1e-6);
        assert!(d.stable.symmetry_defect() < 1e-8);
        for q in &o.points {
            assert!((&q.p - &d.z.p).norm() > 0.1);
        }
    }
}

#[test]
fn circle_has_no_hyperbolic_orbit() {
    let body = Body::sphere(2, 1.0).unwrap();
    let o = axis_orbit(&body);
    assert!(matches!(find_heteroclinic(&body, &o, &o, 2), Err(ManifoldError::Orbit(_))));
}

#[test]
fn spatial_search_is_refused() {
    let body = Body::ellipsoid(&[2.0, 1.2, 1.0]).unwrap();
    let o = axis_orbit(&body);
    assert!(matches!(find_heteroclinic(&body, &o, &o, 2), Err(ManifoldError::NeedsPlanar)));
}

#[test]
fn donnay_bump_splits_the_connection_and_keeps_the_orbits() {
    let body = ellipse();
    let o = axis_orbit(&body);
    let dat = coincident_datum(&body, &o);

    let t0 = transversality_at(&body, &dat, 0.0).unwrap();
    assert!(t0.epsilon_bound.is_infinite());
    let same = donnay_perturb(&body, &dat, 0.0).unwrap();
    assert_eq!(same.body, body);
    let eps0 = same.epsilon0;
    let eps = 0.5 * eps0;
    let pert = donnay_perturb(&body, &dat, eps).unwrap();
    assert!((&pert.delta_k - &pert.omega * eps).norm() < 1e-8);
    assert!(transversality_at(&body, &dat, eps).unwrap().margin > 0.0);
    assert!(matches!(donnay_perturb(&body, &dat, 1.5 * eps0), Err(ManifoldError::Epsilon { .. })));

    // Both orbits and the heteroclinic orbit keep their points, flight times
    // and, away from z, their curvature operators.
    let o2 = PeriodicOrbit::from_point(&pert.body, &o.points[0], 2).unwrap();
    for (a, b) in o2.points.iter().zip(&o.points) {
        assert!(a.distance(b) < 1e-10);
    }
    for (a, b) in o2.taus.iter().zip(&o.taus) {
        assert!((a - b).abs() < 1e-10);
    }
    for forward in [true, false] {
        let start = if forward { dat.z.clone() } else { dat.z.reversed(&body).unwrap() };
        let before = iterate(&body, &start, 12);
        let after = iterate(&pert.body, &start, 12);
        for i in 0..12 {
            assert!(before.points[i + 1].distance(&after.points[i + 1]) < 1e-10);
            assert!((before.taus[i] - after.taus[i]).abs() < 1e-10);
            let kz = (&before.ks[i] - &after.ks[i]).norm();
            let at_z = before.points[i + 1].distance(&dat.z) < 1e-9
                || before.points[i + 1].reversed(&body).unwrap().distance(&dat.z) < 1e-9;
            if !at_z {
                assert!(kz < 1e-12, "step {i}: {kz}");
            }
        }
    }
    let frame = JacobiFrame { base: dat.z.clone(), basis: dat.frame().basis.clone() };
    let dk = k_operator(&pert.body, &dat.z, &frame).unwrap() - k_operator(&body, &dat.z, &frame).unwrap();
    assert!((dk - &pert.omega * eps).norm() < 1e-8);

    let after = heteroclinic_datum(&pert.body, &o2, &o2, &dat.z).unwrap();
    assert!(!after.coincident);
    assert!(after.angle > 1e-3, "{}", after.angle);
    assert!((&after.stable.matrix - &dat.stable.matrix).norm() < 1e-8);
    assert!((&after.unstable.matrix - &dat.unstable.matrix - &pert.omega * eps).norm() < 1e-8);
}

#[test]
fn eigenspaces_lie_in_the_local_graphs() {
    let body = ellipse();
    let o = axis_orbit(&body);
    let cert = hyperbolicity_certificate(&o, 100).unwrap();
    let ws = local_manifold(&body, &o, Side::Stable, 5).unwrap();
    assert!(subspace_gap(&ws.tangent, &cert.stable[0]) < 1e-10);
}

/// Residual of projecting the orthonormalised columns of `a` onto those of
/// `b`; unlike an arccos angle this resolves gaps well below `1e-8`.
fn subspace_gap(a: &Matrix, b: &Matrix) -> f64 {
    let k = a.ncols();
    let qa = a.clone().qr().q().columns(0, k).into_owned();
    let qb = b.clone().qr().q().columns(0, k).into_owned();
    (&qa - &qb * (qb.transpose() * &qa)).norm()
}

fn random_sym(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

#[test]
fn transversality_margin_matches_the_eigenvalue_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let (a, b) = (random_sym(&mut rng, 3), random_sym(&mut rng, 3));
        let (eps, c) = (rng.random_range(0.0..0.5), rng.random_range(0.1..1.0));
        let t = transversality_check(&a, &b, eps, c);
        let shifted = &b - &a - Matrix::identity(3, 3) * (2.0 * eps * c);
        let oracle = shifted.symmetric_eigenvalues().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        assert!((t.margin - oracle).abs() < 1e-12);
        let low = (&b - &a).symmetric_eigenvalues().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        assert!((t.epsilon_bound - low / (2.0 * c)).abs() < 1e-12);
    }
}

#[test]
fn margin_vanishes_at_the_excluded_epsilon() {
    let a = Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, -0.2]);
    let b = Matrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.3]);
    let c = 0.5;
    let bound = transversality_check(&a, &b, 0.0, c).epsilon_bound;
    assert!((bound - 0.5).abs() < 1e-14);
    let at = transversality_check(&a, &b, bound, c);
    assert!(!at.transverse && at.margin < 1e-14);
    let before = transversality_check(&a, &b, 0.9 * bound, c).margin;
    let after = transversality_check(&a, &b, 1.1 * bound, c).margin;
    assert!(before > 0.0 && after > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graph_update_matches_subspace_propagation(seed in any::<u64>(), d in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axes: Vec<f64> = (0..=d).map(|_| rng.random_range(0.8..1.6)).collect();
        let body = Body::ellipsoid(&axes).unwrap();
        let s = ChartPoint::new(rng.random_range(0..2 * (d + 1)), (0..d).map(|_| rng.random_range(-0.4..0.4)).collect());
        let dir = Vector::from_fn(d + 1, |_, _| rng.random_range(-1.0..1.0));
        let x = PhasePoint::from_angle(&body, &s, &dir, rng.random_range(0.0..1.0)).unwrap();
        let g = LagrangianGraph { frame: JacobiFrame::canonical(&x), matrix: random_sym(&mut rng, d) };
        let Ok(next) = g.pushed(&body) else { return Ok(()) };
        let direct = &iterate(&body, &x, 1).monodromy * g.basis();
        prop_assert!(subspace_gap(&direct, &next.basis()) < 1e-9);
        prop_assert!(next.symmetry_defect() < 1e-9 * (1.0 + next.matrix.norm()));
    }
}
