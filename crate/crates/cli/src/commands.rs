use anyhow::anyhow;
use convex_billiards::dynamics::{iterate, PhasePoint};
use convex_billiards::franks::{f_admissible, realize_target, FranksError, DEFAULT_FRANKS_TOL};
use convex_billiards::geometry::{Body, BumpSpec, ChartPoint};
use convex_billiards::io::{fmt_f64, Csv};
use convex_billiards::linalg::{symplectic_defect, Vector};
use convex_billiards::manifolds::{
    donnay_perturb, find_heteroclinic, heteroclinic_datum, local_manifold, phase_coords, tangle_diagnostics,
    transversality_at, HeteroclinicDatum, ManifoldError, Side,
};
use convex_billiards::orbits::{
    classify, count_and_entropy, find_periodic, LyapunovRun, PeriodicOrbit, SeedSpec, SpectralKind, DEFAULT_CLASSIFY_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{load_body, matrix_from_rows, read_json, rows, table, OutDir, PointJson};
use crate::{DonnayArgs, EntropyArgs, Failure, FranksArgs, OrbitsArgs, TraceArgs};

fn random_start(body: &Body, rng: &mut ChaCha8Rng) -> PhasePoint {
    let n = body.ambient_dim();
    loop {
        let y = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let dir = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let theta = rng.random_range(-1.2..1.2);
        if !(1e-3..=1.0).contains(&y.norm()) {
            continue;
        }
        if let Ok(x) = PhasePoint::from_angle(body, &ChartPoint::nearest_chart(&y.normalize()), &dir, theta) {
            return x;
        }
    }
}

pub fn trace(args: &TraceArgs) -> Result<(), Failure> {
    let c = &args.common;
    let body = load_body(&c.body)?;
    let start = match &args.start {
        Some(path) => read_json::<PointJson>(path)?.resolve(&body)?,
        None => random_start(&body, &mut ChaCha8Rng::seed_from_u64(c.seed)),
    };
    let out = OutDir::create(&c.out)?;
    let tr = iterate(&body, &start, args.n);
    let (d, n) = (body.dim(), body.ambient_dim());

    let mut header = vec!["step".to_string(), "chart".to_string()];
    header.extend((0..d).map(|i| format!("s{i}")));
    header.extend((0..n).map(|i| format!("p{i}")));
    header.extend((0..n).map(|i| format!("v{i}")));
    header.extend(["cos_angle".to_string(), "tau".to_string()]);
    let mut csv = Csv::with_header(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, x) in tr.points.iter().enumerate().skip(1) {
        let mut row = vec![i.to_string(), x.s.chart.to_string()];
        row.extend(x.s.coords.iter().chain(x.p.iter()).chain(x.v.iter()).map(|v| fmt_f64(*v)));
        row.extend([fmt_f64(x.cos_angle), fmt_f64(tr.taus[i - 1])]);
        csv.row(row);
    }
    out.write("trace.csv", &csv.finish())?;

    #[derive(Serialize)]
    struct Summary {
        start: PointJson,
        requested: usize,
        steps: usize,
        truncated: Option<String>,
        monodromy: Vec<Vec<f64>>,
        symplectic_defect: f64,
    }
    let truncated = tr.truncated.as_ref().map(|e| e.to_string());
    out.json(
        "trace.json",
        &Summary {
            start: PointJson::of(&start),
            requested: args.n,
            steps: tr.steps(),
            truncated: truncated.clone(),
            monodromy: rows(&tr.monodromy),
            symplectic_defect: symplectic_defect(&tr.monodromy),
        },
    )?;
    match truncated {
        Some(e) => Err(Failure::Partial(format!("stopped after {} of {} bounces: {e}", tr.steps(), args.n))),
        None => Ok(()),
    }
}

fn parse_periods(s: &str) -> anyhow::Result<Vec<usize>> {
    let parsed = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse::<usize>()?, b.trim().parse::<usize>()?),
        None => {
            let m = s.trim().parse::<usize>()?;
            (m, m)
        }
    };
    anyhow::ensure!(parsed.0 >= 2 && parsed.0 <= parsed.1, "period range must satisfy 2 <= a <= b, got {s}");
    Ok((parsed.0..=parsed.1).collect())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Explicit vertex seeds for a spatial body, reproducible from `seed`.
fn spatial_seeds(body: &Body, m: usize, count: usize, seed: u64) -> Vec<Vec<ChartPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (m as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = body.ambient_dim();
    (0..count)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let y = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                    ChartPoint::nearest_chart(&y.normalize())
                })
                .collect()
        })
        .collect()
}

/// Periodic orbits of period `m`: every primitive rotation class for planar
/// bodies, random explicit seeds otherwise.
fn periodic_orbits(body: &Body, m: usize, count: usize, seed: u64) -> anyhow::Result<Vec<PeriodicOrbit>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if body.dim() == 1 {
        let mut all = Vec::new();
        for k in (1..=m / 2).filter(|&k| gcd(m, k) == 1) {
            all.extend(find_periodic(body, m, &SeedSpec::Rotation { k, count })?.orbits);
        }
        Ok(all)
    } else {
        Ok(find_periodic(body, m, &SeedSpec::Explicit(spatial_seeds(body, m, count, seed)))?.orbits)
    }
}

#[derive(Serialize)]
struct OrbitRecord {
    period: usize,
    points: Vec<Vec<f64>>,
    taus: Vec<f64>,
    eigenvalues: Vec<[f64; 2]>,
    class: String,
    residual: f64,
}

pub fn orbits(args: &OrbitsArgs) -> Result<(), Failure> {
    let c = &args.common;
    let body = load_body(&c.body)?;
    let periods = parse_periods(&args.period)?;
    let out = OutDir::create(&c.out)?;
    let tol = c.tol.unwrap_or(DEFAULT_CLASSIFY_TOL);
    let found: Vec<anyhow::Result<Vec<PeriodicOrbit>>> =
        periods.par_iter().map(|&m| periodic_orbits(&body, m, args.n, c.seed)).collect();
    let mut records = Vec::new();
    for orbits in found {
        for o in orbits? {
            let class = classify(&o, tol)?;
            records.push(OrbitRecord {
                period: o.period,
                points: o.base_points().iter().map(|p| p.iter().copied().collect()).collect(),
                taus: o.taus.clone(),
                eigenvalues: class.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
                class: class.kind.label(),
                residual: o.residual,
            });
        }
    }
    out.json("orbits.json", &records)?;
    let cells: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let top = r.eigenvalues.iter().map(|[a, b]| a.hypot(*b)).fold(0.0, f64::max);
            vec![r.period.to_string(), r.class.clone(), format!("{:.3e}", r.residual), format!("{top:.6}")]
        })
        .collect();
    let text = table(&["period", "class", "residual", "max|eig|"], &cells);
    out.write("orbits.txt", &text)?;
    print!("{text}");
    Ok(())
}

pub fn franks(args: &FranksArgs) -> Result<(), Failure> {
    let c = &args.common;
    let body = load_body(&c.body)?;
    let target = match &args.target {
        Some(path) => Some(matrix_from_rows(&read_json::<Vec<Vec<f64>>>(path)?)?),
        None => None,
    };
    let out = OutDir::create(&c.out)?;
    let m = args.period;
    let tol = c.tol.unwrap_or(DEFAULT_FRANKS_TOL);
    let orbit = periodic_orbits(&body, m, args.n, c.seed)?
        .into_iter()
        .find(|o| o.simple && !o.family)
        .ok_or_else(|| Failure::Nothing(format!("no isolated simple orbit of period {m}")))?;
    // Enough bounces to see every cyclic window of the orbit.
    let tr = iterate(&body, &orbit.points[0], m + 3);
    let adm = f_admissible(&tr, tol);

    #[derive(Serialize)]
    struct Scan<'a> {
        period: usize,
        points: Vec<Vec<f64>>,
        monodromy: Vec<Vec<f64>>,
        admissibility: &'a convex_billiards::franks::Admissibility,
    }
    let points = orbit.base_points().iter().map(|p| p.iter().copied().collect()).collect();
    let scan = Scan { period: m, points, monodromy: rows(&orbit.monodromy), admissibility: &adm };
    out.json("admissibility.json", &scan)?;
    if !adm.holds {
        let margins: Vec<String> = adm
            .windows
            .iter()
            .map(|w| format!("k={} omega={:.3e} delta_gap={:.3e}", w.k, w.report.omega_min_singular, w.report.delta_eigen_gap))
            .collect();
        return Err(Failure::Nothing(format!("no F-admissible window: {}", margins.join("; "))));
    }
    let Some(target) = target else { return Ok(()) };

    let mut last = None;
    let mut done = None;
    for start in 0..=m.saturating_sub(4) {
        match realize_target(&body, &orbit, start, &target, args.epsilon) {
            Ok(r) => {
                done = Some((start, r));
                break;
            }
            Err(e @ (FranksError::NotSymplectic(_) | FranksError::TooFar { .. })) => return Err(Failure::Input(e.into())),
            Err(e) => last = Some(e),
        }
    }
    let Some((start, r)) = done else {
        let why = last.map_or_else(|| format!("period {m} has no four-bounce window"), |e| e.to_string());
        return Err(Failure::Nothing(format!("target not realized: {why}")));
    };
    let again = PeriodicOrbit::from_point(&r.body, &orbit.points[0], m)?;
    let drift = again.points.iter().zip(&orbit.points).map(|(a, b)| (&a.p - &b.p).norm()).fold(0.0, f64::max);

    #[derive(Serialize)]
    struct Report {
        window_start: usize,
        iterations: usize,
        residual: f64,
        monodromy_error: f64,
        point_drift: f64,
        bumps: Vec<BumpSpec>,
    }
    let spec = r.body.to_spec();
    let fresh = spec.bumps[body.bump_count()..].to_vec();
    out.json(
        "realization.json",
        &Report {
            window_start: start,
            iterations: r.iterations,
            residual: r.residual,
            monodromy_error: (&again.monodromy - &target).norm(),
            point_drift: drift,
            bumps: fresh,
        },
    )?;
    out.json("body.json", &spec)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DatumJson {
    period: usize,
    source: PointJson,
    target: PointJson,
    z: PointJson,
    angle: f64,
    coincident: bool,
    forward_steps: Option<usize>,
    backward_steps: Option<usize>,
    frame: Vec<Vec<f64>>,
    stable: Vec<Vec<f64>>,
    unstable: Vec<Vec<f64>>,
}

impl DatumJson {
    fn of(d: &HeteroclinicDatum) -> Self {
        Self {
            period: d.source.period,
            source: PointJson::of(&d.source.points[0]),
            target: PointJson::of(&d.target.points[0]),
            z: PointJson::of(&d.z),
            angle: d.angle,
            coincident: d.coincident,
            forward_steps: d.forward_steps,
            backward_steps: d.backward_steps,
            frame: rows(&d.frame().basis),
            stable: rows(&d.stable.matrix),
            unstable: rows(&d.unstable.matrix),
        }
    }

    /// Recomputes the datum on `body` from the stored points.
    fn resolve(&self, body: &Body) -> anyhow::Result<HeteroclinicDatum> {
        let x = PeriodicOrbit::from_point(body, &self.source.resolve(body)?, self.period)?;
        let y = PeriodicOrbit::from_point(body, &self.target.resolve(body)?, self.period)?;
        Ok(heteroclinic_datum(body, &x, &y, &self.z.resolve(body)?)?)
    }
}

/// Manifold branches of `orbit` as polylines in `(theta, u)` coordinates.
fn manifold_curves(body: &Body, orbit: &PeriodicOrbit, periods: usize) -> anyhow::Result<String> {
    const SAMPLES: usize = 200;
    let mut csv = Csv::with_header(&["side", "sign", "level", "theta", "u"]);
    for side in [Side::Unstable, Side::Stable] {
        let lm = local_manifold(body, orbit, side, 7)?;
        let lambda = lm.expansion();
        let t0 = 0.9 * lm.radius / lambda;
        let label = if side == Side::Unstable { "unstable" } else { "stable" };
        for sign in [1.0, -1.0] {
            for level in 0..=periods {
                for i in 0..=SAMPLES {
                    let t = Vector::from_element(1, sign * t0 * lambda.powf(i as f64 / SAMPLES as f64));
                    let Ok(mut y) = lm.point(body, &t) else { break };
                    let mut ok = true;
                    for _ in 0..level {
                        match lm.push_out(body, &y) {
                            Ok(next) => y = next,
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        break;
                    }
                    let (theta, u) = phase_coords(body, &y)?;
                    csv.row([label.to_string(), format!("{sign:+}"), level.to_string(), fmt_f64(theta), fmt_f64(u)]);
                }
            }
        }
    }
    Ok(csv.finish())
}

fn hyperbolic_orbit(body: &Body, m: usize, seed: u64) -> Result<PeriodicOrbit, Failure> {
    for o in periodic_orbits(body, m, 8, seed)? {
        if o.simple && classify(&o, DEFAULT_CLASSIFY_TOL)?.kind == SpectralKind::Hyperbolic {
            return Ok(o);
        }
    }
    Err(Failure::Nothing("no hyperbolic orbits".into()))
}

pub fn donnay(args: &DonnayArgs) -> Result<(), Failure> {
    let c = &args.common;
    let body = load_body(&c.body)?;
    if body.dim() != 1 {
        return Err(Failure::Input(anyhow!("donnay needs a planar body, got boundary dimension {}", body.dim())));
    }
    let out = OutDir::create(&c.out)?;
    let x = hyperbolic_orbit(&body, args.period, c.seed)?;
    let search = match find_heteroclinic(&body, &x, &x, args.n) {
        Ok(s) => s,
        Err(ManifoldError::NoIntersection) => return Err(Failure::Nothing("no heteroclinic connection".into())),
        Err(e) => return Err(e.into()),
    };
    let datum = search.data.iter().find(|d| d.coincident).unwrap_or(&search.data[0]).clone();
    out.json("datum.json", &DatumJson::of(&datum))?;

    let bound = transversality_at(&body, &datum, 0.0)?.epsilon_bound;
    let epsilon0 = donnay_perturb(&body, &datum, 0.0)?.epsilon0;
    let limit = bound.min(epsilon0);
    println!("epsilon_bound = {}", fmt_f64(bound));
    println!("epsilon0 = {}", fmt_f64(epsilon0));
    let epsilon = match args.epsilon {
        Some(e) if !(0.0..limit).contains(&e) => {
            return Err(Failure::Input(anyhow!(
                "epsilon {} refused: must lie in [0, {}) (epsilon_bound {}, convexity limit {})",
                fmt_f64(e),
                fmt_f64(limit),
                fmt_f64(bound),
                fmt_f64(epsilon0)
            )))
        }
        Some(e) => e,
        None => 0.5 * limit,
    };
    let pert = donnay_perturb(&body, &datum, epsilon)?;
    let trans = transversality_at(&body, &datum, epsilon)?;
    let moved = PeriodicOrbit::from_point(&pert.body, &x.points[0], x.period)?;
    let drift = moved.points.iter().zip(&x.points).map(|(a, b)| a.distance(b)).fold(0.0, f64::max);
    let after = heteroclinic_datum(&pert.body, &moved, &moved, &datum.z)?;
    out.json("datum_perturbed.json", &DatumJson::of(&after))?;
    out.json("body.json", &pert.body.to_spec())?;
    out.write("manifolds.csv", &manifold_curves(&body, &x, args.n)?)?;
    out.write("manifolds_perturbed.csv", &manifold_curves(&pert.body, &moved, args.n)?)?;

    #[derive(Serialize)]
    struct SearchSummary {
        data: usize,
        transverse: usize,
        candidates: usize,
        tangencies: usize,
        uncertified: usize,
        coincident_branches: usize,
    }
    let verify = if args.verify {
        let s = find_heteroclinic(&pert.body, &moved, &moved, args.n)?;
        Some(SearchSummary {
            data: s.data.len(),
            transverse: s.data.iter().filter(|d| !d.coincident).count(),
            candidates: s.candidates,
            tangencies: s.tangencies,
            uncertified: s.uncertified,
            coincident_branches: s.coincident_branches,
        })
    } else {
        None
    };

    #[derive(Serialize)]
    struct Report {
        epsilon: f64,
        epsilon_bound: f64,
        epsilon0: f64,
        transverse: bool,
        margin: f64,
        angle_before: f64,
        angle_after: f64,
        orbit_drift: f64,
        connections_found: usize,
        perturbed_search: Option<SearchSummary>,
    }
    let report = Report {
        epsilon,
        epsilon_bound: bound,
        epsilon0,
        transverse: trans.transverse,
        margin: trans.margin,
        angle_before: datum.angle,
        angle_after: after.angle,
        orbit_drift: drift,
        connections_found: search.data.len(),
        perturbed_search: verify,
    };
    out.json("transversality.json", &report)?;
    println!("epsilon = {}", fmt_f64(epsilon));
    println!("margin = {}", fmt_f64(trans.margin));
    println!("angle {} -> {}", fmt_f64(datum.angle), fmt_f64(after.angle));
    Ok(())
}

pub fn entropy(args: &EntropyArgs) -> Result<(), Failure> {
    let c = &args.common;
    let body = load_body(&c.body)?;
    let datum = match &args.datum {
        Some(path) => Some(read_json::<DatumJson>(path)?.resolve(&body)?),
        None => None,
    };
    let out = OutDir::create(&c.out)?;
    let run = LyapunovRun { start: None, steps: args.steps, seed: c.seed };
    let escaped = |e: String| Failure::Partial(format!("Lyapunov run stopped early: {e}"));
    let (report, returns) = match &datum {
        None => {
            let rep = count_and_entropy(&body, args.n, args.seeds, Some(&run)).map_err(|e| match e {
                convex_billiards::orbits::OrbitError::Dynamics(d) => escaped(d.to_string()),
                other => other.into(),
            })?;
            (rep, None)
        }
        Some(d) => {
            let tangle = tangle_diagnostics(&body, d, args.steps, 1e-6, c.seed).map_err(|e| escaped(e.to_string()))?;
            let mut rep = count_and_entropy(&body, args.n, args.seeds, None)?;
            rep.lyapunov = Some(tangle.lyapunov);
            (rep, Some(tangle.returns))
        }
    };

    let mut csv = Csv::with_header(&["n", "count", "families", "rate"]);
    for r in &report.rows {
        csv.row([r.n.to_string(), r.count.to_string(), r.families.to_string(), r.rate.map_or("nan".into(), fmt_f64)]);
    }
    out.write("entropy.csv", &csv.finish())?;

    #[derive(Serialize)]
    struct Report<'a> {
        rows: &'a [convex_billiards::orbits::EntropyRow],
        lyapunov: &'a Option<convex_billiards::orbits::LyapunovReport>,
        tangle_returns: Option<usize>,
    }
    out.json("entropy.json", &Report { rows: &report.rows, lyapunov: &report.lyapunov, tangle_returns: returns })?;

    let cells: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), r.count.to_string(), r.rate.map_or("-".into(), |x| format!("{x:.6}"))])
        .collect();
    print!("{}", table(&["n", "count", "rate"], &cells));
    if let Some(l) = &report.lyapunov {
        println!("lyapunov = {:.6} [{:.6}, {:.6}] over {} bounces", l.exponent, l.ci_low, l.ci_high, l.steps);
    }
    Ok(())
}
