//! Orbit-growth tables and finite-time Lyapunov exponents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{tangent_map, JacobiFrame, PhasePoint};
use crate::geometry::{Body, ChartPoint};
use crate::linalg::{Matrix, Vector};

use super::search::{find_periodic, SeedSpec};
use super::OrbitError;

#[derive(Debug, Clone, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    /// Lower bound on the number of period-`n` orbits; a family counts once.
    pub count: usize,
    pub families: usize,
    /// `log(count) / n`, absent when nothing was found.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    pub exponent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bounces actually performed; shorter than requested if the orbit grazed.
    pub steps: usize,
    /// All `2d` exponents, largest first.
    pub spectrum: Vec<f64>,
}

impl LyapunovReport {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub rows: Vec<EntropyRow>,
    pub lyapunov: Option<LyapunovReport>,
}

/// Where and how long to run the Lyapunov estimate.
#[derive(Debug, Clone)]
pub struct LyapunovRun {
    /// Random interior start drawn from `seed` when absent.
    pub start: Option<PhasePoint>,
    pub steps: usize,
    pub seed: u64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Periodic-orbit counts for `n = 2..=n_max` over the primitive rotation
/// classes of a planar body, plus an optional Lyapunov estimate.
pub fn count_and_entropy(
    body: &Body,
    n_max: usize,
    seeds_per_n: usize,
    lyapunov: Option<&LyapunovRun>,
) -> Result<EntropyReport, OrbitError> {
    let mut rows = Vec::new();
    if body.dim() == 1 {
        for n in 2..=n_max {
            let mut count = 0;
            let mut families = 0;
            for k in (1..=n / 2).filter(|&k| gcd(n, k) == 1) {
                let res = find_periodic(body, n, &SeedSpec::Rotation { k, count: seeds_per_n.max(1) })?;
                count += res.orbits.len();
                families += res.orbits.iter().filter(|o| o.family).count();
            }
            let rate = (count > 0).then(|| (count as f64).ln() / n as f64);
            rows.push(EntropyRow { n, count, families, rate });
        }
    }
    let lyapunov = match lyapunov {
        Some(run) => Some(lyapunov_exponent(body, run)?),
        None => None,
    };
    Ok(EntropyReport { rows, lyapunov })
}

fn random_start(body: &Body, rng: &mut ChaCha8Rng) -> Result<PhasePoint, OrbitError> {
    let n = body.ambient_dim();
    loop {
        let y = Vector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        if y.norm() < 1e-3 || y.norm() > 1.0 {
            continue;
        }
        let s = ChartPoint::nearest_chart(&y.normalize());
        let dir = Vector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let theta = (rng.random::<f64>() * 2.0 - 1.0) * 1.2;
        if let Ok(x) = PhasePoint::from_angle(body, &s, &dir, theta) {
            return Ok(x);
        }
    }
}

fn bootstrap_mean_ci(samples: &[f64], rng: &mut ChaCha8Rng, resamples: usize) -> (f64, f64) {
    let n = samples.len();
    let block = (n as f64).sqrt().ceil().max(1.0) as usize;
    let blocks = n.div_ceil(block);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for _ in 0..blocks {
                let start = rng.random_range(0..=n - block);
                sum += samples[start..start + block].iter().sum::<f64>();
                cnt += block;
            }
            sum / cnt as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((resamples as f64 - 1.0) * q).round() as usize];
    (at(0.025), at(0.975))
}

/// Largest Lyapunov exponent of the tangent cocycle by QR re-orthonormalization
/// after every bounce, with a 95% moving-block bootstrap interval.
pub fn lyapunov_exponent(body: &Body, run: &LyapunovRun) -> Result<LyapunovReport, OrbitError> {
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let start = match &run.start {
        Some(x) => x.clone(),
        None => random_start(body, &mut rng)?,
    };
    let d = start.dim();
    let mut frame = JacobiFrame::canonical(&start);
    let mut q = Matrix::identity(2 * d, 2 * d);
    let mut sums = vec![0.0; 2 * d];
    let mut top = Vec::with_capacity(run.steps);
    for _ in 0..run.steps {
        let Ok((m, next)) = tangent_map(body, &frame.base, &frame) else { break };
        let qr = (&m * &q).qr();
        let r = qr.r();
        let mut qq = qr.q();
        for i in 0..2 * d {
            if r[(i, i)] < 0.0 {
                let mut c = qq.column_mut(i);
                c *= -1.0;
            }
            sums[i] += r[(i, i)].abs().ln();
        }
        top.push(r[(0, 0)].abs().ln());
        q = qq;
        frame = next;
    }
    let steps = top.len();
    if steps < 2 {
        return Err(OrbitError::Dynamics(crate::dynamics::DynamicsError::Grazing { cos: frame.base.cos_angle }));
    }
    let mut spectrum: Vec<f64> = sums.iter().map(|s| s / steps as f64).collect();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let exponent = top.iter().sum::<f64>() / steps as f64;
    let (ci_low, ci_high) = bootstrap_mean_ci(&top, &mut rng, 1000);
    Ok(LyapunovReport { exponent, ci_low, ci_high, steps, spectrum })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_for_period_two() {
        let body = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        let rep = count_and_entropy(&body, 2, 4, None).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].count, 2);
    }

    #[test]
    fn circle_exponent_is_near_zero() {
        let body = Body::sphere(2, 1.0).unwrap();
        let rep = lyapunov_exponent(&body, &LyapunovRun { start: None, steps: 4000, seed: 3 }).unwrap();
        assert!(rep.exponent.abs() < 5e-3, "{}", rep.exponent);
        // Exponents of a symplectic cocycle come in +- pairs.
        assert!((rep.spectrum[0] + rep.spectrum[1]).abs() < 1e-9);
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let body = Body::ellipsoid(&[1.3, 1.0]).unwrap();
        let run = LyapunovRun { start: None, steps: 500, seed: 11 };
        let a = lyapunov_exponent(&body, &run).unwrap();
        let b = lyapunov_exponent(&body, &run).unwrap();
        assert_eq!(a.ci_low, b.ci_low);
        assert_eq!(a.exponent, b.exponent);
    }
}
