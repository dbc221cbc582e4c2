//! Quasi-random sample points for convexity sweeps.

use super::chart::{chart_count, ChartPoint};

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `n` Halton points of the ball `|c - center| < radius` in `R^d`, by
/// rejection from the enclosing cube.
pub fn halton_ball(center: &[f64], radius: f64, n: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut out = Vec::with_capacity(n);
    let mut i = 1u64;
    while out.len() < n {
        let c: Vec<f64> = (0..d)
            .map(|k| center[k] + radius * (2.0 * radical_inverse(i, PRIMES[k]) - 1.0))
            .collect();
        i += 1;
        let r2: f64 = c.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 < radius * radius {
            out.push(c);
        }
    }
    out
}

/// Quasi-uniform cover of the sphere: every chart pole plus `per_chart`
/// points from the part of each chart where its axis dominates.
pub fn sphere_cover(d: usize, per_chart: usize) -> Vec<ChartPoint> {
    let reach = (d as f64 / (d as f64 + 1.0)).sqrt();
    let mut out = Vec::new();
    for chart in 0..chart_count(d + 1) {
        out.push(ChartPoint::pole(chart, d));
        for c in halton_ball(&vec![0.0; d], reach, per_chart.saturating_sub(1)) {
            out.push(ChartPoint::new(chart, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_points_stay_inside() {
        let pts = halton_ball(&[0.2, -0.1], 0.3, 200);
        assert_eq!(pts.len(), 200);
        for p in pts {
            assert!((p[0] - 0.2).hypot(p[1] + 0.1) < 0.3);
        }
    }

    #[test]
    fn cover_reaches_every_direction() {
        let cover = sphere_cover(2, 400);
        let probe = nalgebra::DVector::from_vec(vec![0.577, 0.577, 0.578]).normalize();
        let best = cover
            .iter()
            .map(|s| (s.sphere_point() - &probe).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 0.15);
    }
}
