//! Chaos diagnostics near a transverse heteroclinic connection.

use serde::Serialize;

use crate::dynamics::{billiard_map, displaced_phase_point, JacobiFrame};
use crate::geometry::Body;
use crate::linalg::Vector;
use crate::orbits::{lyapunov_exponent, LyapunovReport, LyapunovRun};

use super::{phase_distance_to, HeteroclinicDatum, ManifoldError};

const SEPARATION_STEPS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct TangleReport {
    pub lyapunov: LyapunovReport,
    /// Visits within `1e-2` of the periodic orbits along the run.
    pub returns: usize,
    pub steps: usize,
    /// `log10` of the phase distance between the orbits of `z` and of the
    /// start, for the first bounces.
    pub separation_log: Vec<f64>,
}

/// Finite-time Lyapunov exponent of an orbit started `offset` off the
/// heteroclinic point, counting its returns to the periodic orbits.
pub fn tangle_diagnostics(
    body: &Body,
    datum: &HeteroclinicDatum,
    steps: usize,
    offset: f64,
    seed: u64,
) -> Result<TangleReport, ManifoldError> {
    let d = datum.z.dim();
    let frame = JacobiFrame::canonical(&datum.z);
    let start = displaced_phase_point(body, &frame, &Vector::from_fn(2 * d, |i, _| offset / (1.0 + i as f64)))?;
    let lyapunov = lyapunov_exponent(body, &LyapunovRun { start: Some(start.clone()), steps, seed })?;
    if lyapunov.steps < steps {
        return Err(ManifoldError::Escaped(lyapunov.steps));
    }
    let targets: Vec<_> = datum.source.points.iter().chain(&datum.target.points).cloned().collect();
    let mut returns = 0;
    let mut near = false;
    let mut y = start;
    let mut w = datum.z.clone();
    let mut separation_log = Vec::new();
    for i in 0..steps {
        if i < SEPARATION_STEPS {
            separation_log.push(y.distance(&w).log10());
            w = billiard_map(body, &w)?;
        }
        let close = phase_distance_to(&targets, &y) < 1e-2;
        if close && !near {
            returns += 1;
        }
        near = close;
        y = billiard_map(body, &y)?;
    }
    Ok(TangleReport { lyapunov, returns, steps, separation_log })
}
