use num_complex::Complex64;

use crate::linalg::{min_principal_angle, singular_values, symplectic_inverse, Matrix};

use super::{OrbitError, PeriodicOrbit};

/// Unit-modulus and `+-1` detection tolerance.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-6;
/// Largest `|lambda * mu - 1|` tolerated when pairing eigenvalues.
const PAIRING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    Hyperbolic,
    QElliptic(usize),
    Degenerate,
    Parabolic,
}

impl SpectralKind {
    pub fn label(&self) -> String {
        match self {
            Self::Hyperbolic => "hyperbolic".into(),
            Self::QElliptic(q) => format!("{q}-elliptic"),
            Self::Degenerate => "degenerate".into(),
            Self::Parabolic => "parabolic".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralClass {
    pub kind: SpectralKind,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// `a_j` in `(0, 1/2)` with `exp(+-2 pi i a_j)` the unit-modulus pairs.
    pub elliptic_angles: Vec<f64>,
    /// No resonance `sum nu_j a_j in Z` with `1 <= sum |nu_j| <= 4`. False
    /// when there are no elliptic angles.
    pub four_elementary: bool,
    /// Smallest distance of a resonance combination to the integers; NaN
    /// without elliptic angles.
    pub resonance_margin: f64,
    /// The margin is within ten tolerances, so the boolean is not reliable.
    pub resonance_marginal: bool,
    /// Largest pairing defect `|lambda * mu - 1|` over the spectrum.
    pub pairing_defect: f64,
}

fn pairing_defect(ev: &[Complex64]) -> f64 {
    let n = ev.len();
    let mut used = vec![false; n];
    let mut worst: f64 = 0.0;
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if !used[j] {
                let e = (ev[i] * ev[j] - 1.0).norm();
                if e < best.0 {
                    best = (e, j);
                }
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    // Conjugation symmetry.
    for l in ev {
        let c = ev.iter().map(|m| (m - l.conj()).norm()).fold(f64::INFINITY, f64::min);
        worst = worst.max(c / l.norm().max(1.0));
    }
    worst
}

fn resonance_margin(a: &[f64]) -> f64 {
    let q = a.len();
    let mut best = f64::INFINITY;
    let mut nu = vec![-4i64; q];
    loop {
        let l1: i64 = nu.iter().map(|x| x.abs()).sum();
        if (1..=4).contains(&l1) {
            let s: f64 = nu.iter().zip(a).map(|(n, x)| *n as f64 * x).sum();
            best = best.min((s - s.round()).abs());
        }
        let mut i = 0;
        while i < q {
            nu[i] += 1;
            if nu[i] <= 4 {
                break;
            }
            nu[i] = -4;
            i += 1;
        }
        if i == q {
            break;
        }
    }
    best
}

/// Spectral class of a symplectic matrix.
pub fn classify_matrix(m: &Matrix, tol: f64) -> Result<SpectralClass, OrbitError> {
    let mut ev: Vec<Complex64> = m.clone().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let defect = pairing_defect(&ev);
    if !(defect < PAIRING_TOL.max(tol)) {
        return Err(OrbitError::NotSymplectic(defect));
    }
    let n = ev.len();
    let pm1 = ev.iter().filter(|l| (*l - 1.0).norm() < tol || (*l + 1.0).norm() < tol).count();
    let mut angles: Vec<f64> = ev
        .iter()
        .filter(|l| (l.norm() - 1.0).abs() < tol && l.im > tol && (*l - 1.0).norm() >= tol && (*l + 1.0).norm() >= tol)
        .map(|l| l.arg() / std::f64::consts::TAU)
        .collect();
    angles.sort_by(f64::total_cmp);
    let kind = if pm1 == n {
        SpectralKind::Parabolic
    } else if pm1 > 0 {
        SpectralKind::Degenerate
    } else if !angles.is_empty() {
        SpectralKind::QElliptic(angles.len())
    } else {
        SpectralKind::Hyperbolic
    };
    let (four, margin) = if angles.is_empty() {
        (false, f64::NAN)
    } else {
        let r = resonance_margin(&angles);
        (r > tol, r)
    };
    Ok(SpectralClass {
        kind,
        eigenvalues: ev,
        elliptic_angles: angles,
        four_elementary: four,
        resonance_margin: margin,
        resonance_marginal: margin.is_finite() && margin < 10.0 * tol,
        pairing_defect: defect,
    })
}

pub fn classify(orbit: &PeriodicOrbit, tol: f64) -> Result<SpectralClass, OrbitError> {
    classify_matrix(&orbit.monodromy, tol)
}

/// Uniform hyperbolicity data along a periodic orbit.
#[derive(Debug, Clone)]
pub struct HyperbolicityReport {
    /// Smallest `n` with `|Df^n|_E| <= 1/2` and `|Df^{-n}|_F| <= 1/2` at every orbit point.
    pub n: usize,
    pub stable_factor: f64,
    pub unstable_factor: f64,
    /// Smallest principal angle between `E` and `F` over the orbit.
    pub min_angle: f64,
    /// Orthonormal bases (`2d x d`) of `E` and `F` at each orbit point.
    pub stable: Vec<Matrix>,
    pub unstable: Vec<Matrix>,
}

fn orthonormal_columns(m: &Matrix) -> Matrix {
    let k = m.ncols();
    m.clone().qr().q().columns(0, k).into_owned()
}

/// Dominant `d`-dimensional invariant subspace of `a` by orthogonal iteration.
fn dominant_subspace(a: &Matrix, d: usize) -> Matrix {
    let n = a.nrows();
    let mut q = orthonormal_columns(&Matrix::from_fn(n, d, |i, j| ((1 + i * 7 + j * 13) as f64).sin()));
    for _ in 0..20_000 {
        let next = orthonormal_columns(&(a * &q));
        let drift = (&next - &q * (q.transpose() * &next)).norm();
        q = next;
        if drift < 1e-15 {
            break;
        }
    }
    q
}

pub fn hyperbolicity_certificate(orbit: &PeriodicOrbit, max_steps: usize) -> Result<HyperbolicityReport, OrbitError> {
    let class = classify(orbit, DEFAULT_CLASSIFY_TOL)?;
    if class.kind != SpectralKind::Hyperbolic {
        return Err(OrbitError::NotHyperbolic(class.kind.label()));
    }
    let m = orbit.period;
    let d = orbit.dim();
    let mono = &orbit.monodromy;
    let e0 = dominant_subspace(&symplectic_inverse(mono), d);
    let f0 = dominant_subspace(mono, d);
    let mut stable = vec![e0];
    let mut unstable = vec![f0];
    for i in 0..m - 1 {
        stable.push(orthonormal_columns(&(&orbit.steps[i] * &stable[i])));
        unstable.push(orthonormal_columns(&(&orbit.steps[i] * &unstable[i])));
    }
    let min_angle = (0..m).map(|i| min_principal_angle(&stable[i], &unstable[i])).fold(f64::INFINITY, f64::min);
    if min_angle < 1e-6 {
        return Err(OrbitError::IllConditioned(min_angle));
    }
    let inv: Vec<Matrix> = orbit.steps.iter().map(symplectic_inverse).collect();
    let mut fwd: Vec<Matrix> = stable.clone();
    let mut bwd: Vec<Matrix> = unstable.clone();
    for n in 1..=max_steps {
        let mut s_worst: f64 = 0.0;
        let mut u_worst: f64 = 0.0;
        for i in 0..m {
            // fwd[i] = Df^n at points[i] applied to E_i, based at points[i + n].
            fwd[i] = &orbit.steps[(i + n - 1) % m] * &fwd[i];
            // bwd[i] = Df^{-n} at points[i] applied to F_i, based at points[i - n].
            bwd[i] = &inv[(i + m * n - n) % m] * &bwd[i];
            s_worst = s_worst.max(singular_values(&fwd[i])[0]);
            u_worst = u_worst.max(singular_values(&bwd[i])[0]);
        }
        if s_worst <= 0.5 && u_worst <= 0.5 {
            return Ok(HyperbolicityReport { n, stable_factor: s_worst, unstable_factor: u_worst, min_angle, stable, unstable });
        }
    }
    Err(OrbitError::NotHyperbolic(format!("no contraction by 1/2 within {max_steps} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_parabolic() {
        let c = classify_matrix(&Matrix::identity(4, 4), 1e-6).unwrap();
        assert_eq!(c.kind, SpectralKind::Parabolic);
    }

    #[test]
    fn rotation_pair_is_elliptic() {
        let t = 0.3f64 * std::f64::consts::TAU;
        let m = Matrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        let c = classify_matrix(&m, 1e-6).unwrap();
        assert_eq!(c.kind, SpectralKind::QElliptic(1));
        assert!((c.elliptic_angles[0] - 0.3).abs() < 1e-12);
        assert!(c.four_elementary);
        assert!((c.resonance_margin - 0.1).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_is_resonant() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let c = classify_matrix(&m, 1e-6).unwrap();
        assert!(!c.four_elementary);
    }

    #[test]
    fn non_symplectic_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!(matches!(classify_matrix(&m, 1e-6), Err(OrbitError::NotSymplectic(_))));
    }

    #[test]
    fn margin_enumerates_mixed_combinations() {
        let r = resonance_margin(&[0.2, 0.3]);
        // 0.2 * 1 + 0.3 * (-2) + ... ; nu = (2, 2) gives exactly 1.
        assert!(r < 1e-12);
    }
}
