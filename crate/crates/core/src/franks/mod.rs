//! Linear algebra behind the billiard Franks lemma: the commutator map on
//! symmetric operators, the four-bounce product and its differential, and
//! the admissibility test for orbit windows.

mod realize;

pub use realize::{realize_target, Realization};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::OrbitTrace;
use crate::geometry::GeometryError;
use crate::linalg::{
    bounce_block, columns_to_matrix, orthogonal_complement, singular_values, sym_basis, sym_coords, symmetrize,
    symplectic_form, symplectic_inverse, vec_of, Matrix, Vector,
};
use crate::orbits::OrbitError;

/// Absolute threshold on eigenvalue gaps and on the smallest singular value.
pub const DEFAULT_FRANKS_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FranksError {
    #[error("flight times must be nonzero and finite, got {0:?}")]
    FlightTime([f64; 4]),
    #[error("curvature block {0} is not symmetric")]
    NotSymmetric(usize),
    #[error("spectrum is nearly multiple (smallest gap {0:.3e})")]
    NearMultiple(f64),
    #[error("window at {start} is not F-admissible (Omega sigma_min {omega:.3e}, Delta gap {gap:.3e})")]
    NotAdmissible { start: usize, omega: f64, gap: f64 },
    #[error("window {start}..{end} does not fit an orbit of period {period}")]
    Window { start: usize, end: usize, period: usize },
    #[error("orbit visits a reflection point twice")]
    NotSimple,
    #[error("target is {distance:.3e} from the monodromy, outside the ball of radius {delta:.3e}")]
    TooFar { distance: f64, delta: f64 },
    #[error("target is not symplectic (defect {0:.3e})")]
    NotSymplectic(f64),
    #[error("curvature Newton stalled at residual {0:.3e}")]
    NewtonFailed(f64),
    #[error("curvature correction {0:.3e} left the trust region")]
    TrustRegion(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// Curvature operators and flight times of four consecutive bounces.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProgram {
    pub ks: [Matrix; 4],
    pub taus: [f64; 4],
}

impl CurvatureProgram {
    pub fn new(ks: [Matrix; 4], taus: [f64; 4]) -> Result<Self, FranksError> {
        if taus.iter().any(|t| !t.is_finite() || *t == 0.0) {
            return Err(FranksError::FlightTime(taus));
        }
        for (i, k) in ks.iter().enumerate() {
            if (k - k.transpose()).norm() > 1e-12 * (1.0 + k.norm()) {
                return Err(FranksError::NotSymmetric(i));
            }
        }
        Ok(Self { ks, taus })
    }

    pub fn dim(&self) -> usize {
        self.ks[0].nrows()
    }

    fn blocks(&self) -> Vec<Matrix> {
        self.ks.iter().zip(&self.taus).map(|(k, t)| bounce_block(k, *t)).collect()
    }
}

/// `X^T Y - Y X`.
pub fn psi_map(x: &Matrix, y: &Matrix) -> Matrix {
    x.transpose() * y - y * x
}

/// A kernel basis of the commutator map on `Sym` and an orthonormal
/// complement on which it is injective.
#[derive(Debug, Clone)]
pub struct PsiKernel {
    pub kernel: Vec<Matrix>,
    pub complement: Vec<Matrix>,
    /// Smallest singular value of the map restricted to the complement;
    /// infinite when the complement is trivial.
    pub min_singular: f64,
}

fn eigen_gap(ev: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            gap = gap.min((ev[i] - ev[j]).norm());
        }
    }
    gap
}

fn from_sym_coords(c: &Vector, basis: &[Matrix]) -> Matrix {
    basis.iter().zip(c.iter()).fold(Matrix::zeros(basis[0].nrows(), basis[0].ncols()), |acc, (e, x)| acc + e * *x)
}

/// Kernel `{v v^T : v^T X = lambda v^T}` of `Y -> X^T Y - Y X` on symmetric
/// matrices, for `X` with simple spectrum.
pub fn psi_kernel(x: &Matrix, gap_tol: f64) -> Result<PsiKernel, FranksError> {
    let d = x.nrows();
    let ev: Vec<Complex64> = x.clone().complex_eigenvalues().iter().copied().collect();
    let gap = eigen_gap(&ev);
    if gap <= gap_tol {
        return Err(FranksError::NearMultiple(gap));
    }
    let kernel: Vec<Matrix> = if ev.iter().all(|l| l.im.abs() <= gap_tol) {
        ev.iter()
            .map(|l| {
                let shifted = x.transpose() - Matrix::identity(d, d) * l.re;
                let svd = shifted.svd(false, true);
                let vt = svd.v_t.expect("requested");
                let (imin, _) = svd.singular_values.argmin();
                let v = vt.row(imin).transpose();
                &v * v.transpose()
            })
            .collect()
    } else {
        // Complex pairs: a real basis of the same kernel from the vectorized map.
        svd_kernel(x)
    };
    Ok(split(x, kernel))
}

/// The `d` least-stretched directions of the vectorized commutator map.
fn svd_kernel(x: &Matrix) -> Vec<Matrix> {
    let d = x.nrows();
    let basis = sym_basis(d);
    let cols: Vec<Vector> = basis.iter().map(|e| vec_of(&psi_map(x, e))).collect();
    let svd = columns_to_matrix(&cols, d * d).svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*a].total_cmp(&svd.singular_values[*b]));
    order[..d].iter().map(|&i| from_sym_coords(&vt.row(i).transpose(), &basis)).collect()
}

fn split(x: &Matrix, kernel: Vec<Matrix>) -> PsiKernel {
    let d = x.nrows();
    let basis = sym_basis(d);
    let kc: Vec<Vector> = kernel.iter().map(sym_coords).collect();
    let complement: Vec<Matrix> =
        orthogonal_complement(&kc, basis.len()).iter().map(|c| from_sym_coords(c, &basis)).collect();
    let min_singular = if complement.is_empty() {
        f64::INFINITY
    } else {
        let cols: Vec<Vector> = complement.iter().map(|e| vec_of(&psi_map(x, e))).collect();
        *singular_values(&columns_to_matrix(&cols, d * d)).last().expect("nonempty")
    };
    PsiKernel { kernel, complement, min_singular }
}

/// `A(K_4, tau_4) A(K_3, tau_3) A(K_2, tau_2) A(K_1, tau_1)`.
pub fn b_map(prog: &CurvatureProgram) -> Matrix {
    let a = prog.blocks();
    &a[3] * &a[2] * &a[1] * &a[0]
}

/// Derivative of the four-bounce product in direction `s` of curvature slot `slot`.
pub fn b_directional(prog: &CurvatureProgram, slot: usize, s: &Matrix) -> Matrix {
    let d = prog.dim();
    let a = prog.blocks();
    let mut da = Matrix::zeros(2 * d, 2 * d);
    da.view_mut((d, 0), (d, d)).copy_from(s);
    da.view_mut((d, d), (d, d)).copy_from(&(s * prog.taus[slot]));
    (0..4).fold(Matrix::identity(2 * d, 2 * d), |acc, i| if i == slot { &da * acc } else { &a[i] * acc })
}

/// Coordinates of `Omega_0 B^{-1} dB` (a symmetric matrix) for a tangent
/// vector `dB` at `B`; this identifies the tangent space of `Sp(2d)` with
/// `Sym(2d)`, of dimension `d(2d+1)`.
pub fn sp_coords(b: &Matrix, db: &Matrix) -> Vector {
    let j = symplectic_form(b.nrows() / 2);
    sym_coords(&symmetrize(&(j * symplectic_inverse(b) * db)))
}

/// `DB(K)` as a `d(2d+1) x 4 d(d+1)/2` matrix, slots in order, each slot
/// in the orthonormal basis of `Sym(d)`.
pub fn db_matrix(prog: &CurvatureProgram) -> Matrix {
    let d = prog.dim();
    let b = b_map(prog);
    let basis = sym_basis(d);
    let mut cols = Vec::with_capacity(4 * basis.len());
    for slot in 0..4 {
        for e in &basis {
            cols.push(sp_coords(&b, &b_directional(prog, slot, e)));
        }
    }
    columns_to_matrix(&cols, d * (2 * d + 1))
}

/// Curvature directions used to solve for a target: all of `Sym(d)` at the
/// first three bounces and the complement of the commutator kernel of
/// `Delta(K_2, K_3)` at the last one. Their number is `d(2d+1)`.
pub fn window_directions(prog: &CurvatureProgram) -> Vec<(usize, Matrix)> {
    let [_, k2, k3, _] = &prog.ks;
    let [_, t2, t3, t4] = prog.taus;
    let delta = delta_operator(k2, k3, t2, t3, t4);
    let last = match psi_kernel(&delta, DEFAULT_FRANKS_TOL) {
        Ok(k) => k.complement,
        Err(_) => split(&delta, svd_kernel(&delta)).complement,
    };
    let sym = sym_basis(prog.dim());
    (0..3)
        .flat_map(|s| sym.iter().map(move |e| (s, e.clone())))
        .chain(last.into_iter().map(|e| (3, e)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DbRank {
    /// Rank in the window directions, a square `d(2d+1)` system.
    pub rank: usize,
    /// Rank over all of `Sym(d)^4`.
    pub full_rank: usize,
}

fn numerical_rank(sv: &[f64]) -> usize {
    let cut = 1e-9 * sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|s| **s > cut).count()
}

/// Rank of `DB(K)` in the window directions (singular values above `1e-9`
/// relative to the largest), together with the smallest singular value there.
pub fn db_rank(prog: &CurvatureProgram) -> (DbRank, f64) {
    let b = b_map(prog);
    let cols: Vec<Vector> =
        window_directions(prog).iter().map(|(slot, e)| sp_coords(&b, &b_directional(prog, *slot, e))).collect();
    let d = prog.dim();
    let sv = singular_values(&columns_to_matrix(&cols, d * (2 * d + 1)));
    let full = numerical_rank(&singular_values(&db_matrix(prog)));
    let min = sv.last().copied().unwrap_or(0.0);
    (DbRank { rank: numerical_rank(&sv), full_rank: full }, min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FPropertyReport {
    pub omega_min_singular: f64,
    /// Smallest distance between two eigenvalues of `Delta`; infinite for `d = 1`.
    pub delta_eigen_gap: f64,
    pub holds: bool,
}

/// `K_2 + (1/tau_2 + 1/tau_3) I`.
pub fn omega_operator(k2: &Matrix, t2: f64, t3: f64) -> Matrix {
    k2 + Matrix::identity(k2.nrows(), k2.nrows()) * (1.0 / t2 + 1.0 / t3)
}

/// `(K_3 + (1/tau_3 + 1/tau_4) I) (K_2 + (1/tau_2 + 1/tau_3) I)`.
pub fn delta_operator(k2: &Matrix, k3: &Matrix, t2: f64, t3: f64, t4: f64) -> Matrix {
    omega_operator(k3, t3, t4) * omega_operator(k2, t2, t3)
}

pub fn f_property(k2: &Matrix, k3: &Matrix, t2: f64, t3: f64, t4: f64, tol: f64) -> FPropertyReport {
    let omega = singular_values(&omega_operator(k2, t2, t3)).last().copied().unwrap_or(0.0);
    let ev: Vec<Complex64> = delta_operator(k2, k3, t2, t3, t4).complex_eigenvalues().iter().copied().collect();
    let gap = eigen_gap(&ev);
    FPropertyReport { omega_min_singular: omega, delta_eigen_gap: gap, holds: omega > tol && gap > tol }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowMargin {
    /// Bounce index `k` of the pair `(K(x_k), K(x_{k+1}))`.
    pub k: usize,
    pub report: FPropertyReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Admissibility {
    pub holds: bool,
    /// First `k` whose pair has the F-property.
    pub witness: Option<usize>,
    pub windows: Vec<WindowMargin>,
}

/// Scans the pairs `(K(x_k), K(x_{k+1}))`, `2 <= k <= n - 2`, of a traced
/// segment `x_0, .., x_n`. Frames in the trace are transported by
/// reflection, so the curvature matrices are already conjugated into a
/// common space.
pub fn f_admissible(trace: &OrbitTrace, tol: f64) -> Admissibility {
    let n = trace.steps();
    let mut windows = Vec::new();
    if n >= 4 && trace.points.iter().skip(1).all(|x| x.cos_angle > crate::dynamics::GRAZING_TOL) {
        // `ks[i]` and `taus[i]` belong to `x_{i+1}`.
        for k in 2..=n - 2 {
            let report = f_property(
                &trace.ks[k - 1],
                &trace.ks[k],
                trace.taus[k - 1],
                trace.taus[k],
                trace.taus[k + 1],
                tol,
            );
            windows.push(WindowMargin { k, report });
        }
    }
    let witness = windows.iter().find(|w| w.report.holds).map(|w| w.k);
    Admissibility { holds: witness.is_some(), witness, windows }
}
