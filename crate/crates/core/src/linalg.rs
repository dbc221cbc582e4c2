//! Small dense linear-algebra helpers shared by the dynamics, franks and
//! manifolds modules.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Canonical symplectic form on `R^d x R^d`, `[[0, I], [-I, 0]]`, so that
/// `w1^T J w2 = <y1, z2> - <y2, z1>` for `w = (y, z)`.
pub fn symplectic_form(d: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// Frobenius norm of `M^T J M - J`.
pub fn symplectic_defect(m: &Matrix) -> f64 {
    assert!(m.is_square() && m.nrows() % 2 == 0);
    let j = symplectic_form(m.nrows() / 2);
    (m.transpose() * &j * m - j).norm()
}

/// Free flight block `F(tau) = [[I, tau I], [0, I]]`.
pub fn shear(tau: f64, d: usize) -> Matrix {
    let mut f = Matrix::identity(2 * d, 2 * d);
    for i in 0..d {
        f[(i, d + i)] = tau;
    }
    f
}

/// Reflection kick `C(K) = [[I, 0], [K, I]]`.
pub fn curvature_kick(k: &Matrix) -> Matrix {
    let d = k.nrows();
    let mut c = Matrix::identity(2 * d, 2 * d);
    c.view_mut((d, 0), (d, d)).copy_from(k);
    c
}

/// One bounce in Jacobi coordinates, `A(K, tau) = C(K) F(tau)`.
pub fn bounce_block(k: &Matrix, tau: f64) -> Matrix {
    let d = k.nrows();
    let mut a = Matrix::zeros(2 * d, 2 * d);
    let id = Matrix::identity(d, d);
    a.view_mut((0, 0), (d, d)).copy_from(&id);
    a.view_mut((0, d), (d, d)).copy_from(&(&id * tau));
    a.view_mut((d, 0), (d, d)).copy_from(k);
    a.view_mut((d, d), (d, d)).copy_from(&(&id + k * tau));
    a
}

/// Inverse of a symplectic matrix, `-J M^T J`.
pub fn symplectic_inverse(m: &Matrix) -> Matrix {
    let j = symplectic_form(m.nrows() / 2);
    -(&j * m.transpose() * &j)
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn min_singular_value(m: &Matrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Orthonormal basis of `Sym(d)` for the Frobenius inner product, ordered
/// `(0,0), (0,1), .., (0,d-1), (1,1), ..`.
pub fn sym_basis(d: usize) -> Vec<Matrix> {
    let mut basis = Vec::with_capacity(d * (d + 1) / 2);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i..d {
            let mut e = Matrix::zeros(d, d);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = r;
                e[(j, i)] = r;
            }
            basis.push(e);
        }
    }
    basis
}

/// Coordinates of a symmetric matrix in [`sym_basis`].
pub fn sym_coords(m: &Matrix) -> Vector {
    let d = m.nrows();
    let basis = sym_basis(d);
    Vector::from_iterator(basis.len(), basis.iter().map(|e| e.dot(m)))
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Column-major vectorization.
pub fn vec_of(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// Kronecker product.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Kronecker sum `A (+) B = I (x) A + B (x) I`.
pub fn kron_sum(a: &Matrix, b: &Matrix) -> Matrix {
    let ia = Matrix::identity(b.nrows(), b.nrows());
    let ib = Matrix::identity(a.nrows(), a.nrows());
    kron(&ia, a) + kron(b, &ib)
}

/// Numerical rank with an absolute threshold on singular values.
pub fn rank(m: &Matrix, tol: f64) -> usize {
    singular_values(m).iter().filter(|s| **s > tol).count()
}

/// Orthonormal basis of the column span (modified Gram-Schmidt, columns with
/// residual norm below `tol` dropped).
pub fn orthonormalize(cols: &[Vector], tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for c in cols {
        let mut w = c.clone();
        for q in &out {
            let proj = q.dot(&w);
            w -= q * proj;
        }
        for q in &out {
            let proj = q.dot(&w);
            w -= q * proj;
        }
        let n = w.norm();
        if n > tol {
            out.push(w / n);
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of `span(cols)` in `R^n`.
pub fn orthogonal_complement(cols: &[Vector], n: usize) -> Vec<Vector> {
    let mut all = orthonormalize(cols, 1e-12);
    let k = all.len();
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        let mut w = e;
        for q in &all {
            let proj = q.dot(&w);
            w -= q * proj;
        }
        for q in &all {
            let proj = q.dot(&w);
            w -= q * proj;
        }
        let nrm = w.norm();
        if nrm > 1e-8 {
            all.push(w / nrm);
        }
        if all.len() == n {
            break;
        }
    }
    all.split_off(k)
}

pub fn columns_to_matrix(cols: &[Vector], nrows: usize) -> Matrix {
    let mut m = Matrix::zeros(nrows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Eigenvalues of the symmetric-definite pencil `(S, G)`, i.e. of `G^{-1} S`,
/// ascending. Returns `None` when `G` is not positive definite.
pub fn pencil_eigenvalues(s: &Matrix, g: &Matrix) -> Option<Vec<f64>> {
    let chol = g.clone().cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let m = symmetrize(&(&linv * s * linv.transpose()));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Some(ev)
}

/// Smallest principal angle between the column spans of two matrices with
/// full column rank.
pub fn min_principal_angle(a: &Matrix, b: &Matrix) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let qa = qa.columns(0, a.ncols()).into_owned();
    let qb = qb.columns(0, b.ncols()).into_owned();
    let s = singular_values(&(qa.transpose() * &qb));
    let c = s.first().copied().unwrap_or(0.0).clamp(-1.0, 1.0);
    if c < 0.9 || qa.ncols() > qb.ncols() {
        return c.acos();
    }
    // Small angles through their sines; `acos` near 1 loses half the digits.
    let residual = &qa - &qb * (qb.transpose() * &qa);
    let sine = singular_values(&residual).last().copied().unwrap_or(0.0);
    sine.clamp(0.0, 1.0).asin()
}

/// Least-squares / minimum-norm solve through the SVD.
pub fn lstsq(a: &Matrix, b: &Vector, rel_tol: f64) -> Vector {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    svd.solve(b, rel_tol * smax.max(f64::MIN_POSITIVE)).unwrap_or_else(|_| Vector::zeros(a.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_principal_angles_are_resolved() {
        for theta in [1e-12f64, 1e-9, 1e-5, 0.3, 1.2] {
            let a = Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
            let b = Matrix::from_column_slice(3, 1, &[theta.cos(), theta.sin(), 0.0]);
            let got = min_principal_angle(&a, &b);
            assert!((got - theta).abs() < 1e-15 + 1e-12 * theta, "{theta}: {got}");
        }
    }

    #[test]
    fn bounce_block_is_kick_times_shear() {
        let k = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]);
        let a = bounce_block(&k, 0.7);
        let c = curvature_kick(&k) * shear(0.7, 2);
        assert!((a - c).norm() < 1e-15);
    }

    #[test]
    fn symplectic_inverse_matches_inverse() {
        let k = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]);
        let a = bounce_block(&k, 0.7);
        let inv = symplectic_inverse(&a);
        assert!((inv * &a - Matrix::identity(4, 4)).norm() < 1e-13);
        assert!(symplectic_defect(&a) < 1e-14);
    }

    #[test]
    fn sym_basis_is_orthonormal() {
        let b = sym_basis(3);
        assert_eq!(b.len(), 6);
        for (i, x) in b.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((x.dot(y) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn complement_has_right_dimension() {
        let c = orthogonal_complement(&[Vector::from_vec(vec![1.0, 1.0, 0.0])], 3);
        assert_eq!(c.len(), 2);
        for q in &c {
            assert!(q[0] + q[1] < 1e-12);
        }
    }
}
