//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used to decide numerical rank.
pub const RANK_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_rows(rows: &[&[C64]]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermitian_residual(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn anti_hermitian_residual(m: &CMat) -> f64 {
    max_abs(&(m + m.adjoint()))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(f64::NAN)
}

/// Orthonormal basis of the numerical kernel, one column per kernel vector.
pub fn kernel_basis(m: &CMat) -> CMat {
    let n = m.ncols();
    // Pad to square so the SVD yields a full right singular basis.
    let mut sq = CMat::zeros(n.max(m.nrows()), n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let scale = svd.singular_values.max().max(1.0);
    let cols: Vec<CVec> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= RANK_TOL * scale)
        .map(|k| v_t.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

pub fn rank(m: &CMat) -> usize {
    m.ncols() - kernel_basis(m).ncols()
}

/// Orthonormalise the columns of `b` (thin QR); zero columns are dropped.
pub fn orthonormalize(b: &CMat) -> CMat {
    let mut cols: Vec<CVec> = Vec::new();
    for j in 0..b.ncols() {
        let mut v = b.column(j).into_owned();
        for q in &cols {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let nrm = v.norm();
        if nrm > RANK_TOL {
            cols.push(v / C64::from(nrm));
        }
    }
    if cols.is_empty() {
        CMat::zeros(b.nrows(), 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthogonal projector onto the column span of an orthonormal basis.
pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Projector onto span(basis) that is orthogonal in the inner product `<u, W v>`.
pub fn weighted_projector(basis: &CMat, weight: &CMat) -> Result<CMat> {
    let gram = basis.adjoint() * weight * basis;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Analysis("singular weighted Gram matrix".into()))?;
    Ok(basis * inv * basis.adjoint() * weight)
}

/// Solve `a v = mu b v` for Hermitian `a` and Hermitian positive definite `b`.
/// Returns ascending eigenvalues and `b`-orthonormal eigenvectors (columns).
pub fn generalized_hermitian_eigen(a: &CMat, b: &CMat) -> Result<(Vec<f64>, CMat)> {
    let chol = Cholesky::new(hermitian_part(b))
        .ok_or_else(|| Error::Analysis("weight matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Analysis("singular Cholesky factor".into()))?;
    let reduced = hermitian_part(&(&l_inv * a * l_inv.adjoint()));
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = l_inv.adjoint() * &eig.eigenvectors;
    let cols: Vec<CVec> = order.iter().map(|&k| vecs.column(k).into_owned()).collect();
    Ok((values, CMat::from_columns(&cols)))
}

/// Largest principal-angle sine between two subspaces given by orthonormal bases.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    max_abs(&(projector(a) - projector(b)))
}

pub fn matvec(m: &CMat, x: &[C64], out: &mut [C64]) {
    let n = m.nrows();
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = C64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            acc += m[(i, j)] * xj;
        }
        *o = acc;
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_rank_one() {
        let m = from_rows(&[&[c(1.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(1.0, 0.0)]]);
        let k = kernel_basis(&m);
        assert_eq!(k.ncols(), 1);
        assert!(max_abs(&(&m * &k)) < 1e-14);
        assert_eq!(rank(&m), 1);
    }

    #[test]
    fn generalized_eigen_is_weight_orthonormal() {
        let a = from_rows(&[&[c(0.0, 0.0), c(0.0, 1.0)], &[c(0.0, -1.0), c(0.0, 0.0)]]);
        let b = from_rows(&[&[c(2.0, 0.0), c(0.0, 0.5)], &[c(0.0, -0.5), c(1.0, 0.0)]]);
        let (vals, v) = generalized_hermitian_eigen(&a, &b).unwrap();
        let gram = v.adjoint() * &b * &v;
        assert!(max_abs(&(gram - identity(2))) < 1e-12);
        for (k, mu) in vals.iter().enumerate() {
            let r = &a * v.column(k) - (&b * v.column(k)) * C64::from(*mu);
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
    }
}
