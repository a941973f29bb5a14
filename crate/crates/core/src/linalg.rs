//! Small dense linear-algebra helpers shared by the moment engine.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, RMatrix, C64};

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Block-diagonal symplectic form with 2×2 blocks `[[0, 1], [-1, 0]]`.
pub fn omega(n_modes: usize) -> RMatrix {
    let mut m = RMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

pub fn omega_c(n_modes: usize) -> CMatrix {
    complexify(&omega(n_modes))
}

pub fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// `(M + Mᵀ)/2`.
pub fn sym(m: &CMatrix) -> CMatrix {
    (m + m.transpose()) * C64::new(0.5, 0.0)
}

/// `(M − Mᵀ)/2`.
pub fn skew(m: &CMatrix) -> CMatrix {
    (m - m.transpose()) * C64::new(0.5, 0.0)
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

/// Largest entry of `|M − Mᵀ|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).norm());
        }
    }
    worst
}

pub fn max_asymmetry_real(m: &RMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetrizes in place after checking the asymmetry is below `tol`.
pub fn enforce_symmetric(m: &mut CMatrix, tol: f64, what: &str) -> Result<()> {
    let dev = max_asymmetry(m);
    if dev > tol * (1.0 + m.norm()) {
        return Err(Error::InvalidParameter(format!(
            "{what} is not symmetric (deviation {dev:e})"
        )));
    }
    *m = sym(m);
    Ok(())
}

pub fn enforce_antisymmetric(m: &mut CMatrix, tol: f64, what: &str) -> Result<()> {
    let dev = max_abs(&sym(m));
    if dev > tol * (1.0 + m.norm()) {
        return Err(Error::InvalidParameter(format!(
            "{what} is not antisymmetric (deviation {dev:e})"
        )));
    }
    *m = skew(m);
    Ok(())
}

/// Direct sum of square blocks.
pub fn direct_sum<'a>(blocks: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    let blocks: Vec<&CMatrix> = blocks.into_iter().collect();
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

pub fn concat_vectors<'a>(parts: impl IntoIterator<Item = &'a CVector>) -> CVector {
    let parts: Vec<&CVector> = parts.into_iter().collect();
    let n: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = CVector::zeros(n);
    let mut off = 0;
    for p in parts {
        out.rows_mut(off, p.len()).copy_from(p);
        off += p.len();
    }
    out
}

/// Solves `M X + X Mᵀ = R` by vectorization.
///
/// Only meant for the small systems met here (`2N ≲ 16`).
pub fn solve_sylvester_transpose(m: &CMatrix, r: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    let id = CMatrix::identity(n, n);
    // column-major vec: vec(M X) = (I ⊗ M) vec X, vec(X Mᵀ) = (M ⊗ I) vec X
    let op = id.kronecker(m) + m.kronecker(&id);
    let rhs = CVector::from_column_slice(r.as_slice());
    let lu = op.lu();
    let x = lu
        .solve(&rhs)
        .ok_or(Error::SingularLinearSolve("Sylvester operator is singular"))?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::SingularLinearSolve("Sylvester operator is singular"));
    }
    Ok(CMatrix::from_column_slice(n, n, x.as_slice()))
}

/// Solves `M x = b`, refusing numerically singular `M`.
pub fn solve_checked(m: &CMatrix, b: &CVector, what: &'static str) -> Result<CVector> {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::SingularLinearSolve(what));
    }
    m.clone().lu().solve(b).ok_or(Error::SingularLinearSolve(what))
}

/// Cholesky factor of a real symmetric matrix, `None` if not positive definite.
pub fn cholesky(m: &RMatrix) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m.clone())
}

/// Principal square root of a real symmetric positive (semi)definite matrix.
pub fn sqrtm_spd(m: &RMatrix) -> RMatrix {
    let eig = SymmetricEigen::new(m.clone());
    let vals = eig.eigenvalues.map(|v| libm::sqrt(v.max(0.0)));
    &eig.eigenvectors * RMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

/// Entrywise maximum modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}
