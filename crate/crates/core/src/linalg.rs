//! Dense helpers: complex Schur-based eigenvectors, pencil spectra,
//! complex solves, and SVD / symmetric eigensolvers (faer-backed).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Frobenius norm of a complex matrix.
pub fn cnorm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn cvec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex Schur form `A = Q T Qᴴ` with `T` upper triangular.
pub fn complex_schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    Ok((q, t))
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(a)
        .eigenvalues()
        .map_err(|e| Error::Eigen(format!("eigensolver failed: {e:?}")))
}

/// Eigen-decomposition `A X = X Λ` of a real matrix with unit-norm columns
/// of `X`.
pub fn eigen_decomposition(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, CMatrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let f = to_faer(a).eigen().map_err(|e| Error::Eigen(format!("eigensolver failed: {e:?}")))?;
    let values: Vec<Complex64> = f.S().column_vector().iter().copied().collect();
    let u = f.U();
    let mut x = CMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    for k in 0..n {
        let nrm = x.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::Eigen("defective eigenvector".into()));
        }
        x.column_mut(k).scale_mut(1.0 / nrm);
    }
    Ok((values, x))
}

/// Finite eigenvalues of the regular pencil `(A, E)` with `E` nonsingular.
pub fn pencil_eigenvalues(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let lu = e.clone().lu();
    let ea = lu
        .solve(a)
        .ok_or_else(|| Error::Factorization("E is singular".into()))?;
    eigenvalues(&ea)
}

pub fn solve_complex(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let x = a.clone().lu().solve(b)?;
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(x)
}

fn to_faer<T: Copy>(a: &DMatrix<T>) -> faer::Mat<T> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Full SVD `A = U diag(s) Vᵀ`, singular values descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Result<Svd> {
    let f = to_faer(a).svd().map_err(|e| Error::Eigen(format!("SVD did not converge: {e:?}")))?;
    Ok(Svd {
        u: from_faer(f.U()),
        s: f.S().column_vector().iter().copied().collect(),
        v: from_faer(f.V()),
    })
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let f = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigen(format!("symmetric eigensolver failed: {e:?}")))?;
    Ok((f.S().column_vector().iter().copied().collect(), from_faer(f.U())))
}

pub fn sigma_max(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    match to_faer(a).singular_values() {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => f64::NAN,
    }
}

/// Sorts complex values by real part, then imaginary part.
pub fn sort_lex(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Distance between two spectra after lexicographic sorting, relative to
/// the norm of `reference`.
pub fn sorted_relative_distance(values: &[Complex64], reference: &[Complex64]) -> f64 {
    let mut a = values.to_vec();
    let mut b = reference.to_vec();
    sort_lex(&mut a);
    sort_lex(&mut b);
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let nrm: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if nrm == 0.0 {
        diff.sqrt()
    } else {
        (diff / nrm).sqrt()
    }
}

/// Greedy set distance: each value is matched to its nearest unused partner.
/// Robust to sort-order ties of conjugate pairs.
pub fn matched_max_distance(values: &[Complex64], reference: &[Complex64]) -> f64 {
    let mut used = vec![false; reference.len()];
    let mut worst: f64 = 0.0;
    for v in values {
        let (k, d) = reference
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, r)| (k, (v - r).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap_or((0, f64::INFINITY));
        if k < used.len() {
            used[k] = true;
        }
        worst = worst.max(d);
    }
    worst
}

/// Orthonormal basis of the null space of a real matrix via a full SVD.
/// Singular values below `tol · σ_max` count as zero.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = a.ncols();
    let f = svd(a)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let rank = f.s.iter().filter(|&&s| s > tol * smax).count();
    Ok(f.v.columns(rank, n - rank).into_owned())
}
