//! Complex sparse LU (faer, partial pivoting) with a 1-norm condition
//! estimate.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sparsity pattern shared by every numeric factorization of a family of
/// matrices (e.g. one saddle matrix per shift).
#[derive(Clone)]
pub struct LuPattern {
    n: usize,
    symbolic: SymbolicLu<usize>,
}

impl std::fmt::Debug for LuPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuPattern").field("n", &self.n).finish()
    }
}

pub fn to_faer(n: usize, entries: &[(usize, usize, Complex64)]) -> Result<SparseColMat<usize, Complex64>> {
    let triplets: Vec<Triplet<usize, usize, Complex64>> = entries
        .iter()
        .map(|&(i, j, v)| Triplet::new(i, j, v))
        .collect();
    SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Factorization(format!("sparse assembly failed: {e:?}")))
}

/// Whether a symmetric real matrix admits a sparse Cholesky factorization.
pub fn is_positive_definite(a: &crate::sparse::SparseMatrix) -> bool {
    if a.nrows() != a.ncols() || !a.is_symmetric() {
        return false;
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let Ok(mat) = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows(), a.ncols(), &triplets) else {
        return false;
    };
    mat.sp_cholesky(faer::Side::Lower).is_ok()
}

impl LuPattern {
    pub fn analyze(mat: &SparseColMat<usize, Complex64>) -> Result<Self> {
        let symbolic = SymbolicLu::try_new(mat.symbolic())
            .map_err(|e| Error::Factorization(format!("symbolic LU failed: {e:?}")))?;
        Ok(Self {
            n: mat.nrows(),
            symbolic,
        })
    }
}

pub struct SparseLu {
    n: usize,
    lu: Lu<usize, Complex64>,
    norm_one: f64,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu")
            .field("n", &self.n)
            .field("norm_one", &self.norm_one)
            .finish()
    }
}

impl SparseLu {
    pub fn factor(mat: &SparseColMat<usize, Complex64>, pattern: Option<&LuPattern>) -> Result<Self> {
        let n = mat.nrows();
        let pattern = match pattern {
            Some(p) => p.clone(),
            None => LuPattern::analyze(mat)?,
        };
        let lu = Lu::try_new_with_symbolic(pattern.symbolic, mat.as_ref())
            .map_err(|e| Error::Factorization(format!("numeric LU failed: {e:?}")))?;
        let norm_one = column_norm_one(mat);
        Ok(Self { n, lu, norm_one })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn norm_one(&self) -> f64 {
        self.norm_one
    }

    fn apply(&self, rhs: &mut [Complex64], mode: Mode) {
        let mut m = Mat::<Complex64>::from_fn(self.n, 1, |i, _| rhs[i]);
        match mode {
            Mode::Plain => self.lu.solve_in_place(m.as_mut()),
            Mode::Transpose => self.lu.solve_transpose_in_place(m.as_mut()),
            Mode::Adjoint => self.lu.solve_adjoint_in_place(m.as_mut()),
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = m[(i, 0)];
        }
    }

    /// `A x = b` in place.
    pub fn solve(&self, rhs: &mut [Complex64]) {
        self.apply(rhs, Mode::Plain)
    }

    /// `Aᵀ x = b` in place.
    pub fn solve_transpose(&self, rhs: &mut [Complex64]) {
        self.apply(rhs, Mode::Transpose)
    }

    /// `Aᴴ x = b` in place.
    pub fn solve_adjoint(&self, rhs: &mut [Complex64]) {
        self.apply(rhs, Mode::Adjoint)
    }

    /// Estimate of `1 / (‖A‖₁ ‖A⁻¹‖₁)` (Hager's method as refined by Higham,
    /// complex variant). Returns 0 when the solves blow up.
    pub fn rcond_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 || self.norm_one == 0.0 {
            return 0.0;
        }
        let norm1 = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0f64;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve(&mut y);
            if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return 0.0;
            }
            let new_est = norm1(&y);
            if new_est <= est && last_j != usize::MAX {
                break;
            }
            est = new_est;
            let mut xi: Vec<Complex64> = y
                .iter()
                .map(|z| {
                    let a = z.norm();
                    if a == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        z / a
                    }
                })
                .collect();
            self.solve_adjoint(&mut xi);
            let (j, zmax) = xi
                .iter()
                .enumerate()
                .map(|(k, z)| (k, z.norm()))
                .fold((0, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
            let ztx: f64 = xi.iter().zip(&x).map(|(z, xv)| (z.conj() * xv).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        // Higham's alternating test vector guards against underestimation.
        let mut alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                Complex64::new(sign * (1.0 + t), 0.0)
            })
            .collect();
        self.solve(&mut alt);
        if alt.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return 0.0;
        }
        let alt_est = 2.0 * norm1(&alt) / (3.0 * n as f64);
        let inv_norm = est.max(alt_est);
        if inv_norm == 0.0 || !inv_norm.is_finite() {
            return 0.0;
        }
        1.0 / (self.norm_one * inv_norm)
    }
}

#[derive(Clone, Copy)]
enum Mode {
    Plain,
    Transpose,
    Adjoint,
}

fn column_norm_one(mat: &SparseColMat<usize, Complex64>) -> f64 {
    let r = mat.as_ref();
    let col_ptr = r.symbolic().col_ptr();
    let vals = r.val();
    (0..mat.ncols())
        .map(|j| vals[col_ptr[j]..col_ptr[j + 1]].iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMatrix};

    fn dense_of(n: usize, entries: &[(usize, usize, Complex64)]) -> CMatrix {
        let mut d = CMatrix::zeros(n, n);
        for &(i, j, v) in entries {
            d[(i, j)] += v;
        }
        d
    }

    #[test]
    fn solves_match_dense() {
        let entries = vec![
            (0, 0, c(2.0, 1.0)),
            (1, 0, c(-1.0, 0.0)),
            (0, 2, c(0.5, 0.0)),
            (1, 1, c(3.0, 0.0)),
            (2, 1, c(0.0, 2.0)),
            (2, 2, c(1.0, -1.0)),
        ];
        let mat = to_faer(3, &entries).unwrap();
        let lu = SparseLu::factor(&mat, None).unwrap();
        let d = dense_of(3, &entries);
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 0.5)];

        let mut x = b.clone();
        lu.solve(&mut x);
        let r = &d * crate::linalg::CVector::from_vec(x) - crate::linalg::CVector::from_vec(b.clone());
        assert!(r.norm() < 1e-14);

        let mut x = b.clone();
        lu.solve_transpose(&mut x);
        let r = d.transpose() * crate::linalg::CVector::from_vec(x) - crate::linalg::CVector::from_vec(b.clone());
        assert!(r.norm() < 1e-14);

        let mut x = b.clone();
        lu.solve_adjoint(&mut x);
        let r = d.adjoint() * crate::linalg::CVector::from_vec(x) - crate::linalg::CVector::from_vec(b);
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn rcond_of_diagonal_is_exact() {
        let entries = vec![(0, 0, c(1.0, 0.0)), (1, 1, c(1e-6, 0.0)), (2, 2, c(4.0, 0.0))];
        let mat = to_faer(3, &entries).unwrap();
        let lu = SparseLu::factor(&mat, None).unwrap();
        let rc = lu.rcond_estimate();
        assert!((rc - 1e-6 / 4.0).abs() < 1e-12, "{rc}");
    }

    #[test]
    fn nearly_singular_has_tiny_rcond() {
        let eps = 1e-17;
        let entries = vec![
            (0, 0, c(1.0, 0.0)),
            (0, 1, c(1.0, 0.0)),
            (1, 0, c(1.0, 0.0)),
            (1, 1, c(1.0 + eps, 0.0)),
        ];
        let mat = to_faer(2, &entries).unwrap();
        if let Ok(lu) = SparseLu::factor(&mat, None) {
            assert!(lu.rcond_estimate() < 1e-14);
        }
    }

    #[test]
    fn definiteness_check() {
        use crate::sparse::SparseMatrix;
        let spd = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let indefinite = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(is_positive_definite(&spd));
        assert!(!is_positive_definite(&indefinite));
    }
}
