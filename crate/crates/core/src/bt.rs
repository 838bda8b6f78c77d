//! Dense balanced truncation for small first-order realizations.
//!
//! Gramians come from a Bartels–Stewart solve on the complex Schur form of
//! `E⁻¹A`; truncation uses the square-root method on symmetric-eigenvalue
//! factors of the two Gramians.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

pub const DEFAULT_DENSE_CAP: usize = 4000;

/// Accepted relative residual of a Lyapunov solve.
pub const LYAPUNOV_TOL: f64 = 1e-8;

/// Hankel values below this fraction of the largest one are treated as zero
/// when estimating the McMillan degree.
pub const HANKEL_RANK_TOL: f64 = 1e-14;

const SIGN_MAX_ITER: usize = 100;
const SIGN_TOL: f64 = 1e-13;

/// `E x' = A x + B u`, `y = C x` with `E` nonsingular.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseFirstOrderSystem {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct BalancedReduction {
    pub reduced: DenseFirstOrderSystem,
    /// All Hankel singular values of the input realization, descending.
    pub hankel: Vec<f64>,
    /// Order actually retained (may be below the requested one).
    pub order: usize,
}

impl BalancedReduction {
    /// Sum of the Hankel values that were truncated.
    pub fn discarded_sum(&self) -> f64 {
        self.hankel[self.order..].iter().sum()
    }
}

impl From<crate::model::FirstOrderRealization> for DenseFirstOrderSystem {
    fn from(f: crate::model::FirstOrderRealization) -> Self {
        Self {
            e: f.e,
            a: f.a,
            b: f.b,
            c: f.c,
        }
    }
}

impl DenseFirstOrderSystem {
    pub fn new(e: DMatrix<f64>, a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || e.shape() != (n, n) || b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "inconsistent first-order blocks: E {:?}, A {:?}, B {:?}, C {:?}",
                e.shape(),
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self { e, a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::pencil_eigenvalues(&self.a, &self.e)
    }

    pub fn check_stable(&self) -> Result<()> {
        for p in self.poles()? {
            if !(p.re < 0.0) {
                return Err(Error::Unstable(p));
            }
        }
        Ok(())
    }

    /// `C (sE − A)⁻¹ B`.
    pub fn transfer(&self, s: Complex64) -> Result<CMatrix> {
        let p = linalg::to_complex(&self.e) * s - linalg::to_complex(&self.a);
        let x = linalg::solve_complex(&p, &linalg::to_complex(&self.b)).ok_or(Error::Pole(s))?;
        Ok(linalg::to_complex(&self.c) * x)
    }
}

/// Solves `A X Eᵀ + E X Aᵀ + R Rᵀ = 0` for symmetric `X`.
pub fn solve_lyapunov(a: &DMatrix<f64>, e: &DMatrix<f64>, rhs_factor: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_lyapunov_with_cap(a, e, rhs_factor, DEFAULT_DENSE_CAP)
}

pub fn solve_lyapunov_with_cap(
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
    rhs_factor: &DMatrix<f64>,
    cap: usize,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n > cap {
        return Err(Error::DenseCap { n1: n, cap });
    }
    if a.shape() != (n, n) || e.shape() != (n, n) || rhs_factor.nrows() != n {
        return Err(Error::Dimension("Lyapunov operands have inconsistent shapes".into()));
    }
    let e_lu = e.clone().lu();
    let at = e_lu
        .solve(a)
        .ok_or_else(|| Error::Factorization("E is singular".into()))?;
    let bt = e_lu
        .solve(rhs_factor)
        .ok_or_else(|| Error::Factorization("E is singular".into()))?;

    let (q, t) = linalg::complex_schur(&linalg::to_complex(&at))?;
    for i in 0..n {
        if !(t[(i, i)].re < 0.0) {
            return Err(Error::Unstable(t[(i, i)]));
        }
    }
    let rhs = -(&bt * bt.transpose());
    let ct = q.adjoint() * linalg::to_complex(&rhs) * &q;

    // T Y + Y Tᴴ = C̃, columns from last to first.
    let mut y = CMatrix::zeros(n, n);
    for j in (0..n).rev() {
        let mut col: Vec<Complex64> = (0..n).map(|i| ct[(i, j)]).collect();
        for k in j + 1..n {
            let f = t[(j, k)].conj();
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                col[i] -= y[(i, k)] * f;
            }
        }
        let shift = t[(j, j)].conj();
        for i in (0..n).rev() {
            let mut acc = col[i];
            for l in i + 1..n {
                acc -= t[(i, l)] * y[(l, j)];
            }
            y[(i, j)] = acc / (t[(i, i)] + shift);
        }
    }
    let x = (&q * y * q.adjoint()).map(|z| z.re);
    let x = (&x + x.transpose()) * 0.5;

    let residual = lyapunov_residual(a, e, rhs_factor, &x);
    if !(residual <= LYAPUNOV_TOL) {
        return Err(Error::Factorization(format!(
            "Lyapunov residual {residual:.3e} exceeds {LYAPUNOV_TOL:.0e}"
        )));
    }
    Ok(x)
}

/// `‖A X Eᵀ + E X Aᵀ + R Rᵀ‖ / (2‖A‖‖X‖‖E‖ + ‖R Rᵀ‖)` in the Frobenius norm.
pub fn lyapunov_residual(a: &DMatrix<f64>, e: &DMatrix<f64>, rhs_factor: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let rr = rhs_factor * rhs_factor.transpose();
    let axe = a * x * e.transpose();
    let res = &axe + axe.transpose() + &rr;
    let scale = 2.0 * a.norm() * x.norm() * e.norm() + rr.norm();
    if scale == 0.0 {
        res.norm()
    } else {
        res.norm() / scale
    }
}

/// Square factor `Z` with `X ≈ Z Zᵀ` for a symmetric positive semidefinite `X`.
fn psd_factor(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (x + x.transpose()) * 0.5;
    let (values, mut z) = linalg::symmetric_eigen(&sym)?;
    for (j, &lambda) in values.iter().enumerate() {
        z.column_mut(j).scale_mut(lambda.max(0.0).sqrt());
    }
    Ok(z)
}

/// Hankel singular values (descending) with the SVD pieces needed for the
/// square-root projection.
struct Balancing {
    hankel: Vec<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    r: DMatrix<f64>,
    s: DMatrix<f64>,
}

fn balance(sys: &DenseFirstOrderSystem) -> Result<Balancing> {
    let p = solve_lyapunov(&sys.a, &sys.e, &sys.b)?;
    let y = solve_lyapunov(&sys.a.transpose(), &sys.e.transpose(), &sys.c.transpose())?;
    let q = sys.e.transpose() * y * &sys.e;
    let r = psd_factor(&p)?;
    let s = psd_factor(&q)?;
    let f = linalg::svd(&(s.transpose() * &r))?;
    Ok(Balancing {
        hankel: f.s,
        u: f.u,
        v: f.v,
        r,
        s,
    })
}

/// First-order embedding of the dense `Π`-projected system, of order
/// `2(n1 − n2)`. Refuses systems with `n1 > cap`.
pub fn projected_first_order(
    sys: &crate::model::SecondOrderIndex3System,
    cap: usize,
) -> Result<DenseFirstOrderSystem> {
    use crate::projection::{build_projector_with_cap, project_system, split_projector};
    let proj = build_projector_with_cap(sys, cap)?;
    let split = split_projector(&proj)?;
    let psys = project_system(sys, &split)?;
    let fo = crate::model::embed_first_order(&psys.as_second_order()?)?;
    Ok(fo.into())
}

pub fn hankel_singular_values(sys: &DenseFirstOrderSystem) -> Result<Vec<f64>> {
    Ok(balance(sys)?.hankel)
}

/// Square-root balanced truncation to order `k`. When `k` exceeds the
/// numerical McMillan degree it is lowered (with a warning).
pub fn balanced_truncate(sys: &DenseFirstOrderSystem, k: usize) -> Result<BalancedReduction> {
    let n = sys.order();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("truncation order {k} not in 1..={n}")));
    }
    let bal = balance(sys)?;
    let h1 = bal.hankel.first().copied().unwrap_or(0.0);
    let degree = bal.hankel.iter().filter(|&&h| h > HANKEL_RANK_TOL * h1).count();
    let order = if k > degree {
        log::warn!("truncation order {k} exceeds numerical McMillan degree {degree}; using {degree}");
        degree
    } else {
        k
    };
    if order == 0 {
        return Err(Error::Parameter("system has zero Hankel norm".into()));
    }

    let e_lu = sys.e.clone().lu();
    let at = e_lu
        .solve(&sys.a)
        .ok_or_else(|| Error::Factorization("E is singular".into()))?;
    let bt = e_lu
        .solve(&sys.b)
        .ok_or_else(|| Error::Factorization("E is singular".into()))?;

    let mut tl = bal.u.columns(0, order).transpose() * bal.s.transpose();
    let mut tr = &bal.r * bal.v.columns(0, order);
    for i in 0..order {
        let scale = 1.0 / bal.hankel[i].sqrt();
        tl.row_mut(i).scale_mut(scale);
        tr.column_mut(i).scale_mut(scale);
    }
    let reduced = DenseFirstOrderSystem {
        e: DMatrix::identity(order, order),
        a: &tl * at * &tr,
        b: &tl * bt,
        c: &sys.c * &tr,
    };
    Ok(BalancedReduction {
        reduced,
        hankel: bal.hankel,
        order,
    })
}

/// Matrix sign function by scaled Newton iteration. Fails when `a` has
/// eigenvalues on (or numerically at) the imaginary axis.
pub fn matrix_sign(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut s = a.clone();
    for _ in 0..SIGN_MAX_ITER {
        let inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Eigen("eigenvalue on the imaginary axis".into()))?;
        let scale = (inv.norm() / s.norm()).sqrt();
        let next = (&s * scale + inv / scale) * 0.5;
        let delta = (&next - &s).norm();
        s = next;
        if !s.iter().all(|v| v.is_finite()) {
            break;
        }
        if delta <= SIGN_TOL * s.norm() {
            let check = (&s * &s - DMatrix::<f64>::identity(n, n)).norm();
            if check <= 1e-6 * (n as f64).sqrt() {
                return Ok(s);
            }
            break;
        }
    }
    Err(Error::Eigen("sign iteration did not converge (eigenvalues near the imaginary axis)".into()))
}

/// Splits off the antistable part (closed right half-plane), truncates the
/// stable part to order `k − n_unstable` and returns the block-diagonal
/// sum with `E = I`. Equal to `balanced_truncate` for stable input.
pub fn truncate_keeping_unstable(sys: &DenseFirstOrderSystem, k: usize) -> Result<DenseFirstOrderSystem> {
    let n = sys.order();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("truncation order {k} not in 1..={n}")));
    }
    let e_lu = sys.e.clone().lu();
    let a = e_lu
        .solve(&sys.a)
        .ok_or_else(|| Error::Factorization("E is singular".into()))?;
    let b = e_lu
        .solve(&sys.b)
        .ok_or_else(|| Error::Factorization("E is singular".into()))?;
    let sign = matrix_sign(&a)?;
    let p_unstable = (DMatrix::<f64>::identity(n, n) + &sign) * 0.5;
    let n_u = p_unstable.trace().round() as usize;
    let identity = DenseFirstOrderSystem::new(DMatrix::identity(n, n), a.clone(), b.clone(), sys.c.clone())?;
    if n_u == 0 {
        let bt = balanced_truncate(&identity, k)?;
        if bt.order != k {
            return Err(Error::Eigen(format!("balanced truncation kept order {} < {k}", bt.order)));
        }
        return Ok(bt.reduced);
    }
    if n_u > k {
        return Err(Error::Eigen(format!("{n_u} unstable poles exceed order {k}")));
    }
    log::debug!("keeping {n_u} unstable poles");
    let n_s = n - n_u;
    let p_stable = DMatrix::<f64>::identity(n, n) - &p_unstable;
    let basis = |p: &DMatrix<f64>, rank: usize| -> Result<DMatrix<f64>> {
        Ok(linalg::svd(p)?.u.columns(0, rank).into_owned())
    };
    let mut t = DMatrix::zeros(n, n);
    if n_s > 0 {
        t.columns_mut(0, n_s).copy_from(&basis(&p_stable, n_s)?);
    }
    t.columns_mut(n_s, n_u).copy_from(&basis(&p_unstable, n_u)?);
    let z = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("stable and unstable subspaces are not complementary".into()))?;
    let at = &z * &a * &t;
    let bt_ = &z * &b;
    let ct = &sys.c * &t;

    let (m, q) = (b.ncols(), sys.c.nrows());
    let mut out_a = DMatrix::zeros(k, k);
    let mut out_b = DMatrix::zeros(k, m);
    let mut out_c = DMatrix::zeros(q, k);
    let k_s = k - n_u;
    if k_s > 0 {
        let stable = DenseFirstOrderSystem::new(
            DMatrix::identity(n_s, n_s),
            at.view((0, 0), (n_s, n_s)).into_owned(),
            bt_.rows(0, n_s).into_owned(),
            ct.columns(0, n_s).into_owned(),
        )?;
        let red = balanced_truncate(&stable, k_s)?;
        if red.order != k_s {
            return Err(Error::Eigen(format!("balanced truncation kept order {} < {k_s}", red.order)));
        }
        out_a.view_mut((0, 0), (k_s, k_s)).copy_from(&red.reduced.a);
        out_b.rows_mut(0, k_s).copy_from(&red.reduced.b);
        out_c.columns_mut(0, k_s).copy_from(&red.reduced.c);
    }
    out_a.view_mut((k_s, k_s), (n_u, n_u)).copy_from(&at.view((n_s, n_s), (n_u, n_u)));
    out_b.rows_mut(k_s, n_u).copy_from(&bt_.rows(n_s, n_u));
    out_c.columns_mut(k_s, n_u).copy_from(&ct.columns(n_s, n_u));
    DenseFirstOrderSystem::new(DMatrix::identity(k, k), out_a, out_b, out_c)
}
