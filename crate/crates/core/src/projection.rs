//! Dense hidden-manifold projector and the projected standard second-order
//! system. Oracle only: everything here is `O(n1³)` and refuses to run above
//! a size cap unless explicitly overridden.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{ReducedSecondOrderModel, SecondOrderIndex3System};

pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Relative singular-value threshold for the numerical rank of `Π`.
pub const RANK_TOL: f64 = 1e-10;

/// `Π = I − Gᵀ (G M⁻¹ Gᵀ)⁻¹ G M⁻¹`.
#[derive(Clone, Debug)]
pub struct Projector {
    pub p: DMatrix<f64>,
    pub rank: usize,
}

/// `Π = Ψ_l Ψ_rᵀ` with `Ψ_lᵀ Ψ_r = I`.
#[derive(Clone, Debug)]
pub struct ProjectorSplit {
    pub psi_l: DMatrix<f64>,
    pub psi_r: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct ProjectedSystem {
    pub mt: DMatrix<f64>,
    pub dt: DMatrix<f64>,
    pub kt: DMatrix<f64>,
    pub ft: DMatrix<f64>,
    pub lt: DMatrix<f64>,
}

pub fn build_projector(sys: &SecondOrderIndex3System) -> Result<Projector> {
    build_projector_with_cap(sys, DEFAULT_DENSE_CAP)
}

pub fn build_projector_with_cap(sys: &SecondOrderIndex3System, cap: usize) -> Result<Projector> {
    let n1 = sys.n1();
    if n1 > cap {
        return Err(Error::DenseCap { n1, cap });
    }
    let m = sys.m.to_dense();
    let g = sys.g.to_dense();
    let m_lu = m.clone().lu();
    let minv_gt = m_lu
        .solve(&g.transpose())
        .ok_or_else(|| Error::Factorization("mass matrix is singular".into()))?;
    // G M⁻¹ = (M⁻ᵀ Gᵀ)ᵀ
    let g_minv = m
        .transpose()
        .lu()
        .solve(&g.transpose())
        .ok_or_else(|| Error::Factorization("mass matrix is singular".into()))?
        .transpose();
    let schur = &g * &minv_gt;
    let schur_lu = schur.clone().lu();
    let n2 = sys.n2();
    let diag: Vec<f64> = (0..n2).map(|i| schur_lu.u()[(i, i)].abs()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    if n2 > 0 && !(diag.iter().copied().fold(f64::INFINITY, f64::min) > 1e-13 * dmax) {
        return Err(Error::ConstraintDegenerate {
            rank: diag.iter().filter(|&&d| d > 1e-13 * dmax).count(),
            n2,
        });
    }
    let correction = if n2 == 0 {
        DMatrix::zeros(n1, n1)
    } else {
        let x = schur_lu
            .solve(&g_minv)
            .ok_or(Error::ConstraintDegenerate { rank: 0, n2 })?;
        g.transpose() * x
    };
    Ok(Projector {
        p: DMatrix::identity(n1, n1) - correction,
        rank: n1 - n2,
    })
}

pub fn split_projector(proj: &Projector) -> Result<ProjectorSplit> {
    let n1 = proj.p.nrows();
    let f = linalg::svd(&proj.p)?;
    let s = &f.s;
    let smax = s[0];
    let found = s.iter().filter(|&&v| v > RANK_TOL * smax).count();
    if found != proj.rank {
        return Err(Error::Rank {
            expected: proj.rank,
            found,
        });
    }
    let k = proj.rank;
    let mut psi_l = DMatrix::zeros(n1, k);
    let mut psi_r = DMatrix::zeros(n1, k);
    for i in 0..k {
        psi_l.set_column(i, &(f.u.column(i) * s[i]));
        psi_r.set_column(i, &f.v.column(i));
    }
    Ok(ProjectorSplit { psi_l, psi_r })
}

pub fn project_system(sys: &SecondOrderIndex3System, split: &ProjectorSplit) -> Result<ProjectedSystem> {
    let psi = &split.psi_r;
    let mt = sys.m.project(psi, psi);
    let dt = sys.d.project(psi, psi);
    let kt = sys.k.project(psi, psi);
    let ft = psi.transpose() * sys.f.to_dense();
    let lt = sys.l.to_dense() * psi;
    Ok(ProjectedSystem { mt, dt, kt, ft, lt })
}

impl ProjectedSystem {
    pub fn order(&self) -> usize {
        self.mt.nrows()
    }

    /// The projected system viewed as a (dense) second-order model.
    pub fn as_second_order(&self) -> Result<ReducedSecondOrderModel> {
        ReducedSecondOrderModel::new(
            self.mt.clone(),
            self.dt.clone(),
            self.kt.clone(),
            self.ft.clone(),
            self.lt.clone(),
        )
    }

    /// Dense solve of the projected shifted system, lifted back to `R^{n1}`
    /// through `Ψ_r`: `Ψ_r (s²M̃ + sD̃ + K̃)⁻¹ Ψ_rᵀ rhs`.
    pub fn lifted_solve(&self, split: &ProjectorSplit, s: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let psi = linalg::to_complex(&split.psi_r);
        let b = psi.transpose() * linalg::CVector::from_column_slice(rhs);
        let p = self.pencil(s);
        let x = linalg::solve_complex(&p, &CMatrix::from_column_slice(b.len(), 1, b.as_slice()))
            .ok_or(Error::Pole(s))?;
        Ok((psi * x).column(0).iter().copied().collect())
    }

    fn pencil(&self, s: Complex64) -> CMatrix {
        linalg::to_complex(&self.mt) * (s * s) + linalg::to_complex(&self.dt) * s + linalg::to_complex(&self.kt)
    }
}

/// `L̃ (s² M̃ + s D̃ + K̃)⁻¹ F̃`, evaluated densely.
pub fn projected_transfer(psys: &ProjectedSystem, s: Complex64) -> Result<CMatrix> {
    let x = linalg::solve_complex(&psys.pencil(s), &linalg::to_complex(&psys.ft)).ok_or(Error::Pole(s))?;
    Ok(linalg::to_complex(&psys.lt) * x)
}

/// Two-sided projection of the `Π`-projected dense system with bases `V`,
/// `W`: `(WᵀΠMΠᵀV, WᵀΠDΠᵀV, WᵀΠKΠᵀV, WᵀΠF, LΠᵀV)`.
pub fn projected_reduction(
    sys: &SecondOrderIndex3System,
    proj: &Projector,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<ReducedSecondOrderModel> {
    let p = &proj.p;
    let pt_v = p.transpose() * v;
    let wt_p = w.transpose() * p;
    let mr = &wt_p * sys.m.mul_dense(&pt_v);
    let dr = &wt_p * sys.d.mul_dense(&pt_v);
    let kr = &wt_p * sys.k.mul_dense(&pt_v);
    let fr = &wt_p * sys.f.to_dense();
    let lr = sys.l.to_dense() * &pt_v;
    ReducedSecondOrderModel::new(mr, dr, kr, fr, lr)
}
