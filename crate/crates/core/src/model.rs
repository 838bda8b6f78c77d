//! System data types, validation and the first-order embedding of reduced
//! second-order models.
//!
//! The full model is the constrained second-order system
//!
//! ```text
//! M x'' + D x' + K x + Gᵀ z = F u
//!                       G x = 0
//!                         y = L x
//! ```
//!
//! with `M, D, K` of order `n1`, `G` of shape `n2 × n1` (`n2 < n1`, full row
//! rank), `F` of shape `n1 × m` and `L` of shape `q × n1`. The multiplier
//! `z` is never stored.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::sparse::SparseMatrix;
use crate::sparse_lu::{to_faer, SparseLu};

/// Relative drop tolerance for the numerical rank of `G`.
pub const RANK_DROP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderIndex3System {
    pub m: SparseMatrix,
    pub d: SparseMatrix,
    pub k: SparseMatrix,
    pub g: SparseMatrix,
    pub f: SparseMatrix,
    pub l: SparseMatrix,
}

impl SecondOrderIndex3System {
    /// Builds a system after checking that the six shapes are consistent.
    pub fn new(
        m: SparseMatrix,
        d: SparseMatrix,
        k: SparseMatrix,
        g: SparseMatrix,
        f: SparseMatrix,
        l: SparseMatrix,
    ) -> Result<Self> {
        let n1 = m.nrows();
        let check = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got != want {
                Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )))
            } else {
                Ok(())
            }
        };
        check("M", m.shape(), (n1, n1))?;
        check("D", d.shape(), (n1, n1))?;
        check("K", k.shape(), (n1, n1))?;
        check("G", g.shape(), (g.nrows(), n1))?;
        check("F", f.shape(), (n1, f.ncols()))?;
        check("L", l.shape(), (l.nrows(), n1))?;
        Ok(Self { m, d, k, g, f, l })
    }

    pub fn n1(&self) -> usize {
        self.m.nrows()
    }

    pub fn n2(&self) -> usize {
        self.g.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.f.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.l.nrows()
    }

    /// Order of the descriptor system, `n1 + n2`.
    pub fn dae_order(&self) -> usize {
        self.n1() + self.n2()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub n1: usize,
    pub n2: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub dimensions_ok: bool,
    pub g_rank: usize,
    pub mass_factorizable: bool,
    pub mass_rcond: f64,
    pub accepted: bool,
}

impl ValidationReport {
    /// Runs every check without failing early.
    pub fn compute(sys: &SecondOrderIndex3System) -> Self {
        let n1 = sys.n1();
        let n2 = sys.n2();
        let dimensions_ok = n2 < n1;
        let g_rank = constraint_rank(&sys.g, RANK_DROP_TOL);
        let mass_rcond = mass_rcond(&sys.m);
        let mass_factorizable = mass_rcond > f64::EPSILON;
        Self {
            n1,
            n2,
            inputs: sys.inputs(),
            outputs: sys.outputs(),
            dimensions_ok,
            g_rank,
            mass_factorizable,
            mass_rcond,
            accepted: dimensions_ok && g_rank == n2 && mass_factorizable,
        }
    }

    pub fn into_result(self) -> Result<Self> {
        if !self.dimensions_ok {
            return Err(Error::Dimension(format!(
                "need n2 < n1, got n1 = {}, n2 = {}",
                self.n1, self.n2
            )));
        }
        if self.g_rank < self.n2 {
            return Err(Error::ConstraintDegenerate {
                rank: self.g_rank,
                n2: self.n2,
            });
        }
        if !self.mass_factorizable {
            return Err(Error::Factorization(format!(
                "mass matrix is singular (rcond estimate {:.3e})",
                self.mass_rcond
            )));
        }
        Ok(self)
    }
}

pub fn validate_system(sys: &SecondOrderIndex3System) -> Result<ValidationReport> {
    ValidationReport::compute(sys).into_result()
}

fn mass_rcond(m: &SparseMatrix) -> f64 {
    let entries: Vec<_> = m
        .triplets()
        .map(|(i, j, v)| (i, j, Complex64::new(v, 0.0)))
        .collect();
    let Ok(mat) = to_faer(m.nrows(), &entries) else {
        return 0.0;
    };
    match SparseLu::factor(&mat, None) {
        Ok(lu) => lu.rcond_estimate(),
        Err(_) => 0.0,
    }
}

/// Numerical rank of a sparse constraint matrix.
///
/// Rows coupled through shared columns form independent blocks; each block
/// is ranked with a column-pivoted QR of its transpose, dropping diagonal
/// entries of `R` below `tol · max|G|`.
pub fn constraint_rank(g: &SparseMatrix, tol: f64) -> usize {
    let (n2, n1) = g.shape();
    if n2 == 0 {
        return 0;
    }
    let drop = tol * g.max_abs();
    if g.max_abs() == 0.0 {
        return 0;
    }

    // Union-find over rows, joining rows that share a column.
    let mut parent: Vec<usize> = (0..n2).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n1 {
        let rows = &g.row_idx()[g.col_ptr()[j]..g.col_ptr()[j + 1]];
        if let Some((&first, rest)) = rows.split_first() {
            for &r in rest {
                let a = find(&mut parent, first);
                let b = find(&mut parent, r);
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }

    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for r in 0..n2 {
        let root = find(&mut parent, r);
        blocks.entry(root).or_default().push(r);
    }
    let gt = g.transpose();
    let mut rank = 0;
    for rows in blocks.values() {
        let mut cols: Vec<usize> = rows
            .iter()
            .flat_map(|&r| gt.row_idx()[gt.col_ptr()[r]..gt.col_ptr()[r + 1]].iter().copied())
            .collect();
        cols.sort_unstable();
        cols.dedup();
        // Block transpose: cols × rows.
        let mut bt = DMatrix::zeros(cols.len(), rows.len());
        for (bj, &r) in rows.iter().enumerate() {
            for k in gt.col_ptr()[r]..gt.col_ptr()[r + 1] {
                let bi = cols.binary_search(&gt.row_idx()[k]).unwrap();
                bt[(bi, bj)] = gt.values()[k];
            }
        }
        if bt.nrows() < bt.ncols() {
            // More rows than touched columns: pad so QR sees a tall matrix.
            let n = bt.ncols();
            bt = bt.resize(n, n, 0.0);
        }
        let qr = bt.col_piv_qr();
        let r = qr.r();
        let k = r.nrows().min(r.ncols());
        rank += (0..k).filter(|&i| r[(i, i)].abs() > drop).count();
    }
    rank
}

/// Dense reduced second-order model `(M̂, D̂, K̂, F̂, L̂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSecondOrderModel {
    pub mr: DMatrix<f64>,
    pub dr: DMatrix<f64>,
    pub kr: DMatrix<f64>,
    pub fr: DMatrix<f64>,
    pub lr: DMatrix<f64>,
}

impl ReducedSecondOrderModel {
    pub fn new(
        mr: DMatrix<f64>,
        dr: DMatrix<f64>,
        kr: DMatrix<f64>,
        fr: DMatrix<f64>,
        lr: DMatrix<f64>,
    ) -> Result<Self> {
        let r = mr.nrows();
        if r == 0 {
            return Err(Error::Dimension("reduced order must be at least 1".into()));
        }
        let square = |name: &str, a: &DMatrix<f64>| {
            if a.shape() != (r, r) {
                Err(Error::Dimension(format!("{name} must be {r}x{r}")))
            } else {
                Ok(())
            }
        };
        square("Mr", &mr)?;
        square("Dr", &dr)?;
        square("Kr", &kr)?;
        if fr.nrows() != r || lr.ncols() != r {
            return Err(Error::Dimension(format!(
                "Fr must have {r} rows and Lr {r} columns"
            )));
        }
        for (name, a) in [("Mr", &mr), ("Dr", &dr), ("Kr", &kr), ("Fr", &fr), ("Lr", &lr)] {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dimension(format!("{name} has non-finite entries")));
            }
        }
        Ok(Self { mr, dr, kr, fr, lr })
    }

    pub fn order(&self) -> usize {
        self.mr.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.fr.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.lr.nrows()
    }

    /// `L̂ (s² M̂ + s D̂ + K̂)⁻¹ F̂`.
    pub fn transfer(&self, s: Complex64) -> Result<CMatrix> {
        let p = linalg::to_complex(&self.mr) * (s * s)
            + linalg::to_complex(&self.dr) * s
            + linalg::to_complex(&self.kr);
        let x = linalg::solve_complex(&p, &linalg::to_complex(&self.fr)).ok_or(Error::Pole(s))?;
        Ok(linalg::to_complex(&self.lr) * x)
    }
}

/// First-order realization `(E, A, B, C)` of a reduced model.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderRealization {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl FirstOrderRealization {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// `C (sE − A)⁻¹ B`.
    pub fn transfer(&self, s: Complex64) -> Result<CMatrix> {
        let p = linalg::to_complex(&self.e) * s - linalg::to_complex(&self.a);
        let x = linalg::solve_complex(&p, &linalg::to_complex(&self.b)).ok_or(Error::Pole(s))?;
        Ok(linalg::to_complex(&self.c) * x)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::pencil_eigenvalues(&self.a, &self.e)
    }
}

/// `E = [[I, 0], [0, M̂]]`, `A = [[0, I], [−K̂, −D̂]]`, `B = [[0], [F̂]]`,
/// `C = [L̂, 0]`.
pub fn embed_first_order(rom: &ReducedSecondOrderModel) -> Result<FirstOrderRealization> {
    let r = rom.order();
    let lu = rom.mr.clone().lu();
    let umax = (0..r).map(|i| lu.u()[(i, i)].abs()).fold(0.0, f64::max);
    let umin = (0..r).map(|i| lu.u()[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(umin > f64::EPSILON * umax * r as f64) {
        return Err(Error::SingularReducedMass);
    }
    let (m, q) = (rom.inputs(), rom.outputs());
    let mut e = DMatrix::zeros(2 * r, 2 * r);
    let mut a = DMatrix::zeros(2 * r, 2 * r);
    let mut b = DMatrix::zeros(2 * r, m);
    let mut c = DMatrix::zeros(q, 2 * r);
    e.view_mut((0, 0), (r, r)).fill_with_identity();
    e.view_mut((r, r), (r, r)).copy_from(&rom.mr);
    a.view_mut((0, r), (r, r)).fill_with_identity();
    a.view_mut((r, 0), (r, r)).copy_from(&(-&rom.kr));
    a.view_mut((r, r), (r, r)).copy_from(&(-&rom.dr));
    b.view_mut((r, 0), (r, m)).copy_from(&rom.fr);
    c.view_mut((0, 0), (q, r)).copy_from(&rom.lr);
    Ok(FirstOrderRealization { e, a, b, c })
}
