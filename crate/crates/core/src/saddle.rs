//! Projector-free solves with the augmented saddle-point matrix
//!
//! ```text
//! [ α²M + αD + K   Gᵀ ] [ v ]   [ F b ]
//! [ G              0  ] [ Λ ] = [ 0   ]
//! ```
//!
//! The first block `v` of the solution lies in `Null(G)` and solves the
//! projected shifted system without ever forming the projector. The left
//! system uses the transposed `(1,1)` block with the same constraint blocks,
//! which is exactly the transpose of the right matrix, so one factorization
//! per shift serves both sides.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::irka::ShiftSet;
use crate::linalg::{cvec_norm, CMatrix};
use crate::model::SecondOrderIndex3System;
use crate::sparse_lu::{to_faer, LuPattern, SparseLu};

/// Reciprocal condition estimate below which a shift is treated as a pole.
pub const RCOND_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Union sparsity pattern of `M`, `D`, `K` with per-entry coefficients.
#[derive(Debug, Clone)]
struct PencilPattern {
    entries: Vec<(usize, usize, f64, f64, f64)>,
}

impl PencilPattern {
    fn new(sys: &SecondOrderIndex3System) -> Self {
        let mut map: std::collections::BTreeMap<(usize, usize), (f64, f64, f64)> = Default::default();
        for (i, j, v) in sys.m.triplets() {
            map.entry((j, i)).or_default().0 += v;
        }
        for (i, j, v) in sys.d.triplets() {
            map.entry((j, i)).or_default().1 += v;
        }
        for (i, j, v) in sys.k.triplets() {
            map.entry((j, i)).or_default().2 += v;
        }
        // Keys are (col, row) so that iteration is column-major.
        let entries = map
            .into_iter()
            .map(|((j, i), (m, d, k))| (i, j, m, d, k))
            .collect();
        Self { entries }
    }
}

/// Assembles saddle matrices for one system at arbitrary shifts, sharing a
/// single symbolic factorization.
#[derive(Debug, Clone)]
pub struct SaddleAssembler<'a> {
    sys: &'a SecondOrderIndex3System,
    pencil: PencilPattern,
    pattern: LuPattern,
}

impl<'a> SaddleAssembler<'a> {
    pub fn new(sys: &'a SecondOrderIndex3System) -> Result<Self> {
        let pencil = PencilPattern::new(sys);
        let probe = assemble_entries(sys, &pencil, Complex64::new(1.0, 1.0), Side::Right);
        let mat = to_faer(sys.dae_order(), &probe)?;
        let pattern = LuPattern::analyze(&mat)?;
        Ok(Self {
            sys,
            pencil,
            pattern,
        })
    }

    pub fn system(&self) -> &SecondOrderIndex3System {
        self.sys
    }

    pub fn assemble(&self, alpha: Complex64, side: Side) -> SaddleOperator {
        SaddleOperator {
            alpha,
            side,
            n1: self.sys.n1(),
            n2: self.sys.n2(),
            entries: assemble_entries(self.sys, &self.pencil, alpha, side),
        }
    }

    /// Factors the right-side matrix at `alpha`.
    pub fn factor(&self, alpha: Complex64) -> Result<SaddleFactorization<'a>> {
        let op = self.assemble(alpha, Side::Right);
        let mat = to_faer(op.order(), &op.entries)?;
        let lu = SparseLu::factor(&mat, Some(&self.pattern)).map_err(|e| match e {
            Error::Factorization(_) => Error::ShiftAtEigenvalue { alpha, rcond: 0.0 },
            other => other,
        })?;
        let rcond = lu.rcond_estimate();
        if !(rcond >= RCOND_THRESHOLD) {
            return Err(Error::ShiftAtEigenvalue { alpha, rcond });
        }
        Ok(SaddleFactorization {
            sys: self.sys,
            alpha,
            lu,
            rcond,
        })
    }
}

fn assemble_entries(
    sys: &SecondOrderIndex3System,
    pencil: &PencilPattern,
    alpha: Complex64,
    side: Side,
) -> Vec<(usize, usize, Complex64)> {
    let n1 = sys.n1();
    let a2 = alpha * alpha;
    let mut out = Vec::with_capacity(pencil.entries.len() + 2 * sys.g.nnz());
    for &(i, j, m, d, k) in &pencil.entries {
        let v = a2 * m + alpha * d + k;
        match side {
            Side::Right => out.push((i, j, v)),
            Side::Left => out.push((j, i, v)),
        }
    }
    for (i, j, v) in sys.g.triplets() {
        out.push((n1 + i, j, Complex64::new(v, 0.0)));
        out.push((j, n1 + i, Complex64::new(v, 0.0)));
    }
    out
}

/// The assembled augmented matrix at one shift, in triplet form.
#[derive(Debug, Clone)]
pub struct SaddleOperator {
    pub alpha: Complex64,
    pub side: Side,
    n1: usize,
    n2: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SaddleOperator {
    pub fn order(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.order();
        let mut d = CMatrix::zeros(n, n);
        for &(i, j, v) in &self.entries {
            d[(i, j)] += v;
        }
        d
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.order()];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }
}

/// Factorization of the right-side saddle matrix at one shift.
#[derive(Debug)]
pub struct SaddleFactorization<'a> {
    sys: &'a SecondOrderIndex3System,
    alpha: Complex64,
    lu: SparseLu,
    rcond: f64,
}

impl SaddleFactorization<'_> {
    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    fn check_finite(&self, x: &[Complex64]) -> Result<()> {
        if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::ShiftAtEigenvalue {
                alpha: self.alpha,
                rcond: self.rcond,
            })
        }
    }

    /// Full solution `[v; Λ]` of the right system with state right-hand side `rhs`.
    pub(crate) fn solve_right_full(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n1 = self.sys.n1();
        assert_eq!(rhs.len(), n1);
        let mut x = rhs.to_vec();
        x.resize(self.sys.dae_order(), Complex64::new(0.0, 0.0));
        self.lu.solve(&mut x);
        self.check_finite(&x)?;
        Ok(x)
    }

    /// Full solution `[w; Γ]` of the left system.
    pub(crate) fn solve_left_full(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n1 = self.sys.n1();
        assert_eq!(rhs.len(), n1);
        let mut x = rhs.to_vec();
        x.resize(self.sys.dae_order(), Complex64::new(0.0, 0.0));
        self.lu.solve_transpose(&mut x);
        self.check_finite(&x)?;
        Ok(x)
    }

    /// State block of the right solve with arbitrary state right-hand side.
    pub fn solve_right_rhs(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = self.solve_right_full(rhs)?;
        x.truncate(self.sys.n1());
        Ok(x)
    }

    pub fn solve_left_rhs(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = self.solve_left_full(rhs)?;
        x.truncate(self.sys.n1());
        Ok(x)
    }

    /// `v` with right-hand side `F b`.
    pub fn solve_right(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = self.sys.f.mul_cvec(b);
        self.solve_right_rhs(&rhs)
    }

    /// `w` with right-hand side `Lᵀ c`.
    pub fn solve_left(&self, c: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = self.sys.l.tr_mul_cvec(c);
        self.solve_left_rhs(&rhs)
    }
}

pub fn assemble(sys: &SecondOrderIndex3System, alpha: Complex64, side: Side) -> Result<SaddleOperator> {
    Ok(SaddleAssembler::new(sys)?.assemble(alpha, side))
}

/// First block of the right saddle solve with right-hand side `F b`.
pub fn solve_right(sys: &SecondOrderIndex3System, alpha: Complex64, b: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len("b", b.len(), sys.inputs())?;
    SaddleAssembler::new(sys)?.factor(alpha)?.solve_right(b)
}

/// First block of the left saddle solve with right-hand side `Lᵀ c`.
pub fn solve_left(sys: &SecondOrderIndex3System, alpha: Complex64, c: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len("c", c.len(), sys.outputs())?;
    SaddleAssembler::new(sys)?.factor(alpha)?.solve_left(c)
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{name} has length {got}, expected {want}")));
    }
    Ok(())
}

/// Right and left bases `(Vc, Wc)` for every shift in the set. Conjugate
/// partners are filled in by conjugation, never factored twice.
pub fn solve_many(sys: &SecondOrderIndex3System, shifts: &ShiftSet) -> Result<(CMatrix, CMatrix)> {
    let assembler = SaddleAssembler::new(sys)?;
    solve_many_with(&assembler, shifts)
}

pub fn solve_many_with(assembler: &SaddleAssembler<'_>, shifts: &ShiftSet) -> Result<(CMatrix, CMatrix)> {
    let sys = assembler.system();
    let n1 = sys.n1();
    let r = shifts.len();
    let partner = shifts.partners();
    let reps: Vec<usize> = (0..r).filter(|&i| partner[i].is_none_or(|j| i < j)).collect();

    let solved: Vec<(usize, Vec<Complex64>, Vec<Complex64>)> = reps
        .par_iter()
        .map(|&i| {
            let wrap = |e: Error| Error::ShiftSolve {
                index: i,
                source: Box::new(e),
            };
            let fact = assembler.factor(shifts.alphas[i]).map_err(wrap)?;
            let v = fact.solve_right(&shifts.b_dirs[i]).map_err(wrap)?;
            let w = fact.solve_left(&shifts.c_dirs[i]).map_err(wrap)?;
            Ok((i, v, w))
        })
        .collect::<Result<_>>()?;

    let mut vc = CMatrix::zeros(n1, r);
    let mut wc = CMatrix::zeros(n1, r);
    for (i, v, w) in solved {
        for k in 0..n1 {
            vc[(k, i)] = v[k];
            wc[(k, i)] = w[k];
        }
        if let Some(j) = partner[i] {
            for k in 0..n1 {
                vc[(k, j)] = v[k].conj();
                wc[(k, j)] = w[k].conj();
            }
        }
    }
    Ok((vc, wc))
}

/// Residuals of one saddle solve, computed with the multiplier retained.
#[derive(Clone, Copy, Debug)]
pub struct SaddleResidual {
    /// `‖S [v; Λ] − [rhs; 0]‖ / ‖[rhs; 0]‖`.
    pub relative: f64,
    /// `‖G v‖ / (‖v‖ ‖G‖)` with the Frobenius norm of `G`.
    pub constraint: f64,
}

pub fn saddle_residual(
    sys: &SecondOrderIndex3System,
    alpha: Complex64,
    side: Side,
    dir: &[Complex64],
) -> Result<SaddleResidual> {
    let assembler = SaddleAssembler::new(sys)?;
    let fact = assembler.factor(alpha)?;
    let (rhs, x) = match side {
        Side::Right => {
            let rhs = sys.f.mul_cvec(dir);
            let x = fact.solve_right_full(&rhs)?;
            (rhs, x)
        }
        Side::Left => {
            let rhs = sys.l.tr_mul_cvec(dir);
            let x = fact.solve_left_full(&rhs)?;
            (rhs, x)
        }
    };
    let op = assembler.assemble(alpha, side);
    let ax = op.mul_vec(&x);
    let mut full_rhs = rhs.clone();
    full_rhs.resize(op.order(), Complex64::new(0.0, 0.0));
    let diff: Vec<Complex64> = ax.iter().zip(&full_rhs).map(|(a, b)| a - b).collect();
    let rhs_norm = cvec_norm(&full_rhs);
    let relative = if rhs_norm == 0.0 {
        cvec_norm(&diff)
    } else {
        cvec_norm(&diff) / rhs_norm
    };
    let v = &x[..sys.n1()];
    let gv = sys.g.mul_cvec(v);
    let vn = cvec_norm(v);
    let constraint = if vn == 0.0 {
        cvec_norm(&gv)
    } else {
        cvec_norm(&gv) / (vn * sys.g.norm())
    };
    Ok(SaddleResidual {
        relative,
        constraint,
    })
}
