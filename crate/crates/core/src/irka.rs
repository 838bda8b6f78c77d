//! Structure-preserving IRKA for sparse second-order index-3 systems.
//!
//! Every basis vector comes from a saddle-point solve, so the bases lie in
//! `Null(G)` and the reduced matrices are plain two-sided projections of the
//! original sparse `M, D, K, F, L`; the hidden-manifold projector is never
//! formed. Interpolation data are updated from the poles of an order-`r`
//! balanced truncation of the order-`2r` first-order embedding of the
//! current reduced model.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bt::{truncate_keeping_unstable, DenseFirstOrderSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::model::{embed_first_order, ReducedSecondOrderModel, SecondOrderIndex3System};
use crate::saddle::{solve_many_with, SaddleAssembler, Side};

/// Imaginary parts below this fraction of the modulus count as real.
const REAL_TOL: f64 = 1e-10;

/// Relative column norm below which orthonormalization declares collapse.
const COLLAPSE_TOL: f64 = 4.0 * f64::EPSILON;

/// Inside the iteration, columns whose Gram–Schmidt residual falls below
/// this fraction are replaced (see `orthonormalize_with_fill`).
const DEFLATION_TOL: f64 = 1e-5;
const MAX_FILLS: usize = 3;

/// Interpolation points with right (`b`, length `m`) and left (`c`,
/// length `q`) tangential directions. Closed under conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSet {
    pub alphas: Vec<Complex64>,
    pub b_dirs: Vec<Vec<Complex64>>,
    pub c_dirs: Vec<Vec<Complex64>>,
}

impl ShiftSet {
    pub fn new(alphas: Vec<Complex64>, b_dirs: Vec<Vec<Complex64>>, c_dirs: Vec<Vec<Complex64>>) -> Result<Self> {
        let set = Self { alphas, b_dirs, c_dirs };
        set.check_invariants()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    fn is_real(a: Complex64) -> bool {
        a.im == 0.0
    }

    /// Index of the conjugate partner of each non-real shift.
    pub fn partners(&self) -> Vec<Option<usize>> {
        let r = self.len();
        let mut partner = vec![None; r];
        for i in 0..r {
            if Self::is_real(self.alphas[i]) || partner[i].is_some() {
                continue;
            }
            let target = self.alphas[i].conj();
            let found = (0..r).find(|&j| {
                j != i && partner[j].is_none() && (self.alphas[j] - target).norm() <= 1e-14 * target.norm()
            });
            if let Some(j) = found {
                partner[i] = Some(j);
                partner[j] = Some(i);
            }
        }
        partner
    }

    pub fn check_invariants(&self) -> Result<()> {
        let r = self.len();
        if self.b_dirs.len() != r || self.c_dirs.len() != r {
            return Err(Error::Dimension("shift set directions do not match shift count".into()));
        }
        for (i, a) in self.alphas.iter().enumerate() {
            if !(a.re > 0.0) || !a.im.is_finite() {
                return Err(Error::Parameter(format!("shift {i} = {a} is not in the open right half-plane")));
            }
        }
        let partner = self.partners();
        for i in 0..r {
            if Self::is_real(self.alphas[i]) {
                let real_dirs = self.b_dirs[i].iter().chain(&self.c_dirs[i]).all(|z| z.im == 0.0);
                if !real_dirs {
                    return Err(Error::Parameter(format!("real shift {i} has complex directions")));
                }
                continue;
            }
            let Some(j) = partner[i] else {
                return Err(Error::Parameter(format!("shift {i} has no conjugate partner")));
            };
            let conj_ok = |x: &[Complex64], y: &[Complex64]| {
                x.len() == y.len() && x.iter().zip(y).all(|(a, b)| (a.conj() - b).norm() <= 1e-14 * (1.0 + a.norm()))
            };
            if !conj_ok(&self.b_dirs[i], &self.b_dirs[j]) || !conj_ok(&self.c_dirs[i], &self.c_dirs[j]) {
                return Err(Error::Parameter(format!("directions of shifts {i} and {j} are not conjugate")));
            }
        }
        Ok(())
    }

    pub fn sorted_alphas(&self) -> Vec<Complex64> {
        let mut a = self.alphas.clone();
        linalg::sort_lex(&mut a);
        a
    }

    /// Multiplies shift `i` and its conjugate partner by `factor`.
    pub fn perturb(&mut self, i: usize, factor: f64) {
        let partner = self.partners()[i];
        self.alphas[i] *= factor;
        if let Some(j) = partner {
            self.alphas[j] = self.alphas[i].conj();
        }
    }
}

/// `‖sort(new) − sort(old)‖ / ‖sort(old)‖` with lexicographic `(Re, Im)` order.
pub fn shift_change(new: &ShiftSet, old: &ShiftSet) -> f64 {
    linalg::sorted_relative_distance(&new.alphas, &old.alphas)
}

fn unit_vector(rng: &mut ChaCha8Rng, len: usize, complex: bool) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..len)
            .map(|_| {
                let re = rng.random_range(-1.0..1.0);
                let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
                c(re, im)
            })
            .collect();
        let n = linalg::cvec_norm(&v);
        if n > 1e-3 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Random conjugate-closed shifts with magnitudes log-uniform in `band`.
pub fn init_shifts(r: usize, m: usize, q: usize, band: (f64, f64), seed: u64) -> Result<ShiftSet> {
    let (lo, hi) = band;
    if r == 0 {
        return Err(Error::Parameter("r must be at least 1".into()));
    }
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Parameter(format!("invalid band [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alphas = Vec::with_capacity(r);
    let mut b_dirs = Vec::with_capacity(r);
    let mut c_dirs = Vec::with_capacity(r);
    let (llo, lhi) = (lo.ln(), hi.ln());
    for _ in 0..r / 2 {
        let mag = rng.random_range(llo..=lhi).exp();
        let mut theta: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        if theta == 0.0 {
            theta = 1e-3;
        }
        let alpha = c(mag * theta.cos(), mag * theta.sin());
        let b = unit_vector(&mut rng, m, true);
        let cv = unit_vector(&mut rng, q, true);
        alphas.push(alpha);
        alphas.push(alpha.conj());
        b_dirs.push(b.iter().map(|z| z.conj()).collect());
        c_dirs.push(cv.iter().map(|z| z.conj()).collect());
        b_dirs.insert(b_dirs.len() - 1, b);
        c_dirs.insert(c_dirs.len() - 1, cv);
    }
    if r % 2 == 1 {
        let mag = rng.random_range(llo..=lhi).exp();
        alphas.push(c(mag, 0.0));
        b_dirs.push(unit_vector(&mut rng, m, false));
        c_dirs.push(unit_vector(&mut rng, q, false));
    }
    ShiftSet::new(alphas, b_dirs, c_dirs)
}

/// Removes the components along the first `j` columns of `q` (two MGS
/// passes) and returns the remaining norm relative to the original.
fn project_out(q: &DMatrix<f64>, j: usize, v: &mut [f64]) -> f64 {
    let original = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _pass in 0..2 {
        for p in 0..j {
            let col = q.column(p);
            let dot: f64 = col.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, a) in v.iter_mut().zip(col.iter()) {
                *x -= dot * a;
            }
        }
    }
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if original > 0.0 {
        nrm / original
    } else {
        0.0
    }
}

fn store_normalized(q: &mut DMatrix<f64>, j: usize, v: &[f64]) {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for (i, x) in v.iter().enumerate() {
        q[(i, j)] = x / nrm;
    }
}

/// Two passes of modified Gram–Schmidt.
fn orthonormalize(cols: Vec<Vec<f64>>, n: usize) -> Result<DMatrix<f64>> {
    let k = cols.len();
    let mut q = DMatrix::zeros(n, k);
    for (j, mut v) in cols.into_iter().enumerate() {
        if !(project_out(&q, j, &mut v) > COLLAPSE_TOL) {
            return Err(Error::BasisCollapse { column: j });
        }
        store_normalized(&mut q, j, &v);
    }
    Ok(q)
}

/// For each real column produced by `real_columns`: the shift it came
/// from and whether it is the imaginary part.
fn column_sources(shifts: &ShiftSet) -> Vec<(usize, bool)> {
    let partner = shifts.partners();
    let mut out = Vec::with_capacity(shifts.len());
    for i in 0..shifts.len() {
        match partner[i] {
            None => out.push((i, false)),
            Some(j) if i < j => {
                out.push((i, false));
                out.push((i, true));
            }
            Some(_) => {}
        }
    }
    out
}

/// Orthonormalizes the realified columns of `basis`. A column that is
/// numerically dependent on its predecessors (clustered shifts) is
/// replaced by a rational Arnoldi vector `(α²M + αD + K)⁻¹ M q` at its own
/// shift, which keeps every original column in the span and every column
/// in the null space of `G`.
fn orthonormalize_with_fill(
    assembler: &SaddleAssembler<'_>,
    shifts: &ShiftSet,
    basis: &CMatrix,
    side: Side,
) -> Result<DMatrix<f64>> {
    let sys = assembler.system();
    let n = basis.nrows();
    let sources = column_sources(shifts);
    let cols = real_columns(basis, shifts);
    let mut q = DMatrix::zeros(n, cols.len());
    for (j, mut v) in cols.into_iter().enumerate() {
        let mut ratio = project_out(&q, j, &mut v);
        let mut fills = 0;
        while !(ratio > DEFLATION_TOL) {
            if fills >= MAX_FILLS || fills >= j {
                return Err(Error::BasisCollapse { column: j });
            }
            let (shift, imag) = sources[j];
            let src: Vec<Complex64> = q.column(j - 1 - fills).iter().map(|&x| c(x, 0.0)).collect();
            let fact = assembler.factor(shifts.alphas[shift])?;
            let x = match side {
                Side::Right => fact.solve_right_rhs(&sys.m.mul_cvec(&src))?,
                Side::Left => fact.solve_left_rhs(&sys.m.tr_mul_cvec(&src))?,
            };
            v = x.iter().map(|z| if imag { z.im } else { z.re }).collect();
            if v.iter().all(|&x| x == 0.0) {
                v = x.iter().map(|z| z.re + z.im).collect();
            }
            ratio = project_out(&q, j, &mut v);
            fills += 1;
            log::debug!("column {j} numerically dependent; rational Arnoldi fill {fills}");
        }
        store_normalized(&mut q, j, &v);
    }
    Ok(q)
}

fn real_columns(basis: &CMatrix, shifts: &ShiftSet) -> Vec<Vec<f64>> {
    let partner = shifts.partners();
    let mut cols = Vec::with_capacity(shifts.len());
    for i in 0..shifts.len() {
        let col = basis.column(i);
        match partner[i] {
            None => cols.push(col.iter().map(|z| z.re).collect()),
            Some(j) if i < j => {
                cols.push(col.iter().map(|z| z.re).collect());
                cols.push(col.iter().map(|z| z.im).collect());
            }
            Some(_) => {}
        }
    }
    cols
}

/// Real orthonormal bases spanning the same real subspaces as the complex
/// conjugate-paired bases.
pub fn realify(vc: &CMatrix, wc: &CMatrix, shifts: &ShiftSet) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = vc.nrows();
    let v = orthonormalize(real_columns(vc, shifts), n)?;
    let w = orthonormalize(real_columns(wc, shifts), n)?;
    Ok((v, w))
}

/// `(WᵀMV, WᵀDV, WᵀKV, WᵀF, LV)`.
pub fn assemble_reduced(sys: &SecondOrderIndex3System, v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<ReducedSecondOrderModel> {
    if v.nrows() != sys.n1() || w.nrows() != sys.n1() || v.ncols() != w.ncols() {
        return Err(Error::Dimension("bases do not match the system".into()));
    }
    let rom = ReducedSecondOrderModel::new(
        sys.m.project(w, v),
        sys.d.project(w, v),
        sys.k.project(w, v),
        w.transpose() * sys.f.to_dense(),
        sys.l.to_dense() * v,
    )?;
    // Fails with SingularReducedMass when M̂ is singular.
    embed_first_order(&rom)?;
    Ok(rom)
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = linalg::cvec_norm(&v);
    if n > 0.0 && n.is_finite() {
        v.into_iter().map(|z| z / n).collect()
    } else {
        let len = v.len().max(1) as f64;
        vec![c(1.0 / len.sqrt(), 0.0); v.len()]
    }
}

/// Rotates a vector so its largest entry is real and drops the imaginary
/// part (eigenvectors of real eigenvalues are real up to phase).
fn realified(v: Vec<Complex64>) -> Vec<Complex64> {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap_or(c(1.0, 0.0));
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { c(1.0, 0.0) };
    v.into_iter().map(|z| c((z * phase).re, 0.0)).collect()
}

/// New interpolation data from an order-`r` balanced truncation of the
/// first-order embedding of `rom`: `α = −λ`, `b = −(y* B̂)ᵀ`, `c = Ĉ z`
/// for each eigentriple `(λ, z, y)` of the truncated pencil.
pub fn update_shifts(rom: &ReducedSecondOrderModel, r: usize) -> Result<ShiftSet> {
    let fo = embed_first_order(rom)?;
    let dense = DenseFirstOrderSystem::new(fo.e, fo.a, fo.b, fo.c)?;
    let red = truncate_keeping_unstable(&dense, r)?;
    let a = red.a;
    let (lambdas, z) = linalg::eigen_decomposition(&a)?;
    let y_star = z
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("reduced pencil is defective".into()))?;
    if y_star.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Eigen("reduced pencil is defective".into()));
    }
    let bhat = linalg::to_complex(&red.b);
    let chat = linalg::to_complex(&red.c);

    struct Raw {
        alpha: Complex64,
        b: Vec<Complex64>,
        c: Vec<Complex64>,
    }
    let raw: Vec<Raw> = (0..r)
        .map(|i| {
            let b = -(y_star.row(i) * &bhat);
            let cv = &chat * z.column(i);
            let mut alpha = -lambdas[i];
            if alpha.re <= 0.0 {
                alpha.re = alpha.re.abs().max(f64::EPSILON * alpha.norm());
            }
            Raw {
                alpha,
                b: b.iter().copied().collect(),
                c: cv.iter().copied().collect(),
            }
        })
        .collect();

    let is_real = |a: Complex64| a.im.abs() <= REAL_TOL * a.norm();
    let mut alphas = Vec::with_capacity(r);
    let mut b_dirs = Vec::with_capacity(r);
    let mut c_dirs = Vec::with_capacity(r);
    let mut upper: Vec<usize> = Vec::new();
    let mut lower: Vec<usize> = Vec::new();
    for (i, item) in raw.iter().enumerate() {
        if is_real(item.alpha) {
            alphas.push(c(item.alpha.re, 0.0));
            b_dirs.push(normalized(realified(item.b.clone())));
            c_dirs.push(normalized(realified(item.c.clone())));
        } else if item.alpha.im > 0.0 {
            upper.push(i);
        } else {
            lower.push(i);
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::Eigen("reduced spectrum is not conjugate-symmetric".into()));
    }
    for &i in &upper {
        let target = raw[i].alpha.conj();
        let (pos, _) = lower
            .iter()
            .enumerate()
            .map(|(p, &j)| (p, (raw[j].alpha - target).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("same count");
        let j = lower.remove(pos);
        let alpha = (raw[i].alpha + raw[j].alpha.conj()) * 0.5;
        let b = normalized(raw[i].b.clone());
        let cv = normalized(raw[i].c.clone());
        alphas.push(alpha);
        alphas.push(alpha.conj());
        b_dirs.push(b.iter().map(|z| z.conj()).collect());
        c_dirs.push(cv.iter().map(|z| z.conj()).collect());
        b_dirs.insert(b_dirs.len() - 1, b);
        c_dirs.insert(c_dirs.len() - 1, cv);
    }

    // Deterministic order: by (Re, Im) of the representative shift.
    let partner_of = |k: usize, alphas: &[Complex64]| -> usize {
        if alphas[k].im == 0.0 {
            1
        } else {
            2
        }
    };
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    let mut k = 0;
    while k < alphas.len() {
        groups.push((alphas[k], k));
        k += partner_of(k, &alphas);
    }
    groups.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.abs().partial_cmp(&b.0.im.abs()).unwrap())
    });
    let mut out_a = Vec::with_capacity(r);
    let mut out_b = Vec::with_capacity(r);
    let mut out_c = Vec::with_capacity(r);
    for (_, start) in groups {
        let width = partner_of(start, &alphas);
        for k in start..start + width {
            out_a.push(alphas[k]);
            out_b.push(b_dirs[k].clone());
            out_c.push(c_dirs[k].clone());
        }
    }
    ShiftSet::new(out_a, out_b, out_c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrkaOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub band: (f64, f64),
    pub seed: u64,
}

impl Default for IrkaOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-4,
            band: (1e-2, 1.0),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceStatus {
    Converged,
    MaxIterations,
    Stagnated,
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Shifts used for this iteration's bases, sorted by (Re, Im).
    pub shifts: Vec<Complex64>,
    /// Relative change to the updated shifts; `None` when the update failed.
    pub shift_change: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTrace {
    pub iterations: Vec<IterationRecord>,
    pub status: ConvergenceStatus,
}

#[derive(Clone, Debug)]
pub struct IrkaOutcome {
    pub rom: ReducedSecondOrderModel,
    pub trace: ConvergenceTrace,
    /// Interpolation data the returned model was built from.
    pub shifts: ShiftSet,
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

const MAX_PERTURBATIONS: usize = 3;

/// Builds `V`, `W` at `shifts`, perturbing shifts that hit a pole.
fn build_bases(
    assembler: &SaddleAssembler<'_>,
    shifts: &mut ShiftSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut attempts = 0;
    loop {
        match solve_many_with(assembler, shifts) {
            Ok((vc, wc)) => {
                let v = orthonormalize_with_fill(assembler, shifts, &vc, Side::Right)?;
                let w = orthonormalize_with_fill(assembler, shifts, &wc, Side::Left)?;
                return Ok((v, w));
            }
            Err(Error::ShiftSolve { index, source }) if attempts < MAX_PERTURBATIONS => {
                log::warn!("shift {index} failed ({source}); perturbing");
                shifts.perturb(index, 1.0 + 1e-2);
                attempts += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs the fixed-point iteration. Each iteration builds bases at the
/// current shifts, assembles the reduced model and computes updated shifts;
/// the iteration stops once the relative shift change drops below `tol`.
pub fn irka_reduce(sys: &SecondOrderIndex3System, r: usize, opts: &IrkaOptions) -> Result<IrkaOutcome> {
    let dof = sys.n1() - sys.n2().min(sys.n1());
    if r == 0 || r > dof {
        return Err(Error::Parameter(format!("r = {r} must satisfy 1 <= r <= n1 - n2 = {dof}")));
    }
    if opts.max_iter == 0 {
        return Err(Error::Parameter("max_iter must be positive".into()));
    }
    let shifts = init_shifts(r, sys.inputs(), sys.outputs(), opts.band, opts.seed)?;
    irka_reduce_from(sys, shifts, opts)
}

/// Runs the iteration from caller-supplied initial shifts and directions.
/// `opts.band` and `opts.seed` are ignored.
pub fn irka_reduce_from(sys: &SecondOrderIndex3System, initial: ShiftSet, opts: &IrkaOptions) -> Result<IrkaOutcome> {
    let r = initial.len();
    let dof = sys.n1() - sys.n2().min(sys.n1());
    if r == 0 || r > dof {
        return Err(Error::Parameter(format!("r = {r} must satisfy 1 <= r <= n1 - n2 = {dof}")));
    }
    if opts.max_iter == 0 {
        return Err(Error::Parameter("max_iter must be positive".into()));
    }
    initial.check_invariants()?;
    let mut shifts = initial;
    let assembler = SaddleAssembler::new(sys)?;
    let mut records = Vec::new();
    let start = Instant::now();
    let mut last: Option<(ReducedSecondOrderModel, ShiftSet, DMatrix<f64>, DMatrix<f64>)> = None;
    let mut status = ConvergenceStatus::MaxIterations;

    for iteration in 1..=opts.max_iter {
        let (v, w) = build_bases(&assembler, &mut shifts)?;
        let rom = assemble_reduced(sys, &v, &w)?;
        let update = update_shifts(&rom, r);
        let used = shifts.clone();
        let change = match &update {
            Ok(new) => Some(shift_change(new, &used)),
            Err(e) => {
                log::warn!("shift update failed at iteration {iteration}: {e}");
                None
            }
        };
        records.push(IterationRecord {
            iteration,
            shifts: used.sorted_alphas(),
            shift_change: change,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        last = Some((rom, used, v, w));
        match (update, change) {
            (Ok(_), Some(d)) if d < opts.tol => {
                status = ConvergenceStatus::Converged;
                break;
            }
            (Ok(new), _) => shifts = new,
            (Err(_), _) => {
                status = ConvergenceStatus::Stagnated;
                break;
            }
        }
    }
    let (rom, shifts, v, w) = last.expect("at least one iteration");
    Ok(IrkaOutcome {
        rom,
        trace: ConvergenceTrace {
            iterations: records,
            status,
        },
        shifts,
        v,
        w,
    })
}

/// Residuals of the Hermite bi-tangential interpolation conditions at one
/// shift. `None` marks evaluations that hit a pole.
#[derive(Clone, Debug)]
pub struct InterpolationResidual {
    pub index: usize,
    pub alpha: Complex64,
    /// `‖T(α)b − T̂(α)b‖ / ‖T(α)b‖`.
    pub zeroth: Option<f64>,
    /// `|cᵀT(α)b − cᵀT̂(α)b| / |cᵀT(α)b|`.
    pub bitangential: Option<f64>,
    /// Same for the derivative, by central differences.
    pub derivative: Option<f64>,
}

fn full_tb(assembler: &SaddleAssembler<'_>, s: Complex64, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let fact = assembler.factor(s)?;
    let v = fact.solve_right(b)?;
    Ok(assembler.system().l.mul_cvec(&v))
}

fn rom_tb(rom: &ReducedSecondOrderModel, s: Complex64, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let t = rom.transfer(s)?;
    Ok((t * linalg::CVector::from_column_slice(b)).iter().copied().collect())
}

fn dot_t(c: &[Complex64], x: &[Complex64]) -> Complex64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub fn check_interpolation(
    sys: &SecondOrderIndex3System,
    rom: &ReducedSecondOrderModel,
    shifts: &ShiftSet,
) -> Result<Vec<InterpolationResidual>> {
    let assembler = SaddleAssembler::new(sys)?;
    let mut out = Vec::with_capacity(shifts.len());
    for i in 0..shifts.len() {
        let alpha = shifts.alphas[i];
        let b = &shifts.b_dirs[i];
        let cdir = &shifts.c_dirs[i];
        let mut zeroth = None;
        let mut bitangential = None;
        if let (Ok(t), Ok(th)) = (full_tb(&assembler, alpha, b), rom_tb(rom, alpha, b)) {
            let diff: Vec<Complex64> = t.iter().zip(&th).map(|(a, b)| a - b).collect();
            zeroth = Some(linalg::cvec_norm(&diff) / linalg::cvec_norm(&t));
            let ct = dot_t(cdir, &t);
            bitangential = Some((ct - dot_t(cdir, &th)).norm() / ct.norm());
        }
        let h = 1e-6 * alpha.norm().max(1.0);
        let hc = c(h, 0.0);
        let derivative = (|| -> Result<f64> {
            let tp = dot_t(cdir, &full_tb(&assembler, alpha + hc, b)?);
            let tm = dot_t(cdir, &full_tb(&assembler, alpha - hc, b)?);
            let rp = dot_t(cdir, &rom_tb(rom, alpha + hc, b)?);
            let rm = dot_t(cdir, &rom_tb(rom, alpha - hc, b)?);
            let d_full = (tp - tm) / (2.0 * h);
            let d_rom = (rp - rm) / (2.0 * h);
            Ok((d_full - d_rom).norm() / d_full.norm())
        })()
        .ok();
        out.push(InterpolationResidual {
            index: i,
            alpha,
            zeroth,
            bitangential,
            derivative,
        });
    }
    Ok(out)
}
