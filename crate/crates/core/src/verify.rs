//! Invariant suite: dense-oracle cross-checks of the projector-free
//! pipeline on small random instances.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmarks::gen_random;
use crate::bt::{balanced_truncate, DenseFirstOrderSystem};
use crate::error::{Error, Result};
use crate::freq::{first_order_response, full_transfer, FrequencyGrid};
use crate::irka::{assemble_reduced, check_interpolation, init_shifts, realify, update_shifts};
use crate::linalg::{self, c, sigma_max};
use crate::model::SecondOrderIndex3System;
use crate::projection::{
    build_projector, project_system, projected_reduction, projected_transfer, split_projector,
};
use crate::saddle::{solve_many_with, solve_right, SaddleAssembler};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorResiduals {
    /// `‖Π² − Π‖ / ‖Π‖`
    pub idempotency: f64,
    /// `‖ΠM − MΠᵀ‖ / (‖Π‖‖M‖)`
    pub mass_symmetry: f64,
    /// `‖ΠGᵀ‖ / (‖Π‖‖G‖)`
    pub constraint: f64,
    /// `‖Ψ_l Ψ_rᵀ − Π‖ / ‖Π‖`
    pub split_product: f64,
    /// `‖Ψ_lᵀ Ψ_r − I‖`
    pub split_biorthogonality: f64,
}

impl ProjectorResiduals {
    pub fn max(&self) -> f64 {
        [
            self.idempotency,
            self.mass_symmetry,
            self.constraint,
            self.split_product,
            self.split_biorthogonality,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn projector_residuals(sys: &SecondOrderIndex3System) -> Result<ProjectorResiduals> {
    let proj = build_projector(sys)?;
    let split = split_projector(&proj)?;
    let p = &proj.p;
    let m = sys.m.to_dense();
    let g = sys.g.to_dense();
    let pn = p.norm();
    let k = split.psi_l.ncols();
    Ok(ProjectorResiduals {
        idempotency: (p * p - p).norm() / pn,
        mass_symmetry: (p * &m - &m * p.transpose()).norm() / (pn * m.norm()),
        constraint: (p * g.transpose()).norm() / (pn * g.norm()),
        split_product: (&split.psi_l * split.psi_r.transpose() - p).norm() / pn,
        split_biorthogonality: (split.psi_l.transpose() * &split.psi_r - DMatrix::identity(k, k)).norm(),
    })
}

/// Saddle solve versus the lifted dense projected solve at each shift:
/// returns `(max relative difference, max ‖Gv‖/(‖v‖‖G‖))`.
pub fn lemma1_residuals(sys: &SecondOrderIndex3System, shifts: &[Complex64], seed: u64) -> Result<(f64, f64)> {
    let proj = build_projector(sys)?;
    let split = split_projector(&proj)?;
    let psys = project_system(sys, &split)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gnorm = sys.g.norm();
    let (mut rel, mut cons) = (0.0f64, 0.0f64);
    for &alpha in shifts {
        let b: Vec<Complex64> = (0..sys.inputs())
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let v = solve_right(sys, alpha, &b)?;
        let fb = sys.f.mul_cvec(&b);
        let oracle = psys.lifted_solve(&split, alpha, &fb)?;
        let diff: Vec<Complex64> = v.iter().zip(&oracle).map(|(a, b)| a - b).collect();
        rel = rel.max(linalg::cvec_norm(&diff) / linalg::cvec_norm(&oracle));
        let gv = sys.g.mul_cvec(&v);
        cons = cons.max(linalg::cvec_norm(&gv) / (linalg::cvec_norm(&v) * gnorm));
    }
    Ok((rel, cons))
}

/// Max over the grid of `σ_max(T − T̃) / σ_max(T̃)` between the saddle-based
/// and the dense projected transfer functions.
pub fn realization_residual(sys: &SecondOrderIndex3System, grid: &FrequencyGrid) -> Result<f64> {
    let proj = build_projector(sys)?;
    let split = split_projector(&proj)?;
    let psys = project_system(sys, &split)?;
    let assembler = SaddleAssembler::new(sys)?;
    let mut worst = 0.0f64;
    for &w in grid.omegas() {
        let s = c(0.0, w);
        let t = full_transfer(&assembler, s)?;
        let tt = projected_transfer(&psys, s)?;
        worst = worst.max(sigma_max(&(t - &tt)) / sigma_max(&tt));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSummary {
    pub basis_builds: usize,
    pub zeroth: f64,
    pub bitangential: f64,
    pub derivative: f64,
    /// `‖Gv‖/(‖v‖‖G‖)` over all basis columns.
    pub constraint: f64,
    /// Entrywise gap between the assembled model and the `Π`-projected
    /// oracle reduction with the same bases, relative to the largest entry.
    pub petrov_galerkin: f64,
    pub unavailable: usize,
}

/// Runs `builds` IRKA basis builds and checks the Hermite conditions,
/// constraint compatibility and Petrov–Galerkin consistency after each.
pub fn interpolation_summary(
    sys: &SecondOrderIndex3System,
    r: usize,
    builds: usize,
    band: (f64, f64),
    seed: u64,
) -> Result<InterpolationSummary> {
    let assembler = SaddleAssembler::new(sys)?;
    let proj = build_projector(sys)?;
    let mut shifts = init_shifts(r, sys.inputs(), sys.outputs(), band, seed)?;
    let gnorm = sys.g.norm();
    let mut out = InterpolationSummary::default();
    for _ in 0..builds {
        let (vc, wc) = solve_many_with(&assembler, &shifts)?;
        let (v, w) = realify(&vc, &wc, &shifts)?;
        let rom = assemble_reduced(sys, &v, &w)?;
        for basis in [&v, &w] {
            let gb = sys.g.mul_dense(basis);
            for j in 0..basis.ncols() {
                out.constraint = out.constraint.max(gb.column(j).norm() / (basis.column(j).norm() * gnorm));
            }
        }
        let oracle = projected_reduction(sys, &proj, &v, &w)?;
        let pairs = [
            (&rom.mr, &oracle.mr),
            (&rom.dr, &oracle.dr),
            (&rom.kr, &oracle.kr),
            (&rom.fr, &oracle.fr),
            (&rom.lr, &oracle.lr),
        ];
        for (a, b) in pairs {
            let scale = b.amax().max(f64::MIN_POSITIVE);
            out.petrov_galerkin = out.petrov_galerkin.max((a - b).amax() / scale);
        }
        for res in check_interpolation(sys, &rom, &shifts)? {
            match (res.zeroth, res.bitangential, res.derivative) {
                (Some(z), Some(t), Some(d)) => {
                    out.zeroth = out.zeroth.max(z);
                    out.bitangential = out.bitangential.max(t);
                    out.derivative = out.derivative.max(d);
                }
                _ => out.unavailable += 1,
            }
        }
        out.basis_builds += 1;
        match update_shifts(&rom, r) {
            Ok(next) => shifts = next,
            Err(_) => break,
        }
    }
    Ok(out)
}

/// Random asymptotically stable dense realization with `E = I`.
pub fn random_stable_dense(n: usize, m: usize, q: usize, seed: u64) -> Result<DenseFirstOrderSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand_mat = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let x = rand_mat(n, n);
    let s = rand_mat(n, n);
    let a = -(&x * x.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1) + (&s - s.transpose());
    let b = rand_mat(n, m);
    let cm = rand_mat(q, n);
    DenseFirstOrderSystem::new(DMatrix::identity(n, n), a, b, cm)
}

/// `max_ω σ_max(T − T_k)(iω) / (2 Σ discarded)` on a wide grid.
pub fn bt_bound_ratio(sys: &DenseFirstOrderSystem, k: usize, grid: &FrequencyGrid) -> Result<f64> {
    let red = balanced_truncate(sys, k)?;
    let bound = 2.0 * red.discarded_sum();
    let full = first_order_response(sys, grid)?;
    let reduced = first_order_response(&red.reduced, grid)?;
    let mut worst = 0.0f64;
    for (t, th) in full.values.iter().zip(&reduced.values) {
        let (Some(t), Some(th)) = (t, th) else {
            return Err(Error::Pole(c(0.0, 0.0)));
        };
        worst = worst.max(sigma_max(&(t - th)));
    }
    Ok(worst / bound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tier: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    Tiny,
    Small,
}

impl std::str::FromStr for Tier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(Tier::Tiny),
            "small" => Ok(Tier::Small),
            other => Err(Error::Parameter(format!("unknown tier {other:?} (tiny|small)"))),
        }
    }
}

impl Tier {
    pub fn name(&self) -> &'static str {
        match self {
            Tier::Tiny => "tiny",
            Tier::Small => "small",
        }
    }
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: String, value: Result<f64>, tolerance: f64) {
        let (value, passed) = match value {
            Ok(v) => (v, v <= tolerance),
            Err(e) => {
                log::error!("{name}: {e}");
                (f64::NAN, false)
            }
        };
        self.checks.push(Check {
            name,
            value,
            tolerance,
            passed,
        });
    }
}

pub fn run_suite(tier: Tier) -> VerifyReport {
    let (sizes, instances, rs): (&[usize], u64, &[usize]) = match tier {
        Tier::Tiny => (&[10], 2, &[2]),
        Tier::Small => (&[10, 50, 200], 3, &[4, 10]),
    };
    let mut suite = Suite { checks: Vec::new() };
    let shifts = [c(0.5, 0.0), c(0.1, 1.0), c(2.0, -3.0), c(1e-3, 0.2), c(5.0, 5.0)];
    let grid = FrequencyGrid::log_spaced(1e-2, 1e2, 20).expect("valid grid");
    for &n1 in sizes {
        for seed in 0..instances {
            let tag = format!("n1={n1},seed={seed}");
            let sys = match gen_random(n1, (n1 / 10).max(1), 2, 2, seed) {
                Ok(s) => s,
                Err(e) => {
                    suite.record(format!("generate[{tag}]"), Err(e), 0.0);
                    continue;
                }
            };
            suite.record(format!("projector[{tag}]"), projector_residuals(&sys).map(|r| r.max()), 1e-10);
            let lemma = lemma1_residuals(&sys, &shifts, seed);
            suite.record(format!("lemma1[{tag}]"), lemma.as_ref().map(|r| r.0).map_err(clone_err), 1e-8);
            suite.record(format!("lemma1_constraint[{tag}]"), lemma.map(|r| r.1), 1e-10);
            suite.record(format!("realization[{tag}]"), realization_residual(&sys, &grid), 1e-8);
            for &r in rs.iter().filter(|&&r| r < n1 - n1 / 10) {
                let tag = format!("{tag},r={r}");
                let summary = interpolation_summary(&sys, r, 3, (1e-1, 10.0), seed);
                let get = |f: fn(&InterpolationSummary) -> f64| summary.as_ref().map(f).map_err(clone_err);
                suite.record(format!("interp_zeroth[{tag}]"), get(|s| s.zeroth), 1e-6);
                suite.record(format!("interp_bitangential[{tag}]"), get(|s| s.bitangential), 1e-6);
                suite.record(format!("interp_derivative[{tag}]"), get(|s| s.derivative), 1e-4);
                suite.record(format!("basis_constraint[{tag}]"), get(|s| s.constraint), 1e-9);
                suite.record(format!("petrov_galerkin[{tag}]"), get(|s| s.petrov_galerkin), 1e-10);
            }
        }
    }
    let bt_grid = FrequencyGrid::log_spaced(1e-3, 1e3, 200).expect("valid grid");
    for seed in 0..instances {
        let ratio = random_stable_dense(20, 2, 2, seed).and_then(|s| bt_bound_ratio(&s, 5, &bt_grid));
        suite.record(format!("bt_bound[seed={seed}]"), ratio, 1.1);
    }
    let passed = suite.checks.iter().all(|c| c.passed);
    VerifyReport {
        tier: tier.name().into(),
        checks: suite.checks,
        passed,
    }
}

fn clone_err(e: &Error) -> Error {
    Error::Parameter(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_suite_passes() {
        let report = run_suite(Tier::Tiny);
        for c in &report.checks {
            assert!(c.passed, "{} = {} > {}", c.name, c.value, c.tolerance);
        }
    }
}
