//! Parameterized benchmark generators: a damped spring-mass chain with
//! holonomic constraints (DSMS) and a constrained triple chain oscillator
//! (TCOM).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_system, SecondOrderIndex3System};
use crate::sparse::SparseMatrix;
use crate::sparse_lu::is_positive_definite;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsmsParams {
    pub n1: usize,
    pub n2: usize,
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub seed: u64,
}

impl Default for DsmsParams {
    fn default() -> Self {
        Self {
            n1: 2000,
            n2: 200,
            mass: 100.0,
            stiffness: 2.0,
            damping: 5.0,
            seed: 0,
        }
    }
}

impl DsmsParams {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcomParams {
    pub g: usize,
    pub n2: usize,
    /// Masses of the three chains.
    pub masses: [f64; 3],
    /// Spring constants of the three chains.
    pub springs: [f64; 3],
    pub common_mass: f64,
    pub common_spring: f64,
    /// Rayleigh damping `D = alpha·M + beta·K`.
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for TcomParams {
    fn default() -> Self {
        Self {
            g: 2000,
            n2: 5000,
            masses: [1.0, 2.0, 3.0],
            springs: [10.0, 20.0, 1.0],
            common_mass: 10.0,
            common_spring: 50.0,
            alpha: 0.2,
            beta: 0.2,
            seed: 0,
        }
    }
}

impl TcomParams {
    pub fn new(g: usize, n2: usize) -> Self {
        Self { g, n2, ..Self::default() }
    }

    pub fn n1(&self) -> usize {
        3 * self.g + 1
    }

    /// Largest admissible constraint count.
    pub fn max_constraints(&self) -> usize {
        (3 * self.g).saturating_sub(1)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {v}")))
    }
}

/// Adds a spring of constant `k` between `i` and `j` (`None` = ground).
fn spring(t: &mut Vec<(usize, usize, f64)>, i: usize, j: Option<usize>, k: f64) {
    t.push((i, i, k));
    if let Some(j) = j {
        t.push((j, j, k));
        t.push((i, j, -k));
        t.push((j, i, -k));
    }
}

fn check_generated(sys: SecondOrderIndex3System) -> Result<SecondOrderIndex3System> {
    if !is_positive_definite(&sys.k) {
        return Err(Error::Parameter("generated stiffness is not positive definite".into()));
    }
    let n1 = sys.n1();
    let nnz = sys.m.nnz() + sys.d.nnz() + sys.k.nnz() + sys.g.nnz();
    debug_assert!(nnz <= 10 * n1, "nnz {nnz} exceeds 10·n1");
    validate_system(&sys)?;
    Ok(sys)
}

pub fn gen_dsms(p: &DsmsParams) -> Result<SecondOrderIndex3System> {
    positive("mass", p.mass)?;
    positive("stiffness", p.stiffness)?;
    positive("damping", p.damping)?;
    let (n1, n2) = (p.n1, p.n2);
    if n2 == 0 || n2 >= n1 {
        return Err(Error::Parameter(format!("need 0 < n2 < n1, got n1 = {n1}, n2 = {n2}")));
    }
    if n1 < 4 {
        return Err(Error::Parameter("n1 must be at least 4".into()));
    }
    let stride = n1 / n2;
    let offset = n1 / (2 * n2);
    if offset == 0 {
        return Err(Error::Parameter(format!(
            "n2 = {n2} is too large to spread constraint pairs over n1 = {n1}"
        )));
    }

    let m = SparseMatrix::diagonal(&vec![p.mass; n1]);
    let mut kt = Vec::with_capacity(3 * n1);
    for i in 0..n1 {
        kt.push((i, i, 2.0 * p.stiffness));
        if i + 1 < n1 {
            kt.push((i, i + 1, -p.stiffness));
            kt.push((i + 1, i, -p.stiffness));
        }
    }
    let k = SparseMatrix::from_triplets(n1, n1, &kt)?;
    let ratio = p.damping / p.stiffness;
    let mut dt: Vec<(usize, usize, f64)> = kt.iter().map(|&(i, j, v)| (i, j, ratio * v)).collect();
    dt.extend((0..n1).map(|i| (i, i, 1e-2 * p.mass)));
    let d = SparseMatrix::from_triplets(n1, n1, &dt)?;

    let mut gt = Vec::with_capacity(2 * n2);
    for j in 0..n2 {
        let i = j * stride;
        gt.push((j, i, 1.0));
        gt.push((j, i + offset, -1.0));
    }
    let g = SparseMatrix::from_triplets(n2, n1, &gt)?;
    let f = SparseMatrix::from_triplets(n1, 1, &[(n1 / 2, 0, 1.0)])?;
    let l = SparseMatrix::from_triplets(3, n1, &[(0, n1 / 4, 1.0), (1, n1 / 2, 1.0), (2, 3 * n1 / 4, 1.0)])?;
    check_generated(SecondOrderIndex3System::new(m, d, k, g, f, l)?)
}

/// Coordinate of mass `i` of chain `c`; chains are interleaved so that
/// mirrored masses are adjacent.
pub fn tcom_index(chain: usize, i: usize) -> usize {
    3 * i + chain
}

/// Constraint rows tie neighbouring interleaved coordinates,
/// `x_k − x_{k+1} = 0`, at evenly spread `k < 3g − 1`.
pub fn tcom_constraint_edges(g: usize, n2: usize) -> Vec<usize> {
    let edges = 3 * g - 1;
    (0..n2).map(|j| j * edges / n2).collect()
}

pub fn gen_tcom(p: &TcomParams) -> Result<SecondOrderIndex3System> {
    for (c, (&mc, &kc)) in p.masses.iter().zip(&p.springs).enumerate() {
        positive(&format!("mass of chain {c}"), mc)?;
        positive(&format!("spring of chain {c}"), kc)?;
    }
    positive("common mass", p.common_mass)?;
    positive("common spring", p.common_spring)?;
    if !(p.alpha >= 0.0 && p.beta >= 0.0 && p.alpha + p.beta > 0.0) {
        return Err(Error::Parameter("Rayleigh coefficients must be non-negative and not both zero".into()));
    }
    let g = p.g;
    if g == 0 {
        return Err(Error::Parameter("chain length must be positive".into()));
    }
    let n1 = p.n1();
    if p.n2 == 0 || p.n2 > p.max_constraints() {
        return Err(Error::Parameter(format!(
            "n2 = {} must lie in 1..={} for chain length {g}",
            p.n2,
            p.max_constraints()
        )));
    }
    let common = 3 * g;

    let mut mass = vec![0.0; n1];
    let mut kt = Vec::with_capacity(12 * g + 1);
    for c in 0..3 {
        let kc = p.springs[c];
        for i in 0..g {
            let idx = tcom_index(c, i);
            mass[idx] = p.masses[c];
            let next = if i + 1 < g { tcom_index(c, i + 1) } else { common };
            spring(&mut kt, idx, Some(next), kc);
        }
        spring(&mut kt, tcom_index(c, 0), None, kc);
    }
    mass[common] = p.common_mass;
    spring(&mut kt, common, None, p.common_spring);

    let m = SparseMatrix::diagonal(&mass);
    let k = SparseMatrix::from_triplets(n1, n1, &kt)?;
    let mut dt: Vec<(usize, usize, f64)> = kt.iter().map(|&(i, j, v)| (i, j, p.beta * v)).collect();
    dt.extend(mass.iter().enumerate().map(|(i, &mi)| (i, i, p.alpha * mi)));
    let d = SparseMatrix::from_triplets(n1, n1, &dt)?;

    let mut gt = Vec::with_capacity(2 * p.n2);
    for (row, k) in tcom_constraint_edges(g, p.n2).into_iter().enumerate() {
        gt.push((row, k, 1.0));
        gt.push((row, k + 1, -1.0));
    }
    let gm = SparseMatrix::from_triplets(p.n2, n1, &gt)?;
    let f = SparseMatrix::from_triplets(n1, 1, &[(common, 0, 1.0)])?;
    let l = f.transpose();
    check_generated(SecondOrderIndex3System::new(m, d, k, gm, f, l)?)
}

/// Random sparse, symmetric positive definite `M`, `D`, `K` with a banded
/// pattern and a random full-row-rank `G` (each row owns a distinct pivot
/// column that no other row touches). Used for oracle testing.
pub fn gen_random(n1: usize, n2: usize, m: usize, q: usize, seed: u64) -> Result<SecondOrderIndex3System> {
    if n2 == 0 || 2 * n2 > n1 || m == 0 || q == 0 {
        return Err(Error::Parameter(format!("invalid random sizes n1 = {n1}, n2 = {n2}, m = {m}, q = {q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spd = |rng: &mut ChaCha8Rng, scale: f64| -> Result<SparseMatrix> {
        let mut t = Vec::with_capacity(5 * n1);
        let mut diag = vec![0.0; n1];
        for i in 0..n1 {
            for off in 1..=2 {
                if i + off < n1 {
                    let v = scale * rng.random_range(-0.5..0.5);
                    t.push((i, i + off, v));
                    t.push((i + off, i, v));
                    diag[i] += v.abs();
                    diag[i + off] += v.abs();
                }
            }
        }
        for (i, d) in diag.into_iter().enumerate() {
            t.push((i, i, d + scale * rng.random_range(0.5..1.5)));
        }
        SparseMatrix::from_triplets(n1, n1, &t)
    };
    let mm = spd(&mut rng, 1.0)?;
    let k = spd(&mut rng, 4.0)?;
    let extra = spd(&mut rng, 0.2)?;
    let mut dt: Vec<(usize, usize, f64)> = Vec::new();
    dt.extend(mm.triplets().map(|(i, j, v)| (i, j, 0.05 * v)));
    dt.extend(k.triplets().map(|(i, j, v)| (i, j, 0.05 * v)));
    dt.extend(extra.triplets());
    let d = SparseMatrix::from_triplets(n1, n1, &dt)?;

    // Pivots are the even columns 0, 2, ..; other entries land on odd columns.
    let mut gt = Vec::with_capacity(3 * n2);
    for j in 0..n2 {
        gt.push((j, 2 * j, rng.random_range(0.5..1.5)));
        for _ in 0..2 {
            let col = 2 * rng.random_range(0..n1 / 2) + 1;
            if col < n1 {
                gt.push((j, col, rng.random_range(-1.0..1.0)));
            }
        }
    }
    let g = SparseMatrix::from_triplets(n2, n1, &gt)?;
    let dense = |rng: &mut ChaCha8Rng, rows: usize, cols: usize| {
        let t: Vec<(usize, usize, f64)> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, rng.random_range(-1.0..1.0)))
            .collect();
        SparseMatrix::from_triplets(rows, cols, &t)
    };
    let f = dense(&mut rng, n1, m)?;
    let l = dense(&mut rng, q, n1)?;
    let sys = SecondOrderIndex3System::new(mm, d, k, g, f, l)?;
    validate_system(&sys)?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::constraint_rank;

    #[test]
    fn dsms_small_accepted() {
        let sys = gen_dsms(&DsmsParams::new(10, 1)).unwrap();
        let report = validate_system(&sys).unwrap();
        assert_eq!(report.g_rank, 1);
        assert_eq!(sys.outputs(), 3);
        assert_eq!(sys.inputs(), 1);
    }

    #[test]
    fn dsms_published_size() {
        let sys = gen_dsms(&DsmsParams::default()).unwrap();
        assert_eq!(sys.dae_order(), 2200);
        assert_eq!(constraint_rank(&sys.g, 1e-10), 200);
        assert!(sys.m.nnz() + sys.d.nnz() + sys.k.nnz() + sys.g.nnz() <= 10 * sys.n1());
    }

    #[test]
    fn dsms_rejects_bad_sizes() {
        assert!(matches!(gen_dsms(&DsmsParams::new(10, 20)), Err(Error::Parameter(_))));
        assert!(matches!(gen_dsms(&DsmsParams::new(10, 6)), Err(Error::Parameter(_))));
        assert!(gen_dsms(&DsmsParams::new(10, 5)).is_ok());
    }

    #[test]
    fn dsms_is_deterministic() {
        let a = gen_dsms(&DsmsParams::new(100, 10)).unwrap();
        let b = gen_dsms(&DsmsParams::new(100, 10)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tcom_small() {
        let p = TcomParams::new(3, 2);
        let sys = gen_tcom(&p).unwrap();
        assert_eq!(sys.n1(), 10);
        assert_eq!(constraint_rank(&sys.g, 1e-10), 2);
        assert!(sys.k.is_symmetric() && sys.d.is_symmetric());
    }

    #[test]
    fn tcom_constraint_limits() {
        assert!(gen_tcom(&TcomParams::new(3, 8)).is_ok());
        assert!(matches!(gen_tcom(&TcomParams::new(3, 9)), Err(Error::Parameter(_))));
        let edges = tcom_constraint_edges(2000, 5000);
        assert!(edges.windows(2).all(|w| w[1] > w[0]));
        assert!(*edges.last().unwrap() < 3 * 2000 - 1);
    }

    #[test]
    fn random_instances_validate() {
        for seed in 0..5 {
            let sys = gen_random(50, 5, 2, 2, seed).unwrap();
            assert_eq!(constraint_rank(&sys.g, 1e-10), 5);
            assert!(is_positive_definite(&sys.m) && is_positive_definite(&sys.d) && is_positive_definite(&sys.k));
        }
        assert_eq!(gen_random(20, 2, 1, 1, 9).unwrap(), gen_random(20, 2, 1, 1, 9).unwrap());
    }

    #[test]
    fn tcom_published_size() {
        let sys = gen_tcom(&TcomParams::default()).unwrap();
        assert_eq!(sys.n1(), 6001);
        assert_eq!(sys.dae_order(), 11001);
        assert!(sys.m.nnz() + sys.d.nnz() + sys.k.nnz() + sys.g.nnz() <= 10 * sys.n1());
    }
}
