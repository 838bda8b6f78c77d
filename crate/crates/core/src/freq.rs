//! Frequency sweeps of full, projected and reduced transfer functions.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bt::DenseFirstOrderSystem;
use crate::error::{Error, Result};
use crate::linalg::{c, sigma_max, CMatrix};
use crate::model::{ReducedSecondOrderModel, SecondOrderIndex3System};
use crate::projection::{projected_transfer, ProjectedSystem};
use crate::saddle::SaddleAssembler;

pub const DEFAULT_POINTS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::Parameter("empty frequency grid".into()));
        }
        if omegas.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("frequencies must be positive and finite".into()));
        }
        if omegas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Parameter("frequencies must be strictly increasing".into()));
        }
        Ok(Self { omegas })
    }

    /// `n` logarithmically spaced points from `lo` to `hi` inclusive.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) || n < 2 {
            return Err(Error::Parameter(format!("invalid grid [{lo}, {hi}] with {n} points")));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let step = (b - a) / (n - 1) as f64;
        let mut omegas: Vec<f64> = (0..n).map(|k| 10f64.powf(a + step * k as f64)).collect();
        omegas[0] = lo;
        omegas[n - 1] = hi;
        Self::new(omegas)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// `T(iω)` per grid point; `None` where the evaluation hit a pole.
#[derive(Clone, Debug)]
pub struct FrequencyResponseTable {
    pub omegas: Vec<f64>,
    pub values: Vec<Option<CMatrix>>,
    pub sigma_max: Vec<Option<f64>>,
}

impl FrequencyResponseTable {
    fn from_values(grid: &FrequencyGrid, values: Vec<Option<CMatrix>>) -> Self {
        let sigma_max = values.iter().map(|v| v.as_ref().map(sigma_max)).collect();
        Self {
            omegas: grid.omegas.clone(),
            values,
            sigma_max,
        }
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn pole_hits(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Evaluates `f(iω)` on the grid in parallel; pole hits become `None`,
/// other errors propagate.
pub fn sweep<F>(grid: &FrequencyGrid, f: F) -> Result<FrequencyResponseTable>
where
    F: Fn(Complex64) -> Result<CMatrix> + Sync,
{
    let values: Vec<Result<Option<CMatrix>>> = grid
        .omegas
        .par_iter()
        .map(|&w| match f(c(0.0, w)) {
            Ok(t) => Ok(Some(t)),
            Err(Error::Pole(_)) | Err(Error::ShiftAtEigenvalue { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FrequencyResponseTable::from_values(grid, values))
}

/// `T(s)` of the full system: one saddle factorization, `m` solves.
pub fn full_transfer(assembler: &SaddleAssembler<'_>, s: Complex64) -> Result<CMatrix> {
    let sys = assembler.system();
    let fact = assembler.factor(s)?;
    let (m, q) = (sys.inputs(), sys.outputs());
    let mut t = CMatrix::zeros(q, m);
    let mut e = vec![c(0.0, 0.0); m];
    for j in 0..m {
        e[j] = c(1.0, 0.0);
        let v = fact.solve_right(&e)?;
        let y = sys.l.mul_cvec(&v);
        for i in 0..q {
            t[(i, j)] = y[i];
        }
        e[j] = c(0.0, 0.0);
    }
    Ok(t)
}

pub fn full_response(sys: &SecondOrderIndex3System, grid: &FrequencyGrid) -> Result<FrequencyResponseTable> {
    let assembler = SaddleAssembler::new(sys)?;
    sweep(grid, |s| full_transfer(&assembler, s))
}

pub fn reduced_response(rom: &ReducedSecondOrderModel, grid: &FrequencyGrid) -> Result<FrequencyResponseTable> {
    sweep(grid, |s| rom.transfer(s))
}

pub fn first_order_response(sys: &DenseFirstOrderSystem, grid: &FrequencyGrid) -> Result<FrequencyResponseTable> {
    sweep(grid, |s| sys.transfer(s))
}

pub fn projected_response(psys: &ProjectedSystem, grid: &FrequencyGrid) -> Result<FrequencyResponseTable> {
    sweep(grid, |s| projected_transfer(psys, s))
}

/// Per-frequency `σ_max(T − T̂)` and its ratio to `σ_max(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurves {
    pub omegas: Vec<f64>,
    pub absolute: Vec<Option<f64>>,
    pub relative: Vec<Option<f64>>,
}

impl ErrorCurves {
    pub fn max_absolute(&self) -> Option<f64> {
        max_defined(&self.absolute)
    }

    pub fn max_relative(&self) -> Option<f64> {
        max_defined(&self.relative)
    }
}

fn max_defined(values: &[Option<f64>]) -> Option<f64> {
    values.iter().flatten().copied().fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

pub fn error_curves(full: &FrequencyResponseTable, reduced: &FrequencyResponseTable) -> Result<ErrorCurves> {
    if full.omegas != reduced.omegas {
        return Err(Error::Parameter("responses are on different grids".into()));
    }
    let mut absolute = Vec::with_capacity(full.len());
    let mut relative = Vec::with_capacity(full.len());
    for k in 0..full.len() {
        match (&full.values[k], &reduced.values[k]) {
            (Some(t), Some(th)) => {
                if t.shape() != th.shape() {
                    return Err(Error::Dimension("transfer matrices differ in shape".into()));
                }
                let abs = sigma_max(&(t - th));
                let s = full.sigma_max[k].unwrap_or_else(|| sigma_max(t));
                absolute.push(Some(abs));
                relative.push(if s > 0.0 { Some(abs / s) } else { None });
            }
            _ => {
                absolute.push(None);
                relative.push(None);
            }
        }
    }
    Ok(ErrorCurves {
        omegas: full.omegas.clone(),
        absolute,
        relative,
    })
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "nan".to_string())
}

pub const CSV_HEADER: &str = "omega,sigma_full,sigma_reduced,abs_err,rel_err";

/// Writes the five-column response CSV. Columns without data are left
/// empty; pole hits are written as `nan`.
pub fn write_response_csv<W: Write>(
    mut out: W,
    full: Option<&FrequencyResponseTable>,
    reduced: Option<&FrequencyResponseTable>,
) -> Result<()> {
    let omegas = match (full, reduced) {
        (Some(f), _) => &f.omegas,
        (None, Some(r)) => &r.omegas,
        (None, None) => return Err(Error::Parameter("no response to write".into())),
    };
    let errors = match (full, reduced) {
        (Some(f), Some(r)) => Some(error_curves(f, r)?),
        _ => None,
    };
    writeln!(out, "{CSV_HEADER}")?;
    for (k, w) in omegas.iter().enumerate() {
        let col = |t: Option<&FrequencyResponseTable>| t.map(|t| fmt_cell(t.sigma_max[k])).unwrap_or_default();
        let (abs, rel) = match &errors {
            Some(e) => (fmt_cell(e.absolute[k]), fmt_cell(e.relative[k])),
            None => (String::new(), String::new()),
        };
        writeln!(out, "{},{},{},{},{}", fmt_f64(*w), col(full), col(reduced), abs, rel)?;
    }
    Ok(())
}

/// Per-channel magnitudes `|T_ij(iω)|`, one column per channel and model.
pub fn write_channel_csv<W: Write>(
    mut out: W,
    full: Option<&FrequencyResponseTable>,
    reduced: Option<&FrequencyResponseTable>,
) -> Result<()> {
    let tables: Vec<(&str, &FrequencyResponseTable)> =
        [("full", full), ("reduced", reduced)].into_iter().filter_map(|(n, t)| t.map(|t| (n, t))).collect();
    let Some((_, first)) = tables.first() else {
        return Err(Error::Parameter("no response to write".into()));
    };
    let shape = first
        .values
        .iter()
        .flatten()
        .next()
        .map(|t| t.shape())
        .unwrap_or((0, 0));
    let mut header = vec!["omega".to_string()];
    for (name, _) in &tables {
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                header.push(format!("{name}_{i}_{j}"));
            }
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for (k, w) in first.omegas.iter().enumerate() {
        let mut row = vec![fmt_f64(*w)];
        for (_, t) in &tables {
            for i in 0..shape.0 {
                for j in 0..shape.1 {
                    row.push(fmt_cell(t.values[k].as_ref().map(|m| m[(i, j)].norm())));
                }
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn log_grid_endpoints() {
        let g = FrequencyGrid::log_spaced(1e-2, 1.0, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g.omegas()[0], 1e-2);
        assert_eq!(g.omegas()[199], 1.0);
        assert!(g.omegas().windows(2).all(|p| p[1] > p[0]));
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0]).is_err());
    }

    #[test]
    fn scalar_rom_closed_form() {
        let one = |v| DMatrix::from_element(1, 1, v);
        let rom = ReducedSecondOrderModel::new(one(2.0), one(0.3), one(5.0), one(1.5), one(-0.7)).unwrap();
        let g = FrequencyGrid::log_spaced(1e-2, 10.0, 37).unwrap();
        let t = reduced_response(&rom, &g).unwrap();
        for (k, w) in g.omegas().iter().enumerate() {
            let exact = c(-0.7 * 1.5, 0.0) / c(-w * w * 2.0 + 5.0, w * 0.3);
            let got = t.values[k].as_ref().unwrap()[(0, 0)];
            assert!((got - exact).norm() <= 1e-14 * exact.norm());
            assert!((t.sigma_max[k].unwrap() - exact.norm()).abs() <= 1e-14 * exact.norm());
        }
    }

    #[test]
    fn error_curves_trivial_cases() {
        let one = |v| DMatrix::from_element(1, 1, v);
        let rom = ReducedSecondOrderModel::new(one(1.0), one(0.3), one(2.0), one(1.0), one(1.0)).unwrap();
        let zero = ReducedSecondOrderModel::new(one(1.0), one(0.3), one(2.0), one(0.0), one(1.0)).unwrap();
        let g = FrequencyGrid::log_spaced(1e-2, 1.0, 11).unwrap();
        let t = reduced_response(&rom, &g).unwrap();
        let z = reduced_response(&zero, &g).unwrap();
        let same = error_curves(&t, &t).unwrap();
        assert!(same.absolute.iter().all(|v| *v == Some(0.0)));
        let none = error_curves(&t, &z).unwrap();
        assert!(none.relative.iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-15));
        let undefined = error_curves(&z, &t).unwrap();
        assert!(undefined.relative.iter().all(|v| v.is_none()));
    }

    #[test]
    fn csv_layout() {
        let one = |v| DMatrix::from_element(1, 1, v);
        let rom = ReducedSecondOrderModel::new(one(1.0), one(0.3), one(2.0), one(1.0), one(1.0)).unwrap();
        let g = FrequencyGrid::log_spaced(1e-2, 1.0, 5).unwrap();
        let t = reduced_response(&rom, &g).unwrap();
        let mut buf = Vec::new();
        write_response_csv(&mut buf, None, Some(&t)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 6);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 5);
        assert!(cells[1].is_empty() && !cells[2].is_empty() && cells[3].is_empty());
        let parsed: f64 = cells[2].parse().unwrap();
        assert_eq!(parsed, t.sigma_max[0].unwrap());
    }
}
