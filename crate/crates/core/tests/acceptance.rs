//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use somor::benchmarks::gen_random;
use somor::cli::RunManifest;
use somor::freq::FrequencyGrid;
use somor::io::{ReducedModel, ReducedModelFile};
use somor::verify::{
    bt_bound_ratio, interpolation_summary, lemma1_residuals, projector_residuals, random_stable_dense,
    realization_residual,
};

const PROJECTOR_TOL: f64 = 1e-10;
const LEMMA1_TOL: f64 = 1e-8;
const CONSTRAINT_TOL: f64 = 1e-10;
const REALIZATION_TOL: f64 = 1e-8;
const ZEROTH_TOL: f64 = 1e-6;
const DERIVATIVE_TOL: f64 = 1e-4;
const DSMS_ERR_TOL: f64 = 1e-3;
const DSMS_MAX_ITER: usize = 50;
const TCOM_ERR_TOL: f64 = 1e-2;
const BT_BOUND_SLACK: f64 = 1.1;
const DETERMINISM_TOL: f64 = 1e-12;

const LIMIT_PROJECTOR: Duration = Duration::from_secs(30);
const LIMIT_LEMMA1: Duration = Duration::from_secs(30);
const LIMIT_PIPELINE: Duration = Duration::from_secs(600);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

type Res<T> = Result<T, String>;

fn somor(args: &[&str]) -> Res<i32> {
    let out = Command::new(env!("CARGO_BIN_EXE_somor"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    out.status.code().ok_or_else(|| "killed by signal".to_string())
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn manifest(dir: &Path) -> Res<RunManifest> {
    RunManifest::load(dir.join("run.json")).map_err(|e| e.to_string())
}

fn summary_f64(m: &RunManifest, path: &[&str]) -> Res<f64> {
    let mut v = &m.summary;
    for k in path {
        v = &v[*k];
    }
    v.as_f64().ok_or_else(|| format!("summary lacks {}", path.join(".")))
}

fn shifts() -> Vec<Complex64> {
    vec![
        Complex64::new(0.05, 0.0),
        Complex64::new(0.3, 1.2),
        Complex64::new(0.3, -1.2),
        Complex64::new(2.0, 0.0),
        Complex64::new(0.01, 7.0),
    ]
}

const SMALL_SIZES: [(usize, usize); 5] = [(20, 2), (50, 5), (100, 10), (150, 15), (200, 20)];

fn criterion_projector() -> Res<Outcome> {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for n1 in [10usize, 50, 200] {
        for k in 0..10u64 {
            let sys = gen_random(n1, n1 / 10, 2, 2, 100 * n1 as u64 + k).map_err(|e| e.to_string())?;
            worst = worst.max(projector_residuals(&sys).map_err(|e| e.to_string())?.max());
        }
    }
    let el = t.elapsed();
    Ok(outcome(
        worst <= PROJECTOR_TOL && el < LIMIT_PROJECTOR,
        format!("max residual {worst:.3e} (tol {PROJECTOR_TOL:.0e}), {:.2}s", el.as_secs_f64()),
    ))
}

fn criterion_lemma1() -> Res<Outcome> {
    let t = Instant::now();
    let (mut rel, mut cons) = (0.0f64, 0.0f64);
    for (i, &(n1, n2)) in SMALL_SIZES.iter().enumerate() {
        let sys = gen_random(n1, n2, 2, 3, 7 + i as u64).map_err(|e| e.to_string())?;
        let (r, c) = lemma1_residuals(&sys, &shifts(), i as u64).map_err(|e| e.to_string())?;
        rel = rel.max(r);
        cons = cons.max(c);
    }
    let el = t.elapsed();
    Ok(outcome(
        rel <= LEMMA1_TOL && cons <= CONSTRAINT_TOL && el < LIMIT_LEMMA1,
        format!("solve gap {rel:.3e}, constraint {cons:.3e}, {:.2}s", el.as_secs_f64()),
    ))
}

fn criterion_realization() -> Res<Outcome> {
    let grid = FrequencyGrid::log_spaced(1e-3, 1e3, 20).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (i, &(n1, n2)) in SMALL_SIZES.iter().enumerate() {
        let sys = gen_random(n1, n2, 2, 3, 31 + i as u64).map_err(|e| e.to_string())?;
        worst = worst.max(realization_residual(&sys, &grid).map_err(|e| e.to_string())?);
    }
    Ok(outcome(worst <= REALIZATION_TOL, format!("max relative gap {worst:.3e} over 20 points")))
}

fn criterion_hermite() -> Res<Outcome> {
    let (mut z, mut d, mut builds, mut missing) = (0.0f64, 0.0f64, 0usize, 0usize);
    for r in [4usize, 10] {
        for (i, &(n1, n2)) in SMALL_SIZES.iter().enumerate() {
            let sys = gen_random(n1, n2, 2, 2, 57 + i as u64).map_err(|e| e.to_string())?;
            let sum = interpolation_summary(&sys, r, 5, (1e-2, 1e2), i as u64).map_err(|e| e.to_string())?;
            z = z.max(sum.zeroth).max(sum.bitangential);
            d = d.max(sum.derivative);
            builds += sum.basis_builds;
            missing += sum.unavailable;
        }
    }
    Ok(outcome(
        z <= ZEROTH_TOL && d <= DERIVATIVE_TOL && missing == 0,
        format!("{builds} builds, zeroth/bitangential {z:.3e}, derivative {d:.3e}, unchecked {missing}"),
    ))
}

struct Pipeline {
    root: tempfile::TempDir,
    model: PathBuf,
}

impl Pipeline {
    fn new() -> Res<Self> {
        let root = tempfile::tempdir().map_err(|e| e.to_string())?;
        let model = root.path().join("model");
        let code = somor(&["generate", "--model", "dsms", "--n1", "2000", "--n2", "200", "--out", s(&model)])?;
        if code != 0 {
            return Err(format!("generate exited {code}"));
        }
        Ok(Self { root, model })
    }

    fn reduce(&self, tag: &str, r: usize) -> Res<(i32, PathBuf)> {
        let out = self.root.path().join(tag);
        let r = r.to_string();
        let code = somor(&[
            "reduce",
            "--model-dir",
            s(&self.model),
            "--method",
            "irka",
            "--r",
            &r,
            "--tol",
            "1e-4",
            "--max-iter",
            "50",
            "--seed",
            "0",
            "--out",
            s(&out),
        ])?;
        Ok((code, out))
    }

    fn max_rel_err(&self, tag: &str, reduced: &Path) -> Res<f64> {
        let out = self.root.path().join(tag);
        let rom = reduced.join("rom.json");
        let code = somor(&[
            "freqresp",
            "--model-dir",
            s(&self.model),
            "--reduced",
            s(&rom),
            "--band",
            "1e-2:1",
            "--out",
            s(&out),
        ])?;
        if code != 0 {
            return Err(format!("freqresp exited {code}"));
        }
        summary_f64(&manifest(&out)?, &["max_rel_err"])
    }
}

fn criterion_dsms(p: &Pipeline) -> Res<(Outcome, PathBuf)> {
    let t = Instant::now();
    let (code, red) = p.reduce("red30", 30)?;
    let m = manifest(&red)?;
    let iters = summary_f64(&m, &["iterations"])? as usize;
    let status = m.summary["status"].as_str().unwrap_or("?").to_string();
    let err = p.max_rel_err("fr30", &red)?;
    let el = t.elapsed();
    let passed = code == 0 && status == "converged" && iters <= DSMS_MAX_ITER && err <= DSMS_ERR_TOL && el < LIMIT_PIPELINE;
    let detail = format!(
        "exit {code}, status {status} after {iters} iterations, max rel err {err:.3e} (tol {DSMS_ERR_TOL:.0e}), {:.1}s",
        el.as_secs_f64()
    );
    Ok((outcome(passed, detail), red))
}

fn criterion_monotone(p: &Pipeline, red30: &Path) -> Res<Outcome> {
    let (code, red10) = p.reduce("red10", 10)?;
    if code != 0 && code != 4 {
        return Err(format!("reduce r=10 exited {code}"));
    }
    let e10 = p.max_rel_err("fr10", &red10)?;
    let e30 = p.max_rel_err("fr30b", red30)?;
    Ok(outcome(e30 <= e10, format!("r=30 {e30:.3e} <= r=10 {e10:.3e}")))
}

fn criterion_compare() -> Res<Outcome> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = root.path().join("tcom");
    let out = root.path().join("cmp");
    let code = somor(&["generate", "--model", "tcom", "--g", "50", "--n2", "50", "--out", s(&model)])?;
    if code != 0 {
        return Err(format!("generate exited {code}"));
    }
    let code = somor(&["compare", "--model-dir", s(&model), "--r", "30", "--seed", "0", "--out", s(&out)])?;
    if code != 0 && code != 4 {
        return Err(format!("compare exited {code}"));
    }
    let m = manifest(&out)?;
    let irka = summary_f64(&m, &["irka", "max_rel_err"])?;
    let bt = summary_f64(&m, &["bt", "max_rel_err"])?;
    let curves = out.join("compare.csv").is_file() && out.join("timings.csv").is_file();
    let better = m.summary["irka_better"].as_bool().unwrap_or(false);
    Ok(outcome(
        irka <= TCOM_ERR_TOL && bt <= TCOM_ERR_TOL && curves,
        format!("irka {irka:.3e}, bt {bt:.3e} (tol {TCOM_ERR_TOL:.0e}); irka better: {better}"),
    ))
}

fn criterion_bt_bound() -> Res<Outcome> {
    let grid = FrequencyGrid::log_spaced(1e-3, 1e3, 50).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let sys = random_stable_dense(20, 2, 2, seed).map_err(|e| e.to_string())?;
        worst = worst.max(bt_bound_ratio(&sys, 5, &grid).map_err(|e| e.to_string())?);
    }
    Ok(outcome(
        worst <= BT_BOUND_SLACK,
        format!("max error / (2 x discarded sum) = {worst:.4} (limit {BT_BOUND_SLACK})"),
    ))
}

fn blocks(path: &Path) -> Res<Vec<nalgebra::DMatrix<f64>>> {
    let file = ReducedModelFile::load(path).map_err(|e| e.to_string())?;
    match file.to_model().map_err(|e| e.to_string())? {
        ReducedModel::SecondOrder(r) => Ok(vec![r.mr, r.dr, r.kr, r.fr, r.lr]),
        ReducedModel::FirstOrder(_) => Err("expected a second-order model".into()),
    }
}

fn criterion_determinism(p: &Pipeline, red30: &Path) -> Res<Outcome> {
    let (_, again) = p.reduce("red30b", 30)?;
    let a = blocks(&red30.join("rom.json"))?;
    let b = blocks(&again.join("rom.json"))?;
    let worst = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).amax() / x.amax().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    Ok(outcome(worst <= DETERMINISM_TOL, format!("max relative entry gap {worst:.3e}")))
}

fn report(id: usize, name: &str, res: Res<Outcome>) -> bool {
    let (passed, detail) = match res {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {id} [{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn main() {
    let mut ok = true;
    ok &= report(1, "projector identities", criterion_projector());
    ok &= report(2, "saddle solve vs projected solve", criterion_lemma1());
    ok &= report(3, "realization equivalence", criterion_realization());
    ok &= report(4, "Hermite bitangential conditions", criterion_hermite());

    let pipe = Pipeline::new();
    let dsms = pipe.as_ref().map_err(Clone::clone).and_then(criterion_dsms);
    let (c5, red30) = match dsms {
        Ok((o, red)) => (Ok(o), Ok(red)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let ctx = pipe.as_ref().map_err(Clone::clone).and_then(|p| red30.map(|r| (p, r)));
    ok &= report(5, "DSMS 2000/200 pipeline at r=30", c5);
    ok &= report(6, "monotone in r", ctx.clone().and_then(|(p, r)| criterion_monotone(p, &r)));
    ok &= report(7, "TCOM IRKA vs BT", criterion_compare());
    ok &= report(8, "balanced truncation bound", criterion_bt_bound());
    ok &= report(9, "determinism", ctx.and_then(|(p, r)| criterion_determinism(p, &r)));
    if !ok {
        std::process::exit(1);
    }
}
