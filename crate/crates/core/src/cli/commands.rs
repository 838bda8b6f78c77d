use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use super::config::{parse_band, Config};
use super::*;
use crate::benchmarks::{gen_dsms, gen_tcom, DsmsParams, TcomParams};
use crate::bt::{balanced_truncate, projected_first_order, BalancedReduction};
use crate::error::Result;
use crate::freq::{
    error_curves, fmt_f64, full_response, sweep, write_channel_csv, write_response_csv, ErrorCurves, FrequencyGrid,
    FrequencyResponseTable, DEFAULT_POINTS,
};
use crate::io::{
    load_model, manifest_hash, model_paths, save_model, ModelManifest, ReducedModel, ReducedModelFile,
};
use crate::irka::{irka_reduce, ConvergenceStatus, IrkaOptions, IrkaOutcome};
use crate::plot::{loglog_svg, Series};
use crate::verify::{projector_residuals, realization_residual, run_suite, Check, Tier};

struct Run {
    manifest: RunManifest,
    out: Option<PathBuf>,
    clock: Instant,
}

impl Run {
    fn new(command: &str, out: Option<&Path>) -> Self {
        Self {
            manifest: RunManifest::new(command),
            out: out.map(Path::to_path_buf),
            clock: Instant::now(),
        }
    }

    fn lap(&mut self, phase: &str) {
        let t = self.clock.elapsed().as_secs_f64();
        *self.manifest.timings.entry(phase.to_string()).or_insert(0.0) += t;
        self.clock = Instant::now();
    }

    fn set(&mut self, key: &str, value: serde_json::Value) {
        self.manifest.config.insert(key.to_string(), value);
    }

    fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    fn input(&mut self, path: &Path) {
        self.manifest.inputs.push(path.display().to_string());
    }

    /// Writes the run manifest and returns the exit code.
    fn finish(mut self, result: Result<i32>) -> i32 {
        let code = match result {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                self.manifest.status = "error".into();
                self.manifest.summary = match self.manifest.summary.take() {
                    serde_json::Value::Object(mut map) => {
                        map.insert("error".into(), json!(e.to_string()));
                        serde_json::Value::Object(map)
                    }
                    _ => json!({ "error": e.to_string() }),
                };
                exit_code_for(&e)
            }
        };
        if code == EXIT_NOT_CONVERGED {
            self.manifest.status = "not-converged".into();
        }
        self.manifest.exit_code = code;
        if let Some(dir) = &self.out {
            let write = || -> Result<()> {
                fs::create_dir_all(dir)?;
                let mut text = serde_json::to_string_pretty(&self.manifest)?;
                text.push('\n');
                fs::write(dir.join(RUN_MANIFEST), text)?;
                Ok(())
            };
            if let Err(e) = write() {
                eprintln!("error: cannot write run manifest: {e}");
                return if code == EXIT_OK { EXIT_FAILURE } else { code };
            }
        }
        code
    }
}

pub(super) fn dispatch(command: Command) -> i32 {
    match command {
        Command::Generate(a) => {
            let mut run = Run::new("generate", Some(&a.out));
            let r = generate(&mut run, &a);
            run.finish(r)
        }
        Command::Reduce(a) => {
            let mut run = Run::new("reduce", Some(&a.out));
            let r = reduce(&mut run, &a);
            run.finish(r)
        }
        Command::Freqresp(a) => {
            let mut run = Run::new("freqresp", Some(&a.out));
            let r = freqresp(&mut run, &a);
            run.finish(r)
        }
        Command::Verify(a) => {
            let mut run = Run::new("verify", Some(&a.out));
            let r = verify(&mut run, &a);
            run.finish(r)
        }
        Command::Compare(a) => {
            let mut run = Run::new("compare", Some(&a.out));
            let r = compare(&mut run, &a);
            run.finish(r)
        }
    }
}

fn generate(run: &mut Run, a: &GenerateArgs) -> Result<i32> {
    let seed = a.seed.unwrap_or(0);
    run.manifest.seed = Some(seed);
    let (sys, name, params) = match a.model {
        ModelKind::Dsms => {
            let mut p = DsmsParams::default();
            p.n1 = a.n1.unwrap_or(p.n1);
            p.n2 = a.n2.unwrap_or(p.n2);
            p.seed = seed;
            if a.g.is_some() {
                return Err(Error::Parameter("--g applies to tcom only".into()));
            }
            (gen_dsms(&p)?, "dsms", serde_json::to_value(&p)?)
        }
        ModelKind::Tcom => {
            let mut p = TcomParams::default();
            p.g = match (a.g, a.n1) {
                (Some(g), Some(n1)) if 3 * g + 1 != n1 => {
                    return Err(Error::Parameter(format!("--n1 {n1} disagrees with --g {g} (n1 = 3g + 1)")))
                }
                (Some(g), _) => g,
                (None, Some(n1)) if n1 >= 4 && (n1 - 1) % 3 == 0 => (n1 - 1) / 3,
                (None, Some(n1)) => return Err(Error::Parameter(format!("tcom needs n1 = 3g + 1, got {n1}"))),
                (None, None) => p.g,
            };
            p.n2 = a.n2.unwrap_or(p.n2);
            p.seed = seed;
            (gen_tcom(&p)?, "tcom", serde_json::to_value(&p)?)
        }
    };
    run.set("model", json!(name));
    run.set("params", params.clone());
    run.lap("generate");
    let manifest = save_model(&a.out, &sys, name, params)?;
    for p in model_paths(&a.out, &manifest) {
        run.output(&p);
    }
    run.output(&a.out.join(crate::io::MANIFEST_FILE));
    run.lap("write");
    run.manifest.summary = json!({ "n1": sys.n1(), "n2": sys.n2(), "dae_order": sys.dae_order() });
    println!("wrote {name} model (n1 = {}, n2 = {}) to {}", sys.n1(), sys.n2(), a.out.display());
    Ok(EXIT_OK)
}

fn default_band(manifest: Option<&ModelManifest>) -> (f64, f64) {
    match manifest.map(|m| m.model.as_str()) {
        Some("tcom") => (1e-3, 1.0),
        _ => (1e-2, 1.0),
    }
}

struct ResolvedIrka {
    r: usize,
    opts: IrkaOptions,
}

fn resolve_irka(run: &mut Run, flags: &IrkaFlags, manifest: &ModelManifest) -> Result<(ResolvedIrka, Config)> {
    let cfg = match &flags.config {
        Some(p) => {
            run.input(p);
            Config::load(p)?
        }
        None => Config::default(),
    };
    let r = match flags.r.or(cfg.get("r")?) {
        Some(r) => r,
        None => return Err(Error::Parameter("--r is required".into())),
    };
    if r == 0 {
        return Err(Error::Parameter("--r must be at least 1".into()));
    }
    let defaults = IrkaOptions::default();
    let band = match &flags.band {
        Some(b) => parse_band(b)?,
        None => cfg.band()?.unwrap_or_else(|| default_band(Some(manifest))),
    };
    let tol = flags.tol.or(cfg.get("tol")?).unwrap_or(defaults.tol);
    if !(tol > 0.0) {
        return Err(Error::Parameter("--tol must be positive".into()));
    }
    let max_iter = flags.max_iter.or(cfg.get("max_iter")?).unwrap_or(defaults.max_iter);
    if max_iter == 0 {
        return Err(Error::Parameter("--max-iter must be positive".into()));
    }
    let seed = flags.seed.or(cfg.get("seed")?).unwrap_or(defaults.seed);
    let opts = IrkaOptions {
        max_iter,
        tol,
        band,
        seed,
    };
    run.manifest.seed = Some(seed);
    run.set("r", json!(r));
    run.set("tol", json!(tol));
    run.set("max_iter", json!(max_iter));
    run.set("band", json!(format!("{}:{}", band.0, band.1)));
    run.set("seed", json!(seed));
    Ok((ResolvedIrka { r, opts }, cfg))
}

fn load(run: &mut Run, dir: &Path) -> Result<(crate::model::SecondOrderIndex3System, ModelManifest, String)> {
    let (sys, manifest) = load_model(dir)?;
    let hash = manifest_hash(dir)?;
    run.input(dir);
    run.set("model_dir", json!(dir.display().to_string()));
    run.lap("load");
    Ok((sys, manifest, hash))
}

fn write_trace(path: &Path, outcome: &IrkaOutcome) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let r = outcome.shifts.len();
    let mut header = vec!["iteration".to_string(), "elapsed_s".into(), "shift_change".into()];
    for k in 0..r {
        header.push(format!("re_{k}"));
        header.push(format!("im_{k}"));
    }
    writeln!(w, "{}", header.join(","))?;
    for rec in &outcome.trace.iterations {
        let mut row = vec![
            rec.iteration.to_string(),
            fmt_f64(rec.elapsed_s),
            rec.shift_change.map(fmt_f64).unwrap_or_else(|| "nan".into()),
        ];
        for z in &rec.shifts {
            row.push(fmt_f64(z.re));
            row.push(fmt_f64(z.im));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_hankel(path: &Path, red: &BalancedReduction) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "index,hankel,retained")?;
    for (k, h) in red.hankel.iter().enumerate() {
        writeln!(w, "{},{},{}", k + 1, fmt_f64(*h), k < red.order)?;
    }
    w.flush()?;
    Ok(())
}

fn status_name(s: ConvergenceStatus) -> &'static str {
    match s {
        ConvergenceStatus::Converged => "converged",
        ConvergenceStatus::MaxIterations => "max-iterations",
        ConvergenceStatus::Stagnated => "stagnated",
    }
}

fn irka_arm(
    run: &mut Run,
    sys: &crate::model::SecondOrderIndex3System,
    cfg: &ResolvedIrka,
    hash: &str,
    dir: &Path,
    rom_name: &str,
) -> Result<(ReducedModel, IrkaOutcome)> {
    let outcome = irka_reduce(sys, cfg.r, &cfg.opts)?;
    run.lap("reduce_irka");
    let model = ReducedModel::SecondOrder(outcome.rom.clone());
    let file = ReducedModelFile::new(&model, "irka", Some(hash.to_string()));
    let rom_path = dir.join(rom_name);
    file.save(&rom_path)?;
    run.output(&rom_path);
    let trace_path = dir.join("trace.csv");
    write_trace(&trace_path, &outcome)?;
    run.output(&trace_path);
    run.lap("write");
    Ok((model, outcome))
}

fn bt_arm(
    run: &mut Run,
    sys: &crate::model::SecondOrderIndex3System,
    r: usize,
    cap: usize,
    hash: &str,
    dir: &Path,
    rom_name: &str,
) -> Result<(ReducedModel, BalancedReduction)> {
    let fo = projected_first_order(sys, cap)?;
    let red = balanced_truncate(&fo, r)?;
    run.lap("reduce_bt");
    let model = ReducedModel::FirstOrder(red.reduced.clone());
    let file = ReducedModelFile::new(&model, "bt", Some(hash.to_string()));
    let rom_path = dir.join(rom_name);
    file.save(&rom_path)?;
    run.output(&rom_path);
    let hankel_path = dir.join("hankel.csv");
    write_hankel(&hankel_path, &red)?;
    run.output(&hankel_path);
    run.lap("write");
    Ok((model, red))
}

fn reduce(run: &mut Run, a: &ReduceArgs) -> Result<i32> {
    let (sys, manifest, hash) = load(run, &a.model_dir)?;
    let (cfg, file_cfg) = resolve_irka(run, &a.irka, &manifest)?;
    let method = match a.method {
        Some(m) => m,
        None => match file_cfg.get::<String>("method")?.as_deref() {
            None | Some("irka") => Method::Irka,
            Some("bt") => Method::Bt,
            Some(other) => return Err(Error::Parameter(format!("unknown method {other:?}"))),
        },
    };
    run.set("method", serde_json::to_value(method)?);
    fs::create_dir_all(&a.out)?;
    match method {
        Method::Irka => {
            let (_, outcome) = irka_arm(run, &sys, &cfg, &hash, &a.out, "rom.json")?;
            let status = outcome.trace.status;
            run.manifest.summary = json!({
                "r": outcome.rom.order(),
                "iterations": outcome.trace.iterations.len(),
                "status": status_name(status),
                "final_shift_change": outcome.trace.iterations.last().and_then(|r| r.shift_change),
            });
            println!(
                "irka: r = {}, {} iterations, {}",
                outcome.rom.order(),
                outcome.trace.iterations.len(),
                status_name(status)
            );
            Ok(if status == ConvergenceStatus::Converged {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            })
        }
        Method::Bt => {
            let cap = a.dense_cap.or(file_cfg.get("dense_cap")?).unwrap_or(crate::projection::DEFAULT_DENSE_CAP);
            run.set("dense_cap", json!(cap));
            let (_, red) = bt_arm(run, &sys, cfg.r, cap, &hash, &a.out, "rom.json")?;
            run.manifest.summary = json!({
                "r": red.order,
                "discarded_hankel_sum": red.discarded_sum(),
                "error_bound": 2.0 * red.discarded_sum(),
            });
            println!("bt: r = {}, error bound {:.3e}", red.order, 2.0 * red.discarded_sum());
            Ok(EXIT_OK)
        }
    }
}

fn svg_curve(path: &Path, title: &str, y_label: &str, series: Vec<Series<'_>>) -> Result<()> {
    fs::write(path, loglog_svg(title, "omega (rad/s)", y_label, &series))?;
    Ok(())
}

fn points(omegas: &[f64], values: &[Option<f64>]) -> Vec<(f64, f64)> {
    omegas.iter().zip(values).map(|(w, v)| (*w, v.unwrap_or(f64::NAN))).collect()
}

fn freqresp(run: &mut Run, a: &FreqrespArgs) -> Result<i32> {
    if a.model_dir.is_none() && a.reduced.is_none() {
        return Err(Error::Parameter("give --model-dir and/or --reduced".into()));
    }
    let cfg = match &a.config {
        Some(p) => {
            run.input(p);
            Config::load(p)?
        }
        None => Config::default(),
    };
    let full_model = match &a.model_dir {
        Some(dir) => {
            let (sys, manifest, _) = load(run, dir)?;
            Some((sys, manifest))
        }
        None => None,
    };
    let reduced = match &a.reduced {
        Some(p) => {
            run.input(p);
            Some(ReducedModelFile::load(p)?.to_model()?)
        }
        None => None,
    };
    let band = match &a.band {
        Some(b) => parse_band(b)?,
        None => cfg.band()?.unwrap_or_else(|| default_band(full_model.as_ref().map(|(_, m)| m))),
    };
    let n = a.grid.or(cfg.get("grid")?).unwrap_or(DEFAULT_POINTS);
    let grid = FrequencyGrid::log_spaced(band.0, band.1, n)?;
    run.set("band", json!(format!("{}:{}", band.0, band.1)));
    run.set("grid", json!(n));
    run.lap("load");

    let full = full_model.as_ref().map(|(sys, _)| full_response(sys, &grid)).transpose()?;
    run.lap("response_full");
    let red = reduced.as_ref().map(|m| sweep(&grid, |s| m.transfer(s))).transpose()?;
    run.lap("response_reduced");
    if let (Some(f), Some(r)) = (&full, &red) {
        let shape = |t: &FrequencyResponseTable| t.values.iter().flatten().next().map(|m| m.shape());
        if shape(f) != shape(r) {
            return Err(Error::Dimension("full and reduced models have different input/output counts".into()));
        }
    }

    fs::create_dir_all(&a.out)?;
    let csv = a.out.join("freqresp.csv");
    write_response_csv(BufWriter::new(fs::File::create(&csv)?), full.as_ref(), red.as_ref())?;
    run.output(&csv);
    let channels = a.out.join("freqresp_channels.csv");
    write_channel_csv(BufWriter::new(fs::File::create(&channels)?), full.as_ref(), red.as_ref())?;
    run.output(&channels);

    let errors = match (&full, &red) {
        (Some(f), Some(r)) => Some(error_curves(f, r)?),
        _ => None,
    };
    if a.plot == Some(PlotFormat::Svg) {
        let mut series = Vec::new();
        if let Some(f) = &full {
            series.push(Series { name: "full", points: points(&f.omegas, &f.sigma_max) });
        }
        if let Some(r) = &red {
            series.push(Series { name: "reduced", points: points(&r.omegas, &r.sigma_max) });
        }
        let p = a.out.join("response.svg");
        svg_curve(&p, "Frequency response", "sigma_max", series)?;
        run.output(&p);
        if let Some(e) = &errors {
            let p = a.out.join("abs_err.svg");
            svg_curve(&p, "Absolute error", "abs error", vec![Series { name: "abs", points: points(&e.omegas, &e.absolute) }])?;
            run.output(&p);
            let p = a.out.join("rel_err.svg");
            svg_curve(&p, "Relative error", "rel error", vec![Series { name: "rel", points: points(&e.omegas, &e.relative) }])?;
            run.output(&p);
        }
    }
    run.lap("write");
    let pole_hits = full.as_ref().map_or(0, |t| t.pole_hits()) + red.as_ref().map_or(0, |t| t.pole_hits());
    run.manifest.summary = json!({
        "points": grid.len(),
        "pole_hits": pole_hits,
        "max_abs_err": errors.as_ref().and_then(|e| e.max_absolute()),
        "max_rel_err": errors.as_ref().and_then(|e| e.max_relative()),
    });
    if let Some(e) = &errors {
        println!(
            "max abs error {:.3e}, max rel error {:.3e}",
            e.max_absolute().unwrap_or(f64::NAN),
            e.max_relative().unwrap_or(f64::NAN)
        );
    }
    Ok(EXIT_OK)
}

fn verify(run: &mut Run, a: &VerifyArgs) -> Result<i32> {
    let tier: Tier = a.tier.parse()?;
    run.set("tier", json!(tier.name()));
    let mut extra = Vec::new();
    if let Some(dir) = &a.model_dir {
        let (sys, _, _) = load(run, dir)?;
        crate::model::validate_system(&sys)?;
        if sys.n1() <= 200 {
            let name = |s: &str| format!("{s}[{}]", dir.display());
            let proj = projector_residuals(&sys).map(|r| r.max());
            extra.push(check(name("projector"), proj, 1e-10));
            let grid = FrequencyGrid::log_spaced(1e-2, 1e2, 20)?;
            extra.push(check(name("realization"), realization_residual(&sys, &grid), 1e-8));
        }
    }
    let mut report = run_suite(tier);
    report.checks.extend(extra);
    report.passed = report.checks.iter().all(|c| c.passed);
    run.lap("verify");
    fs::create_dir_all(&a.out)?;
    let path = a.out.join("verify_report.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&path, text)?;
    run.output(&path);
    let failed: Vec<&Check> = report.checks.iter().filter(|c| !c.passed).collect();
    for c in &report.checks {
        println!("{} {} = {:.3e} (tol {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    run.manifest.summary = json!({ "checks": report.checks.len(), "failed": failed.len() });
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_FAILURE })
}

fn check(name: String, value: Result<f64>, tolerance: f64) -> Check {
    let value = value.unwrap_or(f64::NAN);
    Check {
        name,
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

fn compare(run: &mut Run, a: &CompareArgs) -> Result<i32> {
    let (sys, manifest, hash) = load(run, &a.model_dir)?;
    let (cfg, file_cfg) = resolve_irka(run, &a.irka, &manifest)?;
    let cap = a.dense_cap.or(file_cfg.get("dense_cap")?).unwrap_or(crate::projection::DEFAULT_DENSE_CAP);
    let n = a.grid.or(file_cfg.get("grid")?).unwrap_or(DEFAULT_POINTS);
    let grid = FrequencyGrid::log_spaced(cfg.opts.band.0, cfg.opts.band.1, n)?;
    run.set("grid", json!(n));
    run.set("dense_cap", json!(cap));
    fs::create_dir_all(&a.out)?;

    let full = full_response(&sys, &grid)?;
    run.lap("response_full");

    let irka = irka_arm(run, &sys, &cfg, &hash, &a.out, "rom_irka.json");
    let bt = bt_arm(run, &sys, cfg.r, cap, &hash, &a.out, "rom_bt.json");

    let curves = |model: &ReducedModel| -> Result<(FrequencyResponseTable, ErrorCurves)> {
        let t = sweep(&grid, |s| model.transfer(s))?;
        let e = error_curves(&full, &t)?;
        Ok((t, e))
    };
    let irka_curves = irka.as_ref().ok().map(|(m, _)| curves(m)).transpose()?;
    run.lap("response_irka");
    let bt_curves = bt.as_ref().ok().map(|(m, _)| curves(m)).transpose()?;
    run.lap("response_bt");

    let path = a.out.join("compare.csv");
    {
        let mut w = BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "omega,sigma_full,sigma_irka,sigma_bt,abs_err_irka,rel_err_irka,abs_err_bt,rel_err_bt")?;
        let cell = |v: Option<Option<f64>>| match v {
            None => String::new(),
            Some(v) => v.map(fmt_f64).unwrap_or_else(|| "nan".into()),
        };
        for (k, w_k) in grid.omegas().iter().enumerate() {
            let ic = irka_curves.as_ref();
            let bc = bt_curves.as_ref();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(*w_k),
                cell(Some(full.sigma_max[k])),
                cell(ic.map(|c| c.0.sigma_max[k])),
                cell(bc.map(|c| c.0.sigma_max[k])),
                cell(ic.map(|c| c.1.absolute[k])),
                cell(ic.map(|c| c.1.relative[k])),
                cell(bc.map(|c| c.1.absolute[k])),
                cell(bc.map(|c| c.1.relative[k])),
            )?;
        }
        w.flush()?;
    }
    run.output(&path);

    if a.plot == Some(PlotFormat::Svg) {
        let mut series = Vec::new();
        if let Some((_, e)) = &irka_curves {
            series.push(Series { name: "irka", points: points(&e.omegas, &e.relative) });
        }
        if let Some((_, e)) = &bt_curves {
            series.push(Series { name: "bt", points: points(&e.omegas, &e.relative) });
        }
        let p = a.out.join("compare_rel_err.svg");
        svg_curve(&p, "Relative error", "rel error", series)?;
        run.output(&p);
    }

    let timings_path = a.out.join("timings.csv");
    {
        let mut w = BufWriter::new(fs::File::create(&timings_path)?);
        writeln!(w, "phase,seconds")?;
        for (phase, t) in &run.manifest.timings {
            writeln!(w, "{phase},{}", fmt_f64(*t))?;
        }
        w.flush()?;
    }
    run.output(&timings_path);

    let irka_max = irka_curves.as_ref().and_then(|(_, e)| e.max_relative());
    let bt_max = bt_curves.as_ref().and_then(|(_, e)| e.max_relative());
    let irka_status = irka.as_ref().map(|(_, o)| o.trace.status);
    let mut summary = BTreeMap::new();
    summary.insert(
        "irka",
        match &irka {
            Ok((_, o)) => json!({
                "max_rel_err": irka_max,
                "status": status_name(o.trace.status),
                "iterations": o.trace.iterations.len(),
                "seconds": run.manifest.timings.get("reduce_irka"),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        },
    );
    summary.insert(
        "bt",
        match &bt {
            Ok((_, red)) => json!({
                "max_rel_err": bt_max,
                "error_bound": 2.0 * red.discarded_sum(),
                "seconds": run.manifest.timings.get("reduce_bt"),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        },
    );
    summary.insert(
        "irka_better",
        match (irka_max, bt_max) {
            (Some(i), Some(b)) => json!(i <= b),
            _ => serde_json::Value::Null,
        },
    );
    run.manifest.summary = serde_json::to_value(summary)?;
    println!(
        "max rel error: irka {}, bt {}",
        irka_max.map_or("failed".into(), |v| format!("{v:.3e}")),
        bt_max.map_or("failed".into(), |v| format!("{v:.3e}"))
    );
    match (&irka, &bt) {
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            Ok(exit_code_for(e))
        }
        _ if irka_status.ok() != Some(ConvergenceStatus::Converged) => Ok(EXIT_NOT_CONVERGED),
        _ => Ok(EXIT_OK),
    }
}
