//! Subcommand implementations. Each writes its human-readable report to
//! `out` and returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use l1ds_core::certificate::{certify, CertificateInputs, CertificateReport};
use l1ds_core::dtw::{dtw_distance, dtw_path, DtwParams};
use l1ds_core::harness::write_trace_csv;
use l1ds_core::trajectory::{read_demo_csv, write_demo_csv};

use crate::batch::{run_batch, write_summary_csv, RunRecord};
use crate::config::{ControllerKind, DemoSource, ExperimentConfig};
use crate::error::CliError;
use crate::experiment::{
    certificate_inputs, check_routing, configured_stack, fit_model, load_demos, low_level,
    regime_disturbances, run_configured, scenario,
};
use crate::svg;

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct GlobalOpts {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dry_run: bool,
    pub jobs: Option<usize>,
}

impl GlobalOpts {
    /// Loads the config file (or defaults) and applies `--out` / `--seed`.
    pub fn resolve_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        Ok(cfg)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn create_file(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| io_err(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Checks everything that can be checked without simulating.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("seeds must not be empty".into()));
    }
    if cfg.preprocess.n < 2 {
        return Err(CliError::Config("preprocess.n must be at least 2".into()));
    }
    let demos = load_demos(cfg, cfg.first_seed())?;
    let dim = demos.first().ok_or_else(|| CliError::Config("no demonstrations".into()))?.dim();
    let dt = 1.0 / (cfg.preprocess.n - 1) as f64;
    configured_stack(cfg, dim, dt)?;
    let dist = regime_disturbances(&cfg.regime)?;
    dist.validate(dim)?;
    check_routing(cfg.regime.kind, &dist)?;
    low_level(cfg.regime.pid, cfg.regime.windup_scale, &dist)?;
    for row in &cfg.batch.rows {
        let d = crate::experiment::disturbances(&row.disturbances, None, row.hold)?;
        d.validate(dim)?;
        check_routing(row.regime, &d)?;
    }
    Ok(())
}

pub fn cmd_fit(cfg: &ExperimentConfig, opts: &GlobalOpts, out: &mut dyn Write) -> Result<i32, CliError> {
    if opts.dry_run {
        validate(cfg)?;
        writeln!(out, "config ok")?;
        return Ok(0);
    }
    let seed = cfg.first_seed();
    let fitted = fit_model(cfg, seed)?;
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let model_path = dir.join(format!("model_seed{seed}.json"));
    write_json(&model_path, &fitted.model)?;
    write_json(&dir.join(format!("fit_report_seed{seed}.json")), &fitted.report)?;
    writeln!(out, "model: {}", model_path.display())?;
    writeln!(out, "samples: {}", fitted.report.samples)?;
    writeln!(out, "mean_squared_residual: {}", fitted.report.mean_squared_residual)?;
    writeln!(out, "jacobian_bound: {}", fitted.report.jacobian_bound)?;
    Ok(0)
}

pub fn cmd_run(cfg: &ExperimentConfig, opts: &GlobalOpts, out: &mut dyn Write) -> Result<i32, CliError> {
    validate(cfg)?;
    if opts.dry_run {
        writeln!(out, "config ok")?;
        return Ok(0);
    }
    let seed = cfg.first_seed();
    let fitted = fit_model(cfg, seed)?;
    let sc = scenario(cfg, &fitted)?;
    let (variant, baseline) = run_configured(cfg, &sc)?;
    let normalized = if baseline.dtw_raw > 0.0 {
        variant.dtw_raw / baseline.dtw_raw
    } else {
        f64::NAN
    };

    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let trace_path = dir.join("trace.csv");
    write_trace_csv(&variant, create_file(&trace_path)?)?;
    write_trace_csv(&baseline, create_file(&dir.join("baseline_trace.csv"))?)?;

    let shape = match cfg.demos.source {
        DemoSource::Synthetic => cfg.demos.shape.kind.name().to_string(),
        DemoSource::Directory => "demos".to_string(),
    };
    let controller = match (cfg.clf.enabled, cfg.l1.enabled) {
        (false, false) => "nominal",
        (true, false) => "clf_only",
        (true, true) => "l1",
        (false, true) => "l1_without_clf",
    };
    let rec = |controller: &str, r: &l1ds_core::harness::RunResult<f64>, norm: f64| {
        (controller.to_string(), r.dtw_raw, norm, r.truncated)
    };
    let rows = [
        rec(ControllerKind::Nominal.name(), &baseline, 1.0),
        rec(controller, &variant, normalized),
    ];
    let summary_path = dir.join("summary.csv");
    let mut w = csv::Writer::from_writer(create_file(&summary_path)?);
    let csv_err = |e: csv::Error| io_err(&summary_path, e);
    w.write_record([
        "shape",
        "regime",
        "disturbance",
        "controller",
        "seed",
        "dtw_raw",
        "dtw_normalized",
        "truncated",
    ])
    .map_err(csv_err)?;
    for (c, raw, norm, trunc) in &rows {
        w.write_record([
            shape.clone(),
            cfg.regime.kind.name().to_string(),
            "configured".to_string(),
            c.clone(),
            seed.to_string(),
            raw.to_string(),
            norm.to_string(),
            trunc.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    if cfg.output.plot {
        let dist = regime_disturbances(&cfg.regime)?;
        let title = format!("{shape} / {} / {controller}", cfg.regime.kind.name());
        fs::write(dir.join("plot.svg"), svg::render(&variant, &dist, &title))?;
        let title = format!("{shape} / {} / nominal", cfg.regime.kind.name());
        fs::write(dir.join("baseline_plot.svg"), svg::render(&baseline, &dist, &title))?;
    }

    writeln!(out, "trace: {}", trace_path.display())?;
    writeln!(out, "dtw_raw: {}", variant.dtw_raw)?;
    writeln!(out, "dtw_baseline: {}", baseline.dtw_raw)?;
    writeln!(out, "dtw_normalized: {normalized}")?;
    if variant.truncated {
        writeln!(out, "run left the operating domain and was truncated")?;
        return Ok(2);
    }
    Ok(0)
}

pub fn cmd_batch(cfg: &ExperimentConfig, opts: &GlobalOpts, out: &mut dyn Write) -> Result<i32, CliError> {
    validate(cfg)?;
    if opts.dry_run {
        writeln!(out, "config ok")?;
        return Ok(0);
    }
    let result = match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| run_batch(cfg))?,
        None => run_batch(cfg)?,
    };
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    write_summary_csv(&result.records, create_file(&dir.join("summary.csv"))?)?;
    result.table.write_csv(create_file(&dir.join("scores.csv"))?)?;

    writeln!(out, "{:<8} {:<10} {:<22} {:<9} {:>8} {:>8}", "shape", "regime", "disturbance", "ctrl", "mean", "std")?;
    for r in &result.table.rows {
        writeln!(
            out,
            "{:<8} {:<10} {:<22} {:<9} {:>8.4} {:>8.4}",
            r.shape,
            r.regime.name(),
            r.disturbance,
            r.controller.name(),
            r.mean,
            r.std
        )?;
    }
    let failed: Vec<&RunRecord> = result.records.iter().filter(|r| r.error.is_some()).collect();
    for r in &failed {
        writeln!(
            out,
            "FAILED {} {} {} seed {}: {}",
            r.shape,
            r.disturbance,
            r.controller.name(),
            r.seed,
            r.error.as_deref().unwrap_or_default()
        )?;
    }
    Ok(if failed.is_empty() { 0 } else { 2 })
}

/// Prints the certificate constants and design conditions.
pub fn render_certificate(inp: &CertificateInputs<f64>, rep: &CertificateReport<f64>, out: &mut dyn Write) -> std::io::Result<()> {
    let pass = |b: bool| if b { "pass" } else { "FAIL" };
    writeln!(out, "phi1   = {}", rep.phi1)?;
    writeln!(out, "rho    = {}", rep.rho)?;
    writeln!(out, "zeta1  = {}", rep.zeta1)?;
    writeln!(out, "zeta2  = {}", rep.zeta2)?;
    writeln!(out, "zeta3  = {}", rep.zeta3)?;
    writeln!(out, "zeta4  = {}", rep.zeta4)?;
    match rep.ts_max {
        Some(t) => writeln!(out, "ts_max = {t}")?,
        None => writeln!(out, "ts_max = none")?,
    }
    writeln!(out, "mu     = {}", rep.ultimate_bound_mu)?;
    writeln!(
        out,
        "bandwidth condition: {} (alpha1*rho^2 = {} vs V0 + delta_b*zeta1 = {})",
        pass(rep.condition_bandwidth_ok),
        inp.alpha1 * rep.rho * rep.rho,
        inp.v0 + inp.delta_b * rep.zeta1
    )?;
    writeln!(
        out,
        "sampling condition:  {} (T_s = {})",
        pass(rep.condition_ts_ok),
        inp.t_sample
    )?;
    if rep.near_singular_bandwidth {
        writeln!(out, "warning: omega is within 10% of 2*lambda; zeta1 is near its singularity")?;
    }
    writeln!(out, "certificate: {}", if rep.passed() { "PASS" } else { "FAIL" })
}

pub fn cmd_certify(cfg: &ExperimentConfig, opts: &GlobalOpts, out: &mut dyn Write) -> Result<i32, CliError> {
    if opts.dry_run {
        validate(cfg)?;
        writeln!(out, "config ok")?;
        return Ok(0);
    }
    let inputs = certificate_inputs(cfg)?;
    let report = certify(&inputs)?;
    render_certificate(&inputs, &report, out)?;
    Ok(if report.passed() { 0 } else { 2 })
}

pub fn cmd_dtw(
    file_a: &Path,
    file_b: &Path,
    band: Option<usize>,
    show_path: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let a = read_demo_csv::<f64>(file_a)?;
    let b = read_demo_csv::<f64>(file_b)?;
    if a.dim() != b.dim() {
        return Err(CliError::Config(format!(
            "dimension mismatch: {} has {} columns, {} has {}",
            file_a.display(),
            a.dim(),
            file_b.display(),
            b.dim()
        )));
    }
    let params = DtwParams { band };
    let d = dtw_distance(a.states(), b.states(), params)?;
    writeln!(out, "{d}")?;
    if show_path {
        for (i, j) in dtw_path(a.states(), b.states(), params)? {
            writeln!(out, "{i},{j}")?;
        }
    }
    Ok(0)
}

pub fn cmd_gen_demos(cfg: &ExperimentConfig, opts: &GlobalOpts, out: &mut dyn Write) -> Result<i32, CliError> {
    if cfg.demos.source != DemoSource::Synthetic {
        return Err(CliError::Config("gen-demos needs demos.source = \"synthetic\"".into()));
    }
    let seed = cfg.first_seed();
    let demos = cfg.demos.shape.generate::<f64>(seed)?;
    if opts.dry_run {
        writeln!(out, "config ok")?;
        return Ok(0);
    }
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    for (i, d) in demos.iter().enumerate() {
        let path = dir.join(format!("{}_{i:02}.csv", cfg.demos.shape.kind.name()));
        write_demo_csv(&path, d)?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(0)
}

