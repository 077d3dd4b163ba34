use std::path::Path;

use nls_spectral::eigen::{check_adjoint_algebra, matrix_estimate_mu, solve_unstable_eigenpair};
use nls_spectral::export::{eigen_csv, index_csv, potentials_csv, products_csv, soliton_csv, sweep_csv};
use nls_spectral::index::IndexReport;
use nls_spectral::model::ProblemSpec;
use nls_spectral::soliton::{l2_norm_squared, slope_condition, slope_root, solve_soliton, SolitonData};
use nls_spectral::verdict::{
    find_threshold, index_scan, named_quantities, sweep, PipelineOptions, PipelineRun, Quantity,
};
use serde_json::{json, Value};
use thiserror::Error;

use crate::battery::{run_criteria, Sweeps};
use crate::config::{CampaignConfig, Problem};
use crate::report::{Report, TaskResult};
use crate::{Command, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

type NResult<T> = nls_spectral::Result<T>;

fn write(dir: &Path, name: &str, content: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)
}

struct Ctx {
    cfg: CampaignConfig,
    spec: ProblemSpec,
    opts: PipelineOptions,
}

impl Ctx {
    fn soliton(&self) -> NResult<SolitonData> {
        solve_soliton(&self.spec, &self.opts.soliton_options(&self.spec))
    }

    fn out(&self) -> &Path {
        &self.cfg.out
    }
}

fn soliton_json(s: &SolitonData) -> NResult<Value> {
    Ok(json!({
        "problem": s.spec.label(),
        "r_max": s.r_max(),
        "nodes": s.mesh().len(),
        "amplitude": s.amplitude(),
        "mass": l2_norm_squared(s)?,
        "residual_norm": s.residual_norm,
        "abc_residuals": s.abc_residuals,
        "positivity_ok": s.positivity_ok,
        "domega_crosscheck": s.domega_crosscheck,
    }))
}

fn index_json(r: &IndexReport) -> Value {
    json!({
        "sector": r.tag,
        "root_count": r.root_count,
        "root_locations": r.root_locations,
        "C0": r.c0,
        "C1": r.c1,
        "asymptote_root": r.asymptote_root,
        "farfield_clear": r.farfield_clear,
        "delta0": r.delta0_used,
        "warnings": r.warnings,
    })
}

fn pipeline_json(run: &PipelineRun) -> Value {
    json!({
        "mu_star": run.eigenpair.mu_star,
        "verdict": run.verdict,
        "quantities": named_quantities(run),
        "sectors": run.sectors.iter().map(|s| json!({
            "index": index_json(&s.index),
            "gram": s.gram,
        })).collect::<Vec<_>>(),
    })
}

fn parameter_of(spec: &ProblemSpec) -> f64 {
    spec.nonlinearity.parameter()
}

pub fn execute(command: &Command, cfg: CampaignConfig) -> Result<i32, RunError> {
    let spec = cfg.spec().map_err(|e| RunError::Usage(e.to_string()))?;
    let opts = cfg.pipeline_options(spec.dimension);
    let ctx = Ctx { cfg, spec, opts };
    let mut report = Report::new(command.name(), ctx.cfg.clone());
    let code = match command {
        Command::Soliton => {
            report.tasks.push(TaskResult::run("soliton", || -> NResult<Value> {
                let s = ctx.soliton()?;
                write(ctx.out(), "soliton.csv", &soliton_csv(&s)).map_err(io_err)?;
                write(ctx.out(), "potentials.csv", &potentials_csv(&s)).map_err(io_err)?;
                soliton_json(&s)
            }));
            None
        }
        Command::Slope { .. } => {
            report.tasks.push(TaskResult::run("slope", || -> NResult<Value> {
                match ctx.cfg.scan {
                    Some((lo, hi)) => {
                        let r = slope_root(&ctx.spec, &ctx.opts.soliton_options(&ctx.spec), lo, hi, ctx.cfg.tol_threshold)?;
                        println!("slope changes sign at {} = {:.10}", parameter_name(ctx.cfg.problem), r.root);
                        Ok(json!({"root": r.root, "evaluations": r.evaluations, "scan": [lo, hi]}))
                    }
                    None => {
                        let r = slope_condition(&ctx.soliton()?, 1e-4)?;
                        println!("slope = {:.10e} (normalized {:.10})", r.value, r.normalized);
                        Ok(json!({
                            "value": r.value,
                            "finite_difference": r.finite_difference,
                            "relative_difference": r.relative_difference,
                            "consistent": r.consistent,
                            "normalized": r.normalized,
                        }))
                    }
                }
            }));
            None
        }
        Command::Eigen => {
            report.tasks.push(TaskResult::run("eigen", || -> NResult<Value> {
                let s = ctx.soliton()?;
                let p = solve_unstable_eigenpair(&s, ctx.opts.mu_guess, &ctx.opts.eigen)?;
                write(ctx.out(), "eigen.csv", &eigen_csv(&p)).map_err(io_err)?;
                println!("mu* = {:.12}", p.mu_star);
                Ok(json!({
                    "mu_star": p.mu_star,
                    "coarse_mu": p.coarse_mu,
                    "matrix_mu": matrix_estimate_mu(&s, ctx.opts.mu_guess, 4000, 40.0)?,
                    "residual1": p.residual1,
                    "residual2": p.residual2,
                    "phi1_norm": p.phi1_norm(&ctx.spec),
                    "phi2_norm": p.phi2_norm(&ctx.spec),
                    "normalization": p.normalization,
                    "tail_magnitude": p.tail_magnitude,
                    "adjoint": check_adjoint_algebra(&p, &s),
                }))
            }));
            None
        }
        Command::Index => {
            report.tasks.push(TaskResult::run("index", || -> NResult<Value> {
                let s = ctx.soliton()?;
                let mut per_delta = Vec::new();
                for (i, &d) in ctx.cfg.delta0.iter().enumerate() {
                    let reports = index_scan(&s, d, &ctx.cfg.index_options(ctx.spec.dimension))?;
                    if i == 0 {
                        let refs: Vec<&IndexReport> = reports.iter().collect();
                        write(ctx.out(), "index.csv", &index_csv(&refs)).map_err(io_err)?;
                        for r in &reports {
                            println!("{:<16} index {} clear {}", r.tag, r.root_count, r.farfield_clear);
                        }
                    }
                    per_delta.push(json!({
                        "delta0": d,
                        "certified": reports.iter().all(|r| r.farfield_clear),
                        "sectors": reports.iter().map(index_json).collect::<Vec<_>>(),
                    }));
                }
                Ok(Value::Array(per_delta))
            }));
            None
        }
        Command::Products | Command::Verdict => {
            let verdict = matches!(command, Command::Verdict);
            report.tasks.push(TaskResult::run(command.name(), || -> NResult<Value> {
                let s = ctx.soliton()?;
                let mut per_delta = Vec::new();
                let mut established = Vec::new();
                for (i, &d) in ctx.cfg.delta0.iter().enumerate() {
                    let run = nls_spectral::verdict::run_pipeline_on(s.clone(), d, &ctx.opts)?;
                    if i == 0 {
                        write(ctx.out(), "products.csv", &products_csv(parameter_of(&ctx.spec), &run.sectors))
                            .map_err(io_err)?;
                        if verdict {
                            let refs: Vec<&IndexReport> = run.sectors.iter().map(|s| &s.index).collect();
                            write(ctx.out(), "index.csv", &index_csv(&refs)).map_err(io_err)?;
                            write(ctx.out(), "eigen.csv", &eigen_csv(&run.eigenpair)).map_err(io_err)?;
                            write(ctx.out(), "soliton.csv", &soliton_csv(&run.soliton)).map_err(io_err)?;
                        }
                    }
                    established.push(run.verdict.established);
                    if verdict {
                        println!(
                            "{} delta0={d}: established = {}{}",
                            ctx.spec.label(),
                            run.verdict.established,
                            if run.verdict.failing.is_empty() {
                                String::new()
                            } else {
                                format!(" (failing: {})", run.verdict.failing.join(", "))
                            }
                        );
                    } else {
                        for (k, v) in named_quantities(&run) {
                            println!("{k:<10} {v:.10e}");
                        }
                    }
                    per_delta.push(json!({"delta0": d, "run": pipeline_json(&run)}));
                }
                Ok(json!({
                    "per_delta0": per_delta,
                    "stable_under_delta0": established.windows(2).all(|w| w[0] == w[1]),
                }))
            }));
            None
        }
        Command::Threshold { .. } => {
            let q: Quantity = match &ctx.cfg.quantity {
                Some(q) => q.parse().map_err(|e: nls_spectral::Error| RunError::Usage(e.to_string()))?,
                None => return Err(RunError::Usage("threshold needs --quantity".into())),
            };
            if q.location(&ctx.spec).is_none() && q != Quantity::Slope {
                return Err(RunError::Usage(format!("{q} is not defined for {}", ctx.cfg.problem)));
            }
            let bracket = ctx.cfg.bracket.or_else(|| ctx.cfg.problem.default_bracket(q)).ok_or_else(|| {
                RunError::Usage(format!("no default bracket for {q} on {}; pass --bracket", ctx.cfg.problem))
            })?;
            report.tasks.push(TaskResult::run("threshold", || -> NResult<Value> {
                let r = find_threshold(&ctx.spec, q, bracket, ctx.cfg.tol_threshold, &ctx.opts)?;
                println!("{} changes sign at {} = {:.12} ({} evaluations)", r.quantity, r.parameter, r.value, r.evaluations);
                Ok(serde_json::to_value(&r).expect("serializable"))
            }));
            None
        }
        Command::Sweep { .. } => {
            let grid = ctx.cfg.grid.unwrap_or_else(|| ctx.cfg.problem.default_grid()).values();
            report.tasks.push(TaskResult::run("sweep", || -> NResult<Value> {
                let mut per_delta = Vec::new();
                for (i, &d) in ctx.cfg.delta0.iter().enumerate() {
                    let rows = sweep(&ctx.spec, &grid, d, &ctx.opts)?;
                    let name = if i == 0 { "sweep.csv".to_string() } else { format!("sweep_delta0_{i}.csv") };
                    write(ctx.out(), &name, &sweep_csv(&rows)).map_err(io_err)?;
                    let established = rows.iter().filter(|r| r.established == Some(true)).count();
                    println!("delta0={d}: established at {established} of {} points", rows.len());
                    per_delta.push(json!({
                        "delta0": d,
                        "file": name,
                        "rows": rows.iter().map(|r| json!({
                            "parameter": r.parameter,
                            "established": r.established,
                            "failing": r.failing,
                            "error": r.error,
                        })).collect::<Vec<_>>(),
                    }));
                }
                Ok(Value::Array(per_delta))
            }));
            None
        }
        Command::ReproducePaper => Some(reproduce(&ctx.cfg, &mut report)?),
    };
    report.write(ctx.out())?;
    let code = code.unwrap_or_else(|| if report.tasks.iter().all(|t| t.ok) { EXIT_OK } else { EXIT_NUMERICAL });
    for t in report.tasks.iter().filter(|t| !t.ok) {
        eprintln!("error in {}: {}", t.name, t.error.as_deref().unwrap_or("unknown"));
    }
    Ok(code)
}

fn io_err(e: std::io::Error) -> nls_spectral::Error {
    nls_spectral::Error::InvalidInput(format!("writing output: {e}"))
}

fn parameter_name(p: Problem) -> &'static str {
    match p {
        Problem::Cqnls => "gamma",
        _ => "sigma",
    }
}

/// Sweeps, all twelve criteria and the slope roots of the power families.
fn reproduce(cfg: &CampaignConfig, report: &mut Report) -> Result<i32, RunError> {
    let mut sweeps = None;
    report.tasks.push(TaskResult::run("sweeps", || -> Result<Value, RunError> {
        let s = Sweeps::compute(cfg);
        let mut files = Vec::new();
        for ((name, perturbed), rows) in &s.rows {
            let dir = cfg.out.join(name);
            let file = if *perturbed == 0 { "sweep.csv" } else { "sweep_delta0_1e-4.csv" };
            match rows {
                Ok(rows) => {
                    write(&dir, file, &sweep_csv(rows))?;
                    files.push(format!("{name}/{file}"));
                }
                Err(e) => files.push(format!("{name}/{file}: {e}")),
            }
        }
        sweeps = Some(s);
        Ok(json!({ "files": files }))
    }));
    for (name, problem, bracket) in [("slope_root_nls3d", Problem::Nls3d, (0.5, 0.9)), ("slope_root_nls1d", Problem::Nls1d, (1.5, 2.5))] {
        report.tasks.push(TaskResult::run(name, || -> NResult<Value> {
            let spec = problem.spec(problem.default_parameter())?;
            let opts = cfg.pipeline_options(spec.dimension).soliton_options(&spec);
            let r = slope_root(&spec, &opts, bracket.0, bracket.1, cfg.tol_threshold)?;
            Ok(json!({"root": r.root, "evaluations": r.evaluations, "bracket": [bracket.0, bracket.1]}))
        }));
    }
    let ids: Vec<usize> = (1..=12).collect();
    let results = run_criteria(cfg, &ids, sweeps.as_ref());
    for r in &results {
        println!("{}", r.line());
    }
    let all = results.iter().all(|r| r.pass);
    report.acceptance = results;
    Ok(if all { EXIT_OK } else { EXIT_NUMERICAL })
}
