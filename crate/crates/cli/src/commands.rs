use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use geonflow::curvature::s_of_phi;
use geonflow::flow::{decay_fit, FlowExit};
use geonflow::functional::{bound, q_report, torus_value};
use geonflow::io::{diagnostics_csv, fmt_f64, surface_file, to_json, write_atomic};
use geonflow::oracle::{verify, VerifyOptions, VerifyReport, VerifyScope};
use geonflow::surface::torus_mean_curvature;
use geonflow::{
    GeonParams, GraphSurface, PeriodicGrid, QReport, RadialJet, RadialProfile, Spectral2d,
};

use crate::config::RunConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_VALIDITY: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_IO: u8 = 74;

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Io(m) => f.write_str(m),
        }
    }
}

impl CmdError {
    pub fn code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => EXIT_USAGE,
            CmdError::Io(_) => EXIT_IO,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CmdError {
    CmdError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), CmdError> {
    write_atomic(path, contents.as_bytes()).map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CmdError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Worker count from `GEONFLOW_THREADS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("GEONFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    exit: &'a FlowExit,
    steps: usize,
    t_final: f64,
    q: &'a QReport,
    seed: u64,
    grid: [usize; 2],
    params: &'a GeonParams,
}

/// Result of one flow run, shared by `simulate` and `sweep`.
pub struct RunResult {
    pub exit: FlowExit,
    pub t_final: f64,
    pub q_final: f64,
    pub bound: f64,
    pub torus_value: f64,
    pub decay: Option<f64>,
    pub min_eig_conf: f64,
}

/// Runs one configuration and writes `<prefix>.csv`, `<prefix>_surface.csv`
/// and `<prefix>_q.json` to `out`.
pub fn run_config(cfg: &RunConfig, out: &Path, allow_unsafe: bool) -> Result<RunResult, CmdError> {
    let engine = cfg.engine().map_err(|e| CmdError::Usage(e.to_string()))?;
    let data = cfg
        .initial_data(&engine)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let params = cfg.params().map_err(|e| CmdError::Usage(e.to_string()))?;
    let surface = data
        .surface(engine.profile().clone(), engine.grid())
        .map_err(|e| CmdError::Usage(format!("initial data: {e}")))?;
    let mut run_engine = engine;
    if !allow_unsafe {
        let ok = data
            .admissible(&run_engine, true)
            .map_err(|e| CmdError::Usage(format!("initial data: {e}")))?;
        if !ok {
            return Ok(RunResult {
                exit: FlowExit::ValidityExit {
                    t: 0.0,
                    reason: "initial data violates the floor or flow-metric convexity (use --allow-unsafe)".into(),
                },
                t_final: 0.0,
                q_final: f64::NAN,
                bound: bound(&params),
                torus_value: torus_value(&params),
                decay: None,
                min_eig_conf: f64::NAN,
            });
        }
    } else {
        let mut relaxed = cfg.flow.clone();
        relaxed.phi_floor = Some(1.0 + 1e-9);
        run_engine = geonflow::flow::engine_for(&params, cfg.grid, relaxed)
            .map_err(|e| CmdError::Usage(e.to_string()))?;
    }
    let outcome = match run_engine.run(&surface) {
        Ok(o) => o,
        Err(e) => {
            return Ok(RunResult {
                exit: FlowExit::ValidityExit {
                    t: 0.0,
                    reason: e.to_string(),
                },
                t_final: 0.0,
                q_final: f64::NAN,
                bound: bound(&params),
                torus_value: torus_value(&params),
                decay: None,
                min_eig_conf: f64::NAN,
            })
        }
    };
    let last = *outcome
        .rows
        .last()
        .expect("a run records at least the initial row");
    ensure_dir(out)?;
    write(
        &out.join(format!("{}.csv", cfg.prefix)),
        &diagnostics_csv(&outcome.rows),
    )?;
    let surf_text = surface_file(
        &params,
        run_engine.grid(),
        outcome.final_surface.v(),
        last.t,
    )
    .map_err(|e| CmdError::Io(e.to_string()))?;
    write(&out.join(format!("{}_surface.csv", cfg.prefix)), &surf_text)?;
    let summary = RunSummary {
        exit: &outcome.exit,
        steps: outcome.steps,
        t_final: last.t,
        q: &outcome.final_report,
        seed: cfg.seed,
        grid: cfg.grid,
        params: &params,
    };
    write(
        &out.join(format!("{}_q.json", cfg.prefix)),
        &to_json(&summary).map_err(|e| CmdError::Io(e.to_string()))?,
    )?;
    let series: Vec<(f64, f64)> = outcome.rows.iter().map(|r| (r.t, r.max_rho2m1)).collect();
    let decay = decay_fit(&series, (10.0_f64.min(0.1 * last.t), last.t)).ok();
    Ok(RunResult {
        exit: outcome.exit,
        t_final: last.t,
        q_final: last.q_surface,
        bound: outcome.final_report.bound,
        torus_value: outcome.final_report.torus_value,
        decay,
        min_eig_conf: outcome
            .rows
            .iter()
            .map(|r| r.min_eig_conf)
            .fold(f64::INFINITY, f64::min),
    })
}

pub fn exit_code(exit: &FlowExit) -> u8 {
    match exit {
        FlowExit::Completed => EXIT_OK,
        _ => EXIT_VALIDITY,
    }
}

pub fn simulate(cfg: &RunConfig, out: Option<PathBuf>, allow_unsafe: bool) -> Result<u8, CmdError> {
    let out = out.unwrap_or_else(|| cfg.out_dir.clone());
    let r = run_config(cfg, &out, allow_unsafe)?;
    match &r.exit {
        FlowExit::Completed => println!(
            "completed t = {}  Q = {}  bound = {}  gap = {}",
            fmt_f64(r.t_final),
            fmt_f64(r.q_final),
            fmt_f64(r.bound),
            fmt_f64(r.bound - r.q_final)
        ),
        FlowExit::ValidityExit { t, reason } => {
            eprintln!("validity exit at t = {}: {reason}", fmt_f64(*t))
        }
        FlowExit::NonFinite { t, retries } => {
            eprintln!(
                "non-finite state at t = {} after {retries} halvings",
                fmt_f64(*t)
            )
        }
    }
    Ok(exit_code(&r.exit))
}

pub fn verify_cmd(
    scope: VerifyScope,
    out: Option<PathBuf>,
    seed: u64,
    inject_fault: bool,
) -> Result<u8, CmdError> {
    let opts = VerifyOptions {
        seed,
        inject_sign_fault: inject_fault,
        ..VerifyOptions::default()
    };
    let report: VerifyReport = verify(scope, &opts).map_err(|e| CmdError::Io(e.to_string()))?;
    let json = to_json(&report).map_err(|e| CmdError::Io(e.to_string()))?;
    match out {
        Some(dir) => {
            ensure_dir(&dir)?;
            write(&dir.join(format!("verify_{}.json", report.scope)), &json)?;
        }
        None => print!("{json}"),
    }
    for c in report.failures() {
        eprintln!(
            "FAIL {}: error {} > {} ({})",
            c.name,
            fmt_f64(c.error),
            fmt_f64(c.tolerance),
            c.anchor
        );
    }
    eprintln!(
        "{}: {} checks, {} failed",
        report.scope,
        report.checks.len(),
        report.failures().count()
    );
    Ok(if report.passed {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

/// Cartesian product of `key=v1|v2|…` specifications.
pub fn expand_grid(vary: &[String]) -> Result<Vec<Vec<(String, String)>>, CmdError> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for spec in vary {
        let (k, vs) = spec.split_once('=').ok_or_else(|| {
            CmdError::Usage(format!("--vary must be key=v1|v2|..., got {spec:?}"))
        })?;
        let values: Vec<&str> = vs
            .split('|')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(CmdError::Usage(format!("--vary {k}: no values")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((k.trim().to_string(), v.to_string()));
                    c
                })
            })
            .collect();
    }
    Ok(combos)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep(
    template: &RunConfig,
    vary: &[String],
    out: Option<PathBuf>,
    allow_unsafe: bool,
) -> Result<u8, CmdError> {
    let out = out.unwrap_or_else(|| template.out_dir.clone());
    let combos = expand_grid(vary)?;
    // Reject malformed overrides before any run starts.
    let mut configs = Vec::with_capacity(combos.len());
    for (i, combo) in combos.iter().enumerate() {
        let mut cfg = template.clone();
        for (k, v) in combo {
            cfg.apply_override(&format!("{k}={v}"))
                .map_err(|e| CmdError::Usage(e.to_string()))?;
        }
        cfg.prefix = format!("{}_{i:03}", template.prefix);
        configs.push(cfg);
    }
    ensure_dir(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| CmdError::Io(e.to_string()))?;
    let results: Vec<Result<RunResult, String>> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                cfg.validate().map_err(|e| e.to_string())?;
                run_config(cfg, &out, allow_unsafe).map_err(|e| e.to_string())
            })
            .collect()
    });
    let keys: Vec<String> = vary
        .iter()
        .filter_map(|s| s.split_once('=').map(|(k, _)| k.trim().to_string()))
        .collect();
    let mut csv = String::from("run");
    for k in &keys {
        csv.push(',');
        csv.push_str(&csv_field(k));
    }
    csv.push_str(",status,t_final,q_final,bound,gap_to_bound,torus_value,decay_exponent,min_eig_conf,message\n");
    let mut any_failed = false;
    for (i, (combo, res)) in combos.iter().zip(&results).enumerate() {
        csv.push_str(&i.to_string());
        for (_, v) in combo {
            csv.push(',');
            csv.push_str(&csv_field(v));
        }
        match res {
            Ok(r) => {
                let (status, msg) = match &r.exit {
                    FlowExit::Completed => ("completed", String::new()),
                    FlowExit::ValidityExit { reason, .. } => ("validity_exit", reason.clone()),
                    FlowExit::NonFinite { retries, .. } => {
                        ("non_finite", format!("{retries} halvings"))
                    }
                };
                any_failed |= !r.exit.is_completed();
                let fields = [
                    r.t_final,
                    r.q_final,
                    r.bound,
                    r.bound - r.q_final,
                    r.torus_value,
                    r.decay.unwrap_or(f64::NAN),
                    r.min_eig_conf,
                ];
                csv.push(',');
                csv.push_str(status);
                for f in fields {
                    csv.push(',');
                    csv.push_str(&fmt_f64(f));
                }
                csv.push(',');
                csv.push_str(&csv_field(&msg));
            }
            Err(e) => {
                any_failed = true;
                csv.push_str(",error,NaN,NaN,NaN,NaN,NaN,NaN,NaN,");
                csv.push_str(&csv_field(e));
            }
        }
        csv.push('\n');
    }
    let path = out.join(format!("{}_sweep.csv", template.prefix));
    write(&path, &csv)?;
    println!("{} runs, summary in {}", combos.len(), path.display());
    Ok(if any_failed { EXIT_VALIDITY } else { EXIT_OK })
}

#[derive(Debug, Serialize)]
struct TorusExact {
    n: usize,
    periods: Vec<f64>,
    s: f64,
    phi: f64,
    dphi_ds: f64,
    mass: f64,
    bound: f64,
    q_torus: f64,
    q_numeric: f64,
    mean_curvature: f64,
}

pub fn torus_exact(
    n: usize,
    periods: Option<Vec<f64>>,
    phi: Option<f64>,
    s: Option<f64>,
) -> Result<u8, CmdError> {
    let periods = periods.unwrap_or_else(|| vec![1.0; n.saturating_sub(2)]);
    let params = GeonParams::new(n, periods).map_err(|e| CmdError::Usage(e.to_string()))?;
    let dim = params.dim();
    let s = match (s, phi) {
        (Some(s), None) => s,
        (None, Some(p)) if p > 1.0 => s_of_phi(p, dim),
        (None, None) => s_of_phi(2.0, dim),
        (None, Some(p)) => return Err(CmdError::Usage(format!("--phi must exceed 1, got {p}"))),
        (Some(_), Some(_)) => return Err(CmdError::Usage("give --phi or --s, not both".into())),
    };
    let h = torus_mean_curvature(s, dim).map_err(|e| CmdError::Usage(e.to_string()))?;
    let jet = RadialJet::at(s, dim);
    let grid =
        PeriodicGrid::for_params(&params, 16, 16).map_err(|e| CmdError::Usage(e.to_string()))?;
    let profile = std::sync::Arc::new(RadialProfile::new(&params));
    let surf = GraphSurface::coordinate_torus(profile, grid.clone(), s)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let report =
        q_report(&surf, &Spectral2d::new(&grid)).map_err(|e| CmdError::Usage(e.to_string()))?;
    let out = TorusExact {
        n,
        periods: params.periods().to_vec(),
        s,
        phi: jet.phi,
        dphi_ds: jet.dphi,
        mass: params.mass(),
        bound: bound(&params),
        q_torus: torus_value(&params),
        q_numeric: report.q_surface,
        mean_curvature: h,
    };
    print!(
        "{}",
        to_json(&out).map_err(|e| CmdError::Io(e.to_string()))?
    );
    Ok(EXIT_OK)
}
