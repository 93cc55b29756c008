use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Metric, RunConfig, SimBlock};
use super::output::{self, Num, ReportRow};
use crate::bounds::{BoundContext, TradeoffReport};
use crate::error::{Error, Issue, Result};
use crate::fmt::g12;
use crate::gramian;
use crate::linalg;
use crate::sdp::SdpStatus;
use crate::sim::{self, SimSettings, SimTrace};
use crate::system::{ControllerDesign, DesignWeights, LinearSystem, ValidatedConfig};
use crate::trace;
use crate::traceinv::{self, CcpResult};

/// Command-line overrides shared by every command.
#[derive(Debug, Clone)]
pub struct Options {
    pub metric: Option<Metric>,
    pub jobs: usize,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Design files for `simulate` and `report`.
    pub designs: Vec<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            metric: None,
            jobs: 1,
            out: PathBuf::from("."),
            seed: None,
            designs: Vec::new(),
        }
    }
}

/// Serialized form of a design; every float is written `%.17g`.
#[derive(Debug, Clone, Serialize)]
pub struct DesignRecord {
    pub metric: &'static str,
    pub lambda: Num,
    pub epsilon: Num,
    #[serde(rename = "K")]
    pub k: Vec<Vec<Num>>,
    pub closed_loop: Vec<Vec<Num>>,
    #[serde(rename = "J_s")]
    pub j_s: Num,
    /// `tr(W V)` with the unregularized Gramian.
    #[serde(rename = "J_o1")]
    pub j_o1: Num,
    /// `-tr(W_eps^{-1} V^{-1})`; `null` when unbounded.
    #[serde(rename = "J_o2")]
    pub j_o2: Num,
    pub slack: Num,
    pub iterations: usize,
    pub converged: bool,
    pub termination: &'static str,
    pub max_real_part: Num,
}

/// Fields read back from `design.json`.
#[derive(Debug, Clone, Deserialize)]
pub struct DesignInput {
    pub metric: Metric,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
}

/// A design with both metrics evaluated uniformly.
#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub metric: Metric,
    pub design: ControllerDesign,
    pub ccp: Option<CcpResult>,
    pub j_o1: f64,
    pub j_o2: Option<f64>,
}

impl DesignOutcome {
    pub fn record(&self, w: &DesignWeights) -> Result<DesignRecord> {
        let d = &self.design;
        let (_, eig) = linalg::is_hurwitz(&d.closed_loop)?;
        Ok(DesignRecord {
            metric: self.metric.as_str(),
            lambda: Num(w.lambda),
            epsilon: Num(w.epsilon),
            k: output::rows(&d.gain),
            closed_loop: output::rows(&d.closed_loop),
            j_s: Num(d.j_s),
            j_o1: Num(self.j_o1),
            j_o2: Num(self.j_o2.unwrap_or(f64::NAN)),
            slack: Num(d.performance_slack),
            iterations: d.iterations,
            converged: d.converged,
            termination: self.ccp.as_ref().map_or("solved", |c| c.termination.as_str()),
            max_real_part: Num(eig.max_real_part),
        })
    }
}

/// `(tr(W V), -tr(W_eps^{-1} V^{-1}))` at `k`.
pub fn metrics(sys: &LinearSystem, w: &DesignWeights, k: &DMatrix<f64>) -> Result<(f64, Option<f64>)> {
    let w0 = gramian::observability_gramian(sys, k, 0.0)?;
    let we = gramian::observability_gramian(sys, k, w.epsilon)?;
    Ok((gramian::metric_j_o1(&w0, &w.v), gramian::metric_j_o2(&we, &w.v)))
}

pub fn run_designer(sys: &LinearSystem, w: &DesignWeights, metric: Metric, max_iters: usize) -> Result<DesignOutcome> {
    let (design, ccp) = match metric {
        Metric::Trace => (trace::solve_problem1(sys, w)?, None),
        Metric::TraceInv => {
            let res = traceinv::ccp_run(sys, w, max_iters)?;
            (res.design.clone(), Some(res))
        }
    };
    let (j_o1, j_o2) = metrics(sys, w, &design.gain)?;
    Ok(DesignOutcome {
        metric,
        design,
        ccp,
        j_o1,
        j_o2,
    })
}

/// Everything a command produced.
#[derive(Debug, Clone, Default)]
pub struct ResultBundle {
    pub design: Option<DesignOutcome>,
    pub sweep: Vec<SweepRow>,
    pub bounds: Vec<TradeoffReport>,
    pub report: Vec<ReportRow>,
    pub sim: Vec<SimSummary>,
    pub files: Vec<PathBuf>,
    /// Human-readable output for stdout.
    pub summary: String,
}

fn matrix_lines(out: &mut String, name: &str, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:>12}", crate::fmt::general(m[(i, j)], 6)))
            .collect();
        let label = if i == 0 { name } else { "" };
        let _ = writeln!(out, "{label:<14}{}", row.join(" "));
    }
}

fn scalar_line(out: &mut String, name: &str, v: String) {
    let _ = writeln!(out, "{name:<14}{v}");
}

pub fn cmd_design(cfg: &RunConfig, opts: &Options) -> Result<ResultBundle> {
    let ValidatedConfig {
        system: sys,
        weights: w,
    } = cfg.validate()?;
    let metric = opts.metric.unwrap_or(cfg.design.metric);
    let outcome = run_designer(&sys, &w, metric, cfg.design.max_iters)?;
    let record = outcome.record(&w)?;
    let path = output::output_path(&opts.out, "design.json")?;
    output::write_atomic(&path, &(serde_json::to_string_pretty(&record)? + "\n"))?;
    let mut files = vec![path];
    if let Some(ccp) = &outcome.ccp {
        let p = output::output_path(&opts.out, "ccp_history.csv")?;
        output::write_atomic(&p, &traceinv::history_csv(&ccp.history))?;
        files.push(p);
    }

    let d = &outcome.design;
    let mut s = String::new();
    scalar_line(&mut s, "metric", metric.as_str().into());
    scalar_line(&mut s, "lambda", g12(w.lambda));
    matrix_lines(&mut s, "K", &d.gain);
    matrix_lines(&mut s, "A+BK", &d.closed_loop);
    scalar_line(&mut s, "J_s", g12(d.j_s));
    scalar_line(&mut s, "J_o1", g12(outcome.j_o1));
    scalar_line(&mut s, "J_o2", outcome.j_o2.map_or_else(|| "unbounded".into(), g12));
    scalar_line(&mut s, "slack", g12(d.performance_slack));
    scalar_line(&mut s, "iterations", d.iterations.to_string());
    scalar_line(&mut s, "termination", record.termination.into());
    if !d.converged {
        log::warn!(
            "design stopped before the trace tolerance was met ({})",
            record.termination
        );
    }
    Ok(ResultBundle {
        design: Some(outcome),
        files,
        summary: s,
        ..Default::default()
    })
}

/// One grid point: both designers and the bounds.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub lambda: f64,
    pub trace: Option<DesignOutcome>,
    pub trace_inv: Option<DesignOutcome>,
    pub bounds: TradeoffReport,
    /// `ok`, `trace_failed`, `trace_inv_failed` or `failed`.
    pub status: &'static str,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn j1(&self) -> f64 {
        self.trace.as_ref().map_or(f64::NAN, |d| d.j_o1)
    }

    pub fn j2(&self) -> f64 {
        self.trace_inv.as_ref().and_then(|d| d.j_o2).unwrap_or(f64::NAN)
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

fn sweep_row(
    sys: &LinearSystem,
    w: &DesignWeights,
    ctx: &BoundContext,
    lambda: f64,
    max_iters: usize,
) -> Result<SweepRow> {
    let wl = DesignWeights { lambda, ..w.clone() };
    let bounds = ctx.report(sys, &wl, lambda)?;
    let t = run_designer(sys, &wl, Metric::Trace, max_iters);
    let ti = run_designer(sys, &wl, Metric::TraceInv, max_iters);
    let status = match (&t, &ti) {
        (Ok(_), Ok(_)) => "ok",
        (Err(_), Ok(_)) => "trace_failed",
        (Ok(_), Err(_)) => "trace_inv_failed",
        (Err(_), Err(_)) => "failed",
    };
    let error = [t.as_ref().err(), ti.as_ref().err()]
        .into_iter()
        .flatten()
        .map(ToString::to_string)
        .collect::<Vec<_>>();
    for e in &error {
        log::error!("sweep: lambda={lambda}: {e}");
    }
    Ok(SweepRow {
        lambda,
        trace: t.ok(),
        trace_inv: ti.ok(),
        bounds,
        status,
        error: (!error.is_empty()).then(|| error.join("; ")),
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,J1,J2,f_lambda,j1_lb,j2_lb_local,j2_lb_local_valid,j2_lb_global,status\n");
    for r in rows {
        let b = &r.bounds;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            g12(r.lambda),
            g12(r.j1()),
            g12(r.j2()),
            g12(b.f_lambda),
            g12(b.j1_lower),
            g12(b.j2_lower_local),
            b.j2_lower_local_valid,
            g12(b.j2_lower_global),
            r.status
        );
    }
    out
}

pub fn cmd_sweep(cfg: &RunConfig, opts: &Options) -> Result<ResultBundle> {
    let ValidatedConfig {
        system: sys,
        weights: w,
    } = cfg.validate()?;
    let ctx = BoundContext::new(&sys, &w)?;
    let lambdas = cfg.lambdas();
    let rows: Vec<Result<SweepRow>> = pool(opts.jobs)?.install(|| {
        lambdas
            .par_iter()
            .map(|&l| sweep_row(&sys, &w, &ctx, l, cfg.design.max_iters))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    if rows.iter().all(|r| r.status == "failed") {
        let detail = rows
            .iter()
            .filter_map(|r| r.error.clone())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Solver {
            status: SdpStatus::NumericalFailure,
            detail: format!("every sweep row failed: {detail}"),
        });
    }
    let csv = sweep_csv(&rows);
    let path = output::output_path(&opts.out, "sweep.csv")?;
    output::write_atomic(&path, &csv)?;
    Ok(ResultBundle {
        bounds: rows.iter().map(|r| r.bounds.clone()).collect(),
        sweep: rows,
        files: vec![path],
        summary: csv,
        ..Default::default()
    })
}

pub fn bounds_csv(rows: &[TradeoffReport]) -> String {
    let mut out = String::from(
        "lambda,f_lambda,j1_lb,j2_lb_local,j2_lb_local_valid,j2_lb_local_variant,j2_lb_local_variant_valid,j2_lb_global,j2_lb_best\n",
    );
    for b in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            g12(b.lambda),
            g12(b.f_lambda),
            g12(b.j1_lower),
            g12(b.j2_lower_local),
            b.j2_lower_local_valid,
            g12(b.j2_lower_local_variant),
            b.j2_lower_local_variant_valid,
            g12(b.j2_lower_global),
            g12(b.j2_lower_best)
        );
    }
    out
}

pub fn cmd_bounds(cfg: &RunConfig, opts: &Options) -> Result<ResultBundle> {
    let ValidatedConfig {
        system: sys,
        weights: w,
    } = cfg.validate()?;
    let ctx = BoundContext::new(&sys, &w)?;
    let rows = cfg
        .lambdas()
        .iter()
        .map(|&l| ctx.report(&sys, &DesignWeights { lambda: l, ..w.clone() }, l))
        .collect::<Result<Vec<_>>>()?;
    let csv = bounds_csv(&rows);
    let path = output::output_path(&opts.out, "bounds.csv")?;
    output::write_atomic(&path, &csv)?;
    let mut summary = String::new();
    scalar_line(&mut summary, "J1(0)", g12(ctx.j1_at_zero));
    scalar_line(&mut summary, "J2(0)", g12(ctx.j2_at_zero));
    summary.push_str(&csv);
    Ok(ResultBundle {
        bounds: rows,
        files: vec![path],
        summary,
        ..Default::default()
    })
}

fn config_error(field: &str, message: String) -> Error {
    Error::Config(vec![Issue {
        field: field.into(),
        message,
    }])
}

/// Reads the gain and metric from a design file written by `design`.
pub fn load_design(path: &Path, sys: &LinearSystem) -> Result<(Metric, DMatrix<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error("design", format!("{}: {e}", path.display())))?;
    let input: DesignInput =
        serde_json::from_str(&text).map_err(|e| config_error("design", format!("{}: {e}", path.display())))?;
    let k = output::from_rows(&input.k)
        .filter(|k| k.shape() == (sys.inputs(), sys.states()))
        .ok_or_else(|| {
            config_error(
                "design.K",
                format!(
                    "expected a {}x{} gain in {}",
                    sys.inputs(),
                    sys.states(),
                    path.display()
                ),
            )
        })?;
    Ok((input.metric, k))
}

fn design_paths(opts: &Options) -> Vec<PathBuf> {
    if opts.designs.is_empty() {
        vec![opts.out.join("design.json")]
    } else {
        opts.designs.clone()
    }
}

/// Time-averaged estimation error of one simulated gain.
#[derive(Debug, Clone)]
pub struct SimSummary {
    pub label: String,
    pub observer_gain_norm: f64,
    /// Mean `||e(t)||` over the second half of the horizon.
    pub mean_error: f64,
    pub final_cost: f64,
    pub trace: SimTrace,
}

/// Settings shared by every gain so the traces are directly comparable.
fn shared_settings(sim_cfg: &SimBlock, loops: &[(DMatrix<f64>, DMatrix<f64>)]) -> Result<SimSettings> {
    let mut base: Option<SimSettings> = None;
    for (a_cl, obs) in loops {
        let s = SimSettings::defaults(a_cl, obs)?;
        base = Some(match base {
            None => s,
            Some(b) => SimSettings {
                horizon: b.horizon.max(s.horizon),
                dt: b.dt.min(s.dt),
                ..b
            },
        });
    }
    let mut s = base.ok_or_else(|| config_error("design", "no gains to simulate".into()))?;
    if let Some(v) = SimBlock::vector(&sim_cfg.x0) {
        s.x0 = v;
    }
    if let Some(v) = SimBlock::vector(&sim_cfg.xhat0) {
        s.xhat0 = v;
    }
    if let Some(h) = sim_cfg.horizon {
        s.horizon = h;
    }
    if let Some(dt) = sim_cfg.dt {
        s.dt = dt;
    }
    Ok(s)
}

/// Simulates each labelled gain against the same observer poles and noise.
pub fn simulate_gains(
    sys: &LinearSystem,
    w: &DesignWeights,
    sim_cfg: &SimBlock,
    gains: &[(String, DMatrix<f64>)],
    seed: Option<u64>,
) -> Result<Vec<SimSummary>> {
    let poles = sim_cfg.poles();
    let mut observers = Vec::new();
    for (label, k) in gains {
        let g = sim::build_adversary_observer(sys, k, &poles, seed.unwrap_or(0))?;
        log::info!("simulate: {label}: observer gain norm {:.6e}", g.norm);
        observers.push(g);
    }
    let loops: Vec<_> = gains
        .iter()
        .zip(&observers)
        .map(|((_, k), g)| {
            let a_cl = sys.closed_loop(k);
            let obs = &a_cl - &g.l * &sys.c;
            (a_cl, obs)
        })
        .collect();
    let settings = shared_settings(sim_cfg, &loops)?;
    let noise = sim_cfg.noise_model(sys.outputs(), seed);
    let mut out = Vec::new();
    for ((label, k), g) in gains.iter().zip(observers) {
        let trace = sim::simulate(sys, k, &g.l, &w.q, &w.r, &noise, &settings)?;
        out.push(SimSummary {
            label: label.clone(),
            observer_gain_norm: g.norm,
            mean_error: trace.mean_error_norm(0.5 * settings.horizon, settings.horizon),
            final_cost: *trace.cost.last().unwrap_or(&0.0),
            trace,
        });
    }
    Ok(out)
}

pub fn cmd_simulate(cfg: &RunConfig, opts: &Options) -> Result<ResultBundle> {
    let ValidatedConfig {
        system: sys,
        weights: w,
    } = cfg.validate()?;
    let sim_cfg = cfg
        .sim
        .as_ref()
        .ok_or_else(|| config_error("sim", "a sim block with observer poles is required".into()))?;
    let (_, k_star) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r)?;
    let mut gains = vec![("nominal".to_string(), k_star)];
    for p in design_paths(opts) {
        let (metric, k) = load_design(&p, &sys)?;
        gains.push((metric.as_str().to_string(), k));
    }
    let seed = opts.seed.or(sim_cfg.seed);
    let runs = simulate_gains(&sys, &w, sim_cfg, &gains, seed)?;
    let mut files = Vec::new();
    let mut summary = format!("{:<12}{:>14}{:>16}{:>14}\n", "gain", "||L||", "mean ||e||", "cost");
    for r in &runs {
        let p = output::output_path(&opts.out, &format!("sim_{}.csv", r.label))?;
        output::write_atomic(&p, &r.trace.to_csv())?;
        files.push(p);
        let _ = writeln!(
            summary,
            "{:<12}{:>14}{:>16}{:>14}",
            r.label,
            crate::fmt::general(r.observer_gain_norm, 6),
            crate::fmt::general(r.mean_error, 6),
            crate::fmt::general(r.final_cost, 6)
        );
    }
    Ok(ResultBundle {
        sim: runs,
        files,
        summary,
        ..Default::default()
    })
}

/// Nominal row followed by one row per design file.
pub fn cmd_report(cfg: &RunConfig, opts: &Options) -> Result<ResultBundle> {
    let ValidatedConfig {
        system: sys,
        weights: w,
    } = cfg.validate()?;
    let (_, k_star) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r)?;
    let mut rows = vec![ReportRow::from_gramian(
        "nominal",
        &gramian::observability_gramian(&sys, &k_star, 0.0)?,
    )];
    for p in &opts.designs {
        let (metric, k) = load_design(p, &sys)?;
        let gram = gramian::observability_gramian(&sys, &k, 0.0)?;
        rows.push(ReportRow::from_gramian(metric.as_str(), &gram));
    }
    let path = output::output_path(&opts.out, "report.csv")?;
    output::write_atomic(&path, &output::report_csv(&rows))?;
    Ok(ResultBundle {
        summary: output::format_table(&rows),
        report: rows,
        files: vec![path],
        ..Default::default()
    })
}
