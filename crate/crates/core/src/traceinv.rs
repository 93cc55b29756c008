//! Local maximizer of `tr(W_eps^{-1} V^{-1})` under the performance budget,
//! by a convex-concave sequence of SDPs.
//!
//! With `F = A + B K`, `M = (C^T C + eps I)^{1/2}` and `Y` standing in for
//! `W_eps^{-1}`, the problem is the difference-of-convex program
//!
//! ```text
//! minimize    -tr(Y V^{-1})
//! subject to  Q + K^T R K + ½(F + P)^T(F + P) - ½(F - P)^T(F - P) ⪯ 0
//!             Y M^2 Y     + ½(F + Y)(F + Y)^T - ½(F - Y)(F - Y)^T ⪯ 0
//!             tr((P - P*) V) <= lambda,  P ⪰ 0,  Y ⪰ 0
//! ```
//!
//! The concave terms are replaced by their tangents at the current iterate,
//! the remaining quadratics are Schur-complemented, and the resulting SDP is
//! solved repeatedly. Every subproblem solution is feasible for the original
//! program, so the objective never increases.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gramian;
use crate::linalg;
use crate::sdp::{self, AffineExpr, SdpModel, SdpStatus, SolveSettings, VarId};
use crate::system::{ControllerDesign, DesignWeights, LinearSystem};

pub const DEFAULT_MAX_ITERS: usize = 200;
/// Relative objective change below which the loop stops on a plateau.
pub const OBJECTIVE_GUARD: f64 = 1e-9;
/// Largest objective increase accepted between iterates.
pub const UPHILL_SLACK: f64 = 1e-7;
/// Relative residual up to which an uncertified subproblem point is still
/// accepted as a step.
pub const STEP_FEAS_TOL: f64 = 1e-6;
/// Budget overrun tolerated when auditing the final gain.
pub const BUDGET_TOL: f64 = 1e-6;

/// Subproblem tolerances. Late iterates carry `tr(Y)` in the 1e4 range,
/// where the backend stalls near a 1e-7 relative gap and 1e-7 relative
/// residuals; such points are still taken as steps when they pass
/// [`STEP_FEAS_TOL`].
pub const SUBPROBLEM_SETTINGS: SolveSettings = SolveSettings {
    feas_tol: 1e-8,
    gap_tol: 1e-7,
    max_iter: 200,
};

/// One point of the sequence.
#[derive(Debug, Clone)]
pub struct CcpIterate {
    pub iteration: usize,
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// `-tr(Y V^{-1})`.
    pub objective: f64,
    /// `tr(Y_j - Y_{j-1})`; zero for the initial point.
    pub trace_diff: f64,
    /// `lambda - tr((P - P*) V)`.
    pub budget_slack: f64,
    /// Relative residuals of the two quadratic matrix inequalities.
    pub dc_residuals: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `|tr(Y_j - Y_{j-1})| < delta`.
    Converged,
    /// Relative objective change below [`OBJECTIVE_GUARD`].
    Plateau,
    /// A subproblem returned a point with a higher objective; the previous
    /// iterate is kept.
    UphillRejected,
    IterationCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Plateau => "plateau",
            Termination::UphillRejected => "uphill_rejected",
            Termination::IterationCap => "iteration_cap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CcpResult {
    pub k_hat: DMatrix<f64>,
    pub p_hat: DMatrix<f64>,
    pub y_hat: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// `-tr(Y V^{-1})` at the returned iterate.
    pub j2_reported: f64,
    /// `-tr(W_eps^{-1} V^{-1})` with `W_eps` recomputed at `K`.
    pub j2_true: f64,
    /// Iterate 0 is the initial point.
    pub history: Vec<CcpIterate>,
    /// Audited design at `k_hat`; `w` is the regularized Gramian.
    pub design: ControllerDesign,
}

/// Which product the tangent expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `½ G^T G`.
    LeftTranspose,
    /// `½ H H^T`.
    RightTranspose,
}

/// Tangent of `½ G^T G` (or `½ G G^T`) at `G = M_j`, as an affine function of
/// `Δ = G - M_j`: `½ M_j^T M_j + ½ M_j^T Δ + ½ Δ^T M_j` and its transpose
/// analogue. Exact at `Δ = 0` and a minorant everywhere.
pub fn linearize_quadratic(m_j: &DMatrix<f64>, delta: &AffineExpr, side: Side) -> Result<AffineExpr> {
    if delta.shape() != m_j.shape() {
        return Err(Error::Dimension(format!(
            "linearization: point {:?}, direction {:?}",
            m_j.shape(),
            delta.shape()
        )));
    }
    let out = match side {
        Side::LeftTranspose => {
            let cross = delta.lmul(&m_j.transpose());
            (&cross + &cross.transpose()) * 0.5 + &((m_j.transpose() * m_j) * 0.5)
        }
        Side::RightTranspose => {
            let cross = delta.rmul(&m_j.transpose());
            (&cross + &cross.transpose()) * 0.5 + &((m_j * m_j.transpose()) * 0.5)
        }
    };
    Ok(out)
}

/// Shared per-design data.
#[derive(Debug, Clone)]
pub struct CcpContext {
    pub p_star: DMatrix<f64>,
    pub k_star: DMatrix<f64>,
    /// `(C^T C + eps I)^{1/2}`.
    pub m_sqrt: DMatrix<f64>,
    pub v_inv: DMatrix<f64>,
    pub r_inv: DMatrix<f64>,
}

impl CcpContext {
    pub fn new(sys: &LinearSystem, w: &DesignWeights) -> Result<Self> {
        let (p_star, k_star) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r)?;
        let n = sys.states();
        let m2 = sys.c.transpose() * &sys.c + DMatrix::identity(n, n) * w.epsilon;
        Ok(Self {
            p_star,
            k_star,
            m_sqrt: linalg::psd_sqrt(&m2)?,
            v_inv: linalg::inverse(&w.v, "V")?,
            r_inv: linalg::inverse(&w.r, "R")?,
        })
    }
}

fn dc_residuals(
    sys: &LinearSystem,
    w: &DesignWeights,
    ctx: &CcpContext,
    k: &DMatrix<f64>,
    p: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> [f64; 2] {
    let f = sys.closed_loop(k);
    let nf = linalg::spectral_norm(&f);
    let m2 = &ctx.m_sqrt * &ctx.m_sqrt;
    let perf = f.transpose() * p + p * &f + &w.q + k.transpose() * &w.r * k;
    let perf_scale = 1.0
        + 2.0 * nf * linalg::spectral_norm(p)
        + linalg::spectral_norm(&w.q)
        + linalg::spectral_norm(k).powi(2) * linalg::spectral_norm(&w.r);
    let obs = &f * y + y * f.transpose() + y * &m2 * y;
    let ny = linalg::spectral_norm(y);
    let obs_scale = 1.0 + 2.0 * nf * ny + ny * ny * linalg::spectral_norm(&m2);
    [
        linalg::max_sym_eigenvalue(&perf).max(0.0) / perf_scale,
        linalg::max_sym_eigenvalue(&obs).max(0.0) / obs_scale,
    ]
}

fn slack(w: &DesignWeights, ctx: &CcpContext, p: &DMatrix<f64>) -> f64 {
    w.lambda - ((p - &ctx.p_star) * &w.v).trace()
}

/// Starts from the LQR gain with `P = P*` and `Y = W_eps^{-1}` at `K*`,
/// where both quadratic inequalities hold with equality.
pub fn ccp_initialize(sys: &LinearSystem, w: &DesignWeights) -> Result<CcpIterate> {
    let ctx = CcpContext::new(sys, w)?;
    initial_iterate(sys, w, &ctx)
}

fn initial_iterate(sys: &LinearSystem, w: &DesignWeights, ctx: &CcpContext) -> Result<CcpIterate> {
    let k = ctx.k_star.clone();
    let (_, p) = gramian::performance_cost(sys, &k, &w.q, &w.r, &w.v)?;
    let w_eps = gramian::observability_gramian(sys, &k, w.epsilon)?;
    let y = linalg::symmetrize(&linalg::inverse(&w_eps, "regularized Gramian")?);
    Ok(CcpIterate {
        iteration: 0,
        objective: -(&y * &ctx.v_inv).trace(),
        trace_diff: 0.0,
        budget_slack: slack(w, ctx, &p),
        dc_residuals: dc_residuals(sys, w, ctx, &k, &p, &y),
        k,
        p,
        y,
    })
}

/// Convex subproblem linearized at `it`.
#[derive(Debug, Clone)]
pub struct CcpSubproblem {
    pub model: SdpModel,
    pub k: VarId,
    pub p: VarId,
    pub y: VarId,
}

pub fn build_ccp_subproblem(
    it: &CcpIterate,
    sys: &LinearSystem,
    w: &DesignWeights,
    ctx: &CcpContext,
) -> Result<CcpSubproblem> {
    let (n, m) = (sys.states(), sys.inputs());
    let mut model = SdpModel::new();
    let kv = model.add_rectangular("K", m, n);
    let pv = model.add_symmetric("P", n);
    let yv = model.add_symmetric("Y", n);
    let (ke, pe, ye) = (model.expr(kv), model.expr(pv), model.expr(yv));

    model.minimize(-ye.rmul(&ctx.v_inv).trace())?;

    let f = ke.lmul(&sys.b) + &sys.a;
    let f_j = sys.closed_loop(&it.k);
    let eye = |k: usize| AffineExpr::constant(DMatrix::identity(k, k));
    let zeros = AffineExpr::zeros;

    // The (K, P) constraints are scaled by |Y_j| so that the backend's
    // residual normalization, which the Y blocks dominate late in the
    // sequence, still resolves them.
    let weight = linalg::spectral_norm(&it.y).max(1.0);

    // performance: Q - L(K, P) + K^T R K + ½(F + P)^T (F + P) ⪯ 0
    let g_j = &f_j - &it.p;
    let l = linearize_quadratic(&g_j, &(&f - &pe - &g_j), Side::LeftTranspose)?;
    let fp = (&f + &pe) * FRAC_1_SQRT_2;
    let lmi1 = AffineExpr::blocks(&[
        vec![AffineExpr::constant(w.q.clone()) - l, ke.transpose(), fp.transpose()],
        vec![ke.clone(), AffineExpr::constant(-&ctx.r_inv), zeros(m, n)],
        vec![fp, zeros(n, m), -eye(n)],
    ]);
    model.add_lmi("performance", lmi1.scale(weight))?;

    // observability: -L'(K, Y) + Y M^2 Y + ½(F + Y)(F + Y)^T ⪯ 0
    let h_j = &f_j - &it.y;
    let l2 = linearize_quadratic(&h_j, &(&f - &ye - &h_j), Side::RightTranspose)?;
    let ym = ye.rmul(&ctx.m_sqrt);
    let fy = (&f + &ye) * FRAC_1_SQRT_2;
    let lmi2 = AffineExpr::blocks(&[
        vec![-l2, ym.clone(), fy.clone()],
        vec![ym.transpose(), -eye(n), zeros(n, n)],
        vec![fy.transpose(), zeros(n, n), -eye(n)],
    ]);
    model.add_lmi("observability", lmi2)?;

    let budget = (&ctx.p_star * &w.v).trace() + w.lambda;
    model.add_inequality(
        "budget",
        (pe.rmul(&w.v).trace() - &DMatrix::from_element(1, 1, budget)).scale(weight),
    )?;
    model.add_psd("P psd", pv)?;
    model.add_psd("Y psd", yv)?;
    Ok(CcpSubproblem {
        model,
        k: kv,
        p: pv,
        y: yv,
    })
}

/// Runs the sequence from the LQR gain until `|tr(Y_j - Y_{j-1})| < delta`,
/// a plateau, a rejected uphill step or `max_iters` subproblems.
pub fn ccp_run(sys: &LinearSystem, w: &DesignWeights, max_iters: usize) -> Result<CcpResult> {
    let ctx = CcpContext::new(sys, w)?;
    let mut current = initial_iterate(sys, w, &ctx)?;
    let mut history = vec![current.clone()];
    let mut termination = Termination::IterationCap;

    for j in 1..=max_iters {
        let sub = build_ccp_subproblem(&current, sys, w, &ctx)?;
        let sol = sdp::solve_with(&sub.model, &SUBPROBLEM_SETTINGS)?;
        // a feasible point without a certificate is still a valid step of the
        // sequence; the descent check judges its quality
        let inexact = sol.status == SdpStatus::NumericalFailure && sol.primal_residual <= STEP_FEAS_TOL;
        if inexact {
            log::debug!(
                "ccp: subproblem {j} accepted without certificate (backend {}, residual {:.3e}, gap {:.3e})",
                sol.backend_status,
                sol.primal_residual,
                sol.gap
            );
        }
        if sol.status != SdpStatus::Optimal && !inexact {
            let worst = sol.audit.worst().map_or("none", |r| r.label.as_str());
            log::error!(
                "ccp: subproblem {j} ended with {} (backend {}, residual {:.3e} at {worst}, gap {:.3e})",
                sol.status.as_str(),
                sol.backend_status,
                sol.primal_residual,
                sol.gap
            );
            return Err(Error::CcpAborted {
                iteration: j,
                status: sol.status,
                history: Box::new(history),
            });
        }
        let k = sol.value(sub.k).clone();
        let p = sol.value(sub.p).clone();
        let y = sol.value(sub.y).clone();
        let objective = -(&y * &ctx.v_inv).trace();
        let next = CcpIterate {
            iteration: j,
            trace_diff: y.trace() - current.y.trace(),
            budget_slack: slack(w, &ctx, &p),
            dc_residuals: dc_residuals(sys, w, &ctx, &k, &p, &y),
            objective,
            k,
            p,
            y,
        };
        log::debug!(
            "ccp: j={j} objective={:.10e} dtrace={:.3e} slack={:.3e} dc=[{:.1e}, {:.1e}]",
            next.objective,
            next.trace_diff,
            next.budget_slack,
            next.dc_residuals[0],
            next.dc_residuals[1]
        );
        if next.objective > current.objective + UPHILL_SLACK {
            log::warn!(
                "ccp: rejecting uphill step at j={j} ({:.3e} > {:.3e})",
                next.objective,
                current.objective
            );
            termination = Termination::UphillRejected;
            break;
        }
        let rel_change = (next.objective - current.objective).abs() / current.objective.abs().max(1.0);
        current = next;
        history.push(current.clone());
        if current.trace_diff.abs() < w.delta {
            termination = Termination::Converged;
            break;
        }
        if rel_change < OBJECTIVE_GUARD {
            termination = Termination::Plateau;
            break;
        }
    }
    finish(sys, w, &ctx, current, history, termination)
}

fn finish(
    sys: &LinearSystem,
    w: &DesignWeights,
    ctx: &CcpContext,
    last: CcpIterate,
    history: Vec<CcpIterate>,
    termination: Termination,
) -> Result<CcpResult> {
    let k = last.k.clone();
    let a_cl = sys.closed_loop(&k);
    let (stable, eig) = linalg::is_hurwitz(&a_cl)?;
    if !stable {
        return Err(Error::RecoveryFailure(format!(
            "sequential SDP gain is not stabilizing (max real part {:.3e})",
            eig.max_real_part
        )));
    }
    let (j_s, p_true) = gramian::performance_cost(sys, &k, &w.q, &w.r, &w.v)?;
    let performance_slack = slack(w, ctx, &p_true);
    if performance_slack < -BUDGET_TOL {
        return Err(Error::RecoveryFailure(format!(
            "budget exceeded by {:.3e} at the returned gain",
            -performance_slack
        )));
    }
    let w_eps = gramian::observability_gramian(sys, &k, w.epsilon)?;
    let j_o2 = gramian::metric_j_o2(&w_eps, &w.v);
    let j2_true = match j_o2 {
        Some(v) => v,
        None => -(linalg::inverse(&w_eps, "regularized Gramian")? * &ctx.v_inv).trace(),
    };
    let converged = termination == Termination::Converged;
    let iterations = last.iteration;
    log::info!(
        "ccp: lambda={} {} after {iterations} iterations, J2 reported {:.6e}, true {:.6e}",
        w.lambda,
        termination.as_str(),
        last.objective,
        j2_true
    );
    Ok(CcpResult {
        design: ControllerDesign {
            gain: k.clone(),
            closed_loop: a_cl,
            p: p_true,
            j_o1: gramian::metric_j_o1(&w_eps, &w.v),
            w: w_eps,
            epsilon: w.epsilon,
            j_s,
            j_o2,
            performance_slack,
            iterations,
            converged,
        },
        k_hat: k,
        p_hat: last.p.clone(),
        y_hat: last.y.clone(),
        iterations,
        converged,
        termination,
        j2_reported: last.objective,
        j2_true,
        history,
    })
}

/// Iterate history as CSV with header
/// `iteration,objective,trace_diff,budget_slack`.
pub fn history_csv(history: &[CcpIterate]) -> String {
    let mut out = String::from("iteration,objective,trace_diff,budget_slack\n");
    for it in history {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            it.iteration,
            crate::fmt::g12(it.objective),
            crate::fmt::g12(it.trace_diff),
            crate::fmt::g12(it.budget_slack)
        );
    }
    out
}
