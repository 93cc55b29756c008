//! Exact minimizer of `tr(W V)` under the performance budget.
//!
//! In the variables `S` (closed-loop controllability Gramian for `V`),
//! `X = K S` and an epigraph variable `Z ⪰ R^{1/2} X S^{-1} X^T R^{1/2}` the
//! problem is a single SDP:
//!
//! ```text
//! minimize    tr(C S C^T)
//! subject to  A S + B X + S A^T + X^T B^T + V = 0
//!             tr(S Q) + tr(Z) <= tr(P* V) + lambda
//!             [[Z, R^{1/2} X], [X^T R^{1/2}, S]] ⪰ 0
//! ```
//!
//! and the gain is recovered as `K = X S^{-1}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gramian;
use crate::linalg;
use crate::sdp::{self, AffineExpr, SdpModel, SdpStatus, VarId};
use crate::system::{ControllerDesign, DesignWeights, LinearSystem};

/// Budget overrun tolerated by the recovery audit.
pub const BUDGET_TOL: f64 = 1e-6;

/// Model together with handles to its variables.
#[derive(Debug, Clone)]
pub struct Problem1 {
    pub model: SdpModel,
    pub x: VarId,
    pub s: VarId,
    pub z: VarId,
}

/// Solved `(X, S, Z)` and the SDP objective value.
#[derive(Debug, Clone)]
pub struct Problem1Variables {
    pub x: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub objective: f64,
}

pub fn build_problem1_sdp(sys: &LinearSystem, w: &DesignWeights, p_star: &DMatrix<f64>) -> Result<Problem1> {
    let (n, m) = (sys.states(), sys.inputs());
    let mut model = SdpModel::new();
    let x = model.add_rectangular("X", m, n);
    let s = model.add_symmetric("S", n);
    let z = model.add_symmetric("Z", m);
    let (xe, se, ze) = (model.expr(x), model.expr(s), model.expr(z));

    model.minimize(se.lmul(&sys.c).rmul(&sys.c.transpose()).trace())?;

    let a_s = se.lmul(&sys.a);
    let b_x = xe.lmul(&sys.b);
    let lyap = &(&a_s + &a_s.transpose()) + &(&b_x + &b_x.transpose());
    model.add_equality("lyapunov", lyap + &w.v)?;

    let budget = (p_star * &w.v).trace() + w.lambda;
    model.add_inequality(
        "budget",
        se.rmul(&w.q).trace() + ze.trace() - &DMatrix::from_element(1, 1, budget),
    )?;

    let rx = xe.lmul(&linalg::psd_sqrt(&w.r)?);
    let block = AffineExpr::blocks(&[vec![ze, rx.clone()], vec![rx.transpose(), se]]);
    model.add_lmi("schur", -block)?;
    Ok(Problem1 { model, x, s, z })
}

/// Solves the SDP and recovers an audited design.
pub fn solve_problem1(sys: &LinearSystem, w: &DesignWeights) -> Result<ControllerDesign> {
    let (p_star, _) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r)?;
    let problem = build_problem1_sdp(sys, w, &p_star)?;
    let sol = sdp::solve(&problem.model, 1e-8, 1e-8)?;
    log::info!(
        "trace design: lambda={} status={} objective={:.10e} iterations={}",
        w.lambda,
        sol.status.as_str(),
        sol.objective,
        sol.iterations
    );
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            detail: format!(
                "trace design at lambda={} (backend {}, residual {:.3e}, gap {:.3e})",
                w.lambda, sol.backend_status, sol.primal_residual, sol.gap
            ),
        });
    }
    let vars = Problem1Variables {
        x: sol.value(problem.x).clone(),
        s: sol.value(problem.s).clone(),
        z: sol.value(problem.z).clone(),
        objective: sol.objective,
    };
    recover_and_audit(&vars, sys, w, &p_star)
}

/// `K = X S^{-1}` followed by Lyapunov recomputation of `P` and `W` and the
/// consistency checks of the change of variables.
pub fn recover_and_audit(
    vars: &Problem1Variables,
    sys: &LinearSystem,
    w: &DesignWeights,
    p_star: &DMatrix<f64>,
) -> Result<ControllerDesign> {
    let s_min = linalg::min_sym_eigenvalue(&vars.s);
    let s_tol = 1e-9 * linalg::spectral_norm(&vars.s).max(1.0);
    if s_min <= s_tol {
        return Err(Error::RecoveryFailure(format!(
            "lambda_min(S) = {s_min:.3e} is below {s_tol:.3e}"
        )));
    }
    let k = &vars.x * linalg::inverse(&vars.s, "S")?;
    let a_cl = sys.closed_loop(&k);
    let (stable, eig) = linalg::is_hurwitz(&a_cl)?;
    if !stable {
        return Err(Error::RecoveryFailure(format!(
            "recovered gain is not stabilizing (max real part {:.3e})",
            eig.max_real_part
        )));
    }

    let s_check = linalg::solve_lyapunov_ctrl(&a_cl, &w.v)?;
    let s_gap = (&s_check - &vars.s).amax() / s_check.amax().max(1.0);
    if s_gap > 1e-6 {
        return Err(Error::RecoveryFailure(format!(
            "S differs from the controllability Gramian at K by {s_gap:.3e}"
        )));
    }

    let (j_s, p) = gramian::performance_cost(sys, &k, &w.q, &w.r, &w.v)?;
    let slack = w.lambda - ((&p - p_star) * &w.v).trace();
    if slack < -BUDGET_TOL {
        return Err(Error::RecoveryFailure(format!("budget exceeded by {:.3e}", -slack)));
    }
    let gram = gramian::observability_gramian(sys, &k, 0.0)?;
    let j_o1 = gramian::metric_j_o1(&gram, &w.v);
    let obj_gap = (j_o1 - vars.objective).abs() / j_o1.abs().max(1e-12);
    if obj_gap > 1e-6 && (j_o1 - vars.objective).abs() > 1e-10 {
        return Err(Error::RecoveryFailure(format!(
            "tr(W V) = {j_o1:.10e} differs from the SDP objective {:.10e}",
            vars.objective
        )));
    }
    Ok(ControllerDesign {
        j_o2: gramian::metric_j_o2(&gram, &w.v),
        gain: k,
        closed_loop: a_cl,
        p,
        w: gram,
        epsilon: 0.0,
        j_s,
        j_o1,
        performance_slack: slack,
        iterations: 1,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    /// Closed-loop pole `f = a + b k` minimizing `c^2 v / (-2 f)` subject to
    /// `(p(f) - p*) v <= lambda`, by grid search then bisection on the budget.
    fn scalar_oracle(a: f64, b: f64, c: f64, q: f64, r: f64, v: f64, lambda: f64) -> (f64, f64) {
        let p_star = r * (a + (a * a + q * b * b / r).sqrt()) / (b * b);
        let cost = |f: f64| {
            let k = (f - a) / b;
            (q + r * k * k) / (-2.0 * f)
        };
        let limit = p_star + lambda / v;
        let span = 4.0 * b * b * limit / r + 2.0 * a.abs() + 1.0;
        let steps = 200_000;
        let grid = |i: usize| -span * (steps - i) as f64 / steps as f64;
        let first = (0..steps).find(|&i| cost(grid(i)) <= limit).unwrap();
        assert!(first > 0, "grid too narrow");
        let (mut lo, mut hi) = (grid(first - 1), grid(first));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cost(mid) <= limit {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        ((hi - a) / b, c * c * v / (-2.0 * hi))
    }

    #[test]
    fn scalar_unit_matches_oracle() {
        let (sys, w) = presets::scalar_unit();
        let (k, j1) = scalar_oracle(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert!((k + 5.3708).abs() < 1e-3 && (j1 - 0.1144).abs() < 1e-4);
        let d = solve_problem1(&sys, &w).unwrap();
        assert!((d.gain[(0, 0)] - k).abs() < 1e-3, "{} vs {k}", d.gain);
        assert!((d.j_o1 - j1).abs() < 1e-3);
    }

    #[test]
    fn random_scalars_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let (a, b) = (rng.random_range(-1.0..2.0), sign * rng.random_range(0.5..2.0));
            let (c, q, r, v) = (
                rng.random_range(0.5..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.5..2.0),
            );
            for lambda in [0.1, 1.0, 10.0] {
                let (sys, w) = presets::scalar(a, b, c, q, r, v, lambda);
                let (_, j1) = scalar_oracle(a, b, c, q, r, v, lambda);
                let d = solve_problem1(&sys, &w).unwrap();
                assert!(
                    (d.j_o1 - j1).abs() <= 1e-3 * j1,
                    "a={a} b={b} c={c} q={q} r={r} v={v} lambda={lambda}: {} vs {j1}",
                    d.j_o1
                );
                assert!(d.performance_slack.abs() <= 1e-4, "slack {}", d.performance_slack);
            }
        }
    }

    #[test]
    fn model_shape() {
        let (sys, w) = presets::double_integrator();
        let (p_star, _) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r).unwrap();
        let p = build_problem1_sdp(&sys, &w, &p_star).unwrap();
        assert_eq!(p.model.num_unknowns(), 2 + 3 + 1);
        assert_eq!(p.model.constraints().len(), 3);
    }

    #[test]
    fn scalar_equality_expansion() {
        let (sys, w) = presets::scalar(0.7, 1.3, 1.0, 1.0, 1.0, 2.0, 1.0);
        let p = build_problem1_sdp(&sys, &w, &dmatrix![1.0]).unwrap();
        let c = &p.model.constraints()[0];
        let vals = [0.4, 0.9, 0.0];
        let got = p.model.constraint_value(c, &vals)[(0, 0)];
        assert_relative_eq!(got, 2.0 * (0.7 * 0.9 + 1.3 * 0.4) + 2.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_budget_gives_lqr_gain() {
        let (sys, mut w) = presets::double_integrator();
        w.lambda = 0.0;
        let (_, k_star) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r).unwrap();
        let d = solve_problem1(&sys, &w).unwrap();
        assert!((&d.gain - &k_star).amax() < 1e-4, "{} vs {}", d.gain, k_star);
    }

    #[test]
    fn budget_is_respected_and_active() {
        let (sys, w) = presets::double_integrator();
        let d = solve_problem1(&sys, &w).unwrap();
        assert!(d.performance_slack >= -BUDGET_TOL);
        assert!(d.performance_slack < 1e-4);
        assert!(d.converged);
    }
}
