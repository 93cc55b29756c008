use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use nalgebra::DMatrix;

use super::audit::{audit_point, AuditReport};
use super::{ConstraintKind, SdpModel, SdpStatus, VarId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    /// Largest accepted relative primal residual.
    pub feas_tol: f64,
    /// Largest accepted relative duality gap.
    pub gap_tol: f64,
    pub max_iter: u32,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// All scalar unknowns, in model order.
    pub x: Vec<f64>,
    /// One matrix per declared variable, in declaration order.
    pub values: Vec<DMatrix<f64>>,
    /// Objective at `x`, constant term included.
    pub objective: f64,
    /// Largest relative primal residual over all constraints.
    pub primal_residual: f64,
    /// `|p - d| / max(1, min(|p|, |d|))` as reported by the backend.
    pub gap: f64,
    pub iterations: u32,
    /// Backend status, for diagnostics.
    pub backend_status: String,
    pub audit: AuditReport,
}

impl SdpSolution {
    pub fn value(&self, id: VarId) -> &DMatrix<f64> {
        &self.values[id.0]
    }
}

/// Solves with default iteration cap and the given tolerances.
pub fn solve(model: &SdpModel, feas_tol: f64, gap_tol: f64) -> Result<SdpSolution> {
    solve_with(
        model,
        &SolveSettings {
            feas_tol,
            gap_tol,
            ..SolveSettings::default()
        },
    )
}

/// Column-major upper triangle with off-diagonals scaled by sqrt(2), the
/// layout of Clarabel's triangular PSD cone.
fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for j in 0..k {
        for i in 0..=j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out.push(if i == j { v } else { v * std::f64::consts::SQRT_2 });
        }
    }
    out
}

fn upper(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    (0..k).flat_map(|j| (0..=j).map(move |i| m[(i, j)])).collect()
}

fn entries(m: &DMatrix<f64>) -> Vec<f64> {
    m.iter().copied().collect()
}

/// Conic data in Clarabel's `A x + s = b, s in K` form.
struct Conic {
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Conic {
    fn new(n: usize) -> Self {
        Self {
            cols: vec![Vec::new(); n],
            b: Vec::new(),
            cones: Vec::new(),
        }
    }

    /// Appends rows `b0 - sum_i x_i a_i`.
    fn push_rows(&mut self, b0: Vec<f64>, terms: impl Iterator<Item = (usize, Vec<f64>)>) {
        let r0 = self.b.len();
        self.b.extend(b0);
        for (i, a) in terms {
            for (k, v) in a.into_iter().enumerate() {
                if v != 0.0 {
                    self.cols[i].push((r0 + k, v));
                }
            }
        }
    }

    fn matrix(&self) -> CscMatrix<f64> {
        let mut colptr = vec![0];
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        for col in &self.cols {
            let mut col = col.clone();
            col.sort_by_key(|&(r, _)| r);
            for (r, v) in col {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        CscMatrix::new(self.b.len(), self.cols.len(), colptr, rowval, nzval)
    }
}

fn assemble(model: &SdpModel) -> Conic {
    let mut conic = Conic::new(model.num_unknowns());

    // zero cone: E(x) = 0  <=>  s = -E0 - sum x_i E_i = 0
    let mut zero_rows = 0;
    for c in model.constraints() {
        if let ConstraintKind::Equality { expr, symmetric } = &c.kind {
            let flat = |m: &DMatrix<f64>| if *symmetric { upper(m) } else { entries(m) };
            let b0: Vec<f64> = flat(expr.constant_term()).into_iter().map(|v| -v).collect();
            zero_rows += b0.len();
            conic.push_rows(b0, expr.terms().map(|(i, m)| (i, flat(m))));
        }
    }
    if zero_rows > 0 {
        conic.cones.push(SupportedConeT::ZeroConeT(zero_rows));
    }

    // nonnegative cone: g(x) <= 0  <=>  s = -g0 - sum x_i g_i >= 0
    let mut nonneg_rows = 0;
    for c in model.constraints() {
        if let ConstraintKind::Inequality(expr) = &c.kind {
            nonneg_rows += 1;
            conic.push_rows(
                vec![-expr.constant_term()[(0, 0)]],
                expr.terms().map(|(i, m)| (i, vec![m[(0, 0)]])),
            );
        }
    }
    if nonneg_rows > 0 {
        conic.cones.push(SupportedConeT::NonnegativeConeT(nonneg_rows));
    }

    // PSD cones: F(x) <= 0  <=>  s = svec(-F0) - sum x_i svec(F_i) in PSD
    for c in model.constraints() {
        let expr = match &c.kind {
            ConstraintKind::Lmi(e) => e.clone(),
            ConstraintKind::Psd(id) => -model.expr(*id),
            _ => continue,
        };
        let k = expr.shape().0;
        conic.push_rows(svec(&(-expr.constant_term())), expr.terms().map(|(i, m)| (i, svec(m))));
        conic.cones.push(SupportedConeT::PSDTriangleConeT(k));
    }
    conic
}

/// Solves `model` and classifies the result. The backend's claim of
/// optimality is accepted only if the returned point passes the relative
/// residual and gap checks at the requested tolerances.
pub fn solve_with(model: &SdpModel, settings: &SolveSettings) -> Result<SdpSolution> {
    let n = model.num_unknowns();
    if n == 0 {
        return Err(Error::Model("model has no unknowns".into()));
    }
    if model.constraints().is_empty() {
        return Err(Error::Model("model has no constraints".into()));
    }
    let conic = assemble(model);
    let a = conic.matrix();
    let p = CscMatrix::<f64>::zeros((n, n));
    let mut q = vec![0.0; n];
    for (i, m) in model.objective().terms() {
        q[i] = m[(0, 0)];
    }

    let backend = DefaultSettingsBuilder::<f64>::default()
        .verbose(false)
        .max_iter(settings.max_iter)
        .tol_feas(0.1 * settings.feas_tol)
        .tol_gap_abs(0.1 * settings.gap_tol)
        .tol_gap_rel(0.1 * settings.gap_tol)
        .max_threads(1)
        .build()
        .map_err(|e| Error::Model(format!("backend settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &conic.b, &conic.cones, backend)
        .map_err(|e| Error::Model(format!("backend rejected model: {e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    let x = sol.x.clone();
    let audit = audit_point(model, &x, settings.feas_tol);
    let (pv, dv) = (sol.obj_val, sol.obj_val_dual);
    let gap = (pv - dv).abs() / pv.abs().min(dv.abs()).max(1.0);
    let certified = audit.max_relative <= settings.feas_tol && gap <= settings.gap_tol;

    let status = match sol.status {
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SdpStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SdpStatus::Unbounded,
        SolverStatus::Solved
        | SolverStatus::AlmostSolved
        | SolverStatus::MaxIterations
        | SolverStatus::InsufficientProgress
            if certified =>
        {
            SdpStatus::Optimal
        }
        _ => SdpStatus::NumericalFailure,
    };
    log::debug!(
        "sdp: n={n} rows={} backend={:?} iters={} residual={:.3e} gap={:.3e} -> {}",
        conic.b.len(),
        sol.status,
        sol.iterations,
        audit.max_relative,
        gap,
        status.as_str()
    );

    let values = (0..model.variables().len())
        .map(|i| model.value(VarId(i), &x))
        .collect();
    Ok(SdpSolution {
        status,
        objective: model.objective().eval(&x)[(0, 0)],
        values,
        primal_residual: audit.max_relative,
        gap,
        iterations: sol.iterations,
        backend_status: format!("{:?}", sol.status),
        x,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{audit, AffineExpr};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trivial(scale: f64) -> (SdpModel, VarId) {
        let mut m = SdpModel::new();
        let s = m.add_symmetric("S", 2);
        let se = m.expr(s);
        m.minimize(se.trace() * scale).unwrap();
        m.add_lmi("S >= I", -se + &DMatrix::identity(2, 2)).unwrap();
        (m, s)
    }

    #[test]
    fn trivial_lmi() {
        let (m, s) = trivial(1.0);
        let sol = solve(&m, 1e-8, 1e-8).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 2.0, epsilon = 1e-7);
        assert_relative_eq!(sol.value(s).clone(), DMatrix::identity(2, 2), epsilon = 1e-7);
        let report = audit(&m, &sol);
        assert!(report.pass);
        assert!(report.residuals.iter().all(|r| r.raw <= 1e-8), "{report:?}");
    }

    #[test]
    fn infeasible_trace_bound() {
        let mut m = SdpModel::new();
        let s = m.add_symmetric("S", 2);
        m.add_psd("S >= 0", s).unwrap();
        m.add_inequality("tr S <= -1", m.expr(s).trace() + &DMatrix::from_element(1, 1, 1.0))
            .unwrap();
        let sol = solve(&m, 1e-8, 1e-8).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unbounded_objective() {
        let mut m = SdpModel::new();
        let s = m.add_symmetric("S", 2);
        m.add_psd("S >= 0", s).unwrap();
        m.minimize(-m.expr(s).trace()).unwrap();
        let sol = solve(&m, 1e-8, 1e-8).unwrap();
        assert_eq!(sol.status, SdpStatus::Unbounded);
    }

    #[test]
    fn equality_and_rectangular() {
        // min x1 + x2 s.t. [x1 1; 1 x2] >= 0, x1 - 2 x2 = 0  ->  x2 = 1/sqrt 2
        let mut m = SdpModel::new();
        let x = m.add_rectangular("x", 1, 2);
        let xe = m.expr(x);
        let pick = |j: usize| xe.rmul(&DMatrix::from_fn(2, 1, |i, _| (i == j) as u8 as f64));
        let (x1, x2) = (pick(0), pick(1));
        m.minimize(&x1 + &x2).unwrap();
        let one = AffineExpr::scalar(1.0);
        let block = AffineExpr::blocks(&[vec![x1.clone(), one.clone()], vec![one, x2.clone()]]);
        m.add_lmi("hyperbolic", -block).unwrap();
        m.add_equality("ratio", x1 - x2 * 2.0).unwrap();
        let sol = solve(&m, 1e-8, 1e-8).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let v = sol.value(x);
        assert_relative_eq!(v[(0, 1)], 0.5f64.sqrt(), epsilon = 1e-6);
        assert_relative_eq!(v[(0, 0)], 2.0 * 0.5f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn solves_are_deterministic() {
        let (m, _) = trivial(3.0);
        let a = solve(&m, 1e-8, 1e-8).unwrap();
        let b = solve(&m, 1e-8, 1e-8).unwrap();
        assert_eq!(a.x, b.x);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn objective_scaling_keeps_argmin(alpha in 0.01f64..100.0, w in 0.2f64..1.5) {
            // min tr(S) + w S12 s.t. S >= I has a unique minimizer
            let build = |scale: f64| {
                let mut m = SdpModel::new();
                let s = m.add_symmetric("S", 2);
                let se = m.expr(s);
                let obj = se.trace() + se.rmul(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0]))
                    .lmul(&DMatrix::from_row_slice(1, 2, &[w, 0.0]));
                m.minimize(obj * scale).unwrap();
                m.add_lmi("S >= I", -se + &DMatrix::identity(2, 2)).unwrap();
                (m, s)
            };
            let (m1, s) = build(1.0);
            let (m2, _) = build(alpha);
            let a = solve(&m1, 1e-8, 1e-8).unwrap();
            let b = solve(&m2, 1e-8, 1e-8).unwrap();
            prop_assert_eq!(a.status, SdpStatus::Optimal);
            prop_assert_eq!(b.status, SdpStatus::Optimal);
            prop_assert!((a.value(s) - b.value(s)).amax() <= 1e-8, "{}", (a.value(s) - b.value(s)).amax());
        }
    }
}
