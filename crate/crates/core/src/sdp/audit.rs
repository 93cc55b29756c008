use super::{ConstraintKind, SdpModel, SdpSolution};
use crate::linalg;

/// Residual of one constraint at a candidate point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResidual {
    pub label: String,
    pub kind: &'static str,
    /// `lambda_max` of an LMI, `-lambda_min` of a PSD variable, largest
    /// absolute entry of an equality, positive part of an inequality.
    pub raw: f64,
    /// `raw / (1 + |F0|_max + sum_i |x_i| |F_i|_max)`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub residuals: Vec<ConstraintResidual>,
    pub max_relative: f64,
    pub max_raw: f64,
    /// Every relative residual is at most `10 * feas_tol`.
    pub pass: bool,
}

impl AuditReport {
    pub fn worst(&self) -> Option<&ConstraintResidual> {
        self.residuals.iter().max_by(|a, b| a.relative.total_cmp(&b.relative))
    }
}

/// Audits a solution at the tolerance it was solved with (`1e-8`).
pub fn audit(model: &SdpModel, solution: &SdpSolution) -> AuditReport {
    audit_point(model, &solution.x, 1e-8)
}

/// Residuals of every constraint at an arbitrary vector of unknowns.
pub fn audit_point(model: &SdpModel, x: &[f64], feas_tol: f64) -> AuditReport {
    let mut residuals = Vec::with_capacity(model.constraints().len());
    for c in model.constraints() {
        let value = model.constraint_value(c, x);
        let (kind, raw, scale) = match &c.kind {
            ConstraintKind::Lmi(e) => ("lmi", linalg::max_sym_eigenvalue(&value).max(0.0), magnitude(e, x)),
            ConstraintKind::Psd(_) => ("psd", linalg::max_sym_eigenvalue(&value).max(0.0), 1.0 + value.amax()),
            ConstraintKind::Equality { expr, .. } => ("eq", value.amax(), magnitude(expr, x)),
            ConstraintKind::Inequality(e) => ("ineq", value[(0, 0)].max(0.0), magnitude(e, x)),
        };
        residuals.push(ConstraintResidual {
            label: c.label.clone(),
            kind,
            raw,
            relative: raw / scale,
        });
    }
    let max_relative = residuals.iter().map(|r| r.relative).fold(0.0, f64::max);
    let max_raw = residuals.iter().map(|r| r.raw).fold(0.0, f64::max);
    AuditReport {
        pass: max_relative <= 10.0 * feas_tol,
        residuals,
        max_relative,
        max_raw,
    }
}

fn magnitude(e: &super::AffineExpr, x: &[f64]) -> f64 {
    1.0 + e.constant_term().amax() + e.terms().map(|(i, m)| x[i].abs() * m.amax()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::solve;
    use nalgebra::DMatrix;

    #[test]
    fn perturbed_point_is_flagged() {
        let mut m = SdpModel::new();
        let s = m.add_symmetric("S", 2);
        m.minimize(m.expr(s).trace()).unwrap();
        m.add_lmi("S >= I", -m.expr(s) + &DMatrix::identity(2, 2)).unwrap();
        m.add_equality(
            "S12 = 0",
            m.expr(s)
                .rmul(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0]))
                .lmul(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
        )
        .unwrap();
        let sol = solve(&m, 1e-8, 1e-8).unwrap();
        assert!(audit(&m, &sol).pass);

        let mut x = sol.x.clone();
        x[0] -= 1e-3;
        let report = audit_point(&m, &x, 1e-8);
        assert!(!report.pass);
        assert_eq!(report.worst().unwrap().label, "S >= I");

        let mut x = sol.x.clone();
        x[1] += 1e-4;
        let report = audit_point(&m, &x, 1e-8);
        assert!(!report.pass);
        assert!(report.residuals.iter().any(|r| r.kind == "eq" && r.raw > 9e-5));
    }
}
