//! Small semidefinite-programming modeling layer.
//!
//! A model owns a flat vector of scalar unknowns. Symmetric matrix variables
//! are parameterized by their upper triangle (column-major), rectangular
//! variables by all entries (column-major). Constraints are affine
//! expressions of those unknowns:
//!
//! * `Lmi(F)`: `F(x) ⪯ 0`, `F` square and symmetric-valued;
//! * `Equality(E)`: `E(x) = 0`, entrywise;
//! * `Inequality(g)`: `g(x) ≤ 0`, `g` is 1×1;
//! * `Psd(var)`: the symmetric variable is PSD.
//!
//! [`solve`] hands the model to the Clarabel interior-point solver and then
//! re-checks the returned point with [`audit`] before reporting
//! [`SdpStatus::Optimal`].

mod audit;
mod dump;
mod expr;
mod solve;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use audit::{audit, audit_point, AuditReport, ConstraintResidual};
pub use dump::write_dump;
pub use expr::AffineExpr;
pub use solve::{solve, solve_with, SdpSolution, SolveSettings};

/// Outcome of a solve as seen by callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SdpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::Unbounded => "unbounded",
            SdpStatus::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Symmetric(usize),
    Rectangular(usize, usize),
}

impl VarKind {
    pub fn unknowns(self) -> usize {
        match self {
            VarKind::Symmetric(k) => k * (k + 1) / 2,
            VarKind::Rectangular(r, c) => r * c,
        }
    }

    pub fn shape(self) -> (usize, usize) {
        match self {
            VarKind::Symmetric(k) => (k, k),
            VarKind::Rectangular(r, c) => (r, c),
        }
    }
}

/// Handle to a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(usize);

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    /// Index of the first scalar unknown.
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub enum ConstraintKind {
    Lmi(AffineExpr),
    /// `symmetric` equalities contribute only their upper triangle.
    Equality {
        expr: AffineExpr,
        symmetric: bool,
    },
    Inequality(AffineExpr),
    Psd(VarId),
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone)]
pub struct SdpModel {
    variables: Vec<Variable>,
    unknowns: usize,
    objective: AffineExpr,
    constraints: Vec<Constraint>,
}

impl Default for SdpModel {
    fn default() -> Self {
        Self::new()
    }
}

/// Entries of a symmetric-valued expression are compared at this relative
/// level when checking that an LMI is symmetric.
const SYMMETRY_TOL: f64 = 1e-10;

impl SdpModel {
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            unknowns: 0,
            objective: AffineExpr::scalar(0.0),
            constraints: Vec::new(),
        }
    }

    fn declare(&mut self, name: &str, kind: VarKind) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            name: name.to_string(),
            kind,
            offset: self.unknowns,
        });
        self.unknowns += kind.unknowns();
        id
    }

    pub fn add_symmetric(&mut self, name: &str, k: usize) -> VarId {
        self.declare(name, VarKind::Symmetric(k))
    }

    pub fn add_rectangular(&mut self, name: &str, rows: usize, cols: usize) -> VarId {
        self.declare(name, VarKind::Rectangular(rows, cols))
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn num_unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// The variable as an affine expression of the unknowns.
    pub fn expr(&self, id: VarId) -> AffineExpr {
        let var = &self.variables[id.0];
        let (rows, cols) = var.kind.shape();
        let coeffs = unit_positions(var.kind)
            .into_iter()
            .enumerate()
            .map(|(j, (r, c))| {
                let mut m = DMatrix::zeros(rows, cols);
                m[(r, c)] = 1.0;
                if matches!(var.kind, VarKind::Symmetric(_)) {
                    m[(c, r)] = 1.0;
                }
                (var.offset + j, m)
            })
            .collect();
        AffineExpr::from_parts(DMatrix::zeros(rows, cols), coeffs)
    }

    /// Value of a variable at a full vector of unknowns.
    pub fn value(&self, id: VarId, x: &[f64]) -> DMatrix<f64> {
        let var = &self.variables[id.0];
        let (rows, cols) = var.kind.shape();
        let mut m = DMatrix::zeros(rows, cols);
        for (j, (r, c)) in unit_positions(var.kind).into_iter().enumerate() {
            m[(r, c)] = x[var.offset + j];
            if matches!(var.kind, VarKind::Symmetric(_)) {
                m[(c, r)] = x[var.offset + j];
            }
        }
        m
    }

    /// Sets the 1×1 objective to be minimized.
    pub fn minimize(&mut self, objective: AffineExpr) -> Result<()> {
        if objective.shape() != (1, 1) {
            return Err(Error::Model(format!(
                "objective must be 1x1, got {:?}",
                objective.shape()
            )));
        }
        self.check_refs("objective", &objective)?;
        self.objective = objective.prune();
        Ok(())
    }

    /// `expr ⪯ 0`. The expression is replaced by its symmetric part after
    /// checking that it is symmetric to rounding.
    pub fn add_lmi(&mut self, label: &str, expr: AffineExpr) -> Result<()> {
        let (r, c) = expr.shape();
        if r != c || r == 0 {
            return Err(Error::Model(format!("LMI '{label}' must be square, got {r}x{c}")));
        }
        if expr.asymmetry() > SYMMETRY_TOL * expr_scale(&expr) {
            return Err(Error::Model(format!("LMI '{label}' is not symmetric-valued")));
        }
        self.check_refs(label, &expr)?;
        self.push(label, ConstraintKind::Lmi(expr.symmetric_part().prune()));
        Ok(())
    }

    /// `expr = 0`. Symmetric-valued expressions contribute their upper
    /// triangle only.
    pub fn add_equality(&mut self, label: &str, expr: AffineExpr) -> Result<()> {
        self.check_refs(label, &expr)?;
        let (r, c) = expr.shape();
        let symmetric = r == c && expr.asymmetry() <= SYMMETRY_TOL * expr_scale(&expr);
        let expr = if symmetric { expr.symmetric_part() } else { expr };
        self.push(
            label,
            ConstraintKind::Equality {
                expr: expr.prune(),
                symmetric,
            },
        );
        Ok(())
    }

    /// Scalar `expr ≤ 0`.
    pub fn add_inequality(&mut self, label: &str, expr: AffineExpr) -> Result<()> {
        if expr.shape() != (1, 1) {
            return Err(Error::Model(format!(
                "inequality '{label}' must be 1x1, got {:?}",
                expr.shape()
            )));
        }
        self.check_refs(label, &expr)?;
        self.push(label, ConstraintKind::Inequality(expr.prune()));
        Ok(())
    }

    /// The symmetric variable is PSD.
    pub fn add_psd(&mut self, label: &str, id: VarId) -> Result<()> {
        let var = self
            .variables
            .get(id.0)
            .ok_or_else(|| Error::Model(format!("PSD '{label}' references unknown variable")))?;
        if !matches!(var.kind, VarKind::Symmetric(_)) {
            return Err(Error::Model(format!(
                "PSD '{label}' requires a symmetric variable, '{}' is rectangular",
                var.name
            )));
        }
        self.push(label, ConstraintKind::Psd(id));
        Ok(())
    }

    fn push(&mut self, label: &str, kind: ConstraintKind) {
        self.constraints.push(Constraint {
            label: label.to_string(),
            kind,
        });
    }

    fn check_refs(&self, label: &str, expr: &AffineExpr) -> Result<()> {
        match expr.terms().map(|(i, _)| i).max() {
            Some(i) if i >= self.unknowns => Err(Error::Model(format!("'{label}' references undeclared unknown {i}"))),
            _ => Ok(()),
        }
    }

    /// Constraint value at `x`, with the sign convention that the
    /// constraint holds when the result is ⪯ 0 (Lmi/Psd), = 0 or ≤ 0.
    pub(crate) fn constraint_value(&self, c: &Constraint, x: &[f64]) -> DMatrix<f64> {
        match &c.kind {
            ConstraintKind::Lmi(e) => e.eval(x),
            ConstraintKind::Equality { expr, .. } => expr.eval(x),
            ConstraintKind::Inequality(e) => e.eval(x),
            ConstraintKind::Psd(id) => -self.value(*id, x),
        }
    }
}

fn expr_scale(expr: &AffineExpr) -> f64 {
    std::iter::once(expr.constant_term())
        .chain(expr.terms().map(|(_, m)| m))
        .map(|m| m.amax())
        .fold(1.0f64, f64::max)
}

/// Matrix positions of the unknowns of a variable, in parameter order.
/// Symmetric variables list the upper triangle column by column.
fn unit_positions(kind: VarKind) -> Vec<(usize, usize)> {
    match kind {
        VarKind::Symmetric(k) => (0..k).flat_map(|j| (0..=j).map(move |i| (i, j))).collect(),
        VarKind::Rectangular(r, c) => (0..c).flat_map(|j| (0..r).map(move |i| (i, j))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn variable_parameterization() {
        let mut m = SdpModel::new();
        let s = m.add_symmetric("S", 3);
        let x = m.add_rectangular("X", 2, 3);
        assert_eq!(m.num_unknowns(), 6 + 6);
        let vals: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let sv = m.value(s, &vals);
        assert_eq!(sv, dmatrix![0.0, 1.0, 3.0; 1.0, 2.0, 4.0; 3.0, 4.0, 5.0]);
        assert_eq!(m.expr(s).eval(&vals), sv);
        let xv = m.value(x, &vals);
        assert_eq!(xv, dmatrix![6.0, 8.0, 10.0; 7.0, 9.0, 11.0]);
        assert_eq!(m.expr(x).eval(&vals), xv);
    }

    #[test]
    fn malformed_constraints_are_rejected() {
        let mut m = SdpModel::new();
        let x = m.add_rectangular("X", 2, 2);
        assert!(m.add_lmi("asym", m.expr(x)).is_err());
        assert!(m.add_psd("rect", x).is_err());
        assert!(m.add_inequality("matrix", m.expr(x)).is_err());
        assert!(m.minimize(m.expr(x)).is_err());
        let mut other = SdpModel::new();
        let y = other.add_symmetric("Y", 4);
        assert!(m.add_lmi("foreign", other.expr(y)).is_err());
    }
}
