//! Plant, adversary, and design configuration types.

use nalgebra::DMatrix;

use crate::error::{Error, Issue, Result};
use crate::linalg;

/// Plant `x' = A x + B u` observed by an adversary through `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl LinearSystem {
    /// Builds a system after checking that the shapes agree.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let sys = Self { a, b, c };
        let issues = sys.dimension_issues();
        if issues.is_empty() {
            Ok(sys)
        } else {
            Err(Error::Config(issues))
        }
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn closed_loop(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a + &self.b * k
    }

    /// Same plant, different adversary sensing matrix.
    pub fn with_sensing(&self, c: DMatrix<f64>) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c,
        }
    }

    fn dimension_issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let n = self.a.nrows();
        if !self.a.is_square() {
            issues.push(issue("A", format!("must be square, got {:?}", self.a.shape())));
        }
        if n == 0 {
            issues.push(issue("A", "must have at least one state".into()));
        }
        if self.b.nrows() != n {
            issues.push(issue("B", format!("must have {n} rows, got {}", self.b.nrows())));
        }
        if self.b.ncols() == 0 {
            issues.push(issue("B", "must have at least one input".into()));
        }
        if self.c.ncols() != n {
            issues.push(issue("C", format!("must have {n} columns, got {}", self.c.ncols())));
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        for (name, m) in [("A", &self.a), ("B", &self.b), ("C", &self.c)] {
            if !finite(m) {
                issues.push(issue(name, "contains non-finite entries".into()));
            }
        }
        issues
    }
}

/// Cost weights, covariance, budget and algorithm tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignWeights {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Allowed excess `tr((P - P*) V)` over the optimal LQR cost.
    pub lambda: f64,
    /// Gramian regularization for the inverse-trace metric.
    pub epsilon: f64,
    /// Stopping tolerance of the sequential SDP.
    pub delta: f64,
}

/// A synthesized gain with its certificates and metric values.
#[derive(Debug, Clone)]
pub struct ControllerDesign {
    pub gain: DMatrix<f64>,
    pub closed_loop: DMatrix<f64>,
    /// Lyapunov certificate of the LQR cost at `gain`.
    pub p: DMatrix<f64>,
    /// Observability Gramian at `gain`, regularized by `epsilon`.
    pub w: DMatrix<f64>,
    pub epsilon: f64,
    pub j_s: f64,
    pub j_o1: f64,
    /// `None` when the Gramian is numerically singular.
    pub j_o2: Option<f64>,
    /// `lambda - tr((P - P*) V)`.
    pub performance_slack: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn issue(field: &str, message: String) -> Issue {
    Issue {
        field: field.to_string(),
        message,
    }
}

/// Kalman rank test on `[B, AB, ..., A^{n-1} B]`.
pub fn check_controllability(sys: &LinearSystem) -> Result<bool> {
    let issues = sys.dimension_issues();
    if !issues.is_empty() {
        return Err(Error::Config(issues));
    }
    let n = sys.states();
    let m = sys.inputs();
    let mut ctrb = DMatrix::zeros(n, n * m);
    let mut block = sys.b.clone();
    for k in 0..n {
        ctrb.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = &sys.a * block;
    }
    Ok(linalg::numerical_rank(&ctrb) == n)
}

/// Kalman rank test on the stacked `[C; C A; ...; C A^{n-1}]`.
pub fn check_observability(a_cl: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<bool> {
    if !a_cl.is_square() || c.ncols() != a_cl.nrows() {
        return Err(Error::Config(vec![issue(
            "C",
            format!(
                "shape {:?} incompatible with state matrix {:?}",
                c.shape(),
                a_cl.shape()
            ),
        )]));
    }
    Ok(linalg::observable_pair(a_cl, c))
}

/// Dimension and definiteness checks for a plant/weights pair.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub system: LinearSystem,
    pub weights: DesignWeights,
}

fn definiteness(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = linalg::sym_eigenvalues(m);
    let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (ev.first().copied().unwrap_or(0.0), scale)
}

fn check_symmetric(name: &str, m: &DMatrix<f64>, issues: &mut Vec<Issue>) {
    let asym = (m - m.transpose()).amax();
    if asym > 1e-8 * (1.0 + m.amax()) {
        issues.push(issue(name, format!("not symmetric (asymmetry {asym:.3e})")));
    }
}

/// Checks every invariant of [`LinearSystem`] and [`DesignWeights`] and
/// reports all violations at once.
pub fn validate(sys: &LinearSystem, w: &DesignWeights) -> Result<ValidatedConfig> {
    let mut issues = sys.dimension_issues();
    let n = sys.a.nrows();
    let m = sys.b.ncols();

    for (name, mat, dim) in [("Q", &w.q, n), ("R", &w.r, m), ("V", &w.v, n)] {
        if mat.shape() != (dim, dim) {
            issues.push(issue(name, format!("must be {dim}x{dim}, got {:?}", mat.shape())));
        } else if mat.iter().any(|v| !v.is_finite()) {
            issues.push(issue(name, "contains non-finite entries".into()));
        } else {
            check_symmetric(name, mat, &mut issues);
        }
    }
    if issues.iter().all(|i| i.field != "Q") && w.q.shape() == (n, n) {
        let (min, scale) = definiteness(&w.q);
        if min < -1e-10 * scale {
            issues.push(issue("Q", "Q not positive semidefinite".into()));
        }
    }
    for (name, mat, dim) in [("R", &w.r, m), ("V", &w.v, n)] {
        if issues.iter().all(|i| i.field != name) && mat.shape() == (dim, dim) {
            let (min, scale) = definiteness(mat);
            if min <= 1e-10 * scale || scale == 0.0 {
                issues.push(issue(name, format!("{name} not positive definite")));
            }
        }
    }
    if !w.lambda.is_finite() || w.lambda < 0.0 {
        issues.push(issue("lambda", "lambda negative".into()));
    }
    if !(w.epsilon.is_finite() && w.epsilon > 0.0) {
        issues.push(issue("epsilon", "epsilon must be positive".into()));
    }
    if !(w.delta.is_finite() && w.delta > 0.0) {
        issues.push(issue("delta", "delta must be positive".into()));
    }
    if sys.dimension_issues().is_empty() && !check_controllability(sys)? {
        issues.push(issue("B", "(A, B) is not controllable".into()));
    }

    if issues.is_empty() {
        Ok(ValidatedConfig {
            system: sys.clone(),
            weights: w.clone(),
        })
    } else {
        Err(Error::Config(issues))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::double_integrator;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    #[test]
    fn controllability_examples() {
        let (sys, _) = double_integrator();
        assert!(check_controllability(&sys).unwrap());
        let sys = LinearSystem::new(DMatrix::identity(2, 2), dmatrix![1.0; 0.0], dmatrix![1.0, 0.0]).unwrap();
        assert!(!check_controllability(&sys).unwrap());
        let a = dmatrix![0.3, -1.2, 0.7, 2.0; 0.1, 0.0, -0.4, 1.1; -2.0, 0.5, 0.9, 0.0; 1.0, 1.0, -1.0, 0.2];
        let sys = LinearSystem::new(a, DMatrix::identity(4, 4), DMatrix::identity(1, 4)).unwrap();
        assert!(check_controllability(&sys).unwrap());
    }

    #[test]
    fn observability_examples() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        assert!(check_observability(&a, &dmatrix![1.0, 0.0]).unwrap());
        assert!(!check_observability(&a, &dmatrix![0.0, 1.0]).unwrap());
        assert!(check_observability(&(-DMatrix::identity(2, 2)), &DMatrix::identity(2, 2)).unwrap());
        assert!(check_observability(&a, &dmatrix![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = LinearSystem::new(DMatrix::identity(2, 2), dmatrix![1.0], dmatrix![1.0, 0.0]);
        match err {
            Err(Error::Config(issues)) => assert_eq!(issues[0].field, "B"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_examples() {
        let (sys, w) = double_integrator();
        assert!(validate(&sys, &w).is_ok());

        let mut bad = w.clone();
        bad.r = dmatrix![0.0];
        let msg = validate(&sys, &bad).unwrap_err().to_string();
        assert!(msg.contains("R not positive definite"), "{msg}");

        let mut bad = w.clone();
        bad.lambda = -1.0;
        let msg = validate(&sys, &bad).unwrap_err().to_string();
        assert!(msg.contains("lambda negative"), "{msg}");

        let mut bad = w.clone();
        bad.q = dmatrix![1.0, 0.0; 0.0, -1.0];
        bad.epsilon = 0.0;
        match validate(&sys, &bad) {
            Err(Error::Config(issues)) => {
                let fields: Vec<_> = issues.iter().map(|i| i.field.as_str()).collect();
                assert!(fields.contains(&"Q") && fields.contains(&"epsilon"), "{fields:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_tolerates_rounding_asymmetry() {
        let (sys, mut w) = double_integrator();
        w.v[(0, 1)] = 1e-14;
        assert!(validate(&sys, &w).is_ok());
    }

    proptest! {
        #[test]
        fn controllability_invariant_under_input_change(
            a in proptest::collection::vec(-2.0f64..2.0, 9),
            b in proptest::collection::vec(-1.0f64..1.0, 6),
            t in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let a = DMatrix::from_row_slice(3, 3, &a);
            let b = DMatrix::from_row_slice(3, 2, &b);
            let t = DMatrix::from_row_slice(2, 2, &t);
            prop_assume!(t.determinant().abs() > 0.1);
            let c = DMatrix::identity(1, 3);
            let s1 = LinearSystem::new(a.clone(), b.clone(), c.clone()).unwrap();
            let s2 = LinearSystem::new(a, &b * &t, c).unwrap();
            prop_assert_eq!(check_controllability(&s1).unwrap(), check_controllability(&s2).unwrap());
        }
    }
}
