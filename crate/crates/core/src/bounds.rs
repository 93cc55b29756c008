//! Gain-distance envelope `f(lambda)` and the lower bounds on the optimal
//! values of both design problems, plus the sensor-subset ordering check.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gramian;
use crate::linalg;
use crate::system::{DesignWeights, LinearSystem};

/// Nominal LQR solution and the Lyapunov solutions built on it.
#[derive(Debug, Clone)]
pub struct StarMatrices {
    pub k_star: DMatrix<f64>,
    pub p_star: DMatrix<f64>,
    /// `F Z + Z F^T + V = 0` with `F = A + B K*`.
    pub z_star: DMatrix<f64>,
    /// `F S + S F^T + I = 0`.
    pub s_star: DMatrix<f64>,
    /// `F^T U + U F + I = 0`.
    pub u_star: DMatrix<f64>,
    pub closed_loop: DMatrix<f64>,
}

pub fn star_matrices(sys: &LinearSystem, q: &DMatrix<f64>, r: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<StarMatrices> {
    let (p_star, k_star) = linalg::solve_care(&sys.a, &sys.b, q, r)?;
    let f = sys.closed_loop(&k_star);
    let eye = DMatrix::identity(sys.states(), sys.states());
    Ok(StarMatrices {
        z_star: linalg::solve_lyapunov_ctrl(&f, v)?,
        s_star: linalg::solve_lyapunov_ctrl(&f, &eye)?,
        u_star: linalg::solve_lyapunov_obs(&f, &eye)?,
        k_star,
        p_star,
        closed_loop: f,
    })
}

fn inverse_norm(v: &DMatrix<f64>) -> f64 {
    1.0 / linalg::min_sym_eigenvalue(v)
}

/// Upper bound on `||K - K*||` for any gain within budget `lambda`.
///
/// Largest root of `c2 k^2 - 2 lambda c1 k - lambda = 0` with
/// `c1 = ||Z*|| ||V^-1|| ||B||` and `c2 = lambda_min(Z*) lambda_min(R)`,
/// evaluated without cancellation at both ends of the range.
pub fn f_lambda(lambda: f64, stars: &StarMatrices, b: &DMatrix<f64>, r: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let c1 = linalg::spectral_norm(&stars.z_star) * inverse_norm(v) * linalg::spectral_norm(b);
    let c2 = linalg::min_sym_eigenvalue(&stars.z_star) * linalg::min_sym_eigenvalue(r);
    (lambda * c1 + (lambda * lambda * c1 * c1 + lambda * c2).sqrt()) / c2
}

/// `J1(0) / (1 + 2 tr(Z*) f ||V^-1|| ||B||)`.
pub fn j1_lower_bound(f: f64, stars: &StarMatrices, b: &DMatrix<f64>, v: &DMatrix<f64>, j1_at_zero: f64) -> f64 {
    j1_at_zero / (1.0 + 2.0 * stars.z_star.trace() * f * inverse_norm(v) * linalg::spectral_norm(b))
}

/// Local bound on the inverse-trace optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBound {
    pub value: f64,
    /// Inner denominator positive and outer denominator in `(0, 1]`.
    pub valid: bool,
    /// Same expression with `tr(W^-1 V^-1)` in place of `tr(W^-1)`.
    pub variant_value: f64,
    pub variant_valid: bool,
}

/// `J2(0) / (1 - 2 kappa(V) f ||V|| ||B|| ||U*|| tr(W0) t / (1 - 2 tr(S*) f ||B||))`
/// with `t = tr(W0^-1)`, `W0` the regularized Gramian at `K*` and
/// `J2(0) = -tr(W0^-1 V^-1)`.
pub fn j2_lower_bound_local(
    f: f64,
    stars: &StarMatrices,
    b: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w_eps_zero: &DMatrix<f64>,
) -> Result<LocalBound> {
    let w_inv = linalg::inverse(w_eps_zero, "regularized Gramian")?;
    let v_inv = linalg::inverse(v, "V")?;
    let j2_zero = -(&w_inv * &v_inv).trace();
    let ev = linalg::sym_eigenvalues(v);
    let kappa = ev[ev.len() - 1] / ev[0];
    let nb = linalg::spectral_norm(b);
    let inner = 1.0 - 2.0 * stars.s_star.trace() * f * nb;
    let lead = 2.0 * kappa * f * ev[ev.len() - 1] * nb * linalg::spectral_norm(&stars.u_star) * w_eps_zero.trace();
    let eval = |t: f64| {
        let outer = 1.0 - lead * t / inner;
        let valid = inner > 0.0 && outer > 0.0 && outer <= 1.0;
        (j2_zero / outer, valid)
    };
    let (value, valid) = eval(w_inv.trace());
    let (variant_value, variant_valid) = eval(-j2_zero);
    Ok(LocalBound {
        value,
        valid,
        variant_value,
        variant_valid,
    })
}

/// `-2 tr(V^-1) (||A + B K*|| + ||B|| f) / epsilon`.
pub fn j2_lower_bound_global(
    f: f64,
    b: &DMatrix<f64>,
    v: &DMatrix<f64>,
    epsilon: f64,
    a_cl_star_norm: f64,
) -> Result<f64> {
    let v_inv = linalg::inverse(v, "V")?;
    Ok(-2.0 * v_inv.trace() * (a_cl_star_norm + linalg::spectral_norm(b) * f) / epsilon)
}

/// Bound values at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffReport {
    pub lambda: f64,
    pub f_lambda: f64,
    pub j1_lower: f64,
    pub j2_lower_local: f64,
    pub j2_lower_local_valid: bool,
    pub j2_lower_local_variant: f64,
    pub j2_lower_local_variant_valid: bool,
    pub j2_lower_global: f64,
    /// Best of the valid local bound and the global bound.
    pub j2_lower_best: f64,
}

/// Everything about the nominal design that the bounds need; computed once
/// per configuration.
#[derive(Debug, Clone)]
pub struct BoundContext {
    pub stars: StarMatrices,
    /// `tr(W0 V)` with the unregularized Gramian at `K*`.
    pub j1_at_zero: f64,
    /// `-tr(W0_eps^-1 V^-1)`.
    pub j2_at_zero: f64,
    pub w_eps_zero: DMatrix<f64>,
    pub a_cl_star_norm: f64,
}

impl BoundContext {
    pub fn new(sys: &LinearSystem, w: &DesignWeights) -> Result<Self> {
        let stars = star_matrices(sys, &w.q, &w.r, &w.v)?;
        let w0 = gramian::observability_gramian(sys, &stars.k_star, 0.0)?;
        let w_eps_zero = gramian::observability_gramian(sys, &stars.k_star, w.epsilon)?;
        let j2_at_zero = gramian::metric_j_o2(&w_eps_zero, &w.v)
            .ok_or_else(|| Error::Dimension("regularized Gramian at the nominal gain is singular".into()))?;
        Ok(Self {
            j1_at_zero: gramian::metric_j_o1(&w0, &w.v),
            j2_at_zero,
            a_cl_star_norm: linalg::spectral_norm(&stars.closed_loop),
            w_eps_zero,
            stars,
        })
    }

    pub fn report(&self, sys: &LinearSystem, w: &DesignWeights, lambda: f64) -> Result<TradeoffReport> {
        let f = f_lambda(lambda, &self.stars, &sys.b, &w.r, &w.v);
        let local = j2_lower_bound_local(f, &self.stars, &sys.b, &w.v, &self.w_eps_zero)?;
        let global = j2_lower_bound_global(f, &sys.b, &w.v, w.epsilon, self.a_cl_star_norm)?;
        let best = if local.valid { local.value.max(global) } else { global };
        Ok(TradeoffReport {
            lambda,
            f_lambda: f,
            j1_lower: j1_lower_bound(f, &self.stars, &sys.b, &w.v, self.j1_at_zero),
            j2_lower_local: local.value,
            j2_lower_local_valid: local.valid,
            j2_lower_local_variant: local.variant_value,
            j2_lower_local_variant_valid: local.variant_valid,
            j2_lower_global: global,
            j2_lower_best: best,
        })
    }
}

/// Metric comparison between a sensing matrix and a row subset of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    pub j_o1_full: f64,
    pub j_o1_subset: f64,
    pub j_o2_full: Option<f64>,
    pub j_o2_subset: Option<f64>,
    pub j_o1_ordered: bool,
    /// `None` when either inverse metric is unbounded.
    pub j_o2_ordered: Option<bool>,
    pub pass: bool,
}

const SUBSET_REL_TOL: f64 = 1e-9;

/// Checks that dropping sensor rows can only lower both metrics.
/// `row_map[i]` is the row of `sys.c` that equals row `i` of `c_hat`.
pub fn subset_monotonicity_check(
    sys: &LinearSystem,
    k: &DMatrix<f64>,
    v: &DMatrix<f64>,
    c_hat: &DMatrix<f64>,
    row_map: &[usize],
) -> Result<SubsetReport> {
    let n = sys.states();
    if c_hat.ncols() != n || row_map.len() != c_hat.nrows() {
        return Err(Error::Dimension(format!(
            "subset: C_hat {:?} with {} mapped rows",
            c_hat.shape(),
            row_map.len()
        )));
    }
    let mut seen = vec![false; sys.outputs()];
    for (i, &j) in row_map.iter().enumerate() {
        if j >= sys.outputs() || seen[j] {
            return Err(Error::Dimension(format!("subset: invalid row index {j}")));
        }
        seen[j] = true;
        if c_hat.row(i) != sys.c.row(j) {
            return Err(Error::Dimension(format!("subset: row {i} differs from row {j} of C")));
        }
    }
    let w_full = gramian::observability_gramian(sys, k, 0.0)?;
    let w_sub = gramian::observability_gramian(&sys.with_sensing(c_hat.clone()), k, 0.0)?;
    let j_o1_full = gramian::metric_j_o1(&w_full, v);
    let j_o1_subset = gramian::metric_j_o1(&w_sub, v);
    let j_o2_full = gramian::metric_j_o2(&w_full, v);
    let j_o2_subset = gramian::metric_j_o2(&w_sub, v);
    let leq = |a: f64, b: f64| a <= b + SUBSET_REL_TOL * b.abs().max(1.0);
    let j_o1_ordered = leq(j_o1_subset, j_o1_full);
    let j_o2_ordered = match (j_o2_subset, j_o2_full) {
        (Some(s), Some(f)) => Some(leq(s, f)),
        _ => None,
    };
    Ok(SubsetReport {
        j_o1_full,
        j_o1_subset,
        j_o2_full,
        j_o2_subset,
        j_o1_ordered,
        j_o2_ordered,
        pass: j_o1_ordered && j_o2_ordered.unwrap_or(true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_stars_and_envelope() {
        let (sys, w) = presets::scalar_unit();
        let stars = star_matrices(&sys, &w.q, &w.r, &w.v).unwrap();
        let z = 1.0 / (2.0 * 2f64.sqrt());
        assert_relative_eq!(stars.z_star[(0, 0)], z, epsilon = 1e-12);
        assert_relative_eq!(stars.s_star[(0, 0)], z, epsilon = 1e-12);
        assert_eq!(f_lambda(0.0, &stars, &sys.b, &w.r, &w.v), 0.0);
        let f = f_lambda(1.0, &stars, &sys.b, &w.r, &w.v);
        assert_relative_eq!(f, 1.0 + (1.0 + 2.0 * 2f64.sqrt()).sqrt(), epsilon = 1e-12);
        assert!((f - 2.9566).abs() < 1e-4);

        let global = j2_lower_bound_global(f, &sys.b, &w.v, 1e-4, 2f64.sqrt()).unwrap();
        assert_relative_eq!(global, -2.0 * (2f64.sqrt() + f) / 1e-4, epsilon = 1e-9);
        assert!((global + 8.74e4).abs() < 0.01e4);
    }

    #[test]
    fn stars_on_constructed_closed_loop() {
        // closed loop -I with V = 2I
        let f = -DMatrix::<f64>::identity(2, 2);
        let v = DMatrix::identity(2, 2) * 2.0;
        let z = linalg::solve_lyapunov_ctrl(&f, &v).unwrap();
        let s = linalg::solve_lyapunov_ctrl(&f, &DMatrix::identity(2, 2)).unwrap();
        let u = linalg::solve_lyapunov_obs(&f, &DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(z, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_relative_eq!(s, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-14);
        assert_relative_eq!(u, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-14);
    }

    #[test]
    fn u_star_is_observability_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let b = DMatrix::from_fn(3, 1, |_, _| rng.random_range(-1.0..1.0));
            let sys = LinearSystem::new(a, b, DMatrix::identity(1, 3)).unwrap();
            let eye = DMatrix::identity(3, 3);
            let stars = star_matrices(&sys, &eye, &dmatrix![1.0], &eye).unwrap();
            let u = linalg::solve_lyapunov_obs(&stars.closed_loop, &eye).unwrap();
            assert_relative_eq!(stars.u_star, u, epsilon = 1e-12);
        }
    }

    #[test]
    fn bounds_at_zero_budget() {
        let (sys, w) = presets::double_integrator();
        let ctx = BoundContext::new(&sys, &w).unwrap();
        let r = ctx.report(&sys, &w, 0.0).unwrap();
        assert_eq!(r.f_lambda, 0.0);
        assert_eq!(r.j1_lower, ctx.j1_at_zero);
        assert!(r.j2_lower_local_valid);
        assert_relative_eq!(r.j2_lower_local, ctx.j2_at_zero, epsilon = 1e-12);
        let expected = -2.0 * 2.0 * ctx.a_cl_star_norm / w.epsilon;
        assert_relative_eq!(r.j2_lower_global, expected, epsilon = 1e-12);
        assert_eq!(r.j2_lower_best, r.j2_lower_local);
    }

    #[test]
    fn bounds_along_a_grid() {
        let (sys, w) = presets::double_integrator();
        let ctx = BoundContext::new(&sys, &w).unwrap();
        let grid = [1e-4, 1e-3, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4];
        let rows: Vec<_> = grid.iter().map(|&l| ctx.report(&sys, &w, l).unwrap()).collect();
        for pair in rows.windows(2) {
            assert!(pair[1].f_lambda > pair[0].f_lambda);
            assert!(pair[1].j1_lower <= pair[0].j1_lower);
            assert!(pair[1].j2_lower_global <= pair[0].j2_lower_global);
        }
        for r in &rows {
            assert!(r.j1_lower <= ctx.j1_at_zero);
            assert!(r.j2_lower_global.is_finite());
            if !r.j2_lower_local_valid {
                assert_eq!(r.j2_lower_best, r.j2_lower_global);
            }
        }
        assert!(!rows.last().unwrap().j2_lower_local_valid);
    }

    #[test]
    fn asymptotic_orders() {
        let (sys, w) = presets::double_integrator();
        let stars = star_matrices(&sys, &w.q, &w.r, &w.v).unwrap();
        let f = |l: f64| f_lambda(l, &stars, &sys.b, &w.r, &w.v);
        let small = (f(1e-8) / 1e-4) / (f(1e-6) / 1e-3);
        let large = (f(1e6) / 1e6) / (f(1e8) / 1e8);
        assert!((small - 1.0).abs() < 0.05, "{small}");
        assert!((large - 1.0).abs() < 0.05, "{large}");
    }

    #[test]
    fn subset_examples() {
        let (sys, w) = presets::double_integrator();
        let full = sys.with_sensing(DMatrix::identity(2, 2));
        let stars = star_matrices(&sys, &w.q, &w.r, &w.v).unwrap();
        let k = &stars.k_star;

        let same = subset_monotonicity_check(&full, k, &w.v, &full.c, &[0, 1]).unwrap();
        assert!(same.pass);
        assert_eq!(same.j_o1_full, same.j_o1_subset);

        let first = subset_monotonicity_check(&full, k, &w.v, &dmatrix![1.0, 0.0], &[0]).unwrap();
        assert!(first.pass && first.j_o2_ordered == Some(true));

        let empty = subset_monotonicity_check(&full, k, &w.v, &DMatrix::zeros(0, 2), &[]).unwrap();
        assert_eq!(empty.j_o1_subset, 0.0);
        assert_eq!(empty.j_o2_subset, None);
        assert!(empty.pass);

        assert!(subset_monotonicity_check(&full, k, &w.v, &dmatrix![0.0, 1.0], &[0]).is_err());
    }
}
