//! Performance cost, observability Gramians and the two adversarial
//! observability metrics `tr(W V)` and `-tr(W^{-1} V^{-1})`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::system::LinearSystem;

/// Maximum number of quadrature steps before the oracle gives up.
const QUADRATURE_STEP_CAP: usize = 50_000_000;

/// Spectrum summary of a Gramian in the layout of a per-gain report row.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianReport {
    pub trace_w: f64,
    /// `None` marks a numerically singular Gramian.
    pub trace_w_inv: Option<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
}

fn closed_loop_checked(sys: &LinearSystem, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if k.shape() != (sys.inputs(), sys.states()) {
        return Err(Error::Dimension(format!(
            "gain must be {}x{}, got {:?}",
            sys.inputs(),
            sys.states(),
            k.shape()
        )));
    }
    let a_cl = sys.closed_loop(k);
    let (stable, eig) = linalg::is_hurwitz(&a_cl)?;
    if !stable {
        return Err(Error::UnstableGain {
            max_real_part: eig.max_real_part,
        });
    }
    Ok(a_cl)
}

/// Expected LQR cost `J_s = tr(P V)` with `P` the closed-loop Lyapunov
/// solution for `Q + K^T R K`.
pub fn performance_cost(
    sys: &LinearSystem,
    k: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    let a_cl = closed_loop_checked(sys, k)?;
    let p = linalg::solve_lyapunov_obs(&a_cl, &(q + k.transpose() * r * k))?;
    Ok(((&p * v).trace(), p))
}

/// Gramian of `(A + B K, C)` with `C^T C` replaced by `C^T C + epsilon I`.
pub fn observability_gramian(sys: &LinearSystem, k: &DMatrix<f64>, epsilon: f64) -> Result<DMatrix<f64>> {
    if epsilon < 0.0 {
        return Err(Error::Dimension("epsilon must be nonnegative".into()));
    }
    let a_cl = closed_loop_checked(sys, k)?;
    let n = sys.states();
    let qs = sys.c.transpose() * &sys.c + DMatrix::identity(n, n) * epsilon;
    linalg::solve_lyapunov_obs(&a_cl, &qs)
}

/// `tr(W V)`: average output energy over initial states with covariance V.
pub fn metric_j_o1(w: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    (w * v).trace()
}

/// True when `lambda_min(W) <= 1e-12 * max(1, ||W||)`.
pub fn is_numerically_singular(w: &DMatrix<f64>) -> bool {
    let ev = linalg::sym_eigenvalues(w);
    let min = ev.first().copied().unwrap_or(0.0);
    let norm = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    min <= 1e-12 * norm.max(1.0)
}

/// `-tr(W^{-1} V^{-1})`, or `None` when the Gramian is numerically singular.
pub fn metric_j_o2(w: &DMatrix<f64>, v: &DMatrix<f64>) -> Option<f64> {
    if w.is_empty() || is_numerically_singular(w) {
        return None;
    }
    let w_inv = w.clone().try_inverse()?;
    let v_inv = v.clone().try_inverse()?;
    Some(-(w_inv * v_inv).trace())
}

/// Composite-Simpson quadrature of `int_0^T e^{A^T t} Qs e^{A t} dt`,
/// truncated once `||e^{A t}|| < horizon_tol`.
///
/// The step is `1e-3 / max |eig(A)|`, so the fastest mode is resolved with a
/// thousand points per time constant. Independent of the Lyapunov solver.
pub fn gramian_quadrature(a_cl: &DMatrix<f64>, qs: &DMatrix<f64>, horizon_tol: f64) -> Result<DMatrix<f64>> {
    let n = a_cl.nrows();
    if !a_cl.is_square() || qs.shape() != (n, n) {
        return Err(Error::Dimension("quadrature shapes".into()));
    }
    let (stable, eig) = linalg::is_hurwitz(a_cl)?;
    if !stable {
        return Err(Error::UnstableMatrix {
            max_real_part: eig.max_real_part,
        });
    }
    let rate = eig.eigenvalues.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let h = 1e-3 / rate;
    let step = (a_cl * h).exp();
    let integrand = |e: &DMatrix<f64>| e.transpose() * qs * e;

    let mut e = DMatrix::<f64>::identity(n, n);
    let mut acc = integrand(&e);
    let mut steps = 0usize;
    loop {
        let e1 = &e * &step;
        let e2 = &e1 * &step;
        let f2 = integrand(&e2);
        acc += integrand(&e1) * 4.0 + &f2 * 2.0;
        e = e2;
        steps += 2;
        if e.norm() < horizon_tol {
            // last endpoint was added with weight 2; Simpson wants 1
            acc -= f2;
            break;
        }
        if steps >= QUADRATURE_STEP_CAP {
            return Err(Error::IllConditionedLyapunov);
        }
    }
    Ok(linalg::symmetrize(&(acc * (h / 3.0))))
}

/// Descending eigenvalues and both traces of a symmetric PSD Gramian.
pub fn eigen_report(w: &DMatrix<f64>) -> GramianReport {
    let mut eigenvalues = linalg::sym_eigenvalues(w);
    eigenvalues.reverse();
    let trace_w_inv = if is_numerically_singular(w) {
        None
    } else {
        Some(eigenvalues.iter().map(|v| 1.0 / v).sum())
    };
    GramianReport {
        trace_w: w.trace(),
        trace_w_inv,
        eigenvalues,
    }
}
