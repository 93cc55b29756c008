//! Dense solvers for the small matrix equations used by the designers:
//! Lyapunov (both orientations), the continuous algebraic Riccati equation,
//! PSD square roots, Hurwitz tests, and observer pole placement.
//!
//! All routines are sized for desk-scale problems (n up to a few dozen).

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, LU, SVD};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Real parts strictly below this are considered stable.
pub const HURWITZ_MARGIN: f64 = 1e-9;

const CARE_MAX_ITERS: usize = 100;
const CARE_TARGET: f64 = 1e-10;
const PLACEMENT_RETRIES: usize = 10;

/// Eigenvalues of a square matrix together with the spectral abscissa.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub min_real_part: f64,
    pub max_real_part: f64,
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .fold(0.0, |a, &s| a.max(s))
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Numerical rank with the threshold `max(rows, cols) * ||M|| * 1e-12`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let largest = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    if largest == 0.0 {
        return 0;
    }
    let threshold = m.nrows().max(m.ncols()) as f64 * largest * 1e-12;
    sv.iter().filter(|&&s| s > threshold).count()
}

pub fn spectrum(m: &DMatrix<f64>) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "spectrum of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            min_real_part: f64::INFINITY,
            max_real_part: f64::NEG_INFINITY,
        });
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Dimension("Schur decomposition did not converge".into()))?;
    let eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    let min_real_part = eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_real_part = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(Spectrum {
        eigenvalues,
        min_real_part,
        max_real_part,
    })
}

/// True iff every eigenvalue has real part below `-1e-9`.
pub fn is_hurwitz(m: &DMatrix<f64>) -> Result<(bool, Spectrum)> {
    let eig = spectrum(m)?;
    Ok((eig.max_real_part < -HURWITZ_MARGIN, eig))
}

fn require_hurwitz(a: &DMatrix<f64>) -> Result<()> {
    let (stable, eig) = is_hurwitz(a)?;
    if stable {
        Ok(())
    } else {
        Err(Error::UnstableMatrix {
            max_real_part: eig.max_real_part,
        })
    }
}

/// Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
            }
        }
    }
    out
}

/// Solve the vectorized linear system `op * vec(X) = rhs` and reshape.
fn solve_vectorized(op: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = rhs.shape();
    let lu = LU::new(op.clone());
    let u = lu.u();
    let pivots: Vec<f64> = u.diagonal().iter().map(|v| v.abs()).collect();
    let pmax = pivots.iter().fold(0.0f64, |a, &b| a.max(b));
    let pmin = pivots.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if pmax == 0.0 || pmin <= 1e-14 * pmax {
        return Err(Error::IllConditionedLyapunov);
    }
    let b = DVector::from_column_slice(rhs.as_slice());
    let mut x = lu.solve(&b).ok_or(Error::IllConditionedLyapunov)?;
    // one round of iterative refinement
    let r = &b - &op * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(DMatrix::from_column_slice(rows, cols, x.as_slice()))
}

/// Solves `A_cl^T W + W A_cl + Qs = 0` for Hurwitz `A_cl`.
pub fn solve_lyapunov_obs(a_cl: &DMatrix<f64>, qs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a_cl.nrows();
    if !a_cl.is_square() || qs.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "Lyapunov: A is {:?}, Q is {:?}",
            a_cl.shape(),
            qs.shape()
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    require_hurwitz(a_cl)?;
    let at = a_cl.transpose();
    let eye = DMatrix::identity(n, n);
    let op = kron(&eye, &at) + kron(&at, &eye);
    let w = solve_vectorized(op, &(-qs))?;
    Ok(symmetrize(&w))
}

/// Solves `A_cl Z + Z A_cl^T + Vs = 0` for Hurwitz `A_cl`.
pub fn solve_lyapunov_ctrl(a_cl: &DMatrix<f64>, vs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_lyapunov_obs(&a_cl.transpose(), vs)
}

/// Residual norm of `A^T W + W A + Qs` (Frobenius).
pub fn lyapunov_obs_residual(a: &DMatrix<f64>, w: &DMatrix<f64>, qs: &DMatrix<f64>) -> f64 {
    (a.transpose() * w + w * a + qs).norm()
}

pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    (a.transpose() * p + p * a + q - p * b * r_inv * b.transpose() * p).norm()
}

pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Dimension(format!("{what} is singular")))
}

/// Stabilizing solution of `A^T P + P A + Q - P B R^{-1} B^T P = 0`.
///
/// Newton–Kleinman iteration started from a Bass-type stabilizing gain:
/// with `beta` large enough that `-(A + beta I)` is Hurwitz, the solution `Z`
/// of `(A + beta I) Z + Z (A + beta I)^T = 2 B R^{-1} B^T` is PD under
/// controllability, and `K0 = -R^{-1} B^T Z^{-1}` places the closed loop in the
/// open left half plane.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "CARE: A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let r_inv = inverse(r, "R")?;
    let brb = b * &r_inv * b.transpose();
    let eye = DMatrix::<f64>::identity(n, n);

    let beta = a.norm() + 1.0;
    let shifted = -(a + &eye * beta);
    let z = solve_lyapunov_ctrl(&shifted, &(&brb * 2.0))
        .map_err(|e| Error::CareFailure(format!("initial stabilizing gain: {e}")))?;
    let p0 = inverse(&z, "initial Gramian").map_err(|e| Error::CareFailure(e.to_string()))?;
    let mut k = -(&r_inv * b.transpose() * p0);

    let mut p = DMatrix::zeros(n, n);
    for _ in 0..CARE_MAX_ITERS {
        let a_cl = a + b * &k;
        let rhs = q + k.transpose() * r * &k;
        let p_next = solve_lyapunov_obs(&a_cl, &rhs).map_err(|e| Error::CareFailure(format!("Newton step: {e}")))?;
        let step = (&p_next - &p).norm();
        p = p_next;
        k = -(&r_inv * b.transpose() * &p);
        let res = care_residual(a, b, q, &r_inv, &p);
        let scale = 1.0 + p.norm().powi(2);
        if res <= CARE_TARGET * scale || step <= 1e-15 * (1.0 + p.norm()) {
            break;
        }
    }
    let res = care_residual(a, b, q, &r_inv, &p);
    let scale = 1.0 + spectral_norm(&p).powi(2);
    if !res.is_finite() || res > 1e-8 * scale {
        return Err(Error::CareFailure(format!(
            "residual {res:.3e} exceeds tolerance after {CARE_MAX_ITERS} iterations"
        )));
    }
    let (stable, _) = is_hurwitz(&(a + b * &k))?;
    if !stable {
        return Err(Error::CareFailure("solution is not stabilizing".into()));
    }
    Ok((p, k))
}

/// Symmetric PSD square root via eigendecomposition.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("psd_sqrt of {:?}", m.shape())));
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = eig.eigenvalues.amax().max(1.0);
    let tol = 1e-12 * scale;
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < -tol {
            return Err(Error::NotPsd { min_eigenvalue: *v });
        }
        *v = v.max(0.0).sqrt();
    }
    let u = &eig.eigenvectors;
    Ok(symmetrize(&(u * DMatrix::from_diagonal(&roots) * u.transpose())))
}

/// Splits repeated poles by `1e-6 * k` so the Sylvester placement stays
/// nonsingular. Conjugate pairs are shifted together.
pub fn perturb_repeated_poles(poles: &[Complex64]) -> Vec<Complex64> {
    poles
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let k = poles[..i]
                .iter()
                .filter(|q| (q.re - p.re).abs() < 1e-9 && (q.im - p.im).abs() < 1e-9)
                .count();
            Complex64::new(p.re + 1e-6 * k as f64, p.im)
        })
        .collect()
}

/// Real block-diagonal matrix with the given (self-conjugate) spectrum.
fn real_pole_matrix(poles: &[Complex64]) -> Result<DMatrix<f64>> {
    let n = poles.len();
    let mut g = DMatrix::zeros(n, n);
    let mut used = vec![false; n];
    let mut i = 0;
    let mut pos = 0;
    while i < n {
        if used[i] {
            i += 1;
            continue;
        }
        let p = poles[i];
        used[i] = true;
        if p.im.abs() <= 1e-12 {
            g[(pos, pos)] = p.re;
            pos += 1;
        } else {
            let partner =
                (0..n).find(|&j| !used[j] && (poles[j].re - p.re).abs() <= 1e-9 && (poles[j].im + p.im).abs() <= 1e-9);
            let Some(j) = partner else {
                return Err(Error::PlacementInfeasible(
                    "requested poles are not closed under conjugation".into(),
                ));
            };
            used[j] = true;
            g[(pos, pos)] = p.re;
            g[(pos + 1, pos + 1)] = p.re;
            g[(pos, pos + 1)] = p.im;
            g[(pos + 1, pos)] = -p.im;
            pos += 2;
        }
        i += 1;
    }
    Ok(g)
}

/// Observability test on `(A, C)` via the Kalman rank condition.
pub fn observable_pair(a: &DMatrix<f64>, c: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let p = c.nrows();
    if n == 0 {
        return true;
    }
    let mut obs = DMatrix::zeros(n * p, n);
    let mut block = c.clone();
    for k in 0..n {
        obs.view_mut((k * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    numerical_rank(&obs) == n
}

/// Observer gain `L` such that `eig(A_cl - L C)` equals the requested poles.
///
/// Sylvester method: with `G` real and carrying the requested spectrum and a
/// random `H`, solve `A_cl^T X - X G^T = C^T H`; then `L = (H X^{-1})^T`.
/// Repeated poles are split first (see [`perturb_repeated_poles`]).
pub fn place_observer_gain<R: Rng + ?Sized>(
    a_cl: &DMatrix<f64>,
    c: &DMatrix<f64>,
    poles: &[Complex64],
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = a_cl.nrows();
    let p = c.nrows();
    if !a_cl.is_square() || c.ncols() != n {
        return Err(Error::Dimension(format!(
            "placement: A {:?}, C {:?}",
            a_cl.shape(),
            c.shape()
        )));
    }
    if poles.len() != n {
        return Err(Error::Dimension(format!(
            "placement: {} poles requested for {n} states",
            poles.len()
        )));
    }
    if poles.iter().any(|z| z.re >= 0.0) {
        return Err(Error::PlacementInfeasible(
            "requested poles must have negative real part".into(),
        ));
    }
    if !observable_pair(a_cl, c) {
        return Err(Error::PlacementInfeasible("(A, C) is not observable".into()));
    }
    let poles = perturb_repeated_poles(poles);
    let g = real_pole_matrix(&poles)?;
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(A^T X) - vec(X G^T) = (I ⊗ A^T - G ⊗ I) vec X
    let op = kron(&eye, &a_cl.transpose()) - kron(&g, &eye);

    for _ in 0..PLACEMENT_RETRIES {
        let h = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
        let rhs = c.transpose() * &h;
        let x = match solve_vectorized(op.clone(), &rhs) {
            Ok(x) => x,
            Err(_) => {
                return Err(Error::PlacementFailed(
                    "requested poles overlap the open-loop spectrum".into(),
                ))
            }
        };
        let sv = SVD::new(x.clone(), false, false).singular_values;
        let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
        let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if smax == 0.0 || smin < 1e-12 * smax {
            continue;
        }
        let Some(x_inv) = x.try_inverse() else {
            continue;
        };
        return Ok((h * x_inv).transpose());
    }
    Err(Error::PlacementFailed(format!(
        "auxiliary matrix singular after {PLACEMENT_RETRIES} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hurwitz(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let eig = spectrum(&m).unwrap();
        m - DMatrix::identity(n, n) * (eig.max_real_part + 0.5)
    }

    #[test]
    fn lyapunov_trivial_cases() {
        let w = solve_lyapunov_obs(&(-DMatrix::identity(2, 2)), &(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert_relative_eq!(w, DMatrix::identity(2, 2), epsilon = 1e-12);
        let w = solve_lyapunov_obs(&dmatrix![-1.0], &dmatrix![1.0]).unwrap();
        assert_relative_eq!(w[(0, 0)], 0.5, epsilon = 1e-14);
        let z = solve_lyapunov_ctrl(&dmatrix![-(2f64.sqrt())], &dmatrix![1.0]).unwrap();
        assert_relative_eq!(z[(0, 0)], 1.0 / (2.0 * 2f64.sqrt()), epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let err = solve_lyapunov_obs(&dmatrix![0.0, 1.0; 0.0, 0.0], &DMatrix::identity(2, 2));
        assert!(matches!(err, Err(Error::UnstableMatrix { .. })));
    }

    #[test]
    fn lyapunov_residual_and_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_hurwitz(4, &mut rng);
            let c = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0));
            let q = c.transpose() * &c;
            let w = solve_lyapunov_obs(&a, &q).unwrap();
            assert!(lyapunov_obs_residual(&a, &w, &q) <= 1e-9 * (1.0 + w.norm()));
            let z1 = solve_lyapunov_ctrl(&a, &q).unwrap();
            let z2 = solve_lyapunov_obs(&a.transpose(), &q).unwrap();
            assert_relative_eq!(z1, z2, epsilon = 1e-12);
            // PD input gives PD output
            let wp = solve_lyapunov_obs(&a, &DMatrix::identity(4, 4)).unwrap();
            assert!(min_sym_eigenvalue(&wp) > 0.0);
        }
    }

    #[test]
    fn care_scalar_roots() {
        let (p, k) = solve_care(&dmatrix![0.0], &dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0]).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-10);
        assert_relative_eq!(k[(0, 0)], -1.0, epsilon = 1e-10);
        let (p, _) = solve_care(&dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0]).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0 + 2f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn care_double_integrator_matches_published_closed_loop() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let b = dmatrix![1.0; 1.0];
        let q = DMatrix::identity(2, 2) * 0.2;
        let r = dmatrix![1.0];
        let (p, k) = solve_care(&a, &b, &q, &r).unwrap();
        let a_cl = &a + &b * &k;
        let expected = dmatrix![-0.4472, 0.3095; -0.4472, -0.6905];
        for (x, y) in a_cl.iter().zip(expected.iter()) {
            assert!((x - y).abs() < 1e-3, "{a_cl}");
        }
        let res = care_residual(&a, &b, &q, &r, &p);
        assert!(res <= 1e-8 * (1.0 + spectral_norm(&p).powi(2)));
    }

    #[test]
    fn care_is_stabilizing_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut solved = 0;
        while solved < 100 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(1..=3);
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
            let mut ctrb = DMatrix::zeros(n, n * m);
            let mut blk = b.clone();
            for i in 0..n {
                ctrb.view_mut((0, i * m), (n, m)).copy_from(&blk);
                blk = &a * blk;
            }
            if numerical_rank(&ctrb) < n {
                continue;
            }
            let (_, k) = solve_care(&a, &b, &DMatrix::identity(n, n), &DMatrix::identity(m, m)).unwrap();
            assert!(is_hurwitz(&(&a + &b * &k)).unwrap().0);
            solved += 1;
        }
    }

    #[test]
    fn psd_sqrt_examples() {
        let s = psd_sqrt(&(DMatrix::identity(3, 3) * 4.0)).unwrap();
        assert_relative_eq!(s, DMatrix::identity(3, 3) * 2.0, epsilon = 1e-12);
        let s = psd_sqrt(&dmatrix![9.0, 0.0; 0.0, 1.0]).unwrap();
        assert_relative_eq!(s, dmatrix![3.0, 0.0; 0.0, 1.0], epsilon = 1e-12);
        let c = dmatrix![1.0, 0.0];
        let m = c.transpose() * &c + DMatrix::identity(2, 2) * 1e-4;
        let s = psd_sqrt(&m).unwrap();
        assert!((&s * &s - &m).norm() <= 1e-10 * (1.0 + m.norm()));
        assert!(matches!(
            psd_sqrt(&dmatrix![1.0, 0.0; 0.0, -1.0]),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&(-DMatrix::identity(3, 3))).unwrap().0);
        assert!(!is_hurwitz(&dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap().0);
        let (_, eig) = is_hurwitz(&dmatrix![-1.0, 2.0; -2.0, -1.0]).unwrap();
        assert_eq!(eig.eigenvalues.len(), 2);
        assert_relative_eq!(eig.eigenvalues[0].im.abs(), 2.0, epsilon = 1e-12);
    }

    fn sorted_re(v: &[Complex64]) -> Vec<f64> {
        let mut r: Vec<f64> = v.iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.total_cmp(b));
        r
    }

    #[test]
    fn placement_scalar_and_double_integrator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = place_observer_gain(&dmatrix![-1.0], &dmatrix![1.0], &[Complex64::new(-3.0, 0.0)], &mut rng).unwrap();
        assert_relative_eq!(l[(0, 0)], 2.0, epsilon = 1e-10);

        let a_cl = dmatrix![-0.4472136, 0.30948463; -0.4472136, -0.69051537];
        let c = dmatrix![1.0, 0.0];
        let poles = [Complex64::new(-2.0, 0.0), Complex64::new(-1.0, 0.0)];
        let l = place_observer_gain(&a_cl, &c, &poles, &mut rng).unwrap();
        let eig = spectrum(&(&a_cl - &l * &c)).unwrap();
        let got = sorted_re(&eig.eigenvalues);
        assert!((got[0] + 2.0).abs() < 1e-6 && (got[1] + 1.0).abs() < 1e-6);

        let poles = [Complex64::new(-2.0, 0.0), Complex64::new(-2.0, 0.0)];
        let l = place_observer_gain(&a_cl, &c, &poles, &mut rng).unwrap();
        let eig = spectrum(&(&a_cl - &l * &c)).unwrap();
        for z in eig.eigenvalues {
            assert!((z - Complex64::new(-2.0, 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn placement_complex_pair_and_unobservable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; -1.0, -2.0, -3.0];
        let c = dmatrix![1.0, 0.0, 0.0];
        let poles = [
            Complex64::new(-1.0, 2.0),
            Complex64::new(-1.0, -2.0),
            Complex64::new(-4.0, 0.0),
        ];
        let l = place_observer_gain(&a, &c, &poles, &mut rng).unwrap();
        let eig = spectrum(&(&a - &l * &c)).unwrap();
        for p in poles {
            assert!(eig.eigenvalues.iter().any(|z| (z - p).norm() < 1e-6));
        }
        let err = place_observer_gain(
            &dmatrix![0.0, 1.0; 0.0, 0.0],
            &dmatrix![0.0, 1.0],
            &[Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)],
            &mut rng,
        );
        assert!(matches!(err, Err(Error::PlacementInfeasible(_))));
    }

    #[test]
    fn repeated_pole_perturbation() {
        let poles = [
            Complex64::new(-2.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ];
        let p = perturb_repeated_poles(&poles);
        assert_eq!(p[0].re, -2.0);
        assert_relative_eq!(p[1].re, -2.0 + 1e-6, epsilon = 1e-15);
        assert_relative_eq!(p[2].re, -2.0 + 2e-6, epsilon = 1e-15);
        assert_eq!(p[3].re, -1.0);
    }

    #[test]
    fn rank_threshold() {
        assert_eq!(numerical_rank(&dmatrix![1.0, 0.0; 0.0, 1e-20]), 1);
        assert_eq!(numerical_rank(&DMatrix::identity(3, 3)), 3);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 2)), 0);
    }
}
