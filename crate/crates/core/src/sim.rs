//! Closed-loop simulation against a Luenberger-observer adversary whose
//! measurements are corrupted by deterministic sinusoidal noise.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fmt::g12;
use crate::linalg;
use crate::system::LinearSystem;

/// Observer gains above this norm are reported as near-unobservable.
pub const GAIN_WARNING: f64 = 1e6;

/// `eta_i(t) = sum_k magnitude * sin(omega_k t + phi_{ik})`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub magnitude: f64,
    /// Angular frequencies in rad/s.
    pub frequencies: Vec<f64>,
    /// One row per output channel, one column per sinusoid.
    pub phases: DMatrix<f64>,
}

impl NoiseModel {
    /// Five sinusoids of magnitude 0.01 with angular frequencies `k / 5`,
    /// `k = 1..5`, spanning 0 to `1 / (2 pi)` Hz.
    pub fn band_limited(outputs: usize, seed: Option<u64>) -> Self {
        Self::new(outputs, 0.01, (1..=5).map(|k| k as f64 / 5.0).collect(), seed)
    }

    /// Phases are zero, or uniform on `[0, 2 pi)` when a seed is given.
    pub fn new(outputs: usize, magnitude: f64, frequencies: Vec<f64>, seed: Option<u64>) -> Self {
        let phases = match seed {
            None => DMatrix::zeros(outputs, frequencies.len()),
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                DMatrix::from_fn(outputs, frequencies.len(), |_, _| rng.random_range(0.0..TAU))
            }
        };
        Self {
            magnitude,
            frequencies,
            phases,
        }
    }

    pub fn silent(outputs: usize) -> Self {
        Self {
            magnitude: 0.0,
            frequencies: Vec::new(),
            phases: DMatrix::zeros(outputs, 0),
        }
    }

    pub fn outputs(&self) -> usize {
        self.phases.nrows()
    }

    fn check(&self) -> Result<()> {
        if self.phases.ncols() != self.frequencies.len() {
            return Err(Error::Simulation(format!(
                "noise: {} frequencies but {} phase columns",
                self.frequencies.len(),
                self.phases.ncols()
            )));
        }
        if !(self.magnitude.is_finite() && self.frequencies.iter().all(|w| w.is_finite() && *w >= 0.0)) {
            return Err(Error::Simulation(
                "noise parameters must be finite, frequencies nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Noise vector at time `t`.
pub fn sensing_noise(model: &NoiseModel, t: f64) -> DVector<f64> {
    DVector::from_fn(model.outputs(), |i, _| {
        model
            .frequencies
            .iter()
            .enumerate()
            .map(|(k, w)| model.magnitude * (w * t + model.phases[(i, k)]).sin())
            .sum()
    })
}

/// Adversary gain with its norm; `near_unobservable` flags `||L|| > 1e6`.
#[derive(Debug, Clone)]
pub struct ObserverGain {
    pub l: DMatrix<f64>,
    pub norm: f64,
    pub near_unobservable: bool,
}

/// Places `eig(A + B K - L C)` at `poles`. The random right-hand side of the
/// Sylvester placement is drawn from `seed`.
pub fn build_adversary_observer(
    sys: &LinearSystem,
    k: &DMatrix<f64>,
    poles: &[Complex64],
    seed: u64,
) -> Result<ObserverGain> {
    let a_cl = sys.closed_loop(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = linalg::place_observer_gain(&a_cl, &sys.c, poles, &mut rng)?;
    let norm = linalg::spectral_norm(&l);
    let near_unobservable = norm > GAIN_WARNING;
    if near_unobservable {
        log::warn!("observer gain norm {norm:.3e}: closed loop is close to unobservable");
    }
    Ok(ObserverGain {
        l,
        norm,
        near_unobservable,
    })
}

/// Simulation grid and initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub x0: DVector<f64>,
    pub xhat0: DVector<f64>,
    pub horizon: f64,
    pub dt: f64,
}

impl SimSettings {
    /// `x0 = 1`, `xhat0 = 0`, horizon of 20 slow time constants of `a_cl`,
    /// step of 1e-3 time constants capped by the fastest mode of either
    /// matrix.
    pub fn defaults(a_cl: &DMatrix<f64>, observer: &DMatrix<f64>) -> Result<Self> {
        let n = a_cl.nrows();
        let slowest = linalg::spectrum(a_cl)?.max_real_part.abs().max(1e-9);
        let tau = 1.0 / slowest;
        let fastest = fastest_rate(&[a_cl, observer])?;
        Ok(Self {
            x0: DVector::from_element(n, 1.0),
            xhat0: DVector::zeros(n),
            horizon: 20.0 * tau,
            dt: (1e-3 * tau).min(0.1 / fastest),
        })
    }
}

fn fastest_rate(ms: &[&DMatrix<f64>]) -> Result<f64> {
    let mut rate = 0.0f64;
    for m in ms {
        for z in linalg::spectrum(m)?.eigenvalues {
            rate = rate.max(z.re.abs());
        }
    }
    Ok(rate)
}

/// Sampled trajectories on a uniform grid.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub xhat: Vec<DVector<f64>>,
    /// `x - xhat`.
    pub e: Vec<DVector<f64>>,
    /// `int_0^t x^T Q x + u^T R u ds`.
    pub cost: Vec<f64>,
    pub y: Vec<DVector<f64>>,
    pub y_noisy: Vec<DVector<f64>>,
}

impl SimTrace {
    /// Trapezoidal time average of `||e(t)||` over `[from, to]`.
    pub fn mean_error_norm(&self, from: f64, to: f64) -> f64 {
        let mut acc = 0.0;
        let mut span = 0.0;
        for i in 1..self.t.len() {
            let (t0, t1) = (self.t[i - 1], self.t[i]);
            if t0 < from - 1e-12 || t1 > to + 1e-12 {
                continue;
            }
            acc += 0.5 * (self.e[i - 1].norm() + self.e[i].norm()) * (t1 - t0);
            span += t1 - t0;
        }
        if span > 0.0 {
            acc / span
        } else {
            f64::NAN
        }
    }

    /// Header `t,x1..xn,xhat1..xhatn,e1..en,cost`, values in `%.12g`.
    pub fn to_csv(&self) -> String {
        let n = self.x.first().map_or(0, |v| v.len());
        let mut out = String::from("t");
        for prefix in ["x", "xhat", "e"] {
            for i in 1..=n {
                let _ = write!(out, ",{prefix}{i}");
            }
        }
        out.push_str(",cost\n");
        for i in 0..self.t.len() {
            out.push_str(&g12(self.t[i]));
            for v in [&self.x[i], &self.xhat[i], &self.e[i]] {
                for val in v.iter() {
                    out.push(',');
                    out.push_str(&g12(*val));
                }
            }
            out.push(',');
            out.push_str(&g12(self.cost[i]));
            out.push('\n');
        }
        out
    }
}

/// Fixed-step RK4 on the stacked state `(x, xhat, cost)` with
/// `x' = F x`, `xhat' = F xhat + L (C x + eta(t) - C xhat)` and
/// `cost' = x^T (Q + K^T R K) x`, `F = A + B K`.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    sys: &LinearSystem,
    k: &DMatrix<f64>,
    l: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    noise: &NoiseModel,
    settings: &SimSettings,
) -> Result<SimTrace> {
    let n = sys.states();
    let p = sys.outputs();
    if l.shape() != (n, p) || settings.x0.len() != n || settings.xhat0.len() != n {
        return Err(Error::Dimension(format!(
            "simulation: L {:?}, x0 {}, xhat0 {} for {n} states and {p} outputs",
            l.shape(),
            settings.x0.len(),
            settings.xhat0.len()
        )));
    }
    if noise.outputs() != p {
        return Err(Error::Dimension(format!(
            "noise has {} channels, C has {p} rows",
            noise.outputs()
        )));
    }
    noise.check()?;
    let f = sys.closed_loop(k);
    let (stable, eig) = linalg::is_hurwitz(&f)?;
    if !stable {
        return Err(Error::UnstableGain {
            max_real_part: eig.max_real_part,
        });
    }
    let obs = &f - l * &sys.c;
    let (dt, horizon) = (settings.dt, settings.horizon);
    if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
        return Err(Error::Simulation("step and horizon must be positive".into()));
    }
    let limit = 0.1 / fastest_rate(&[&f, &obs])?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Simulation(format!(
            "step {dt:.3e} exceeds the stability limit {limit:.3e}"
        )));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / steps as f64;
    let running = q + k.transpose() * r * k;

    let lc = l * &sys.c;
    let rhs = |t: f64, x: &DVector<f64>, xh: &DVector<f64>| {
        let dx = &f * x;
        let dxh = &f * xh + &lc * (x - xh) + l * sensing_noise(noise, t);
        let dc = x.dot(&(&running * x));
        (dx, dxh, dc)
    };

    let mut trace = SimTrace {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        xhat: Vec::with_capacity(steps + 1),
        e: Vec::with_capacity(steps + 1),
        cost: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        y_noisy: Vec::with_capacity(steps + 1),
    };
    let mut x = settings.x0.clone();
    let mut xh = settings.xhat0.clone();
    let mut cost = 0.0;
    let record = |t: f64, x: &DVector<f64>, xh: &DVector<f64>, cost: f64, tr: &mut SimTrace| {
        let y = &sys.c * x;
        tr.y_noisy.push(&y + sensing_noise(noise, t));
        tr.y.push(y);
        tr.t.push(t);
        tr.x.push(x.clone());
        tr.xhat.push(xh.clone());
        tr.e.push(x - xh);
        tr.cost.push(cost);
    };
    record(0.0, &x, &xh, cost, &mut trace);
    for i in 0..steps {
        let t = i as f64 * h;
        let (k1x, k1h, k1c) = rhs(t, &x, &xh);
        let (k2x, k2h, k2c) = rhs(t + 0.5 * h, &(&x + &k1x * (0.5 * h)), &(&xh + &k1h * (0.5 * h)));
        let (k3x, k3h, k3c) = rhs(t + 0.5 * h, &(&x + &k2x * (0.5 * h)), &(&xh + &k2h * (0.5 * h)));
        let (k4x, k4h, k4c) = rhs(t + h, &(&x + &k3x * h), &(&xh + &k3h * h));
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        xh += (k1h + k2h * 2.0 + k3h * 2.0 + k4h) * (h / 6.0);
        cost += (k1c + 2.0 * k2c + 2.0 * k3c + k4c) * (h / 6.0);
        if !(x.iter().chain(xh.iter()).all(|v| v.is_finite()) && cost.is_finite()) {
            return Err(Error::Simulation(format!("non-finite state at t = {:.6e}", t + h)));
        }
        record((i + 1) as f64 * h, &x, &xh, cost, &mut trace);
    }
    Ok(trace)
}
