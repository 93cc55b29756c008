//! Adversary estimation error under the nominal and the inverse-trace gain
//! for several observer pole sets.

use covertlqr::linalg;
use covertlqr::presets;
use covertlqr::sim::{self, NoiseModel, SimSettings};
use covertlqr::traceinv;
use nalgebra::DVector;
use num_complex::Complex64;

fn main() -> covertlqr::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COVERTLQR_LOG", "warn")).init();
    let (sys, mut w) = presets::double_integrator();
    w.lambda = 0.1;
    let (_, k_star) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r)?;
    let k_hat = traceinv::ccp_run(&sys, &w, traceinv::DEFAULT_MAX_ITERS)?.k_hat;
    let noise = NoiseModel::band_limited(1, None);

    println!(
        "{:>16} {:>10} {:>12} {:>10} {:>12} {:>8}",
        "poles", "|L| K*", "err K*", "|L| K^", "err K^", "ratio"
    );
    for poles in [[-2.0, -1.0], [-3.0, -2.0], [-5.0, -2.0], [-4.0, -3.0], [-15.0, -5.0]] {
        let ps: Vec<Complex64> = poles.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        let mut row = Vec::new();
        for k in [&k_star, &k_hat] {
            let g = sim::build_adversary_observer(&sys, k, &ps, 0)?;
            let a_cl = sys.closed_loop(k);
            let obs = &a_cl - &g.l * &sys.c;
            let mut settings = SimSettings::defaults(&a_cl, &obs)?;
            settings.horizon = 40.0;
            settings.xhat0 = DVector::zeros(2);
            let tr = sim::simulate(&sys, k, &g.l, &w.q, &w.r, &noise, &settings)?;
            row.push((g.norm, tr.mean_error_norm(20.0, 40.0)));
        }
        println!(
            "{:>16} {:>10.4} {:>12.4e} {:>10.4} {:>12.4e} {:>8.2}",
            format!("{poles:?}"),
            row[0].0,
            row[0].1,
            row[1].0,
            row[1].1,
            row[1].1 / row[0].1
        );
    }
    Ok(())
}
