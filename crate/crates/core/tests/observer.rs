use covertlqr::sim;
use covertlqr::{linalg, presets, traceinv};
use num_complex::Complex64;

#[test]
fn designed_gain_observer_places_requested_poles() {
    let (sys, mut w) = presets::double_integrator();
    w.lambda = 0.1;
    let k_hat = traceinv::ccp_run(&sys, &w, traceinv::DEFAULT_MAX_ITERS).unwrap().k_hat;
    let poles = [Complex64::new(-2.0, 0.0), Complex64::new(-1.0, 0.0)];
    let g = sim::build_adversary_observer(&sys, &k_hat, &poles, 0).unwrap();
    let obs = sys.closed_loop(&k_hat) - &g.l * &sys.c;
    let mut got: Vec<f64> = linalg::spectrum(&obs)
        .unwrap()
        .eigenvalues
        .iter()
        .map(|z| z.re)
        .collect();
    got.sort_by(f64::total_cmp);
    let err = (got[0] + 2.0).abs().max((got[1] + 1.0).abs());
    assert!(err <= 1e-4, "observer poles {got:?}");
    assert!(!g.near_unobservable);
}
