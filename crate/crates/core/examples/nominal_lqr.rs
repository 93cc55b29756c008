//! Nominal LQR gain for the double integrator and its observability cost.

use covertlqr::{gramian, linalg, presets};

fn main() -> covertlqr::Result<()> {
    let (sys, w) = presets::double_integrator();
    let (p, k) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r)?;
    let r_inv = linalg::inverse(&w.r, "R")?;
    println!("K*      = {k:.6}");
    println!("A + BK* = {:.6}", sys.closed_loop(&k));
    println!(
        "CARE residual {:.2e}",
        linalg::care_residual(&sys.a, &sys.b, &w.q, &r_inv, &p)
    );
    println!("J_s = tr(P V) = {:.6}", (&p * &w.v).trace());

    let w0 = gramian::observability_gramian(&sys, &k, 0.0)?;
    let report = gramian::eigen_report(&w0);
    println!("tr(W V) = {:.6}", (&w0 * &w.v).trace());
    println!("Gramian eigenvalues {:?}", report.eigenvalues);
    Ok(())
}
