//! Single-SDP design that lowers tr(W V) within a performance budget, swept
//! over a few budgets on the scalar plant and the double integrator.

use covertlqr::{presets, trace};

fn main() -> covertlqr::Result<()> {
    let (sys, mut w) = presets::scalar_unit();
    println!("scalar plant a = b = c = 1");
    for lambda in [0.0, 0.1, 1.0, 10.0] {
        w.lambda = lambda;
        let d = trace::solve_problem1(&sys, &w)?;
        println!(
            "  lambda {lambda:>5}: k {:>9.5}  J_s {:.5}  tr(WV) {:.5}  slack {:.1e}",
            d.gain[(0, 0)],
            d.j_s,
            d.j_o1,
            d.performance_slack
        );
    }

    let (sys, mut w) = presets::double_integrator();
    println!("double integrator");
    for lambda in [0.01, 0.1, 1.0] {
        w.lambda = lambda;
        let d = trace::solve_problem1(&sys, &w)?;
        println!(
            "  lambda {lambda:>5}: A+BK = {:.4}  tr(WV) {:.5}",
            d.closed_loop, d.j_o1
        );
    }
    Ok(())
}
