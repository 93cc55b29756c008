//! Sequential-SDP design on the double integrator at two budgets.
//!
//! Run with `cargo run --release --example traceinv_double_integrator`.

use covertlqr::presets;
use covertlqr::traceinv::{ccp_run, DEFAULT_MAX_ITERS};

fn main() -> covertlqr::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter("COVERTLQR_LOG")).init();
    let (sys, mut w) = presets::double_integrator();
    for lambda in [0.01, 0.1] {
        w.lambda = lambda;
        let start = std::time::Instant::now();
        let res = ccp_run(&sys, &w, DEFAULT_MAX_ITERS)?;
        println!(
            "lambda = {lambda}: {} after {} iterations in {:.2?}",
            res.termination.as_str(),
            res.iterations,
            start.elapsed()
        );
        println!("  A + B K = {:.4}", res.design.closed_loop);
        println!("  J2 reported {:.6e}, recomputed {:.6e}", res.j2_reported, res.j2_true);
        println!("  budget slack {:.3e}", res.design.performance_slack);
    }
    Ok(())
}
