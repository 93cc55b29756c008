//! Lower bounds on both observability costs as the performance budget grows.

use covertlqr::bounds::BoundContext;
use covertlqr::presets;
use covertlqr::system::DesignWeights;

fn main() -> covertlqr::Result<()> {
    let (sys, w) = presets::double_integrator();
    let ctx = BoundContext::new(&sys, &w)?;
    println!("J1(0) = {:.6}  J2(0) = {:.6}", ctx.j1_at_zero, ctx.j2_at_zero);
    println!(
        "{:>8} {:>12} {:>12} {:>14} {:>6} {:>14} {:>14}",
        "lambda", "f", "J1 lower", "J2 local", "valid", "J2 global", "J2 best"
    );
    for lambda in [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0] {
        let b = ctx.report(&sys, &DesignWeights { lambda, ..w.clone() }, lambda)?;
        println!(
            "{:>8} {:>12.5e} {:>12.6} {:>14.6e} {:>6} {:>14.6e} {:>14.6e}",
            lambda,
            b.f_lambda,
            b.j1_lower,
            b.j2_lower_local,
            b.j2_lower_local_valid,
            b.j2_lower_global,
            b.j2_lower_best
        );
    }
    Ok(())
}
