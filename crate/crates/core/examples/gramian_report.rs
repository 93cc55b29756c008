//! Gramian eigenvalue table for the nominal gain and both designs on a
//! random five-state plant.

use covertlqr::cli::output::{format_table, ReportRow};
use covertlqr::{gramian, linalg, presets, trace, traceinv};

fn main() -> covertlqr::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COVERTLQR_LOG", "warn")).init();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let (sys, w) = presets::five_state_surrogate(seed);
    let (_, k_star) = linalg::solve_care(&sys.a, &sys.b, &w.q, &w.r)?;
    let k_trace = trace::solve_problem1(&sys, &w)?.gain;
    let ccp = traceinv::ccp_run(&sys, &w, traceinv::DEFAULT_MAX_ITERS)?;
    println!(
        "inverse-trace design: {} after {} iterations",
        ccp.termination.as_str(),
        ccp.iterations
    );
    let mut rows = Vec::new();
    for (label, k) in [("nominal", &k_star), ("trace", &k_trace), ("trace_inv", &ccp.k_hat)] {
        rows.push(ReportRow::from_gramian(
            label,
            &gramian::observability_gramian(&sys, k, 0.0)?,
        ));
    }
    print!("{}", format_table(&rows));
    Ok(())
}
