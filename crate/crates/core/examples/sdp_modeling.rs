//! Building and solving a small SDP directly: the smallest trace of a
//! matrix that dominates an indefinite one, which equals the sum of its
//! positive eigenvalues.

use covertlqr::sdp::{self, AffineExpr, SdpModel};
use nalgebra::dmatrix;

fn main() -> covertlqr::Result<()> {
    let m = dmatrix![0.5, 1.5; 1.5, 0.5];
    let mut model = SdpModel::new();
    let x = model.add_symmetric("X", 2);
    let xe = model.expr(x);
    model.minimize(xe.trace())?;
    model.add_lmi("dominates M", AffineExpr::constant(m.clone()) - xe)?;
    model.add_psd("X psd", x)?;

    print!("{}", sdp::write_dump(&model));
    let sol = sdp::solve(&model, 1e-8, 1e-8)?;
    println!(
        "status {}  objective {:.8}  (expected 2)",
        sol.status.as_str(),
        sol.objective
    );
    println!("X = {:.6}", sol.value(x));
    if let Some(worst) = sol.audit.worst() {
        println!("worst residual {:.2e} on '{}'", worst.relative, worst.label);
    }
    Ok(())
}
