//! Dropping sensors can only lower the observability Gramian, so both costs
//! move in the adversary's disfavor. Checked over every proper row subset of
//! a three-output plant.

use covertlqr::bounds::subset_monotonicity_check;
use covertlqr::linalg;
use covertlqr::system::LinearSystem;
use nalgebra::{dmatrix, DMatrix};

fn main() -> covertlqr::Result<()> {
    let a = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; -1.0, -2.0, -1.5];
    let b = dmatrix![0.0; 0.0; 1.0];
    let c = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.3, 0.0, 1.0];
    let sys = LinearSystem::new(a, b, c)?;
    let (_, k) = linalg::solve_care(&sys.a, &sys.b, &DMatrix::identity(3, 3), &DMatrix::identity(1, 1))?;
    let v = DMatrix::identity(3, 3);

    println!(
        "{:>10} {:>10} {:>10} {:>12} {:>12} {:>5}",
        "rows", "J_o1 all", "J_o1 sub", "J_o2 all", "J_o2 sub", "ok"
    );
    for mask in 1u32..7 {
        let rows: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let c_hat = DMatrix::from_fn(rows.len(), 3, |i, j| sys.c[(rows[i], j)]);
        let r = subset_monotonicity_check(&sys, &k, &v, &c_hat, &rows)?;
        let fmt = |x: Option<f64>| x.map_or_else(|| "unbounded".to_string(), |v| format!("{v:.4e}"));
        println!(
            "{:>10} {:>10.5} {:>10.5} {:>12} {:>12} {:>5}",
            format!("{rows:?}"),
            r.j_o1_full,
            r.j_o1_subset,
            fmt(r.j_o2_full),
            fmt(r.j_o2_subset),
            r.pass
        );
    }
    Ok(())
}
