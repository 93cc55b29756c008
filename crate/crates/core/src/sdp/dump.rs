//! Plain-text model dump for cross-checking against other solvers.
//!
//! ```text
//! SDPDUMP v1
//! unknowns <N>
//! variable <name> symmetric <k> offset <o>
//! variable <name> rectangular <r> <c> offset <o>
//! objective
//! <term> <row> <col> <value>
//! constraint <lmi|eq|ineq|psd> <rows> <cols> <label>
//! <term> <row> <col> <value>
//! end
//! ```
//!
//! `<term>` is `c` for the constant matrix or the zero-based index of a
//! scalar unknown. Rows and columns are zero-based. Only nonzero entries are
//! listed; for symmetric-valued constraints (lmi, symmetric eq) only the
//! upper triangle is listed. A `psd` constraint lists no triplets and names
//! its variable as the label's last token (`<label> :: <variable>`).
//! Constraint semantics: lmi `F ⪯ 0`, eq `E = 0`, ineq `g ≤ 0`.
//! Values are written with 17 significant digits.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::{AffineExpr, ConstraintKind, SdpModel, VarKind};

fn triplets(out: &mut String, e: &AffineExpr, upper_only: bool) {
    let mut emit = |term: String, m: &DMatrix<f64>| {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if upper_only && i > j {
                    continue;
                }
                let v = m[(i, j)];
                if v != 0.0 {
                    let _ = writeln!(out, "{term} {i} {j} {v:.16e}");
                }
            }
        }
    };
    emit("c".into(), e.constant_term());
    for (i, m) in e.terms() {
        emit(i.to_string(), m);
    }
}

/// Renders the model in the `SDPDUMP v1` format.
pub fn write_dump(model: &SdpModel) -> String {
    let mut out = String::from("SDPDUMP v1\n");
    let _ = writeln!(out, "unknowns {}", model.num_unknowns());
    for v in model.variables() {
        let _ = match v.kind {
            VarKind::Symmetric(k) => {
                writeln!(out, "variable {} symmetric {k} offset {}", v.name, v.offset)
            }
            VarKind::Rectangular(r, c) => {
                writeln!(out, "variable {} rectangular {r} {c} offset {}", v.name, v.offset)
            }
        };
    }
    out.push_str("objective\n");
    triplets(&mut out, model.objective(), false);
    for c in model.constraints() {
        match &c.kind {
            ConstraintKind::Lmi(e) => {
                let (r, k) = e.shape();
                let _ = writeln!(out, "constraint lmi {r} {k} {}", c.label);
                triplets(&mut out, e, true);
            }
            ConstraintKind::Equality { expr, symmetric } => {
                let (r, k) = expr.shape();
                let _ = writeln!(out, "constraint eq {r} {k} {}", c.label);
                triplets(&mut out, expr, *symmetric);
            }
            ConstraintKind::Inequality(e) => {
                let _ = writeln!(out, "constraint ineq 1 1 {}", c.label);
                triplets(&mut out, e, false);
            }
            ConstraintKind::Psd(id) => {
                let var = model.variable(*id);
                let (r, k) = var.kind.shape();
                let _ = writeln!(out, "constraint psd {r} {k} {} :: {}", c.label, var.name);
            }
        }
    }
    out.push_str("end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_layout() {
        let mut m = SdpModel::new();
        let s = m.add_symmetric("S", 2);
        m.minimize(m.expr(s).trace()).unwrap();
        m.add_lmi("lower", -m.expr(s) + &DMatrix::identity(2, 2)).unwrap();
        m.add_psd("nonneg", s).unwrap();
        let text = write_dump(&m);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "SDPDUMP v1");
        assert_eq!(lines[1], "unknowns 3");
        assert_eq!(lines[2], "variable S symmetric 2 offset 0");
        assert!(text.contains("constraint lmi 2 2 lower\nc 0 0 1.0000000000000000e0\nc 1 1"));
        assert!(text.contains("1 0 1 -1.0000000000000000e0"));
        assert!(text.contains("constraint psd 2 2 nonneg :: S"));
        assert_eq!(*lines.last().unwrap(), "end");
    }
}
