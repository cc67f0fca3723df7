//! Free-format MPS export, for cross-checking instances with other solvers.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::lp::{LinearProgram, Sense};

/// Renders `lp` as free MPS. Columns listed in `integer` are wrapped in
/// `MARKER INTORG/INTEND` blocks.
pub fn to_mps(lp: &LinearProgram, name: &str, integer: &[usize]) -> String {
    let mut is_int = vec![false; lp.num_vars()];
    for &j in integer {
        is_int[j] = true;
    }
    let cols = lp.columns();
    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n N COST\n");
    for (i, row) in lp.rows.iter().enumerate() {
        let t = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {t} R{i}");
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for j in 0..lp.num_vars() {
        if is_int[j] != in_int {
            let tag = if is_int[j] { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, " MARKER 'MARKER' {tag}");
            in_int = is_int[j];
        }
        if lp.objective[j] != 0.0 {
            let _ = writeln!(out, " C{j} COST {:?}", lp.objective[j]);
        }
        for &(i, v) in &cols[j] {
            let _ = writeln!(out, " C{j} R{i} {v:?}");
        }
        if lp.objective[j] == 0.0 && cols[j].is_empty() {
            let _ = writeln!(out, " C{j} COST 0.0");
        }
    }
    if in_int {
        out.push_str(" MARKER 'MARKER' 'INTEND'\n");
    }
    out.push_str("RHS\n");
    for (i, row) in lp.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, " RHS R{i} {:?}", row.rhs);
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo == hi {
            let _ = writeln!(out, " FX BND C{j} {lo:?}");
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND C{j}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND C{j}");
                let _ = writeln!(out, " UP BND C{j} {hi:?}");
            }
            (true, hi_finite) => {
                if lo != 0.0 {
                    let _ = writeln!(out, " LO BND C{j} {lo:?}");
                }
                if hi_finite {
                    let _ = writeln!(out, " UP BND C{j} {hi:?}");
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(lp: &LinearProgram, name: &str, integer: &[usize], path: &Path) -> io::Result<()> {
    std::fs::write(path, to_mps(lp, name, integer))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_in_order() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, -1.0);
        let y = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 2.0);
        lp.add_row([(x, 1.0), (y, 1.0)], Sense::Ge, 0.5);
        let text = to_mps(&lp, "toy", &[x]);
        let order: Vec<usize> = ["ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
            .iter()
            .map(|s| text.find(s).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains(" G R0"));
        assert!(text.contains(" FR BND C1"));
        assert!(text.contains("'INTORG'") && text.contains("'INTEND'"));
    }
}
