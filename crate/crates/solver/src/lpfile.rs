//! Plain-text LP dump in the common CPLEX-LP layout:
//!
//! ```text
//! \ comment lines
//! Maximize | Minimize
//!  obj: 3 x0 - 2 x1
//! Subject To
//!  r0: x0 + x1 <= 4
//! Bounds
//!  0 <= x0 <= 1
//!  x1 free
//! Binaries
//!  x0
//! SOS
//!  s0: S1:: x0:1 x1:2
//! End
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so a dump is exact.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::problem::{LpProblem, MilpProblem, Sense};
use crate::scalar::Scalar;
use crate::simplex::relation_symbol;

fn term<T: Scalar>(out: &mut String, first: bool, a: T, name: &str) {
    let neg = a < T::zero();
    let mag = a.abs();
    let sign = match (first, neg) {
        (true, true) => "-",
        (true, false) => "",
        (false, true) => " - ",
        (false, false) => " + ",
    };
    if mag == T::one() {
        let _ = write!(out, "{sign}{name}");
    } else {
        let _ = write!(out, "{sign}{mag} {name}");
    }
}

fn render<T: Scalar>(lp: &LpProblem<T>, binaries: &[usize], sos1: &[Vec<usize>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\\ {} variables, {} rows", lp.num_vars(), lp.num_rows());
    s.push_str(match lp.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    s.push_str(" obj: ");
    let mut first = true;
    for j in 0..lp.num_vars() {
        if lp.objective[j] != T::zero() {
            term(&mut s, first, lp.objective[j], &lp.var_name(j));
            first = false;
        }
    }
    if first {
        s.push('0');
    }
    s.push_str("\nSubject To\n");
    for (r, row) in lp.rows.iter().enumerate() {
        let _ = write!(s, " {}: ", lp.row_name(r));
        let mut first = true;
        for &(j, a) in &row.coeffs {
            term(&mut s, first, a, &lp.var_name(j));
            first = false;
        }
        if first {
            s.push('0');
        }
        let _ = writeln!(s, " {} {}", relation_symbol(row.relation), row.rhs);
    }
    s.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let name = lp.var_name(j);
        if lo == T::neg_infinity() && hi == T::infinity() {
            let _ = writeln!(s, " {name} free");
        } else if lo == hi {
            let _ = writeln!(s, " {name} = {lo}");
        } else {
            let l = if lo == T::neg_infinity() { "-inf".to_string() } else { format!("{lo}") };
            let h = if hi == T::infinity() { "+inf".to_string() } else { format!("{hi}") };
            let _ = writeln!(s, " {l} <= {name} <= {h}");
        }
    }
    if !binaries.is_empty() {
        s.push_str("Binaries\n");
        for &j in binaries {
            let _ = writeln!(s, " {}", lp.var_name(j));
        }
    }
    if !sos1.is_empty() {
        s.push_str("SOS\n");
        for (g, members) in sos1.iter().enumerate() {
            let _ = write!(s, " s{g}: S1::");
            for (w, &j) in members.iter().enumerate() {
                let _ = write!(s, " {}:{}", lp.var_name(j), w + 1);
            }
            s.push('\n');
        }
    }
    s.push_str("End\n");
    s
}

/// Writes `p` in LP format.
pub fn write_lp<T: Scalar, W: Write>(p: &MilpProblem<T>, mut w: W) -> io::Result<()> {
    w.write_all(render(&p.lp, &p.binaries, &p.sos1).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Row;

    #[test]
    fn dump_layout() {
        let mut lp: LpProblem<f64> = LpProblem::new(Sense::Maximize);
        let x = lp.add_named_var("x", 1.0, 0.0, 1.0);
        let y = lp.add_named_var("y", -2.5, f64::NEG_INFINITY, f64::INFINITY);
        lp.add_named_row("c1", Row::le(vec![(x, 1.0), (y, -3.0)], 4.0));
        let mut p = MilpProblem::new(lp);
        p.mark_binary(x);
        let mut buf = Vec::new();
        write_lp(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("Maximize\n obj: x - 2.5 y\n"));
        assert!(text.contains(" c1: x - 3 y <= 4\n"));
        assert!(text.contains(" y free\n"));
        assert!(text.contains("Binaries\n x\n"));
        assert!(text.ends_with("End\n"));
    }
}
