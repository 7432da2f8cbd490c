//! CPLEX-style LP text dump for cross-checking with external solvers.

use std::fmt::Write;

use super::MilpProblem;

fn term(out: &mut String, coef: f64, var: usize, first: bool) {
    let sign = if coef < 0.0 { "-" } else { "+" };
    if first && coef >= 0.0 {
        let _ = write!(out, " {} x{var}", coef.abs());
    } else {
        let _ = write!(out, " {sign} {} x{var}", coef.abs());
    }
}

/// Renders `p` with variables named `x0, x1, ...` and rows `r0, r1, ...`.
/// The constant objective offset is recorded as a comment.
pub fn to_lp_format(p: &MilpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ objective offset {}", p.offset);
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (j, &c) in p.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, c, j, first);
            first = false;
        }
    }
    if first {
        out.push_str(" 0 x0");
    }
    out.push_str("\nSubject To\n");
    for i in 0..p.num_rows() {
        let _ = write!(out, " r{i}:");
        let mut first = true;
        for j in 0..p.num_vars() {
            let a = p.eq_matrix[(i, j)];
            if a != 0.0 {
                term(&mut out, a, j, first);
                first = false;
            }
        }
        if first {
            out.push_str(" 0 x0");
        }
        let _ = writeln!(out, " = {}", p.eq_rhs[i]);
    }
    out.push_str("Bounds\n");
    for j in 0..p.num_vars() {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " x{j} free");
            }
            (true, false) => {
                let _ = writeln!(out, " x{j} >= {lo}");
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= x{j} <= {hi}");
            }
            (true, true) => {
                let _ = writeln!(out, " {lo} <= x{j} <= {hi}");
            }
        }
    }
    let binaries: Vec<usize> = (0..p.num_vars()).filter(|&j| p.binary[j]).collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for j in binaries {
            let _ = writeln!(out, " x{j}");
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    #[test]
    fn renders_all_sections() {
        let mut p = MilpProblem::new(DMatrix::from_row_slice(1, 2, &[1.0, -2.0]), vec![3.0]);
        p.objective = vec![1.0, 0.0];
        p.set_binary(1);
        let text = to_lp_format(&p);
        assert!(text.contains("obj: 1 x0"));
        assert!(text.contains("r0: 1 x0 - 2 x1 = 3"));
        assert!(text.contains("x0 free"));
        assert!(text.contains("0 <= x1 <= 1"));
        assert!(text.contains("Binary\n x1\nEnd"));
    }
}
