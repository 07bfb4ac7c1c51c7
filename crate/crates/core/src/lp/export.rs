use std::fmt::Write as _;

use super::{LpModel, RowSense};

/// Fixed-point decimal with 12 significant digits, trailing zeros trimmed.
pub(crate) fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let mut s = format!("{:.*}", decimals, v);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", num(-coef), name);
    } else if first {
        let _ = write!(out, " {} {}", num(coef), name);
    } else {
        let _ = write!(out, " + {} {}", num(coef), name);
    }
}

/// Renders the model in CPLEX LP text format for cross-checking with external solvers.
pub fn write_lp_format(model: &LpModel) -> String {
    let mut out = String::from("\\ stoclear export\nMinimize\n obj:");
    let mut first = true;
    for (j, &c) in model.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &model.variables[j].name);
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for row in &model.constraints {
        let _ = write!(out, " {}:", row.name);
        let mut first = true;
        for &(j, a) in &row.coeffs {
            term(&mut out, first, a, &model.variables[j].name);
            first = false;
        }
        if first {
            let _ = write!(out, " 0 {}", model.variables.first().map(|v| v.name.as_str()).unwrap_or("x"));
        }
        let op = match row.sense {
            RowSense::Eq => "=",
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
        };
        let _ = writeln!(out, " {} {}", op, num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {} free", v.name);
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
            }
            (true, false) => {
                let _ = writeln!(out, " {} >= {}", v.name, num(v.lower));
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {} <= {}", v.name, num(v.upper));
            }
        }
    }
    out.push_str("End\n");
    out
}
