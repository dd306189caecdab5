//! CPLEX LP text output.

use std::fmt::Write;

use super::{MilpModel, VarId, VarKind};

const WRAP: usize = 8;

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(VarId, i64)]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % WRAP == 0 {
            out.push_str("\n   ");
        }
        let name = &model.var(v).name;
        let sign = if c < 0 { "-" } else { "+" };
        let mag = c.unsigned_abs();
        if k == 0 && c >= 0 {
            if mag == 1 {
                let _ = write!(out, " {name}");
            } else {
                let _ = write!(out, " {mag} {name}");
            }
        } else if mag == 1 {
            let _ = write!(out, " {sign} {name}");
        } else {
            let _ = write!(out, " {sign} {mag} {name}");
        }
    }
}

/// Renders the model. Output depends only on the model, byte for byte.
pub fn emit_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    let objective: Vec<_> = model.objective.iter().filter(|t| t.1 != 0).copied().collect();
    if objective.is_empty() {
        out.push_str(" 0");
    } else {
        write_terms(&mut out, model, &objective);
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let terms: Vec<_> = c.terms.iter().filter(|t| t.1 != 0).copied().collect();
        let _ = write!(out, " {}:", c.name);
        if terms.is_empty() {
            // LP readers need a variable on the left; any coefficient-zero
            // term keeps the row well formed.
            let _ = write!(out, " 0 {}", model.var(c.terms[0].0).name);
        } else {
            write_terms(&mut out, model, &terms);
        }
        let _ = writeln!(out, " {} {}", c.sense, c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        match (v.kind, v.upper) {
            (VarKind::Binary, _) => {}
            (_, Some(u)) if u == v.lower => {
                let _ = writeln!(out, " {} = {}", v.name, u);
            }
            (_, Some(u)) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, u);
            }
            (_, None) => {
                let _ = writeln!(out, " {} >= {}", v.name, v.lower);
            }
        }
    }
    for (title, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
        let names: Vec<_> = model
            .variables
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in names.chunks(WRAP) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
