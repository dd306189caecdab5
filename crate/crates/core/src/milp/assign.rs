//! Solver assignments: reading them, turning them into solutions, and building
//! them from solutions.
//!
//! The assignment file has one `name value` pair per line. Blank lines and
//! lines starting with `#` are ignored. Values are decimal numbers as printed
//! by MILP solvers (`1`, `0.9999999`, `2.5e+01`).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{MilpModel, VarKind, VarRole};
use crate::model::{Event, Instance, OpRef, Solution, Time};
use crate::verify::{verify, Violation};

/// Binaries further than this from 0 or 1 are rejected.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignmentError {
    #[error("line {line}: expected `name value`, found {found:?}")]
    Syntax { line: usize, found: String },
    #[error("line {line}: {value:?} is not a number")]
    BadNumber { line: usize, value: String },
    #[error("line {line}: {name} assigned twice")]
    Duplicate { line: usize, name: String },
}

impl Assignment {
    pub fn parse(text: &str) -> Result<Self, AssignmentError> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(AssignmentError::Syntax {
                    line,
                    found: trimmed.to_string(),
                });
            };
            let v: f64 = value.parse().map_err(|_| AssignmentError::BadNumber {
                line,
                value: value.to_string(),
            })?;
            if values.insert(name.to_string(), v).is_some() {
                return Err(AssignmentError::Duplicate {
                    line,
                    name: name.to_string(),
                });
            }
        }
        Ok(Assignment { values })
    }

    /// Integer assignment in model variable order, written as text.
    pub fn from_integers(model: &MilpModel, values: &[i64]) -> Self {
        Assignment {
            values: model
                .variables
                .iter()
                .zip(values)
                .map(|(v, &x)| (v.name.clone(), x as f64))
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, v) in &self.values {
            out.push_str(name);
            out.push(' ');
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("assignment is missing {} variable(s), first {}", .missing.len(), .missing[0])]
    IncompleteAssignment { missing: Vec<String> },
    #[error("assignment names unknown variable {name}")]
    UnknownVariable { name: String },
    #[error("binary {name} has non-integral value {value}")]
    NonIntegralBinary { name: String, value: f64 },
    #[error("{name} has non-finite value {value}")]
    NonFiniteValue { name: String, value: f64 },
    #[error("mapped solution is infeasible: {}", ViolationList(.violations))]
    MappingError { violations: Vec<Violation> },
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Reads back a solver assignment: selected operations sorted by `(t, u)`,
/// objective the rounded sum of the cost variables. The result is verified.
pub fn map_solution(
    model: &MilpModel,
    assignment: &Assignment,
    instance: &Instance,
) -> Result<Solution, MapError> {
    if let Some(name) = assignment.values.keys().find(|n| model.lookup(n).is_none()) {
        return Err(MapError::UnknownVariable { name: name.clone() });
    }
    let missing: Vec<String> = model
        .variables
        .iter()
        .filter(|v| !assignment.values.contains_key(&v.name))
        .map(|v| v.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(MapError::IncompleteAssignment { missing });
    }
    let mut values = Vec::with_capacity(model.variables.len());
    for v in &model.variables {
        let x = assignment.values[&v.name];
        if !x.is_finite() {
            return Err(MapError::NonFiniteValue {
                name: v.name.clone(),
                value: x,
            });
        }
        if v.kind == VarKind::Binary && (x - x.round()).abs() > INTEGRALITY_TOLERANCE
            || v.kind == VarKind::Binary && !(x.round() == 0.0 || x.round() == 1.0)
        {
            return Err(MapError::NonIntegralBinary {
                name: v.name.clone(),
                value: x,
            });
        }
        values.push(x);
    }

    let mut picked: Vec<(Time, f64, OpRef)> = Vec::new();
    for op in instance.op_refs() {
        if values[model.select(instance, op).0].round() == 1.0 {
            let t = values[model.time(instance, op).0].round() as Time;
            let u = values[model.order(instance, op).0];
            picked.push((t, u, op));
        }
    }
    picked.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let total: f64 = model.objective.iter().map(|&(w, c)| c as f64 * values[w.0]).sum();
    let solution = Solution {
        objective_value: total.round().max(0.0) as i64,
        events: picked
            .into_iter()
            .map(|(t, _, op)| Event::new(t, op.train, op.operation))
            .collect(),
    };
    let verdict = verify(instance, &solution);
    if verdict.feasible {
        Ok(solution)
    } else {
        Err(MapError::MappingError {
            violations: verdict.violations,
        })
    }
}

/// Builds an integer model assignment, indexed by variable, describing a
/// feasible solution.
///
/// Operations off the route start at the earliest time allowed by their lower
/// bound and their predecessors, and take order position 0.
pub fn assignment_from_solution(
    model: &MilpModel,
    instance: &Instance,
    solution: &Solution,
) -> Result<Vec<i64>, Vec<Violation>> {
    let verdict = verify(instance, solution);
    if !verdict.feasible {
        return Err(verdict.violations);
    }
    let n = instance.num_operations();
    let mut start: Vec<Option<Time>> = vec![None; n];
    let mut position: Vec<i64> = vec![0; n];
    for (k, e) in solution.events.iter().enumerate() {
        let g = instance.global_index(e.op());
        start[g] = Some(e.time);
        position[g] = k as i64;
    }
    let mut time: Vec<Time> = vec![0; n];
    for op in instance.op_refs() {
        let g = instance.global_index(op);
        time[g] = match start[g] {
            Some(t) => t,
            None => instance
                .predecessors(op)
                .iter()
                .map(|&p| time[instance.global_index(OpRef::new(op.train, p))])
                .fold(instance.operation(op).start_lb, Time::max),
        };
    }
    let selected = |op: OpRef| start[instance.global_index(op)].is_some();

    let mut values = vec![0i64; model.variables.len()];
    for (k, var) in model.variables.iter().enumerate() {
        values[k] = match var.role {
            VarRole::Time { train, operation } => time[instance.global_index(OpRef::new(train, operation))],
            VarRole::Select { train, operation } => selected(OpRef::new(train, operation)) as i64,
            VarRole::Arc { train, from, to } => {
                let a = start[instance.global_index(OpRef::new(train, from))];
                let b = start[instance.global_index(OpRef::new(train, to))];
                let sched = solution.events.iter().filter(|e| e.train == train);
                let consecutive = sched
                    .clone()
                    .zip(sched.skip(1))
                    .any(|(p, q)| p.operation == from && q.operation == to);
                (a.is_some() && b.is_some() && consecutive) as i64
            }
            VarRole::Precede { first, second } => {
                let both = selected(first) && selected(second);
                let before = position[instance.global_index(first)] < position[instance.global_index(second)];
                (both && before) as i64
            }
            VarRole::Order { train, operation } => {
                position[instance.global_index(OpRef::new(train, operation))]
            }
            VarRole::Indicator { component } => {
                let c = &instance.objective()[component];
                (time[instance.global_index(OpRef::new(c.train, c.operation))] >= c.threshold) as i64
            }
            VarRole::Cost { component } => {
                let c = &instance.objective()[component];
                let op = OpRef::new(c.train, c.operation);
                if selected(op) || model.options.paper_faithful {
                    let cost = c.cost_at(time[instance.global_index(op)]);
                    cost.clamp(0, i64::MAX as i128) as i64
                } else {
                    0
                }
            }
        };
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_exponents() {
        let a = Assignment::parse("# header\n\nx_0_0 1\nt_0_1   2.5e+01\n").unwrap();
        assert_eq!(a.values["t_0_1"], 25.0);
        assert_eq!(a.values.len(), 2);
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(
            Assignment::parse("x 1\nx 0\n"),
            Err(AssignmentError::Duplicate {
                line: 2,
                name: "x".into()
            })
        );
        assert!(matches!(
            Assignment::parse("x 1 2\n"),
            Err(AssignmentError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            Assignment::parse("x one\n"),
            Err(AssignmentError::BadNumber { line: 1, .. })
        ));
    }
}
