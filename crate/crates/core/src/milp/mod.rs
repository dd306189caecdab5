//! Big-M MILP model of an instance.
//!
//! Variables per operation: start time `t`, selection `x`, ordering position
//! `u`. Per successor arc: `y`. Per conflicting pair of operations of
//! different trains: `z` in both directions. Per objective component: the
//! threshold indicator `v` and the cost `w`. The objective minimises the sum
//! of all `w`.
//!
//! By default a few rows differ from the textbook formulation so that every
//! model optimum is a feasible solution with the same cost:
//!
//! * the threshold indicator is strict (`t - t̄ + 1 <= (H + 1) v`), so a start
//!   exactly at the threshold pays the increment;
//! * cost rows are switched off when the operation is not selected;
//! * an operation without successors can never precede a conflicting
//!   operation of another train, since it never releases its resources.
//!
//! [`ModelOptions::paper_faithful`] drops these corrections.

mod assign;
mod lp;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{conflict_pairs, time_horizon, Instance, OpRef, Time};

pub use assign::{assignment_from_solution, map_solution, Assignment, AssignmentError, MapError};
pub use lp::emit_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

/// What a variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum VarRole {
    Time { train: usize, operation: usize },
    Select { train: usize, operation: usize },
    Arc { train: usize, from: usize, to: usize },
    Precede { first: OpRef, second: OpRef },
    Order { train: usize, operation: usize },
    Indicator { component: usize },
    Cost { component: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: i64,
    /// `None` is +∞.
    pub upper: Option<i64>,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Constraint {
    /// Whether an integer assignment satisfies the row, exactly.
    pub fn holds(&self, values: &[i64]) -> bool {
        let lhs: i128 = self
            .terms
            .iter()
            .map(|&(v, c)| c as i128 * values[v.0] as i128)
            .sum();
        let rhs = self.rhs as i128;
        match self.sense {
            Sense::Le => lhs <= rhs,
            Sense::Ge => lhs >= rhs,
            Sense::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Leave out the corrections described in the module documentation and
    /// emit the plain big-M formulation.
    #[serde(default)]
    pub paper_faithful: bool,
    /// Only enforce finite upper bounds on selected operations.
    #[serde(default)]
    pub relaxed_bounds: bool,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Minimised; all coefficients are 1 on the `w` variables.
    pub objective: Vec<(VarId, i64)>,
    pub options: ModelOptions,
    pub horizon: Time,
    by_name: HashMap<String, VarId>,
    times: Vec<VarId>,
    selects: Vec<VarId>,
    orders: Vec<VarId>,
    arcs: HashMap<(usize, usize, usize), VarId>,
    precedes: HashMap<(OpRef, OpRef), VarId>,
    indicators: Vec<VarId>,
    costs: Vec<VarId>,
}

impl MilpModel {
    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn time(&self, instance: &Instance, op: OpRef) -> VarId {
        self.times[instance.global_index(op)]
    }

    pub fn select(&self, instance: &Instance, op: OpRef) -> VarId {
        self.selects[instance.global_index(op)]
    }

    pub fn order(&self, instance: &Instance, op: OpRef) -> VarId {
        self.orders[instance.global_index(op)]
    }

    pub fn arc(&self, train: usize, from: usize, to: usize) -> Option<VarId> {
        self.arcs.get(&(train, from, to)).copied()
    }

    /// `z` variable meaning `first` precedes `second`.
    pub fn precede(&self, first: OpRef, second: OpRef) -> Option<VarId> {
        self.precedes.get(&(first, second)).copied()
    }

    pub fn indicator(&self, component: usize) -> VarId {
        self.indicators[component]
    }

    pub fn cost(&self, component: usize) -> VarId {
        self.costs[component]
    }

    pub fn count(&self, pred: impl Fn(&VarRole) -> bool) -> usize {
        self.variables.iter().filter(|v| pred(&v.role)).count()
    }

    /// Rows and bounds violated by an integer assignment indexed by [`VarId`].
    pub fn violated(&self, values: &[i64]) -> Vec<String> {
        let mut out = Vec::new();
        for (var, &x) in self.variables.iter().zip(values) {
            if x < var.lower || var.upper.is_some_and(|u| x > u) {
                out.push(format!("bound of {} ({x})", var.name));
            }
        }
        out.extend(
            self.constraints
                .iter()
                .filter(|c| !c.holds(values))
                .map(|c| c.name.clone()),
        );
        out
    }

    /// Sidecar document describing every variable, enough to rebuild the
    /// model and check that names still match.
    pub fn name_map(&self) -> NameMap {
        NameMap {
            options: self.options,
            horizon: self.horizon,
            variables: self
                .variables
                .iter()
                .map(|v| NamedVar {
                    name: v.name.clone(),
                    kind: v.kind,
                    role: v.role,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedVar {
    pub name: String,
    pub kind: VarKind,
    #[serde(flatten)]
    pub role: VarRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameMap {
    pub options: ModelOptions,
    pub horizon: Time,
    pub variables: Vec<NamedVar>,
}

struct Builder {
    model: MilpModel,
}

impl Builder {
    fn add_var(
        &mut self,
        name: String,
        kind: VarKind,
        lower: i64,
        upper: Option<i64>,
        role: VarRole,
    ) -> VarId {
        let id = VarId(self.model.variables.len());
        self.model.by_name.insert(name.clone(), id);
        self.model.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
            role,
        });
        id
    }

    fn row(&mut self, name: String, terms: Vec<(VarId, i64)>, sense: Sense, rhs: i64) {
        self.model.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
    }
}

fn op_name(op: OpRef) -> String {
    format!("{}_{}", op.train, op.operation)
}

pub fn build_model(instance: &Instance, options: ModelOptions) -> MilpModel {
    let h = time_horizon(instance);
    let n_ops = instance.num_operations() as i64;
    let m_order = n_ops + 1;
    let mut b = Builder {
        model: MilpModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            options,
            horizon: h,
            by_name: HashMap::new(),
            times: Vec::new(),
            selects: Vec::new(),
            orders: Vec::new(),
            arcs: HashMap::new(),
            precedes: HashMap::new(),
            indicators: Vec::new(),
            costs: Vec::new(),
        },
    };

    for op in instance.op_refs() {
        let o = instance.operation(op);
        let ub = match o.start_ub.finite() {
            Some(beta) if !options.relaxed_bounds => beta.min(h),
            _ => h,
        };
        let t = b.add_var(
            format!("t_{}", op_name(op)),
            VarKind::Continuous,
            o.start_lb,
            Some(ub),
            VarRole::Time {
                train: op.train,
                operation: op.operation,
            },
        );
        b.model.times.push(t);
    }
    for op in instance.op_refs() {
        let x = b.add_var(
            format!("x_{}", op_name(op)),
            VarKind::Binary,
            0,
            Some(1),
            VarRole::Select {
                train: op.train,
                operation: op.operation,
            },
        );
        b.model.selects.push(x);
    }
    for (i, train) in instance.trains().iter().enumerate() {
        for (a, o) in train.operations.iter().enumerate() {
            for &s in &o.successors {
                let y = b.add_var(
                    format!("y_{i}_{a}_{s}"),
                    VarKind::Binary,
                    0,
                    Some(1),
                    VarRole::Arc {
                        train: i,
                        from: a,
                        to: s,
                    },
                );
                b.model.arcs.insert((i, a, s), y);
            }
        }
    }
    let pairs = conflict_pairs(instance);
    for p in &pairs {
        for (first, second) in [(p.first, p.second), (p.second, p.first)] {
            let z = b.add_var(
                format!("z_{}_{}", op_name(first), op_name(second)),
                VarKind::Binary,
                0,
                Some(1),
                VarRole::Precede { first, second },
            );
            b.model.precedes.insert((first, second), z);
        }
    }
    for op in instance.op_refs() {
        let u = b.add_var(
            format!("u_{}", op_name(op)),
            VarKind::Integer,
            0,
            Some(n_ops),
            VarRole::Order {
                train: op.train,
                operation: op.operation,
            },
        );
        b.model.orders.push(u);
    }
    for c in 0..instance.objective().len() {
        let v = b.add_var(
            format!("v_{c}"),
            VarKind::Binary,
            0,
            Some(1),
            VarRole::Indicator { component: c },
        );
        b.model.indicators.push(v);
    }
    for c in 0..instance.objective().len() {
        let w = b.add_var(
            format!("w_{c}"),
            VarKind::Continuous,
            0,
            None,
            VarRole::Cost { component: c },
        );
        b.model.costs.push(w);
        b.model.objective.push((w, 1));
    }

    routing_rows(&mut b, instance, h, options);
    resource_rows(&mut b, instance, &pairs, h, options);
    ordering_rows(&mut b, instance, &pairs, m_order);
    objective_rows(&mut b, instance, h, options);
    b.model
}

fn routing_rows(b: &mut Builder, instance: &Instance, h: Time, options: ModelOptions) {
    for (i, train) in instance.trains().iter().enumerate() {
        let exit = train.exit();
        if exit == 0 {
            let x = b.model.select(instance, OpRef::new(i, 0));
            b.row(format!("single_{i}"), vec![(x, 1)], Sense::Eq, 1);
        } else {
            let out: Vec<_> = train.operations[0]
                .successors
                .iter()
                .map(|&s| (b.model.arc(i, 0, s).unwrap(), 1))
                .collect();
            b.row(format!("flow_entry_{i}"), out, Sense::Eq, 1);
            let into: Vec<_> = instance
                .predecessors(OpRef::new(i, exit))
                .iter()
                .map(|&p| (b.model.arc(i, p, exit).unwrap(), 1))
                .collect();
            b.row(format!("flow_exit_{i}"), into, Sense::Eq, 1);
            for c in 1..exit {
                let mut terms: Vec<_> = instance
                    .predecessors(OpRef::new(i, c))
                    .iter()
                    .map(|&p| (b.model.arc(i, p, c).unwrap(), 1))
                    .collect();
                terms.extend(
                    train.operations[c]
                        .successors
                        .iter()
                        .map(|&s| (b.model.arc(i, c, s).unwrap(), -1)),
                );
                b.row(format!("flow_{i}_{c}"), terms, Sense::Eq, 0);
            }
        }
        for (a, o) in train.operations.iter().enumerate() {
            let xa = b.model.select(instance, OpRef::new(i, a));
            let ta = b.model.time(instance, OpRef::new(i, a));
            for &s in &o.successors {
                let y = b.model.arc(i, a, s).unwrap();
                let xb = b.model.select(instance, OpRef::new(i, s));
                let tb = b.model.time(instance, OpRef::new(i, s));
                b.row(format!("ysel_{i}_{a}_{s}"), vec![(y, 1), (xa, -1)], Sense::Le, 0);
                b.row(format!("ysuc_{i}_{a}_{s}"), vec![(y, 1), (xb, -1)], Sense::Le, 0);
                b.row(
                    format!("yboth_{i}_{a}_{s}"),
                    vec![(xa, 1), (xb, 1), (y, -1)],
                    Sense::Le,
                    1,
                );
                b.row(
                    format!("run_{i}_{a}_{s}"),
                    vec![(tb, 1), (ta, -1), (y, -o.min_duration)],
                    Sense::Ge,
                    0,
                );
            }
            if options.relaxed_bounds {
                if let Some(beta) = o.start_ub.finite().filter(|&beta| beta < h) {
                    b.row(format!("ub_{i}_{a}"), vec![(ta, 1), (xa, h - beta)], Sense::Le, h);
                }
            }
        }
    }
}

fn resource_rows(
    b: &mut Builder,
    instance: &Instance,
    pairs: &[crate::model::ConflictPair],
    h: Time,
    options: ModelOptions,
) {
    for p in pairs {
        for (a, other) in [(p.first, p.second), (p.second, p.first)] {
            let z = b.model.precede(a, other).unwrap();
            let succ = instance.successors(a);
            if succ.is_empty() && !options.paper_faithful {
                b.row(
                    format!("hold_{}_{}", op_name(a), op_name(other)),
                    vec![(z, 1)],
                    Sense::Eq,
                    0,
                );
                continue;
            }
            let t_other = b.model.time(instance, other);
            for u in instance.usages(a) {
                if !p.resources.contains(&u.resource) {
                    continue;
                }
                // The successor starts no later than H and `other` no earlier
                // than 0, so H + λ deactivates the row.
                let m = h + u.release_time;
                for &s in succ {
                    let ts = b.model.time(instance, OpRef::new(a.train, s));
                    b.row(
                        format!("rel_{}_{}_{}_r{}", op_name(a), op_name(other), s, u.resource.0),
                        vec![(ts, 1), (t_other, -1), (z, m)],
                        Sense::Le,
                        m - u.release_time,
                    );
                }
            }
        }
        let (a, bb) = (p.first, p.second);
        let zab = b.model.precede(a, bb).unwrap();
        let zba = b.model.precede(bb, a).unwrap();
        let xa = b.model.select(instance, a);
        let xb = b.model.select(instance, bb);
        let tag = format!("{}_{}", op_name(a), op_name(bb));
        b.row(
            format!("zsel1_{tag}"),
            vec![(xa, 1), (zab, -1), (zba, -1)],
            Sense::Ge,
            0,
        );
        b.row(
            format!("zsel2_{tag}"),
            vec![(xb, 1), (zab, -1), (zba, -1)],
            Sense::Ge,
            0,
        );
        b.row(
            format!("zboth_{tag}"),
            vec![(xa, 1), (xb, 1), (zab, -1), (zba, -1)],
            Sense::Le,
            1,
        );
    }
}

fn ordering_rows(b: &mut Builder, instance: &Instance, pairs: &[crate::model::ConflictPair], m: i64) {
    for (i, train) in instance.trains().iter().enumerate() {
        for (a, o) in train.operations.iter().enumerate() {
            let ua = b.model.order(instance, OpRef::new(i, a));
            for &s in &o.successors {
                let ub = b.model.order(instance, OpRef::new(i, s));
                let y = b.model.arc(i, a, s).unwrap();
                b.row(
                    format!("ord_{i}_{a}_{s}"),
                    vec![(ua, 1), (ub, -1), (y, m)],
                    Sense::Le,
                    m - 1,
                );
            }
        }
    }
    for p in pairs {
        for (a, other) in [(p.first, p.second), (p.second, p.first)] {
            let z = b.model.precede(a, other).unwrap();
            let u_other = b.model.order(instance, other);
            for &s in instance.successors(a) {
                let us = b.model.order(instance, OpRef::new(a.train, s));
                b.row(
                    format!("ordz_{}_{}_{}", op_name(a), op_name(other), s),
                    vec![(us, 1), (u_other, -1), (z, m)],
                    Sense::Le,
                    m - 1,
                );
            }
        }
    }
}

fn objective_rows(b: &mut Builder, instance: &Instance, h: Time, options: ModelOptions) {
    for (k, c) in instance.objective().iter().enumerate() {
        let op = OpRef::new(c.train, c.operation);
        let t = b.model.time(instance, op);
        let x = b.model.select(instance, op);
        let v = b.model.indicator(k);
        let w = b.model.cost(k);
        if options.paper_faithful {
            b.row(format!("ind_{k}"), vec![(t, 1), (v, -h)], Sense::Le, c.threshold);
            b.row(
                format!("cost_{k}"),
                vec![(w, 1), (t, -c.coeff), (v, -c.increment)],
                Sense::Ge,
                -c.coeff * c.threshold,
            );
        } else {
            // t - t̄ + 1 <= (H + 1) v
            b.row(
                format!("ind_{k}"),
                vec![(t, 1), (v, -(h + 1))],
                Sense::Le,
                c.threshold - 1,
            );
            // w >= γ (t - t̄) + ζ v - M (1 - x), with M the largest cost at H
            let m = c.coeff * h + c.increment;
            b.row(
                format!("cost_{k}"),
                vec![(w, 1), (t, -c.coeff), (v, -c.increment), (x, -m)],
                Sense::Ge,
                -c.coeff * c.threshold - m,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_instance, ObjectiveComponent, Operation, Train};

    fn single_op() -> Instance {
        build_instance(vec![Train::new(vec![Operation::new(0)])], vec![]).unwrap()
    }

    #[test]
    fn single_operation_model_is_trivial() {
        let inst = single_op();
        let m = build_model(&inst, ModelOptions::default());
        assert_eq!(m.variables.len(), 3);
        assert!(m.objective.is_empty());
        assert_eq!(m.constraints.len(), 1);
        assert!(m.violated(&[0, 1, 0]).is_empty());
        assert_eq!(m.violated(&[0, 0, 0]), vec!["single_0".to_string()]);
    }

    #[test]
    fn disjoint_trains_have_no_pair_rows() {
        let t = |r: &str| {
            Train::new(vec![
                Operation::new(1).resource(r, 0).successors([1]),
                Operation::new(0),
            ])
        };
        let inst = build_instance(vec![t("a"), t("b")], vec![]).unwrap();
        let m = build_model(&inst, ModelOptions::default());
        assert_eq!(m.count(|r| matches!(r, VarRole::Precede { .. })), 0);
        assert!(m
            .constraints
            .iter()
            .all(|c| !c.name.starts_with("rel_") && !c.name.starts_with("ordz_")));
    }

    #[test]
    fn strict_indicator_charges_at_threshold() {
        let train = Train::new(vec![Operation::new(0).start_lb(4)]);
        let comp = ObjectiveComponent {
            train: 0,
            operation: 0,
            threshold: 4,
            coeff: 0,
            increment: 3,
        };
        let inst = build_instance(vec![train], vec![comp]).unwrap();
        // variables: t, x, u, v, w
        let fixed = build_model(&inst, ModelOptions::default());
        assert!(!fixed.violated(&[4, 1, 0, 0, 0]).is_empty());
        assert!(fixed.violated(&[4, 1, 0, 1, 3]).is_empty());
        let uncorrected = build_model(
            &inst,
            ModelOptions {
                paper_faithful: true,
                ..Default::default()
            },
        );
        assert!(uncorrected.violated(&[4, 1, 0, 0, 0]).is_empty());
    }
}
