//! Domain model: trains as operation DAGs, objective components, solutions.
//!
//! Raw [`Train`] and [`ObjectiveComponent`] values are plain data. An
//! [`Instance`] can only be obtained through [`Instance::new`] (or
//! [`build_instance`]), which checks every structural rule and precomputes the
//! lookup tables used by the verifier, the solvers and the MILP builder.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer time unit used for all start times, durations and release times.
pub type Time = i64;

/// Largest value accepted for any numeric field.
///
/// Keeps every intermediate sum in 64-bit arithmetic far away from wrapping.
pub const MAX_VALUE: i64 = (1 << 53) - 1;

/// Upper bound on an operation's start time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum UpperBound {
    Finite(Time),
    #[default]
    Unbounded,
}

impl UpperBound {
    pub fn finite(self) -> Option<Time> {
        match self {
            UpperBound::Finite(t) => Some(t),
            UpperBound::Unbounded => None,
        }
    }

    /// True if `t` does not exceed the bound.
    pub fn admits(self, t: Time) -> bool {
        match self {
            UpperBound::Finite(ub) => t <= ub,
            UpperBound::Unbounded => true,
        }
    }
}

impl fmt::Display for UpperBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpperBound::Finite(t) => write!(f, "{t}"),
            UpperBound::Unbounded => f.write_str("inf"),
        }
    }
}

/// One entry of an operation's resource requirements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResourceUsage {
    pub resource: String,
    pub release_time: Time,
}

impl ResourceUsage {
    pub fn new(resource: impl Into<String>, release_time: Time) -> Self {
        ResourceUsage {
            resource: resource.into(),
            release_time,
        }
    }
}

/// A node of a train's operation graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Operation {
    pub start_lb: Time,
    pub start_ub: UpperBound,
    pub min_duration: Time,
    pub resources: Vec<ResourceUsage>,
    /// Indices of the allowed immediate successors within the same train.
    pub successors: Vec<usize>,
}

impl Operation {
    pub fn new(min_duration: Time) -> Self {
        Operation {
            min_duration,
            ..Default::default()
        }
    }

    pub fn start_lb(mut self, t: Time) -> Self {
        self.start_lb = t;
        self
    }

    pub fn start_ub(mut self, t: Time) -> Self {
        self.start_ub = UpperBound::Finite(t);
        self
    }

    pub fn resource(mut self, name: impl Into<String>, release_time: Time) -> Self {
        self.resources.push(ResourceUsage::new(name, release_time));
        self
    }

    pub fn successors(mut self, succ: impl IntoIterator<Item = usize>) -> Self {
        self.successors = succ.into_iter().collect();
        self
    }
}

/// A train's operation list, ordered topologically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Train {
    pub operations: Vec<Operation>,
}

impl Train {
    pub fn new(operations: Vec<Operation>) -> Self {
        Train { operations }
    }

    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    /// Index of the exit operation (the last one).
    pub fn exit(&self) -> usize {
        self.operations.len().saturating_sub(1)
    }
}

/// One `op_delay` term of the objective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ObjectiveComponent {
    pub train: usize,
    pub operation: usize,
    pub threshold: Time,
    pub coeff: i64,
    pub increment: i64,
}

impl ObjectiveComponent {
    /// Cost contributed when the referenced operation starts at `t`.
    ///
    /// The step term fires at equality: a start exactly at the threshold pays
    /// the increment.
    pub fn cost_at(&self, t: Time) -> i128 {
        let late = t as i128 - self.threshold as i128;
        let linear = self.coeff as i128 * late.max(0);
        let step = if late >= 0 { self.increment as i128 } else { 0 };
        linear + step
    }
}

/// Reference to one operation of one train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpRef {
    pub train: usize,
    pub operation: usize,
}

impl OpRef {
    pub fn new(train: usize, operation: usize) -> Self {
        OpRef { train, operation }
    }
}

impl fmt::Display for OpRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "train {} operation {}", self.train, self.operation)
    }
}

/// Dense resource index assigned in name order when an instance is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceId(pub usize);

/// Interned form of a [`ResourceUsage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Usage {
    pub resource: ResourceId,
    pub release_time: Time,
}

/// Which numeric field a value error refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueSite {
    Operation {
        train: usize,
        operation: usize,
        field: &'static str,
    },
    Release {
        train: usize,
        operation: usize,
        usage: usize,
    },
    Component {
        component: usize,
        field: &'static str,
    },
}

impl ValueSite {
    pub fn path(&self) -> String {
        match self {
            ValueSite::Operation {
                train,
                operation,
                field,
            } => format!("/trains/{train}/{operation}/{field}"),
            ValueSite::Release {
                train,
                operation,
                usage,
            } => format!("/trains/{train}/{operation}/resources/{usage}/release_time"),
            ValueSite::Component { component, field } => format!("/objective/{component}/{field}"),
        }
    }
}

impl fmt::Display for ValueSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueSite::Operation {
                train,
                operation,
                field,
            } => write!(f, "train {train}, operation {operation}, {field}"),
            ValueSite::Release {
                train,
                operation,
                usage,
            } => write!(
                f,
                "train {train}, operation {operation}, resource usage {usage}, release_time"
            ),
            ValueSite::Component { component, field } => {
                write!(f, "objective component {component}, {field}")
            }
        }
    }
}

/// Which index an out-of-range error refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexSite {
    Successor { train: usize, operation: usize },
    ComponentTrain { component: usize },
    ComponentOperation { component: usize, train: usize },
}

impl IndexSite {
    pub fn path(&self) -> String {
        match self {
            IndexSite::Successor { train, operation } => {
                format!("/trains/{train}/{operation}/successors")
            }
            IndexSite::ComponentTrain { component } => format!("/objective/{component}/train"),
            IndexSite::ComponentOperation { component, .. } => {
                format!("/objective/{component}/operation")
            }
        }
    }
}

impl fmt::Display for IndexSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSite::Successor { train, operation } => {
                write!(f, "successor of train {train}, operation {operation}")
            }
            IndexSite::ComponentTrain { component } => {
                write!(f, "train of objective component {component}")
            }
            IndexSite::ComponentOperation { component, train } => {
                write!(f, "operation of objective component {component} (train {train})")
            }
        }
    }
}

/// First structural rule violated by raw instance data.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("train {train} has no operations")]
    EmptyTrain { train: usize },
    #[error("train {train}, operation {operation}: successor {successor} does not come after it (cyclic or non-topological graph)")]
    CyclicGraph {
        train: usize,
        operation: usize,
        successor: usize,
    },
    #[error(
        "train {train}, operation {operation}: has no predecessor, but only operation 0 may be the entry"
    )]
    MultipleEntries { train: usize, operation: usize },
    #[error("train {train}, operation {operation}: has no successors, but only the last operation may be the exit")]
    MultipleExits { train: usize, operation: usize },
    #[error("{site}: index {index} out of range (length {len})")]
    IndexOutOfRange {
        site: IndexSite,
        index: usize,
        len: usize,
    },
    #[error("{site}: negative value {value}")]
    NegativeValue { site: ValueSite, value: i64 },
    #[error("{site}: value {value} exceeds the supported maximum {MAX_VALUE}")]
    ValueTooLarge { site: ValueSite, value: i64 },
    #[error("train {train}, operation {operation}: start_lb {start_lb} exceeds start_ub {start_ub}")]
    InvertedBounds {
        train: usize,
        operation: usize,
        start_lb: Time,
        start_ub: Time,
    },
    #[error("train {train}, operation {operation}: successor {successor} listed twice")]
    DuplicateSuccessor {
        train: usize,
        operation: usize,
        successor: usize,
    },
    #[error("train {train}, operation {operation}: resource {resource:?} listed twice")]
    DuplicateResourceInOperation {
        train: usize,
        operation: usize,
        resource: String,
    },
}

impl ModelError {
    /// JSON-pointer style location of the offending item in the file format.
    pub fn path(&self) -> String {
        match self {
            ModelError::EmptyTrain { train } => format!("/trains/{train}"),
            ModelError::CyclicGraph { train, operation, .. }
            | ModelError::DuplicateSuccessor { train, operation, .. } => {
                format!("/trains/{train}/{operation}/successors")
            }
            ModelError::MultipleEntries { train, operation }
            | ModelError::MultipleExits { train, operation } => {
                format!("/trains/{train}/{operation}")
            }
            ModelError::IndexOutOfRange { site, .. } => site.path(),
            ModelError::NegativeValue { site, .. } | ModelError::ValueTooLarge { site, .. } => site.path(),
            ModelError::InvertedBounds { train, operation, .. } => {
                format!("/trains/{train}/{operation}/start_ub")
            }
            ModelError::DuplicateResourceInOperation { train, operation, .. } => {
                format!("/trains/{train}/{operation}/resources")
            }
        }
    }
}

/// A validated problem instance. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    trains: Vec<Train>,
    objective: Vec<ObjectiveComponent>,
    resource_names: Vec<String>,
    usages: Vec<Vec<Vec<Usage>>>,
    predecessors: Vec<Vec<Vec<usize>>>,
    components_by_op: Vec<Vec<Vec<usize>>>,
    op_offsets: Vec<usize>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.trains == other.trains && self.objective == other.objective
    }
}

impl Eq for Instance {}

/// Validates raw data and builds an [`Instance`].
pub fn build_instance(
    trains: Vec<Train>,
    objective: Vec<ObjectiveComponent>,
) -> Result<Instance, ModelError> {
    Instance::new(trains, objective)
}

fn check_value(site: impl FnOnce() -> ValueSite, value: i64) -> Result<(), ModelError> {
    if value < 0 {
        Err(ModelError::NegativeValue { site: site(), value })
    } else if value > MAX_VALUE {
        Err(ModelError::ValueTooLarge { site: site(), value })
    } else {
        Ok(())
    }
}

fn validate_train(index: usize, train: &Train) -> Result<(), ModelError> {
    let n = train.operations.len();
    if n == 0 {
        return Err(ModelError::EmptyTrain { train: index });
    }
    let mut has_pred = vec![false; n];
    for (a, op) in train.operations.iter().enumerate() {
        let site = |field| {
            move || ValueSite::Operation {
                train: index,
                operation: a,
                field,
            }
        };
        check_value(site("start_lb"), op.start_lb)?;
        if let UpperBound::Finite(ub) = op.start_ub {
            check_value(site("start_ub"), ub)?;
            if op.start_lb > ub {
                return Err(ModelError::InvertedBounds {
                    train: index,
                    operation: a,
                    start_lb: op.start_lb,
                    start_ub: ub,
                });
            }
        }
        check_value(site("min_duration"), op.min_duration)?;
        for (k, usage) in op.resources.iter().enumerate() {
            check_value(
                || ValueSite::Release {
                    train: index,
                    operation: a,
                    usage: k,
                },
                usage.release_time,
            )?;
            if op.resources[..k].iter().any(|u| u.resource == usage.resource) {
                return Err(ModelError::DuplicateResourceInOperation {
                    train: index,
                    operation: a,
                    resource: usage.resource.clone(),
                });
            }
        }
        for (k, &s) in op.successors.iter().enumerate() {
            if s >= n {
                return Err(ModelError::IndexOutOfRange {
                    site: IndexSite::Successor {
                        train: index,
                        operation: a,
                    },
                    index: s,
                    len: n,
                });
            }
            if s <= a {
                return Err(ModelError::CyclicGraph {
                    train: index,
                    operation: a,
                    successor: s,
                });
            }
            if op.successors[..k].contains(&s) {
                return Err(ModelError::DuplicateSuccessor {
                    train: index,
                    operation: a,
                    successor: s,
                });
            }
            has_pred[s] = true;
        }
    }
    // With index-increasing arcs, "reachable from operation 0" reduces to
    // "has a predecessor", and "reaches the last operation" to "has a successor".
    for (a, op) in train.operations.iter().enumerate() {
        if a > 0 && !has_pred[a] {
            return Err(ModelError::MultipleEntries {
                train: index,
                operation: a,
            });
        }
        if a + 1 < n && op.successors.is_empty() {
            return Err(ModelError::MultipleExits {
                train: index,
                operation: a,
            });
        }
    }
    Ok(())
}

impl Instance {
    pub fn new(trains: Vec<Train>, objective: Vec<ObjectiveComponent>) -> Result<Instance, ModelError> {
        for (i, train) in trains.iter().enumerate() {
            validate_train(i, train)?;
        }
        for (c, comp) in objective.iter().enumerate() {
            if comp.train >= trains.len() {
                return Err(ModelError::IndexOutOfRange {
                    site: IndexSite::ComponentTrain { component: c },
                    index: comp.train,
                    len: trains.len(),
                });
            }
            let n = trains[comp.train].len();
            if comp.operation >= n {
                return Err(ModelError::IndexOutOfRange {
                    site: IndexSite::ComponentOperation {
                        component: c,
                        train: comp.train,
                    },
                    index: comp.operation,
                    len: n,
                });
            }
            let site = |field| move || ValueSite::Component { component: c, field };
            check_value(site("threshold"), comp.threshold)?;
            check_value(site("coeff"), comp.coeff)?;
            check_value(site("increment"), comp.increment)?;
        }

        let mut names: Vec<&str> = trains
            .iter()
            .flat_map(|t| &t.operations)
            .flat_map(|op| &op.resources)
            .map(|u| u.resource.as_str())
            .collect();
        names.sort_unstable();
        names.dedup();
        let ids: HashMap<&str, ResourceId> = names
            .iter()
            .enumerate()
            .map(|(k, n)| (*n, ResourceId(k)))
            .collect();
        let usages = trains
            .iter()
            .map(|t| {
                t.operations
                    .iter()
                    .map(|op| {
                        op.resources
                            .iter()
                            .map(|u| Usage {
                                resource: ids[u.resource.as_str()],
                                release_time: u.release_time,
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let resource_names = names.into_iter().map(str::to_owned).collect();

        let predecessors = trains
            .iter()
            .map(|t| {
                let mut preds = vec![Vec::new(); t.len()];
                for (a, op) in t.operations.iter().enumerate() {
                    for &s in &op.successors {
                        preds[s].push(a);
                    }
                }
                preds
            })
            .collect();

        let mut components_by_op: Vec<Vec<Vec<usize>>> =
            trains.iter().map(|t| vec![Vec::new(); t.len()]).collect();
        for (c, comp) in objective.iter().enumerate() {
            components_by_op[comp.train][comp.operation].push(c);
        }

        let mut op_offsets = Vec::with_capacity(trains.len() + 1);
        let mut total = 0;
        for t in &trains {
            op_offsets.push(total);
            total += t.len();
        }
        op_offsets.push(total);

        Ok(Instance {
            trains,
            objective,
            resource_names,
            usages,
            predecessors,
            components_by_op,
            op_offsets,
        })
    }

    pub fn trains(&self) -> &[Train] {
        &self.trains
    }

    pub fn train(&self, i: usize) -> &Train {
        &self.trains[i]
    }

    pub fn num_trains(&self) -> usize {
        self.trains.len()
    }

    pub fn operation(&self, op: OpRef) -> &Operation {
        &self.trains[op.train].operations[op.operation]
    }

    pub fn objective(&self) -> &[ObjectiveComponent] {
        &self.objective
    }

    /// Total number of operations over all trains.
    pub fn num_operations(&self) -> usize {
        *self.op_offsets.last().unwrap_or(&0)
    }

    /// Dense index of an operation in `0..num_operations()`.
    pub fn global_index(&self, op: OpRef) -> usize {
        self.op_offsets[op.train] + op.operation
    }

    pub fn contains(&self, op: OpRef) -> bool {
        op.train < self.trains.len() && op.operation < self.trains[op.train].len()
    }

    /// All resource names in [`ResourceId`] order.
    pub fn resource_names(&self) -> &[String] {
        &self.resource_names
    }

    pub fn resource_name(&self, id: ResourceId) -> &str {
        &self.resource_names[id.0]
    }

    pub fn usages(&self, op: OpRef) -> &[Usage] {
        &self.usages[op.train][op.operation]
    }

    pub fn predecessors(&self, op: OpRef) -> &[usize] {
        &self.predecessors[op.train][op.operation]
    }

    pub fn successors(&self, op: OpRef) -> &[usize] {
        &self.operation(op).successors
    }

    /// Indices into [`Instance::objective`] attached to `op`.
    pub fn components_of(&self, op: OpRef) -> &[usize] {
        &self.components_by_op[op.train][op.operation]
    }

    /// Objective cost of starting `op` at `t`, summed over its components.
    pub fn op_cost(&self, op: OpRef, t: Time) -> i128 {
        self.components_of(op)
            .iter()
            .map(|&c| self.objective[c].cost_at(t))
            .sum()
    }

    /// Every operation of every train, train-major.
    pub fn op_refs(&self) -> impl Iterator<Item = OpRef> + '_ {
        self.trains
            .iter()
            .enumerate()
            .flat_map(|(i, t)| (0..t.len()).map(move |a| OpRef::new(i, a)))
    }

    pub fn into_parts(self) -> (Vec<Train>, Vec<ObjectiveComponent>) {
        (self.trains, self.objective)
    }
}

/// Result of [`enumerate_routes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteEnumeration {
    pub routes: Vec<Vec<usize>>,
    pub truncated: bool,
}

/// All entry-to-exit paths of a valid train, in lexicographic order of
/// operation indices, stopping after `limit` routes.
pub fn enumerate_routes(train: &Train, limit: usize) -> RouteEnumeration {
    let mut routes = Vec::new();
    if train.is_empty() {
        return RouteEnumeration {
            routes,
            truncated: false,
        };
    }
    let exit = train.exit();
    let sorted: Vec<Vec<usize>> = train
        .operations
        .iter()
        .map(|op| {
            let mut s = op.successors.clone();
            s.sort_unstable();
            s
        })
        .collect();

    // Explicit stack of (node, next successor slot) pairs.
    let mut path = vec![0usize];
    let mut cursor = vec![0usize];
    while let Some(&node) = path.last() {
        if node == exit {
            if routes.len() == limit {
                return RouteEnumeration {
                    routes,
                    truncated: true,
                };
            }
            routes.push(path.clone());
            path.pop();
            cursor.pop();
            continue;
        }
        let slot = cursor.last_mut().expect("cursor tracks path");
        if let Some(&next) = sorted[node].get(*slot) {
            *slot += 1;
            path.push(next);
            cursor.push(0);
        } else {
            path.pop();
            cursor.pop();
        }
    }
    RouteEnumeration {
        routes,
        truncated: false,
    }
}

/// Two operations of different trains sharing at least one resource.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictPair {
    /// Operation of the lower-indexed train.
    pub first: OpRef,
    pub second: OpRef,
    /// Shared resources, ascending.
    pub resources: Vec<ResourceId>,
}

/// Every unordered pair of operations of different trains that share a
/// resource, sorted by `(first, second)`.
pub fn conflict_pairs(instance: &Instance) -> Vec<ConflictPair> {
    let mut users: Vec<Vec<OpRef>> = vec![Vec::new(); instance.resource_names().len()];
    for op in instance.op_refs() {
        for u in instance.usages(op) {
            users[u.resource.0].push(op);
        }
    }
    let mut pairs: BTreeMap<(OpRef, OpRef), Vec<ResourceId>> = BTreeMap::new();
    for (r, ops) in users.iter().enumerate() {
        for (k, &a) in ops.iter().enumerate() {
            for &b in &ops[k + 1..] {
                if a.train != b.train {
                    let key = if a < b { (a, b) } else { (b, a) };
                    pairs.entry(key).or_default().push(ResourceId(r));
                }
            }
        }
    }
    pairs
        .into_iter()
        .map(|((first, second), resources)| ConflictPair {
            first,
            second,
            resources,
        })
        .collect()
}

/// Upper bound on start times used for big-M constants and unbounded `start_ub`.
///
/// Largest finite bound or threshold, plus every minimum duration, plus every
/// release time. Along any chain of earliest-start constraints each duration
/// and each release time is counted at most once, so some optimal solution
/// starts every operation at or before this value.
pub fn time_horizon(instance: &Instance) -> Time {
    let mut base: Time = 0;
    let mut sum: Time = 0;
    for op in instance.trains().iter().flat_map(|t| &t.operations) {
        base = base.max(op.start_lb);
        if let Some(ub) = op.start_ub.finite() {
            base = base.max(ub);
        }
        sum = sum.saturating_add(op.min_duration);
        for u in &op.resources {
            sum = sum.saturating_add(u.release_time);
        }
    }
    for c in instance.objective() {
        base = base.max(c.threshold);
    }
    base.saturating_add(sum)
}

/// A start event of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub time: Time,
    pub train: usize,
    pub operation: usize,
}

impl Event {
    pub fn new(time: Time, train: usize, operation: usize) -> Self {
        Event {
            time,
            train,
            operation,
        }
    }

    pub fn op(&self) -> OpRef {
        OpRef::new(self.train, self.operation)
    }
}

/// Globally ordered start events plus the claimed objective value.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Solution {
    pub objective_value: i64,
    pub events: Vec<Event>,
}
