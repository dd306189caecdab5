//! Feasibility and cost checking of a [`Solution`] against an [`Instance`].
//!
//! The verifier never reorders events: the position of an event in the list
//! is part of the solution, and two events with equal times may be feasible in
//! one order and infeasible in the other.

use std::fmt;

use serde::Serialize;

use crate::model::{Instance, OpRef, Solution, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ViolationKind {
    NotARoute,
    StartBeforeLB,
    StartAfterUB,
    DurationViolated,
    ResourceOrderViolated,
    ResourceTimeViolated,
    ObjectiveMismatch,
    DuplicateOperation,
    TimeRegression,
    /// Event refers to a train or operation that does not exist.
    InvalidReference,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An event identified by its position in the solution list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EventRef {
    pub position: usize,
    pub train: usize,
    pub operation: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum Location {
    Train {
        train: usize,
    },
    Event(EventRef),
    ResourcePair {
        first: EventRef,
        second: EventRef,
        resource: String,
    },
    Solution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: Location,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub feasible: bool,
    /// Recomputed objective. Present whenever the schedule itself is
    /// feasible, including when the only problem is a wrong claimed value.
    pub computed_objective: Option<i64>,
    pub violations: Vec<Violation>,
}

/// The part of a solution belonging to one train.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainSchedule {
    /// Operation indices in event order.
    pub route: Vec<usize>,
    pub times: Vec<Time>,
    /// Positions of the events in the solution list.
    pub positions: Vec<usize>,
}

impl TrainSchedule {
    /// Start time of `operation`, if it is on the route.
    pub fn time_of(&self, operation: usize) -> Option<Time> {
        self.route
            .iter()
            .position(|&a| a == operation)
            .map(|k| self.times[k])
    }
}

fn event_ref(solution: &Solution, position: usize) -> EventRef {
    let e = solution.events[position];
    EventRef {
        position,
        train: e.train,
        operation: e.operation,
    }
}

fn at_event(solution: &Solution, position: usize) -> Location {
    Location::Event(event_ref(solution, position))
}

/// Splits the events by train (dropping events with invalid references) and
/// checks that each train follows a route with a valid schedule.
pub fn check_routes(instance: &Instance, solution: &Solution) -> (Vec<TrainSchedule>, Vec<Violation>) {
    let mut schedules = vec![TrainSchedule::default(); instance.num_trains()];
    for (p, e) in solution.events.iter().enumerate() {
        if instance.contains(e.op()) {
            let s = &mut schedules[e.train];
            s.route.push(e.operation);
            s.times.push(e.time);
            s.positions.push(p);
        }
    }

    let mut violations = Vec::new();
    for (i, s) in schedules.iter().enumerate() {
        let train = instance.train(i);
        if s.route.is_empty() {
            violations.push(Violation {
                kind: ViolationKind::NotARoute,
                location: Location::Train { train: i },
                detail: format!(
                    "train {i} has no events; its route cannot reach exit operation {}",
                    train.exit()
                ),
            });
            continue;
        }
        let mut seen = vec![false; train.len()];
        for (k, &a) in s.route.iter().enumerate() {
            let p = s.positions[k];
            if std::mem::replace(&mut seen[a], true) {
                violations.push(Violation {
                    kind: ViolationKind::DuplicateOperation,
                    location: at_event(solution, p),
                    detail: format!("train {i} operation {a} started a second time at event {p}"),
                });
            }
        }
        if s.route[0] != 0 {
            violations.push(Violation {
                kind: ViolationKind::NotARoute,
                location: at_event(solution, s.positions[0]),
                detail: format!(
                    "train {i} starts with operation {} instead of entry operation 0",
                    s.route[0]
                ),
            });
        }
        for k in 1..s.route.len() {
            let (a, b) = (s.route[k - 1], s.route[k]);
            if !train.operations[a].successors.contains(&b) {
                violations.push(Violation {
                    kind: ViolationKind::NotARoute,
                    location: at_event(solution, s.positions[k]),
                    detail: format!("train {i}: operation {b} is not a successor of operation {a}"),
                });
            }
        }
        let last = *s.route.last().expect("non-empty");
        if last != train.exit() {
            violations.push(Violation {
                kind: ViolationKind::NotARoute,
                location: at_event(solution, *s.positions.last().expect("non-empty")),
                detail: format!(
                    "train {i} ends at operation {last}, not at exit operation {}",
                    train.exit()
                ),
            });
        }

        for (k, &a) in s.route.iter().enumerate() {
            let op = &train.operations[a];
            let (t, p) = (s.times[k], s.positions[k]);
            if t < op.start_lb {
                violations.push(Violation {
                    kind: ViolationKind::StartBeforeLB,
                    location: at_event(solution, p),
                    detail: format!("train {i} operation {a}: start {t} < start_lb {}", op.start_lb),
                });
            }
            if !op.start_ub.admits(t) {
                violations.push(Violation {
                    kind: ViolationKind::StartAfterUB,
                    location: at_event(solution, p),
                    detail: format!("train {i} operation {a}: start {t} > start_ub {}", op.start_ub),
                });
            }
            if let Some(&next) = s.times.get(k + 1) {
                if t + op.min_duration > next {
                    violations.push(Violation {
                        kind: ViolationKind::DurationViolated,
                        location: at_event(solution, p),
                        detail: format!(
                            "train {i} operation {a}: start {t} + min_duration {} > next start {next}",
                            op.min_duration
                        ),
                    });
                }
            }
        }
    }
    (schedules, violations)
}

/// Position of the next event of the same train, for every event.
fn next_in_train(instance: &Instance, solution: &Solution) -> Vec<Option<usize>> {
    let mut next = vec![None; solution.events.len()];
    let mut last: Vec<Option<usize>> = vec![None; instance.num_trains()];
    for (p, e) in solution.events.iter().enumerate() {
        if !instance.contains(e.op()) {
            continue;
        }
        if let Some(q) = last[e.train] {
            next[q] = Some(p);
        }
        last[e.train] = Some(p);
    }
    next
}

struct Hold {
    position: usize,
    train: usize,
    release_time: Time,
}

struct Released {
    position: usize,
    train: usize,
    free_at: Time,
}

#[derive(Default)]
struct ResourceLedger {
    held: Vec<Hold>,
    released: Vec<Released>,
}

/// Resource exclusivity between trains, checked in one pass over the events.
///
/// Each resource keeps the usages that are still held (the holder's next event
/// has not appeared yet) and the released usages whose release instant may
/// still matter for some later event. A released usage is dropped as soon as
/// its release instant is at or before every remaining event time.
pub fn check_resources(instance: &Instance, solution: &Solution) -> Vec<Violation> {
    let events = &solution.events;
    let next = next_in_train(instance, solution);
    let mut prev: Vec<Option<usize>> = vec![None; events.len()];
    for (p, n) in next.iter().enumerate() {
        if let Some(q) = *n {
            prev[q] = Some(p);
        }
    }
    let mut suffix_min = vec![Time::MAX; events.len() + 1];
    for p in (0..events.len()).rev() {
        suffix_min[p] = suffix_min[p + 1].min(events[p].time);
    }

    let mut ledgers: Vec<ResourceLedger> = Vec::new();
    ledgers.resize_with(instance.resource_names().len(), Default::default);
    let mut found: Vec<(usize, usize, usize, ViolationKind)> = Vec::new();

    for (p, e) in events.iter().enumerate() {
        if !instance.contains(e.op()) {
            continue;
        }
        if let Some(q) = prev[p] {
            for u in instance.usages(events[q].op()) {
                let ledger = &mut ledgers[u.resource.0];
                if let Some(k) = ledger.held.iter().position(|h| h.position == q) {
                    let hold = ledger.held.swap_remove(k);
                    ledger.released.push(Released {
                        position: q,
                        train: hold.train,
                        free_at: e.time + hold.release_time,
                    });
                }
            }
        }
        for u in instance.usages(e.op()) {
            let ledger = &mut ledgers[u.resource.0];
            for h in ledger.held.iter().filter(|h| h.train != e.train) {
                found.push((h.position, p, u.resource.0, ViolationKind::ResourceOrderViolated));
            }
            let floor = suffix_min[p];
            ledger.released.retain(|r| r.free_at > floor);
            for r in ledger
                .released
                .iter()
                .filter(|r| r.train != e.train && r.free_at > e.time)
            {
                found.push((r.position, p, u.resource.0, ViolationKind::ResourceTimeViolated));
            }
        }
        for u in instance.usages(e.op()) {
            ledgers[u.resource.0].held.push(Hold {
                position: p,
                train: e.train,
                release_time: u.release_time,
            });
        }
    }

    found.sort_unstable();
    found
        .into_iter()
        .map(|(a, b, r, kind)| {
            let resource = instance.resource_names()[r].clone();
            let (first, second) = (event_ref(solution, a), event_ref(solution, b));
            let detail = match (kind, next[a]) {
                (ViolationKind::ResourceOrderViolated, Some(n)) => format!(
                    "operation {} of train {} allocates {resource} at event {b} while it is still in use by train {} (operation {} ends at event {n})",
                    second.operation, second.train, first.train, first.operation
                ),
                (ViolationKind::ResourceOrderViolated, None) => format!(
                    "operation {} of train {} allocates {resource} at event {b} while it is still in use by train {} (operation {} never ends)",
                    second.operation, second.train, first.train, first.operation
                ),
                _ => {
                    let n = next[a].expect("released usages have an end event");
                    let lambda = instance
                        .usages(events[a].op())
                        .iter()
                        .find(|u| u.resource.0 == r)
                        .map_or(0, |u| u.release_time);
                    format!(
                        "train {} operation {} ends at {} + release {lambda} > {} when train {} operation {} starts on {resource}",
                        first.train, first.operation, events[n].time, events[b].time, second.train, second.operation
                    )
                }
            };
            Violation {
                kind,
                location: Location::ResourcePair {
                    first,
                    second,
                    resource,
                },
                detail,
            }
        })
        .collect()
}

/// Objective value of per-train schedules (operations off the route cost 0).
pub fn evaluate_objective(instance: &Instance, schedules: &[TrainSchedule]) -> i64 {
    let total: i128 = instance
        .objective()
        .iter()
        .filter_map(|c| {
            schedules
                .get(c.train)
                .and_then(|s| s.time_of(c.operation))
                .map(|t| c.cost_at(t))
        })
        .sum();
    total.clamp(0, i64::MAX as i128) as i64
}

/// Cost of each operation started at the given times, for callers that track
/// times per operation rather than per schedule.
pub fn objective_of_times(instance: &Instance, starts: impl IntoIterator<Item = (OpRef, Time)>) -> i64 {
    let total: i128 = starts.into_iter().map(|(op, t)| instance.op_cost(op, t)).sum();
    total.clamp(0, i64::MAX as i128) as i64
}

pub fn verify(instance: &Instance, solution: &Solution) -> Verdict {
    let mut violations = Vec::new();
    for (p, e) in solution.events.iter().enumerate() {
        if !instance.contains(e.op()) {
            violations.push(Violation {
                kind: ViolationKind::InvalidReference,
                location: at_event(solution, p),
                detail: format!(
                    "event {p} refers to train {} operation {}, which does not exist",
                    e.train, e.operation
                ),
            });
        }
    }
    for p in 1..solution.events.len() {
        let (before, now) = (solution.events[p - 1].time, solution.events[p].time);
        if now < before {
            violations.push(Violation {
                kind: ViolationKind::TimeRegression,
                location: at_event(solution, p),
                detail: format!("event {p} at time {now} follows event {} at time {before}", p - 1),
            });
        }
    }
    let (schedules, route_violations) = check_routes(instance, solution);
    violations.extend(route_violations);
    violations.extend(check_resources(instance, solution));

    let computed_objective = if violations.is_empty() {
        let z = evaluate_objective(instance, &schedules);
        if z != solution.objective_value {
            violations.push(Violation {
                kind: ViolationKind::ObjectiveMismatch,
                location: Location::Solution,
                detail: format!(
                    "claimed objective_value {} but the schedule costs {z}",
                    solution.objective_value
                ),
            });
        }
        Some(z)
    } else {
        None
    };
    Verdict {
        feasible: violations.is_empty(),
        computed_objective,
        violations,
    }
}
