//! Reference implementations written straight from the feasibility rules,
//! with no shared code beyond the data types. They are slow on purpose.

use displib_core::{
    build_instance, earliest_times, Event, Instance, ObjectiveComponent, OpRef, Operation, Solution, Time,
    Train, UpperBound, ViolationKind,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

/// Every entry-to-exit path of a train, found by plain DFS.
pub fn routes_of(train: &Train) -> Vec<Vec<usize>> {
    fn walk(train: &Train, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let a = *path.last().unwrap();
        if a == train.operations.len() - 1 {
            out.push(path.clone());
            return;
        }
        for &s in &train.operations[a].successors {
            path.push(s);
            walk(train, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(train, &mut vec![0], &mut out);
    out
}

/// Cost of one component when its operation starts at `t`.
pub fn component_cost(c: &ObjectiveComponent, t: Time) -> i128 {
    let mut z = 0i128;
    if t > c.threshold {
        z += c.coeff as i128 * (t - c.threshold) as i128;
    }
    if t >= c.threshold {
        z += c.increment as i128;
    }
    z
}

/// Objective of a schedule given as (operation, start) pairs; components on
/// operations that were not visited cost nothing.
pub fn schedule_cost(inst: &Instance, starts: &[(OpRef, Time)]) -> i128 {
    inst.objective()
        .iter()
        .map(|c| {
            starts
                .iter()
                .find(|(op, _)| op.train == c.train && op.operation == c.operation)
                .map_or(0, |&(_, t)| component_cost(c, t))
        })
        .sum()
}

fn shares<'a>(a: &'a Operation, b: &'a Operation) -> impl Iterator<Item = (&'a str, Time)> + 'a {
    a.resources.iter().filter_map(move |ra| {
        b.resources
            .iter()
            .any(|rb| rb.resource == ra.resource)
            .then_some((ra.resource.as_str(), ra.release_time))
    })
}

pub struct BruteForce {
    /// Optimal objective, `None` when no route combination and order works.
    pub optimum: Option<i64>,
    pub best: Option<Solution>,
    /// Complete orders that were scheduled.
    pub leaves: u64,
}

struct Search<'a> {
    inst: &'a Instance,
    routes: Vec<Vec<usize>>,
    progress: Vec<usize>,
    order: Vec<OpRef>,
    times: Vec<Time>,
    best: Option<(i128, Vec<Event>)>,
    leaves: u64,
}

impl Search<'_> {
    /// Earliest start for appending the next operation of train `i`, or
    /// `None` when no completion of this prefix can be feasible.
    fn next_time(&self, i: usize) -> Option<Time> {
        let inst = self.inst;
        let a = self.routes[i][self.progress[i]];
        let op = &inst.train(i).operations[a];
        let mut t = op.start_lb;
        if let Some(&last) = self.times.last() {
            t = t.max(last);
        }
        if self.progress[i] > 0 {
            let prev = self.routes[i][self.progress[i] - 1];
            let p = self.order.iter().rposition(|o| o.train == i).unwrap();
            t = t.max(self.times[p] + inst.train(i).operations[prev].min_duration);
        }
        for (q, other) in self.order.iter().enumerate() {
            if other.train == i {
                continue;
            }
            let prev_op = &inst.train(other.train).operations[other.operation];
            let mut shared = shares(prev_op, op).peekable();
            if shared.peek().is_none() {
                continue;
            }
            let next = (q + 1..self.order.len()).find(|&n| self.order[n].train == other.train)?;
            for (_, release) in shared {
                t = t.max(self.times[next] + release);
            }
        }
        match op.start_ub {
            UpperBound::Finite(b) if t > b => None,
            _ => Some(t),
        }
    }

    fn interleave(&mut self) {
        let total: usize = self.routes.iter().map(Vec::len).sum();
        if self.order.len() == total {
            self.leaf();
            return;
        }
        for i in 0..self.routes.len() {
            if self.progress[i] == self.routes[i].len() {
                continue;
            }
            let Some(t) = self.next_time(i) else { continue };
            self.order.push(OpRef::new(i, self.routes[i][self.progress[i]]));
            self.times.push(t);
            self.progress[i] += 1;
            self.interleave();
            self.progress[i] -= 1;
            self.times.pop();
            self.order.pop();
        }
    }

    fn leaf(&mut self) {
        self.leaves += 1;
        let scheduled = earliest_times(self.inst, &self.routes, &self.order)
            .unwrap_or_else(|e| panic!("oracle accepted an order that earliest_times rejects: {e}"));
        assert_eq!(scheduled, self.times, "earliest_times disagrees with the oracle");
        let starts: Vec<(OpRef, Time)> = self
            .order
            .iter()
            .copied()
            .zip(self.times.iter().copied())
            .collect();
        let cost = schedule_cost(self.inst, &starts);
        if self.best.as_ref().is_none_or(|(c, _)| cost < *c) {
            let events = starts
                .iter()
                .map(|&(op, t)| Event::new(t, op.train, op.operation))
                .collect();
            self.best = Some((cost, events));
        }
    }
}

/// Optimum over all route combinations and all interleavings, each order
/// scheduled as early as possible. Prefixes that can no longer be completed
/// (an upper bound is passed, or a resource is taken while its holder has not
/// moved on) are cut.
pub fn brute_force(inst: &Instance) -> BruteForce {
    let per_train: Vec<Vec<Vec<usize>>> = inst.trains().iter().map(routes_of).collect();
    let mut search = Search {
        inst,
        routes: Vec::new(),
        progress: vec![0; inst.num_trains()],
        order: Vec::new(),
        times: Vec::new(),
        best: None,
        leaves: 0,
    };
    let mut pick = vec![0usize; per_train.len()];
    loop {
        search.routes = pick.iter().zip(&per_train).map(|(&k, r)| r[k].clone()).collect();
        search.interleave();
        // Advance the mixed-radix counter over route choices.
        let mut i = 0;
        while i < pick.len() {
            pick[i] += 1;
            if pick[i] < per_train[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
        if i == pick.len() {
            break;
        }
    }
    let best = search.best.map(|(cost, events)| Solution {
        objective_value: cost as i64,
        events,
    });
    BruteForce {
        optimum: best.as_ref().map(|s| s.objective_value),
        best,
        leaves: search.leaves,
    }
}

/// A resource conflict between two event positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PairViolation {
    pub first: usize,
    pub second: usize,
    pub resource: String,
    pub kind: ViolationKind,
}

/// Checks every ordered pair of events of different trains on every shared
/// resource. For the earlier event `a` and later `b`, the next event of `a`'s
/// train must come before `b` in the list and start no later than
/// `t(b) - release`. Events pointing at unknown operations are ignored.
pub fn all_pairs_resource_check(inst: &Instance, sol: &Solution) -> Vec<PairViolation> {
    let ev = &sol.events;
    let valid = |p: usize| inst.contains(ev[p].op());
    let mut out = Vec::new();
    for p in 0..ev.len() {
        if !valid(p) {
            continue;
        }
        let next = (p + 1..ev.len()).find(|&n| valid(n) && ev[n].train == ev[p].train);
        let a = inst.operation(ev[p].op());
        for q in p + 1..ev.len() {
            if !valid(q) || ev[q].train == ev[p].train {
                continue;
            }
            let b = inst.operation(ev[q].op());
            for (resource, release) in shares(a, b) {
                let kind = match next {
                    Some(n) if n < q => {
                        if ev[n].time + release > ev[q].time {
                            ViolationKind::ResourceTimeViolated
                        } else {
                            continue;
                        }
                    }
                    _ => ViolationKind::ResourceOrderViolated,
                };
                out.push(PairViolation {
                    first: p,
                    second: q,
                    resource: resource.to_string(),
                    kind,
                });
            }
        }
    }
    out.sort();
    out
}

/// Random well-formed instance: operation graphs are random DAGs over a small
/// resource pool, so routes branch and trains collide often.
pub fn random_instance(rng: &mut impl Rng, max_trains: usize, max_ops: usize) -> Instance {
    let pool = ["A", "B", "C", "D", "E"];
    let num_trains = rng.random_range(1..=max_trains);
    let trains: Vec<Train> = (0..num_trains)
        .map(|_| {
            let n = rng.random_range(2..=max_ops.max(2));
            let mut ops: Vec<Operation> = (0..n)
                .map(|_| {
                    let mut op = Operation::new(rng.random_range(0..=6));
                    if rng.random_bool(0.3) {
                        op.start_lb = rng.random_range(0..=10);
                    }
                    if rng.random_bool(0.2) {
                        op.start_ub = UpperBound::Finite(op.start_lb + rng.random_range(0..=30));
                    }
                    let mut names: Vec<&str> = pool.to_vec();
                    names.shuffle(rng);
                    for name in names.into_iter().take(rng.random_range(0..=2)) {
                        op.resources
                            .push(displib_core::ResourceUsage::new(name, rng.random_range(0..=3)));
                    }
                    op
                })
                .collect();
            for (a, op) in ops.iter_mut().enumerate().take(n - 1) {
                let mut succ = vec![rng.random_range(a + 1..n)];
                if rng.random_bool(0.3) {
                    succ.push(rng.random_range(a + 1..n));
                }
                succ.sort_unstable();
                succ.dedup();
                op.successors = succ;
            }
            for b in 1..n {
                if !ops[..b].iter().any(|o| o.successors.contains(&b)) {
                    let a = rng.random_range(0..b);
                    ops[a].successors.push(b);
                    ops[a].successors.sort_unstable();
                }
            }
            Train::new(ops)
        })
        .collect();
    let mut objective = Vec::new();
    for (i, t) in trains.iter().enumerate() {
        for _ in 0..rng.random_range(0..=2) {
            objective.push(ObjectiveComponent {
                train: i,
                operation: rng.random_range(0..t.len()),
                threshold: rng.random_range(0..=40),
                coeff: rng.random_range(0..=3),
                increment: rng.random_range(0..=5),
            });
        }
    }
    build_instance(trains, objective).expect("random instance is well formed")
}

/// A random route for every train and a random interleaving, with times
/// drawn loosely increasing. Such solutions are usually infeasible but
/// structurally plausible.
pub fn random_solution(rng: &mut impl Rng, inst: &Instance) -> Solution {
    let routes: Vec<Vec<usize>> = inst
        .trains()
        .iter()
        .map(|t| routes_of(t).choose(rng).unwrap().clone())
        .collect();
    let mut progress = vec![0; routes.len()];
    let mut events = Vec::new();
    let mut t: Time = 0;
    loop {
        let open: Vec<usize> = (0..routes.len())
            .filter(|&i| progress[i] < routes[i].len())
            .collect();
        let Some(&i) = open.choose(rng) else { break };
        t += rng.random_range(0..=4);
        events.push(Event::new(t, i, routes[i][progress[i]]));
        progress[i] += 1;
    }
    Solution {
        objective_value: 0,
        events,
    }
}

/// Applies one random corruption: swapped neighbours, a shifted time, a
/// dropped, duplicated or dangling event.
pub fn corrupt(rng: &mut impl Rng, sol: &mut Solution) {
    let n = sol.events.len();
    if n == 0 {
        return;
    }
    match rng.random_range(0..5) {
        0 if n > 1 => {
            let p = rng.random_range(0..n - 1);
            sol.events.swap(p, p + 1);
        }
        1 => {
            let p = rng.random_range(0..n);
            sol.events[p].time = (sol.events[p].time + rng.random_range(-5..=5)).max(0);
        }
        2 => {
            sol.events.remove(rng.random_range(0..n));
        }
        3 => {
            let p = rng.random_range(0..n);
            let e = sol.events[p];
            sol.events.insert(rng.random_range(p..=n), e);
        }
        _ => {
            let p = rng.random_range(0..n);
            sol.events[p].operation += 100;
        }
    }
}
