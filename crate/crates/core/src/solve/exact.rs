//! Exhaustive branch-and-bound over event orders.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::state::{Candidate, DispatchState, LowerBound, INFEASIBLE};
use super::{checked_solution, clamp_cost, SolveBudget, SolveReport, SolveStatus};
use crate::model::{Event, Instance};

/// Memo entries kept per worker before new states stop being recorded.
const MEMO_CAPACITY: usize = 1 << 22;

struct Shared<'a> {
    instance: &'a Instance,
    budget: SolveBudget,
    started: Instant,
    best: AtomicI64,
    incumbent: Mutex<Option<(i128, Vec<Event>)>>,
    nodes: AtomicU64,
    stop: AtomicBool,
}

impl Shared<'_> {
    fn best(&self) -> i128 {
        self.best.load(Ordering::Acquire) as i128
    }

    fn offer(&self, cost: i128, events: &[Event]) {
        let mut inc = self.incumbent.lock().unwrap();
        if inc.as_ref().is_none_or(|(c, _)| cost < *c) {
            *inc = Some((cost, events.to_vec()));
            self.best.fetch_min(clamp_cost(cost), Ordering::AcqRel);
        }
    }

    /// Counts a node; returns false once the budget is spent.
    fn tick(&self) -> bool {
        if self.stop.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let over_nodes = self.budget.node_limit.is_some_and(|l| n > l);
        let over_time = n.is_multiple_of(256)
            && self
                .budget
                .time_limit
                .is_some_and(|l| self.started.elapsed() >= l);
        if over_nodes || over_time {
            self.stop.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }
}

struct Frame {
    state: DispatchState,
    candidates: Vec<Candidate>,
    next: usize,
}

struct Worker<'s, 'a> {
    shared: &'s Shared<'a>,
    lb: LowerBound,
    memo: HashMap<Vec<i64>, i128>,
    key: Vec<i64>,
}

impl Worker<'_, '_> {
    /// Expands a node. `None` when it is a leaf or pruned.
    fn enter(&mut self, state: DispatchState, path: &[Event]) -> Option<Frame> {
        let inst = self.shared.instance;
        if state.is_complete() {
            if state.cost < self.shared.best() {
                self.shared.offer(state.cost, path);
            }
            return None;
        }
        let rest = self.lb.total(inst, &state);
        if rest == INFEASIBLE || state.cost + rest >= self.shared.best() {
            return None;
        }
        state.memo_key(&mut self.key);
        let room = self.memo.len() < MEMO_CAPACITY;
        match self.memo.get_mut(&self.key) {
            Some(seen) if *seen <= state.cost => return None,
            Some(seen) => *seen = state.cost,
            None if room => {
                self.memo.insert(self.key.clone(), state.cost);
            }
            None => {}
        }
        let mut candidates = Vec::new();
        state.candidates(inst, &mut candidates);
        candidates.sort_by_key(|c| (c.start, c.train, c.operation));
        Some(Frame {
            state,
            candidates,
            next: 0,
        })
    }

    /// Depth-first search below `root`, whose prefix is `path`.
    fn explore(&mut self, root: DispatchState, mut path: Vec<Event>) {
        let base = path.len();
        if !self.shared.tick() {
            return;
        }
        let mut stack: Vec<Frame> = match self.enter(root, &path) {
            Some(f) => vec![f],
            None => return,
        };
        while let Some(top) = stack.last_mut() {
            if top.next == top.candidates.len() {
                stack.pop();
                if path.len() > base {
                    path.pop();
                }
                continue;
            }
            let c = top.candidates[top.next];
            top.next += 1;
            if !self.shared.tick() {
                return;
            }
            let mut child = top.state.clone();
            child.apply(self.shared.instance, c);
            path.push(c.event());
            match self.enter(child, &path) {
                Some(frame) => stack.push(frame),
                None => {
                    path.pop();
                }
            }
        }
    }
}

/// Proves optimality (or infeasibility) by enumerating event orders, pruned by
/// per-train cost-to-go bounds and by merging equivalent prefixes.
pub fn solve_exact(instance: &Instance, budget: SolveBudget) -> SolveReport {
    let shared = Shared {
        instance,
        budget,
        started: Instant::now(),
        best: AtomicI64::new(i64::MAX),
        incumbent: Mutex::new(None),
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
    };
    let root = DispatchState::new(instance);
    let root_bound = LowerBound::new().total(instance, &root);

    let mut first = Vec::new();
    root.candidates(instance, &mut first);
    first.sort_by_key(|c| (c.start, c.train, c.operation));
    let new_worker = || Worker {
        shared: &shared,
        lb: LowerBound::new(),
        memo: HashMap::new(),
        key: Vec::new(),
    };

    if budget.threads <= 1 || first.len() <= 1 {
        new_worker().explore(root.clone(), Vec::new());
    } else {
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..budget.threads.min(first.len()) {
                let (next, first, root) = (&next, &first, &root);
                let mut worker = new_worker();
                scope.spawn(move || loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&c) = first.get(k) else { break };
                    let mut child = root.clone();
                    child.apply(instance, c);
                    worker.explore(child, vec![c.event()]);
                });
            }
        });
    }

    let complete = !shared.stop.load(Ordering::Relaxed);
    let nodes_explored = shared.nodes.load(Ordering::Relaxed);
    let incumbent = shared.incumbent.into_inner().unwrap();
    let solution = incumbent.and_then(|(cost, events)| checked_solution(instance, cost, events));
    let (status, bound) = match (&solution, complete) {
        (Some(s), true) => (SolveStatus::Optimal, Some(s.objective_value)),
        (Some(_), false) => (
            SolveStatus::Feasible,
            (root_bound != INFEASIBLE).then(|| clamp_cost(root_bound)),
        ),
        (None, true) => (SolveStatus::Infeasible, None),
        (None, false) => (
            SolveStatus::TimeoutNoSolution,
            (root_bound != INFEASIBLE).then(|| clamp_cost(root_bound)),
        ),
    };
    SolveReport {
        solution,
        status,
        nodes_explored,
        wall_time: shared.started.elapsed(),
        bound,
    }
}
