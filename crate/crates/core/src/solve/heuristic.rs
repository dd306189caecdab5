//! Greedy event-driven dispatching with bounded backtracking and restarts.
//!
//! Each step starts the operation that can start soonest; ties go to
//! operations with a finite upper bound, then to the smallest slack to the
//! nearest downstream objective threshold, then the smallest lower bound, the
//! train index and the shortest remaining running time to the exit.
//!
//! A move is preferred only if a quick simulation afterwards still gets every
//! train to its exit. Without that check a single-track line deadlocks as soon
//! as two opposing trains enter the same section from both ends.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::{Candidate, DispatchState, LowerBound, INFEASIBLE};
use super::{checked_solution, clamp_cost, SolveReport, SolveStatus};
use crate::model::{Event, Instance, OpRef, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicOptions {
    pub seed: u64,
    pub time_limit: Option<Duration>,
    /// Perturbed runs after the first one.
    pub restarts: usize,
    /// Search nodes per run before it is abandoned.
    pub node_limit: u64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        HeuristicOptions {
            seed: 0,
            time_limit: Some(Duration::from_secs(10)),
            restarts: 16,
            node_limit: 200_000,
        }
    }
}

/// Per-operation data that does not depend on the search state.
struct Static {
    /// Shortest running time from the operation to its train's exit.
    to_exit: Vec<Vec<Time>>,
    /// `min (threshold - shortest time to the component's operation)` over
    /// components reachable from the operation, `None` without any.
    due: Vec<Vec<Option<Time>>>,
}

impl Static {
    fn new(instance: &Instance) -> Self {
        let mut to_exit = Vec::new();
        let mut due = Vec::new();
        for (i, train) in instance.trains().iter().enumerate() {
            let n = train.len();
            let mut dist = vec![0 as Time; n];
            for a in (0..n).rev() {
                let op = &train.operations[a];
                dist[a] = op
                    .successors
                    .iter()
                    .map(|&s| dist[s] + op.min_duration)
                    .min()
                    .unwrap_or(0);
            }
            // For each component on the train, shortest time from every
            // operation to it, folded into `due`.
            let mut train_due: Vec<Option<Time>> = vec![None; n];
            for c in instance.objective().iter().filter(|c| c.train == i) {
                let mut d: Vec<Option<Time>> = vec![None; n];
                d[c.operation] = Some(0);
                for a in (0..c.operation).rev() {
                    let op = &train.operations[a];
                    d[a] = op
                        .successors
                        .iter()
                        .filter_map(|&s| d[s])
                        .min()
                        .map(|x| x + op.min_duration);
                }
                for a in 0..n {
                    if let Some(x) = d[a] {
                        let v = c.threshold - x;
                        train_due[a] = Some(train_due[a].map_or(v, |w: Time| w.min(v)));
                    }
                }
            }
            to_exit.push(dist);
            due.push(train_due);
        }
        Static { to_exit, due }
    }
}

type Key = (Time, u8, Time, Time, i64, usize, Time, usize);

fn key(inst: &Instance, st: &Static, noise: &[i64], c: &Candidate) -> Key {
    let op = inst.operation(OpRef::new(c.train, c.operation));
    let urgent = if op.start_ub.finite().is_some() { 0 } else { 1 };
    let slack = st.due[c.train][c.operation].map_or(Time::MAX / 4, |d| d - c.start);
    (
        c.start,
        urgent,
        slack.saturating_add(noise[c.train]),
        op.start_lb,
        noise[c.train],
        c.train,
        st.to_exit[c.train][c.operation],
        c.operation,
    )
}

/// Whether the trains can still all reach their exits, judged by a quick
/// simulation that ignores time: repeatedly let a train that can drive alone
/// to its exit (around the resources held by the others) do so; when none
/// can, advance one train by a single step and try again. A `true` answer is
/// a witness, `false` may be wrong.
fn completable(inst: &Instance, st: &Static, state: &DispatchState, s: &mut Safety) -> bool {
    let n = inst.num_trains();
    s.holder.clear();
    s.holder.extend_from_slice(&state.holder);
    s.pos.clear();
    s.pos.extend_from_slice(&state.pos);
    s.pending.clear();
    s.pending.extend((0..n).filter(|&j| !state.is_finished(inst, j)));
    let mut steps = inst.num_operations();
    while !s.pending.is_empty() {
        let mut progressed = false;
        let mut k = 0;
        while k < s.pending.len() {
            let j = s.pending[k];
            if drive_alone(inst, j, s) {
                finish(inst, j, s);
                s.pending.swap_remove(k);
                progressed = true;
            } else {
                k += 1;
            }
        }
        if progressed {
            continue;
        }
        if steps == 0 {
            return false;
        }
        steps -= 1;
        let mut step: Option<(Time, usize, usize)> = None;
        for &j in &s.pending {
            let next: &[usize] = match s.pos[j] {
                None => &[0],
                Some(a) => &inst.train(j).operations[a].successors,
            };
            for &b in next {
                if usable(inst, &s.holder, j, b) {
                    let cand = (st.to_exit[j][b], j, b);
                    if step.is_none_or(|x| cand < x) {
                        step = Some(cand);
                    }
                }
            }
        }
        let Some((_, j, b)) = step else { return false };
        for h in s.holder.iter_mut() {
            if *h == Some(j) {
                *h = None;
            }
        }
        for u in inst.usages(OpRef::new(j, b)) {
            s.holder[u.resource.0] = Some(j);
        }
        s.pos[j] = Some(b);
        if b == inst.train(j).exit() {
            let k = s.pending.iter().position(|&x| x == j).unwrap();
            s.pending.swap_remove(k);
        }
    }
    true
}

fn usable(inst: &Instance, holder: &[Option<usize>], j: usize, a: usize) -> bool {
    inst.usages(OpRef::new(j, a))
        .iter()
        .all(|u| holder[u.resource.0].is_none_or(|h| h == j))
}

fn finish(inst: &Instance, j: usize, s: &mut Safety) {
    for h in s.holder.iter_mut() {
        if *h == Some(j) {
            *h = None;
        }
    }
    let exit = inst.train(j).exit();
    for u in inst.usages(OpRef::new(j, exit)) {
        s.holder[u.resource.0] = Some(j);
    }
    s.pos[j] = Some(exit);
}

fn drive_alone(inst: &Instance, j: usize, s: &mut Safety) -> bool {
    let train = inst.train(j);
    let exit = train.exit();
    s.seen.clear();
    s.seen.resize(train.len(), false);
    s.stack.clear();
    match s.pos[j] {
        Some(a) => s.stack.push(a),
        None if usable(inst, &s.holder, j, 0) => s.stack.push(0),
        None => return false,
    }
    while let Some(a) = s.stack.pop() {
        if a == exit {
            return true;
        }
        for &b in &train.operations[a].successors {
            if !s.seen[b] && usable(inst, &s.holder, j, b) {
                s.seen[b] = true;
                s.stack.push(b);
            }
        }
    }
    false
}

#[derive(Default)]
struct Safety {
    holder: Vec<Option<usize>>,
    pos: Vec<Option<usize>>,
    pending: Vec<usize>,
    seen: Vec<bool>,
    stack: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Greedy,
    /// Only the lowest-ranked unfinished train that has started (or else the
    /// next one) may move.
    OneByOne,
}

struct Frame {
    state: DispatchState,
    candidates: Vec<Candidate>,
    safe: Vec<Option<bool>>,
    /// Index into `candidates` twice over: first pass takes safe moves, the
    /// second pass the rest.
    next: usize,
}

enum RunEnd {
    Found(i128, Vec<Event>),
    /// Search space exhausted without a solution.
    Exhausted,
    Abandoned,
}

struct Runner<'a> {
    inst: &'a Instance,
    st: Static,
    lb: LowerBound,
    safety: Safety,
    nodes: u64,
    deadline: Option<Instant>,
}

impl Runner<'_> {
    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn expand(&mut self, state: DispatchState, noise: &[i64], mode: Mode, cutoff: i128) -> Option<Frame> {
        let rest = self.lb.total(self.inst, &state);
        if rest == INFEASIBLE || state.cost + rest >= cutoff {
            return None;
        }
        let mut candidates = Vec::new();
        state.candidates(self.inst, &mut candidates);
        if mode == Mode::OneByOne {
            let moving = (0..self.inst.num_trains())
                .find(|&j| state.pos[j].is_some() && !state.is_finished(self.inst, j));
            let chosen = moving.or_else(|| {
                let mut waiting: Vec<usize> = (0..self.inst.num_trains())
                    .filter(|&j| state.pos[j].is_none())
                    .collect();
                waiting.sort_by_key(|&j| (self.inst.operation(OpRef::new(j, 0)).start_lb, j));
                waiting.first().copied()
            });
            candidates.retain(|c| Some(c.train) == chosen);
        }
        let (inst, st) = (self.inst, &self.st);
        candidates.sort_by_cached_key(|c| key(inst, st, noise, c));
        let safe = vec![None; candidates.len()];
        Some(Frame {
            state,
            candidates,
            safe,
            next: 0,
        })
    }

    fn run(&mut self, noise: &[i64], mode: Mode, node_limit: u64, cutoff: i128) -> RunEnd {
        let root = DispatchState::new(self.inst);
        if root.is_complete() {
            return RunEnd::Found(0, Vec::new());
        }
        let mut path: Vec<Event> = Vec::new();
        let mut stack = match self.expand(root, noise, mode, cutoff) {
            Some(f) => vec![f],
            None => return RunEnd::Exhausted,
        };
        let mut used = 0u64;
        while let Some(top) = stack.last_mut() {
            let n = top.candidates.len();
            if top.next >= 2 * n {
                stack.pop();
                path.pop();
                continue;
            }
            let k = top.next % n;
            let first_pass = top.next < n;
            top.next += 1;
            let c = top.candidates[k];
            let mut child = top.state.clone();
            child.apply(self.inst, c);
            let safe = match top.safe[k] {
                Some(s) => s,
                None => {
                    let s = completable(self.inst, &self.st, &child, &mut self.safety);
                    top.safe[k] = Some(s);
                    s
                }
            };
            if safe != first_pass {
                continue;
            }
            used += 1;
            self.nodes += 1;
            if used > node_limit || (used.is_multiple_of(16) && self.out_of_time()) {
                return RunEnd::Abandoned;
            }
            path.push(c.event());
            if child.is_complete() {
                if child.cost < cutoff {
                    return RunEnd::Found(child.cost, path);
                }
                path.pop();
                continue;
            }
            match self.expand(child, noise, mode, cutoff) {
                Some(f) => stack.push(f),
                None => {
                    path.pop();
                }
            }
        }
        RunEnd::Exhausted
    }
}

/// Finds a feasible solution quickly. Deterministic for a given seed as long
/// as the time limit does not cut the run short.
pub fn solve_heuristic(instance: &Instance, options: HeuristicOptions) -> SolveReport {
    let started = Instant::now();
    let mut runner = Runner {
        inst: instance,
        st: Static::new(instance),
        lb: LowerBound::new(),
        safety: Safety::default(),
        nodes: 0,
        deadline: options.time_limit.map(|l| started + l),
    };
    let n = instance.num_trains();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let spread = {
        let ops = instance.num_operations().max(1) as i64;
        let total: i64 = instance
            .trains()
            .iter()
            .flat_map(|t| &t.operations)
            .map(|o| o.min_duration)
            .sum();
        (4 * total / ops).max(1)
    };

    let improve_limit = (8 * instance.num_operations() as u64).clamp(1_000, options.node_limit.max(1));
    let mut best: Option<(i128, Vec<Event>)> = None;
    let mut proven_infeasible = false;
    for run in 0..=options.restarts {
        if run > 0 && runner.out_of_time() {
            break;
        }
        let noise: Vec<i64> = if run == 0 {
            vec![0; n]
        } else {
            (0..n).map(|_| rng.random_range(-spread..=spread)).collect()
        };
        let cutoff = best.as_ref().map_or(INFEASIBLE, |b| b.0);
        // Once something is found, a restart only gets a short dive with
        // a little backtracking.
        let limit = if best.is_some() {
            improve_limit
        } else {
            options.node_limit
        };
        match runner.run(&noise, Mode::Greedy, limit, cutoff) {
            RunEnd::Found(cost, events) => best = Some((cost, events)),
            RunEnd::Exhausted if best.is_none() && run == 0 => {
                proven_infeasible = true;
                break;
            }
            _ => {}
        }
        if best.as_ref().is_some_and(|b| b.0 == 0) {
            break;
        }
    }
    if best.is_none() && !proven_infeasible && !runner.out_of_time() {
        if let RunEnd::Found(cost, events) =
            runner.run(&vec![0; n], Mode::OneByOne, options.node_limit, INFEASIBLE)
        {
            best = Some((cost, events));
        }
    }

    let solution = best.and_then(|(cost, events)| checked_solution(instance, cost, events));
    let status = match (&solution, proven_infeasible) {
        (Some(_), _) => SolveStatus::Feasible,
        (None, true) => SolveStatus::Infeasible,
        (None, false) => SolveStatus::TimeoutNoSolution,
    };
    let bound = {
        let b = LowerBound::new().total(instance, &DispatchState::new(instance));
        (b != INFEASIBLE).then(|| clamp_cost(b))
    };
    SolveReport {
        solution,
        status,
        nodes_explored: runner.nodes,
        wall_time: started.elapsed(),
        bound,
    }
}
