//! Incremental dispatching state shared by the exact and heuristic searches.
//!
//! A state is a prefix of the global event order. Appending an event starts an
//! operation at the earliest time compatible with the prefix: its own lower
//! bound, the time of the previous event, the train's running time and the
//! release instants of resources freed by other trains. Constraints only point
//! forward in the order, so these times never need revisiting.

use crate::model::{Event, Instance, OpRef, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Candidate {
    pub train: usize,
    pub operation: usize,
    pub start: Time,
}

impl Candidate {
    pub fn event(&self) -> Event {
        Event::new(self.start, self.train, self.operation)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DispatchState {
    /// Current operation of each train (`None` before its entry event).
    pub pos: Vec<Option<usize>>,
    /// Earliest start of the next operation of each train.
    pub ready: Vec<Time>,
    /// Time of the last appended event.
    pub floor: Time,
    /// Train currently holding each resource.
    pub holder: Vec<Option<usize>>,
    /// Per resource: latest release instant per train that released it.
    pub released: Vec<Vec<(usize, Time)>>,
    pub cost: i128,
    pub unfinished: usize,
}

impl DispatchState {
    pub fn new(instance: &Instance) -> Self {
        let n = instance.num_trains();
        DispatchState {
            pos: vec![None; n],
            ready: vec![0; n],
            floor: 0,
            holder: vec![None; instance.resource_names().len()],
            released: vec![Vec::new(); instance.resource_names().len()],
            cost: 0,
            unfinished: n,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.unfinished == 0
    }

    pub fn is_finished(&self, instance: &Instance, train: usize) -> bool {
        self.pos[train] == Some(instance.train(train).exit())
    }

    /// Operations train `train` may start next.
    pub fn next_ops<'a>(&self, instance: &'a Instance, train: usize) -> &'a [usize] {
        match self.pos[train] {
            None => &[0],
            Some(a) => &instance.train(train).operations[a].successors,
        }
    }

    /// Earliest start of `op` after this prefix, or `None` if another train
    /// holds one of its resources or the start would exceed its upper bound.
    pub fn start_time(&self, instance: &Instance, op: OpRef) -> Option<Time> {
        let o = instance.operation(op);
        let mut t = self.floor.max(self.ready[op.train]).max(o.start_lb);
        for u in instance.usages(op) {
            let r = u.resource.0;
            if matches!(self.holder[r], Some(h) if h != op.train) {
                return None;
            }
            for &(train, free_at) in &self.released[r] {
                if train != op.train {
                    t = t.max(free_at);
                }
            }
        }
        o.start_ub.admits(t).then_some(t)
    }

    pub fn candidates(&self, instance: &Instance, out: &mut Vec<Candidate>) {
        out.clear();
        for train in 0..instance.num_trains() {
            if self.is_finished(instance, train) {
                continue;
            }
            for &operation in self.next_ops(instance, train) {
                if let Some(start) = self.start_time(instance, OpRef::new(train, operation)) {
                    out.push(Candidate {
                        train,
                        operation,
                        start,
                    });
                }
            }
        }
    }

    pub fn apply(&mut self, instance: &Instance, c: Candidate) {
        let j = c.train;
        if let Some(a) = self.pos[j] {
            for u in instance.usages(OpRef::new(j, a)) {
                let r = u.resource.0;
                if self.holder[r] == Some(j) {
                    self.holder[r] = None;
                }
                let free_at = c.start + u.release_time;
                let list = &mut self.released[r];
                match list.iter_mut().find(|(t, _)| *t == j) {
                    Some(entry) => entry.1 = entry.1.max(free_at),
                    None => list.push((j, free_at)),
                }
            }
        }
        let op = OpRef::new(j, c.operation);
        for u in instance.usages(op) {
            self.holder[u.resource.0] = Some(j);
        }
        let o = instance.operation(op);
        self.pos[j] = Some(c.operation);
        self.ready[j] = c.start + o.min_duration;
        self.floor = c.start;
        self.cost += instance.op_cost(op, c.start);
        if c.operation == instance.train(j).exit() {
            self.unfinished -= 1;
        }
        // Release instants at or before the floor can no longer delay anything.
        let floor = self.floor;
        for list in &mut self.released {
            if !list.is_empty() {
                list.retain(|&(_, t)| t > floor);
            }
        }
    }

    /// Key identifying everything the future depends on. Equal keys have
    /// identical sets of completions with identical added costs.
    pub fn memo_key(&self, out: &mut Vec<i64>) {
        out.clear();
        out.push(self.floor);
        for (p, &ready) in self.pos.iter().zip(&self.ready) {
            out.push(p.map_or(-1, |a| a as i64));
            out.push(ready.max(self.floor));
        }
        for (r, list) in self.released.iter().enumerate() {
            for &(train, t) in list {
                out.push(-2 - r as i64);
                out.push(train as i64);
                out.push(t);
            }
        }
    }
}

/// Admissible cost-to-go bounds that ignore interactions between trains.
pub(crate) struct LowerBound {
    lb_time: Vec<Time>,
    ctg: Vec<i128>,
    reached: Vec<bool>,
}

pub(crate) const INFEASIBLE: i128 = i128::MAX;

impl LowerBound {
    pub fn new() -> Self {
        LowerBound {
            lb_time: Vec::new(),
            ctg: Vec::new(),
            reached: Vec::new(),
        }
    }

    /// Cheapest completion cost of one train from `state`, or [`INFEASIBLE`]
    /// if no remaining path respects the upper bounds.
    pub fn train(&mut self, instance: &Instance, state: &DispatchState, j: usize) -> i128 {
        let train = instance.train(j);
        let exit = train.exit();
        let (first, base) = match state.pos[j] {
            Some(a) if a == exit => return 0,
            Some(a) => (a + 1, state.ready[j].max(state.floor)),
            None => (0, state.floor),
        };
        let n = train.len();
        self.lb_time.clear();
        self.lb_time.resize(n, Time::MAX);
        self.reached.clear();
        self.reached.resize(n, false);
        self.ctg.clear();
        self.ctg.resize(n, INFEASIBLE);

        let direct = state.next_ops(instance, j);
        for c in first..n {
            let mut arrival = if direct.contains(&c) { base } else { Time::MAX };
            for &p in instance.predecessors(OpRef::new(j, c)) {
                if p >= first && self.reached[p] {
                    let d = train.operations[p].min_duration;
                    arrival = arrival.min(self.lb_time[p] + d);
                }
            }
            if arrival == Time::MAX {
                continue;
            }
            let op = &train.operations[c];
            let t = arrival.max(op.start_lb);
            if op.start_ub.admits(t) {
                self.lb_time[c] = t;
                self.reached[c] = true;
            }
        }
        for c in (first..n).rev() {
            if !self.reached[c] {
                continue;
            }
            let own = instance.op_cost(OpRef::new(j, c), self.lb_time[c]);
            if c == exit {
                self.ctg[c] = own;
                continue;
            }
            let best = train.operations[c]
                .successors
                .iter()
                .map(|&s| self.ctg[s])
                .min()
                .unwrap_or(INFEASIBLE);
            if best != INFEASIBLE {
                self.ctg[c] = own + best;
            }
        }
        direct.iter().map(|&s| self.ctg[s]).min().unwrap_or(INFEASIBLE)
    }

    /// Sum of per-train bounds, or [`INFEASIBLE`].
    pub fn total(&mut self, instance: &Instance, state: &DispatchState) -> i128 {
        let mut sum = 0i128;
        for j in 0..instance.num_trains() {
            let b = self.train(instance, state, j);
            if b == INFEASIBLE {
                return INFEASIBLE;
            }
            sum += b;
        }
        sum
    }
}
