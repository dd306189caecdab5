//! Solvers.
//!
//! Both searches build the global event list one start event at a time (see
//! [`state`]). Appending an event fixes the route step and the position in
//! the order at once, and each event is scheduled as early as the prefix
//! allows, which is optimal for the resulting order because the objective
//! never decreases when a start is delayed.

mod earliest;
mod exact;
mod heuristic;
mod state;

use std::time::Duration;

use serde::Serialize;

pub use earliest::{earliest_times, EarliestError};
pub use exact::solve_exact;
pub use heuristic::{solve_heuristic, HeuristicOptions};

use crate::model::{Event, Instance, Solution};
use crate::verify::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeoutNoSolution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub solution: Option<Solution>,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    pub wall_time: Duration,
    /// Best proven lower bound on the optimum, when one is known.
    pub bound: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveBudget {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Worker threads for the exact search; 1 is deterministic.
    pub threads: usize,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            node_limit: None,
            time_limit: None,
            threads: 1,
        }
    }
}

impl SolveBudget {
    pub fn nodes(limit: u64) -> Self {
        SolveBudget {
            node_limit: Some(limit),
            ..Default::default()
        }
    }
}

fn clamp_cost(cost: i128) -> i64 {
    cost.clamp(0, i64::MAX as i128) as i64
}

/// Wraps a search result, dropping it if the verifier disagrees.
fn checked_solution(instance: &Instance, cost: i128, events: Vec<Event>) -> Option<Solution> {
    let solution = Solution {
        objective_value: clamp_cost(cost),
        events,
    };
    verify(instance, &solution).feasible.then_some(solution)
}
