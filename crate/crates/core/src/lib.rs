//! Toolkit for the DISPLIB train dispatching problem.
//!
//! * [`model`]: instances, operations, solutions and DAG utilities.
//! * [`format`]: the JSON instance and solution files.
//! * [`verify`]: feasibility and objective checking.
//! * [`milp`]: big-M MILP construction, LP-format export and mapping solver
//!   output back to solutions.
//! * [`solve`]: exact branch-and-bound and a dispatching heuristic.
//! * [`gen`]: synthetic single-track line instances and scenario patterns.

pub mod format;
pub mod gen;
pub mod milp;
pub mod model;
pub mod solve;
pub mod verify;

pub use format::{parse_instance, parse_solution, write_instance, write_solution, FormatError};
pub use gen::{
    add_pattern, generate_line, perturb, CostShape, GenError, Generated, LineSpec, Pattern, PerturbSpec,
};
pub use milp::{build_model, emit_lp, map_solution, Assignment, MilpModel, ModelOptions};
pub use model::{
    build_instance, conflict_pairs, enumerate_routes, time_horizon, ConflictPair, Event, Instance,
    ModelError, ObjectiveComponent, OpRef, Operation, ResourceId, ResourceUsage, Solution, Time, Train,
    UpperBound,
};
pub use solve::{
    earliest_times, solve_exact, solve_heuristic, HeuristicOptions, SolveBudget, SolveReport, SolveStatus,
};
pub use verify::{verify, EventRef, Location, Verdict, Violation, ViolationKind};
