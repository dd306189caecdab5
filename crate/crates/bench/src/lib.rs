//! Shared fixtures for the benchmarks.

use displib_core::{
    generate_line, parse_instance, parse_solution, solve_heuristic, HeuristicOptions, Instance, LineSpec,
    Solution,
};

const TWO_TRAINS: &str = include_str!("../../core/tests/data/two_trains.json");
const TWO_TRAINS_SOLUTION: &str = include_str!("../../core/tests/data/two_trains_solution.json");

pub fn two_trains() -> (Instance, Solution) {
    let (instance, _) = parse_instance(TWO_TRAINS).expect("fixture parses");
    let solution = parse_solution(TWO_TRAINS_SOLUTION).expect("fixture parses");
    (instance, solution)
}

/// A generated line with default timings.
pub fn line(stations: usize, trains: usize, seed: u64) -> Instance {
    generate_line(&LineSpec::new(stations, trains, seed))
        .expect("bench spec is feasible")
        .instance
}

/// A line together with a heuristic solution of it.
pub fn solved_line(stations: usize, trains: usize, seed: u64) -> (Instance, Solution) {
    let instance = line(stations, trains, seed);
    let options = HeuristicOptions {
        restarts: 0,
        ..HeuristicOptions::default()
    };
    let solution = solve_heuristic(&instance, options)
        .solution
        .expect("bench line has a solution");
    (instance, solution)
}
