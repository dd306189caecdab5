//! Fixtures and independent oracles shared by the integration tests.

#![allow(dead_code)]

pub mod fuzz;
pub mod oracle;

use std::path::PathBuf;
use std::process::Command;

use displib_core::milp::{emit_lp, Assignment, MilpModel};
use displib_core::{
    build_instance, parse_instance, parse_solution, verify, Event, Instance, ObjectiveComponent, Operation,
    Solution, Time, Train,
};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn two_trains() -> Instance {
    parse_instance(&read_data("two_trains.json")).unwrap().0
}

pub fn two_trains_solution() -> Solution {
    parse_solution(&read_data("two_trains_solution.json")).unwrap()
}

pub fn two_trains_swapped() -> Solution {
    parse_solution(&read_data("two_trains_swapped.json")).unwrap()
}

/// One train whose entry can start at any time; the components sit on the
/// entry so the start time is free to choose.
pub fn priced_at(components: &[(Time, i64, i64)], t: Time) -> i64 {
    let train = Train::new(vec![Operation::new(0).successors([1]), Operation::new(0)]);
    let objective = components
        .iter()
        .map(|&(threshold, coeff, increment)| ObjectiveComponent {
            train: 0,
            operation: 0,
            threshold,
            coeff,
            increment,
        })
        .collect();
    let inst = build_instance(vec![train], objective).unwrap();
    let mut sol = Solution {
        objective_value: 0,
        events: vec![Event::new(t, 0, 0), Event::new(t, 0, 1)],
    };
    let z = verify(&inst, &sol).computed_objective.unwrap();
    sol.objective_value = z;
    assert!(verify(&inst, &sol).feasible);
    z
}

pub fn highs_available() -> bool {
    Command::new("python3")
        .args(["-c", "import highspy"])
        .output()
        .is_ok_and(|o| o.status.success())
}

/// Runs `scripts/solve_lp.py` on the model's LP text and reads back the
/// assignment. Errors carry the script's exit status.
pub fn solve_with_highs(model: &MilpModel) -> Result<Assignment, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let lp = dir.path().join("model.lp");
    let out = dir.path().join("assignment.txt");
    std::fs::write(&lp, emit_lp(model)).map_err(|e| e.to_string())?;
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scripts/solve_lp.py");
    let status = Command::new("python3")
        .arg(script)
        .arg(&lp)
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("solve_lp.py exited with {status}"));
    }
    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    Assignment::parse(&text).map_err(|e| e.to_string())
}
