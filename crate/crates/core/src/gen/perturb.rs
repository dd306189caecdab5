//! Delay scenarios: cut a generated day at a time point and add delays.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{draw, GenError, Generated, TrainMeta};
use crate::model::{Instance, ObjectiveComponent, Operation, Time, Train, UpperBound};
use crate::solve::{solve_heuristic, HeuristicOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    /// Moment the dispatcher takes over; becomes time 0.
    pub time_point: Time,
    /// Probability that a remaining train gets delayed.
    pub delayed_fraction: f64,
    /// Inclusive `[min, max]` delay.
    pub delay: (Time, Time),
    #[serde(default)]
    pub seed: u64,
}

fn shift(op: &Operation, by: Time) -> Operation {
    let start_lb = (op.start_lb - by).max(0);
    let start_ub = match op.start_ub {
        UpperBound::Finite(b) => UpperBound::Finite((b - by).max(start_lb)),
        UpperBound::Unbounded => UpperBound::Unbounded,
    };
    Operation {
        start_lb,
        start_ub,
        ..op.clone()
    }
}

/// Restates the situation at `spec.time_point` of a reference schedule (the
/// heuristic's solution, seeded with `spec.seed`) as a fresh instance.
///
/// Trains that already left are dropped. Trains that have not started keep
/// their whole graph with bounds shifted. A running train is re-rooted at its
/// current operation: that operation becomes the entry with `start_ub = 0` and
/// a duration reduced by the time already spent in it. Thresholds are shifted
/// too, and clamped at 0.
///
/// Delays then hit each remaining train with probability `delayed_fraction`:
/// a train that has not started gets a later earliest departure, a running
/// train a longer stay in its current operation.
pub fn perturb(gen: &Generated, spec: &PerturbSpec) -> Result<Generated, GenError> {
    if !(0.0..=1.0).contains(&spec.delayed_fraction) {
        return Err(GenError::InvalidSpec {
            field: "delayed_fraction",
            reason: "must lie in [0, 1]".into(),
        });
    }
    if spec.time_point < 0 || spec.delay.0 < 0 || spec.delay.0 > spec.delay.1 {
        return Err(GenError::InvalidSpec {
            field: "delay",
            reason: "need time_point >= 0 and 0 <= min <= max".into(),
        });
    }
    let inst = &gen.instance;
    let reference = solve_heuristic(
        inst,
        HeuristicOptions {
            seed: spec.seed,
            time_limit: None,
            restarts: 0,
            ..Default::default()
        },
    )
    .solution
    .ok_or(GenError::NoReference)?;

    let cut = spec.time_point;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut trains = Vec::new();
    let mut metas = Vec::new();
    // Per old train: new train index and old-to-new operation map.
    let mut maps: Vec<Option<(usize, Vec<Option<usize>>)>> = vec![None; inst.num_trains()];

    for (i, train) in inst.trains().iter().enumerate() {
        let events: Vec<_> = reference.events.iter().filter(|e| e.train == i).collect();
        let (first, last) = (events[0], events[events.len() - 1]);
        if last.time <= cut {
            continue;
        }
        let meta = &gen.trains[i];
        let delayed = rng.random_bool(spec.delayed_fraction);
        let delay = if delayed { draw(&mut rng, spec.delay) } else { 0 };

        let (ops, map, kinds) = if first.time >= cut {
            let mut ops: Vec<Operation> = train.operations.iter().map(|o| shift(o, cut)).collect();
            ops[0].start_lb += delay;
            if let UpperBound::Finite(b) = ops[0].start_ub {
                ops[0].start_ub = UpperBound::Finite(b.max(ops[0].start_lb));
            }
            let map = (0..train.len()).map(Some).collect();
            (ops, map, meta.kinds.clone())
        } else {
            let current = events.iter().rev().find(|e| e.time <= cut).unwrap();
            let root = current.operation;
            let mut reach = vec![false; train.len()];
            reach[root] = true;
            for a in root..train.len() {
                if reach[a] {
                    for &s in &train.operations[a].successors {
                        reach[s] = true;
                    }
                }
            }
            let mut map = vec![None; train.len()];
            let mut next = 0;
            for a in 0..train.len() {
                if reach[a] {
                    map[a] = Some(next);
                    next += 1;
                }
            }
            let mut ops = Vec::with_capacity(next);
            let mut kinds = Vec::with_capacity(next);
            for a in (0..train.len()).filter(|&a| reach[a]) {
                let mut op = shift(&train.operations[a], cut);
                op.successors = op.successors.iter().map(|&s| map[s].unwrap()).collect();
                if a == root {
                    let elapsed = cut - current.time;
                    op.start_lb = 0;
                    op.start_ub = UpperBound::Finite(0);
                    op.min_duration = (op.min_duration - elapsed).max(0) + delay;
                }
                ops.push(op);
                kinds.push(meta.kinds[a]);
            }
            (ops, map, kinds)
        };
        maps[i] = Some((trains.len(), map));
        metas.push(TrainMeta {
            origin: meta.origin,
            destination: meta.destination,
            departure: (meta.departure - cut).max(0) + if first.time >= cut { delay } else { 0 },
            origin_track: if first.time >= cut {
                meta.origin_track
            } else {
                None
            },
            kinds,
        });
        trains.push(Train::new(ops));
    }

    let objective = inst
        .objective()
        .iter()
        .filter_map(|c| {
            let (train, map) = maps[c.train].as_ref()?;
            Some(ObjectiveComponent {
                train: *train,
                operation: map[c.operation]?,
                threshold: (c.threshold - cut).max(0),
                ..c.clone()
            })
        })
        .collect();
    Ok(Generated {
        instance: Instance::new(trains, objective)?,
        trains: metas,
    })
}
