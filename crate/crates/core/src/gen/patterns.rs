//! Scenario patterns layered on a generated instance.

use serde::{Deserialize, Serialize};

use super::{GenError, Generated, OpKind};
use crate::model::{Instance, ObjectiveComponent, Operation, ResourceUsage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum Pattern {
    /// `second` continues with the rolling stock of `first`: the two become
    /// one train whose graph is both graphs plus an arc from the exit of
    /// `first` to the entry of `second`.
    JoinRollingStock { first: usize, second: usize },
    /// `departing` may not leave `station` before `arriving` has got there.
    Correspondence {
        arriving: usize,
        departing: usize,
        station: usize,
    },
    /// `train` may leave the network right after any of `operations`, at a
    /// fixed cost of `penalty`.
    Cancellation {
        train: usize,
        operations: Vec<usize>,
        penalty: i64,
    },
}

fn conflict(reason: impl Into<String>) -> GenError {
    GenError::PatternConflict {
        reason: reason.into(),
    }
}

pub fn add_pattern(gen: &Generated, pattern: &Pattern) -> Result<Generated, GenError> {
    let n = gen.instance.num_trains();
    let check = |i: usize| {
        if i < n {
            Ok(())
        } else {
            Err(conflict(format!("train {i} does not exist ({n} trains)")))
        }
    };
    let (mut trains, mut objective) = gen.instance.clone().into_parts();
    let mut metas = gen.trains.clone();

    match *pattern {
        Pattern::JoinRollingStock { first, second } => {
            check(first)?;
            check(second)?;
            if first == second {
                return Err(conflict("a train cannot be joined with itself"));
            }
            let offset = trains[first].len();
            let tail = trains[second].clone();
            let bridge_from = trains[first].exit();
            trains[first].operations[bridge_from].successors.push(offset);
            trains[first]
                .operations
                .extend(tail.operations.into_iter().map(|mut op| {
                    op.successors.iter_mut().for_each(|s| *s += offset);
                    op
                }));
            let tail_meta = metas[second].clone();
            let head = &mut metas[first];
            head.destination = tail_meta.destination;
            head.kinds.extend(tail_meta.kinds);
            for c in &mut objective {
                if c.train == second {
                    c.train = first;
                    c.operation += offset;
                }
            }
            trains.remove(second);
            metas.remove(second);
            for c in &mut objective {
                if c.train > second {
                    c.train -= 1;
                }
            }
        }
        Pattern::Correspondence {
            arriving,
            departing,
            station,
        } => {
            check(arriving)?;
            check(departing)?;
            if arriving == departing {
                return Err(conflict("a train cannot wait for itself"));
            }
            let arrival = metas[arriving]
                .kinds
                .iter()
                .position(|k| matches!(k, OpKind::Track { station: s, .. } if *s == station))
                .filter(|&a| a > 0)
                .ok_or_else(|| conflict(format!("train {arriving} does not arrive at station {station}")))?;
            let departure = metas[departing]
                .kinds
                .iter()
                .position(|k| matches!(k, OpKind::Segment { from, .. } if *from == station))
                .ok_or_else(|| conflict(format!("train {departing} does not leave station {station}")))?;
            let name = format!("C{arriving}.{departing}.{station}");
            if gen.instance.resource_names().contains(&name) {
                return Err(conflict(format!("resource {name} already exists")));
            }
            for op in &mut trains[arriving].operations[..arrival] {
                op.resources.push(ResourceUsage::new(name.clone(), 0));
            }
            trains[departing].operations[departure]
                .resources
                .push(ResourceUsage::new(name, 0));
        }
        Pattern::Cancellation {
            train,
            ref operations,
            penalty,
        } => {
            check(train)?;
            let exit = trains[train].exit();
            if operations.is_empty() {
                return Err(conflict("no operations to cancel from"));
            }
            if penalty < 0 {
                return Err(conflict("penalty must be non-negative"));
            }
            let mut from = operations.clone();
            from.sort_unstable();
            from.dedup();
            if from.len() != operations.len() || from.iter().any(|&a| a >= exit) {
                return Err(conflict(format!(
                    "operations must be distinct non-exit operations of train {train}"
                )));
            }
            let t = &mut trains[train];
            let cancel = exit;
            let new_exit = exit + 1;
            for op in &mut t.operations {
                op.successors
                    .iter_mut()
                    .filter(|s| **s == exit)
                    .for_each(|s| *s = new_exit);
            }
            for &a in &from {
                t.operations[a].successors.push(cancel);
                t.operations[a].successors.sort_unstable();
            }
            t.operations
                .insert(cancel, Operation::new(0).successors([new_exit]));
            metas[train].kinds.insert(cancel, OpKind::Cancel);
            for c in &mut objective {
                if c.train == train && c.operation == exit {
                    c.operation = new_exit;
                }
            }
            objective.push(ObjectiveComponent {
                train,
                operation: cancel,
                threshold: 0,
                coeff: 0,
                increment: penalty,
            });
        }
    }
    Ok(Generated {
        instance: Instance::new(trains, objective)?,
        trains: metas,
    })
}
