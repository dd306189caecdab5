//! Earliest start times for fixed routes and a fixed global order.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{Instance, OpRef, Time};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EarliestError {
    #[error("route of train {train} is not an entry-to-exit path")]
    InvalidRoute { train: usize },
    #[error("order does not list the routed operations in route order (position {position})")]
    OrderMismatch { position: usize },
    #[error("{second} uses {resource} after {first}, which never moves on before it")]
    ResourceOrder {
        first: OpRef,
        second: OpRef,
        resource: String,
    },
    #[error("{op} cannot start before {earliest}, after its upper bound {bound}")]
    UpperBoundExceeded { op: OpRef, earliest: Time, bound: Time },
}

/// Componentwise-minimal start times, aligned with `order`.
///
/// Precedences: route succession (duration), the list order itself (times
/// may not decrease) and, for operations of different trains sharing a
/// resource, from the successor of the earlier one to the later one (release
/// time). Every precedence points forward in `order`, so one pass computes the
/// longest paths.
pub fn earliest_times(
    instance: &Instance,
    routes: &[Vec<usize>],
    order: &[OpRef],
) -> Result<Vec<Time>, EarliestError> {
    if routes.len() != instance.num_trains() {
        return Err(EarliestError::InvalidRoute {
            train: routes.len().min(instance.num_trains()),
        });
    }
    for (i, route) in routes.iter().enumerate() {
        let train = instance.train(i);
        let ok = route.first() == Some(&0)
            && route.last() == Some(&train.exit())
            && route
                .windows(2)
                .all(|w| w[1] < train.len() && train.operations[w[0]].successors.contains(&w[1]));
        if !ok {
            return Err(EarliestError::InvalidRoute { train: i });
        }
    }
    let total: usize = routes.iter().map(Vec::len).sum();
    let mut progress = vec![0usize; routes.len()];
    let mut pos: HashMap<OpRef, usize> = HashMap::with_capacity(order.len());
    for (k, op) in order.iter().enumerate() {
        let route = routes.get(op.train);
        match route {
            Some(r) if progress[op.train] < r.len() && r[progress[op.train]] == op.operation => {
                progress[op.train] += 1;
                pos.insert(*op, k);
            }
            _ => return Err(EarliestError::OrderMismatch { position: k }),
        }
    }
    if order.len() != total {
        return Err(EarliestError::OrderMismatch {
            position: order.len(),
        });
    }
    let next_of = |op: OpRef| -> Option<OpRef> {
        let r = &routes[op.train];
        let k = r.iter().position(|&a| a == op.operation)?;
        r.get(k + 1).map(|&b| OpRef::new(op.train, b))
    };

    // incoming[k]: (source position, weight)
    let mut incoming: Vec<Vec<(usize, Time)>> = vec![Vec::new(); order.len()];
    for (k, &op) in order.iter().enumerate() {
        if k > 0 {
            incoming[k].push((k - 1, 0));
        }
        if let Some(next) = next_of(op) {
            incoming[pos[&next]].push((k, instance.operation(op).min_duration));
        }
    }
    for (k1, &a) in order.iter().enumerate() {
        for (k2, &b) in order.iter().enumerate().skip(k1 + 1) {
            if a.train == b.train {
                continue;
            }
            for ua in instance.usages(a) {
                if !instance.usages(b).iter().any(|ub| ub.resource == ua.resource) {
                    continue;
                }
                match next_of(a).map(|n| (n, pos[&n])) {
                    Some((_, kn)) if kn < k2 => incoming[k2].push((kn, ua.release_time)),
                    _ => {
                        return Err(EarliestError::ResourceOrder {
                            first: a,
                            second: b,
                            resource: instance.resource_name(ua.resource).to_string(),
                        })
                    }
                }
            }
        }
    }

    let mut times = vec![0 as Time; order.len()];
    for (k, &op) in order.iter().enumerate() {
        let o = instance.operation(op);
        let t = incoming[k]
            .iter()
            .map(|&(src, w)| times[src] + w)
            .fold(o.start_lb, Time::max);
        if let Some(bound) = o.start_ub.finite().filter(|&b| t > b) {
            return Err(EarliestError::UpperBoundExceeded {
                op,
                earliest: t,
                bound,
            });
        }
        times[k] = t;
    }
    Ok(times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_instance, Operation, Train};

    #[test]
    fn chain_prefix_sums() {
        let train = Train::new(vec![
            Operation::new(5).successors([1]),
            Operation::new(5).successors([2]),
            Operation::new(0),
        ]);
        let inst = build_instance(vec![train], vec![]).unwrap();
        let order: Vec<_> = (0..3).map(|a| OpRef::new(0, a)).collect();
        assert_eq!(
            earliest_times(&inst, &[vec![0, 1, 2]], &order),
            Ok(vec![0, 5, 10])
        );
    }

    #[test]
    fn rejects_order_not_following_route() {
        let train = Train::new(vec![Operation::new(1).successors([1]), Operation::new(0)]);
        let inst = build_instance(vec![train], vec![]).unwrap();
        let order = [OpRef::new(0, 1), OpRef::new(0, 0)];
        assert_eq!(
            earliest_times(&inst, &[vec![0, 1]], &order),
            Err(EarliestError::OrderMismatch { position: 0 })
        );
        assert_eq!(
            earliest_times(&inst, &[vec![0]], &order[1..]),
            Err(EarliestError::InvalidRoute { train: 0 })
        );
    }
}
