mod common;

use displib_core::gen::{OpKind, TrainMeta};
use displib_core::{
    add_pattern, generate_line, parse_instance, perturb, solve_exact, solve_heuristic, verify,
    write_instance, CostShape, GenError, Generated, HeuristicOptions, LineSpec, Pattern, PerturbSpec,
    SolveBudget, SolveStatus, UpperBound,
};
use proptest::prelude::*;

use common::oracle::brute_force;

fn small(stations: usize, trains: usize, seed: u64) -> LineSpec {
    let mut spec = LineSpec::new(stations, trains, seed);
    spec.departure_spread = 200;
    spec
}

fn round_trips(gen: &Generated) {
    let text = write_instance(&gen.instance);
    let (back, _) = parse_instance(&text).unwrap();
    assert_eq!(write_instance(&back), text);
}

#[test]
fn lone_train_runs_on_time() {
    for shape in [CostShape::Linear, CostShape::Steps, CostShape::ConvexPw] {
        let mut spec = LineSpec::new(5, 1, 3);
        spec.cost_shape = shape;
        let gen = generate_line(&spec).unwrap();
        let report = solve_exact(&gen.instance, SolveBudget::default());
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.solution.unwrap().objective_value, 0, "{shape:?}");
    }
}

#[test]
fn cost_shapes_have_three_components() {
    let mut spec = LineSpec::new(4, 1, 0);
    spec.cost_shape = CostShape::Steps;
    let steps = generate_line(&spec).unwrap();
    spec.cost_shape = CostShape::ConvexPw;
    let convex = generate_line(&spec).unwrap();

    let s = steps.instance.objective();
    assert_eq!(s.len(), 3);
    assert!(s.iter().all(|c| c.coeff == 0 && c.increment == 1));
    let c = convex.instance.objective();
    assert_eq!(c.len(), 3);
    assert!(c.iter().all(|c| c.coeff == 1 && c.increment == 0));
    assert_eq!(c[1].threshold - c[0].threshold, 180);
    assert_eq!(c[2].threshold - c[0].threshold, 360);
    assert_eq!(s[0].threshold, c[0].threshold + 1);

    let exit = steps.instance.train(0).exit();
    assert!(s.iter().chain(c).all(|c| c.operation == exit));
}

#[test]
fn generated_trains_have_the_line_shape() {
    let mut spec = LineSpec::new(4, 6, 5);
    spec.tracks_per_station = 3;
    let gen = generate_line(&spec).unwrap();
    for (i, meta) in gen.trains.iter().enumerate() {
        let train = gen.instance.train(i);
        let entry = &train.operations[0];
        assert_eq!(entry.start_ub, UpperBound::Unbounded);
        assert_eq!(entry.start_lb, meta.departure);
        let exit = &train.operations[train.exit()];
        assert!(exit.resources.is_empty() && exit.successors.is_empty());
        assert_eq!(meta.kinds.len(), train.len());
        // Each station after the origin offers every track.
        let hops = meta.origin.abs_diff(meta.destination);
        assert_eq!(train.len(), 2 + hops * (1 + 3));
    }
    round_trips(&gen);
}

#[test]
fn generation_is_deterministic() {
    let spec = LineSpec::new(6, 8, 17);
    assert_eq!(generate_line(&spec).unwrap(), generate_line(&spec).unwrap());
    assert_ne!(
        generate_line(&spec).unwrap(),
        generate_line(&LineSpec::new(6, 8, 18)).unwrap()
    );
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = LineSpec::new(3, 2, 0);
    spec.tracks_per_station = 1;
    assert!(matches!(
        generate_line(&spec),
        Err(GenError::InvalidSpec {
            field: "tracks_per_station",
            ..
        })
    ));
    let mut spec = LineSpec::new(3, 2, 0);
    spec.eastbound_fraction = 1.5;
    assert!(matches!(generate_line(&spec), Err(GenError::InvalidSpec { .. })));

    let mut crowded = LineSpec::new(2, 5, 0);
    crowded.departure_spread = 0;
    crowded.eastbound_fraction = 1.0;
    assert!(matches!(
        generate_line(&crowded),
        Err(GenError::SpecInfeasible { .. })
    ));
}

#[test]
fn three_station_pipeline_is_solved_to_optimality() {
    let mut spec = LineSpec::new(3, 2, 1);
    spec.eastbound_fraction = 0.5;
    let gen = generate_line(&spec).unwrap();
    let report = solve_exact(&gen.instance, SolveBudget::default());
    assert_eq!(report.status, SolveStatus::Optimal);
    assert!(verify(&gen.instance, report.solution.as_ref().unwrap()).feasible);
}

#[test]
fn perturbing_at_zero_without_delays_changes_nothing() {
    let gen = generate_line(&LineSpec::new(5, 5, 2)).unwrap();
    let spec = PerturbSpec {
        time_point: 0,
        delayed_fraction: 0.0,
        delay: (0, 0),
        seed: 4,
    };
    assert_eq!(perturb(&gen, &spec).unwrap(), gen);
}

#[test]
fn running_trains_are_rerooted() {
    let gen = generate_line(&LineSpec::new(6, 6, 8)).unwrap();
    let reference = solve_heuristic(
        &gen.instance,
        HeuristicOptions {
            seed: 1,
            time_limit: None,
            restarts: 0,
            ..Default::default()
        },
    )
    .solution
    .unwrap();
    let first = |i: usize| reference.events.iter().find(|e| e.train == i).unwrap().time;
    let last = |i: usize| reference.events.iter().rev().find(|e| e.train == i).unwrap().time;
    // A time at which some train is under way.
    let cut = (0..6)
        .map(|i| (first(i) + last(i)) / 2)
        .find(|&t| (0..6).any(|i| first(i) < t && last(i) > t))
        .unwrap();
    let spec = PerturbSpec {
        time_point: cut,
        delayed_fraction: 0.0,
        delay: (0, 0),
        seed: 1,
    };
    let out = perturb(&gen, &spec).unwrap();
    assert_eq!(out, perturb(&gen, &spec).unwrap());

    let mut k = 0;
    let mut rerooted = 0;
    for i in 0..6 {
        if last(i) <= cut {
            continue;
        }
        let meta: &TrainMeta = &out.trains[k];
        let entry = &out.instance.train(k).operations[0];
        if first(i) < cut {
            rerooted += 1;
            let current = reference
                .events
                .iter()
                .rfind(|e| e.train == i && e.time <= cut)
                .unwrap();
            let original = &gen.instance.train(i).operations[current.operation];
            assert_eq!(entry.start_ub, UpperBound::Finite(0));
            assert_eq!(entry.start_lb, 0);
            let elapsed = cut - current.time;
            assert_eq!(entry.min_duration, (original.min_duration - elapsed).max(0));
            assert_eq!(meta.kinds[0], gen.trains[i].kinds[current.operation]);
        } else {
            assert_eq!(entry.start_lb, gen.trains[i].departure - cut);
        }
        k += 1;
    }
    assert!(rerooted > 0);
    assert_eq!(out.instance.num_trains(), k);
    round_trips(&out);
    let report = solve_heuristic(&out.instance, HeuristicOptions::default());
    assert!(report.solution.is_some());
}

#[test]
fn delays_raise_departures() {
    let gen = generate_line(&LineSpec::new(4, 6, 12)).unwrap();
    let spec = PerturbSpec {
        time_point: 0,
        delayed_fraction: 1.0,
        delay: (100, 100),
        seed: 0,
    };
    let out = perturb(&gen, &spec).unwrap();
    for i in 0..6 {
        let before = gen.instance.train(i).operations[0].start_lb;
        assert_eq!(out.instance.train(i).operations[0].start_lb, before + 100);
    }
    let bad = PerturbSpec {
        delayed_fraction: 2.0,
        ..spec
    };
    assert!(matches!(perturb(&gen, &bad), Err(GenError::InvalidSpec { .. })));
}

#[test]
fn joining_concatenates_the_graphs() {
    let gen = generate_line(&small(3, 2, 6)).unwrap();
    let (a, b) = (gen.instance.train(0).len(), gen.instance.train(1).len());
    let joined = add_pattern(&gen, &Pattern::JoinRollingStock { first: 0, second: 1 }).unwrap();
    assert_eq!(joined.instance.num_trains(), 1);
    let train = joined.instance.train(0);
    assert_eq!(train.len(), a + b);
    // The old exit of the first train now leads into the second's entry.
    assert_eq!(train.operations[a - 1].successors, vec![a]);
    let arcs: usize = train.operations.iter().map(|o| o.successors.len()).sum();
    let before: usize = (0..2)
        .flat_map(|i| &gen.instance.train(i).operations)
        .map(|o| o.successors.len())
        .sum();
    assert_eq!(arcs, before + 1);
    assert!(joined.instance.objective().iter().all(|c| c.train == 0));
    assert_eq!(joined.instance.objective().len(), gen.instance.objective().len());

    assert!(matches!(
        add_pattern(&gen, &Pattern::JoinRollingStock { first: 1, second: 1 }),
        Err(GenError::PatternConflict { .. })
    ));
}

#[test]
fn cancellation_adds_a_fixed_cost_shortcut() {
    let gen = generate_line(&small(4, 1, 2)).unwrap();
    let n = gen.instance.train(0).len();
    let out = add_pattern(
        &gen,
        &Pattern::Cancellation {
            train: 0,
            operations: vec![0, 1],
            penalty: 1000,
        },
    )
    .unwrap();
    let train = out.instance.train(0);
    assert_eq!(train.len(), n + 1);
    let cancel = n - 1;
    assert_eq!(out.trains[0].kinds[cancel], OpKind::Cancel);
    assert!(train.operations[0].successors.contains(&cancel));
    assert!(train.operations[1].successors.contains(&cancel));
    assert_eq!(train.operations[cancel].successors, vec![train.exit()]);
    let component = out.instance.objective().last().unwrap();
    assert_eq!(
        (
            component.operation,
            component.threshold,
            component.coeff,
            component.increment
        ),
        (cancel, 0, 0, 1000)
    );
    // Running through is free for a lone train, so the shortcut is never taken.
    let sol = solve_exact(&out.instance, SolveBudget::default())
        .solution
        .unwrap();
    assert_eq!(sol.objective_value, 0);
    assert!(sol.events.iter().all(|e| e.operation != cancel));

    assert!(matches!(
        add_pattern(
            &gen,
            &Pattern::Cancellation {
                train: 0,
                operations: vec![n - 1],
                penalty: 1,
            }
        ),
        Err(GenError::PatternConflict { .. })
    ));
}

#[test]
fn cancellation_is_taken_when_cheaper_than_running() {
    // Two opposing trains; one of them must wait for the other, and the
    // cancellation fee is cheaper than any wait.
    let mut spec = LineSpec::new(2, 2, 0);
    spec.departure_spread = 0;
    spec.eastbound_fraction = 0.5;
    let mut seed = 0;
    let gen = loop {
        spec.seed = seed;
        let g = generate_line(&spec).unwrap();
        if g.trains[0].origin != g.trains[1].origin {
            break g;
        }
        seed += 1;
    };
    let plain = solve_exact(&gen.instance, SolveBudget::default()).bound.unwrap();
    assert!(plain > 1);
    let out = add_pattern(
        &gen,
        &Pattern::Cancellation {
            train: 1,
            operations: vec![0],
            penalty: 1,
        },
    )
    .unwrap();
    let report = solve_exact(&out.instance, SolveBudget::default());
    assert_eq!(report.bound, Some(1));
    assert_eq!(brute_force(&out.instance).optimum, Some(1));
}

/// The shared resource makes the approach of the arriving train and the
/// departure of the other mutually exclusive: either the departure waits for
/// the arrival, or the departing train has cleared the segment before the
/// arriving train even enters.
#[test]
fn correspondence_orders_arrival_and_departure() {
    let mut held = 0;
    for seed in 0..60 {
        let mut spec = small(3, 2, seed);
        spec.max_span = Some(1);
        let gen = generate_line(&spec).unwrap();
        let (a, d) = (&gen.trains[0], &gen.trains[1]);
        if a.destination != 1 || d.origin != 1 {
            continue;
        }
        let pattern = Pattern::Correspondence {
            arriving: 0,
            departing: 1,
            station: 1,
        };
        let out = add_pattern(&gen, &pattern).unwrap();
        let oracle = brute_force(&out.instance);
        let report = solve_exact(&out.instance, SolveBudget::default());
        assert_eq!(
            report.solution.as_ref().map(|s| s.objective_value),
            oracle.optimum
        );
        for sol in report.solution.iter().chain(oracle.best.iter()) {
            assert!(verify(&out.instance, sol).feasible);
            let time_of = |train: usize, pred: &dyn Fn(&OpKind) -> bool| {
                sol.events
                    .iter()
                    .find(|e| e.train == train && pred(&out.trains[train].kinds[e.operation]))
                    .unwrap()
                    .time
            };
            let entered = time_of(0, &|k| *k == OpKind::Entry);
            let arrival = time_of(0, &|k| matches!(k, OpKind::Track { station: 1, .. }));
            let departure = time_of(1, &|k| matches!(k, OpKind::Segment { .. }));
            let cleared = time_of(1, &|k| matches!(k, OpKind::Track { .. }));
            assert!(
                departure >= arrival || cleared <= entered,
                "seed {seed}: departed {departure}, cleared {cleared}, entered {entered}, arrived {arrival}"
            );
            held += usize::from(departure >= arrival);
        }
    }
    assert!(held > 0, "no seed produced a connection that was kept");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_instances_round_trip_and_solve(
        stations in 2usize..7,
        trains in 1usize..7,
        seed in any::<u64>(),
        shape in prop_oneof![Just(CostShape::Linear), Just(CostShape::Steps), Just(CostShape::ConvexPw)],
    ) {
        let mut spec = LineSpec::new(stations, trains, seed);
        spec.cost_shape = shape;
        spec.release = (0, 30);
        let gen = generate_line(&spec).unwrap();
        round_trips(&gen);
        let report = solve_heuristic(&gen.instance, HeuristicOptions { seed, restarts: 2, ..Default::default() });
        let sol = report.solution.expect("generated lines are always solvable");
        prop_assert!(verify(&gen.instance, &sol).feasible);
    }
}
