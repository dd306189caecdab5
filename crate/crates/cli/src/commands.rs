use std::path::{Path, PathBuf};
use std::time::Duration;

use displib_core::format::{parse_instance_with, ParseOptions};
use displib_core::gen::GenError;
use displib_core::milp::{MapError, NameMap};
use displib_core::{
    add_pattern, build_model, conflict_pairs, emit_lp, enumerate_routes, generate_line, map_solution,
    parse_instance, parse_solution, perturb, solve_exact, solve_heuristic, time_horizon, verify,
    write_instance, write_solution, Assignment, CostShape, FormatError, HeuristicOptions, Instance, LineSpec,
    Location, ModelOptions, Pattern, PerturbSpec, Solution, SolveBudget, SolveReport, SolveStatus,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::io::{count, read_input, variant_name, write_output, Failure};
use crate::{Cli, Command, GenerateArgs, Mode, SolveArgs};

pub fn run(cli: Cli) -> Result<u8, Failure> {
    let json = cli.json;
    match cli.command {
        Command::Validate { instance, strict } => validate(&instance, strict, json),
        Command::Stats { instance } => stats(&instance, json),
        Command::Verify { instance, solution } => verify_cmd(&instance, &solution, json),
        Command::Solve(args) => solve(args, json),
        Command::EmitLp {
            instance,
            out,
            name_map,
            paper_faithful,
            relaxed_bounds,
        } => emit(
            &instance,
            &out,
            name_map,
            ModelOptions {
                paper_faithful,
                relaxed_bounds,
            },
            json,
        ),
        Command::MapSolution {
            instance,
            name_map,
            assignment,
            out,
        } => map(&instance, &name_map, &assignment, &out, json),
        Command::Generate(args) => generate(args, json),
    }
}

fn format_failure(path: &str, e: FormatError) -> Failure {
    let kind = match &e {
        FormatError::Model { source, .. } => variant_name(source),
        other => variant_name(other),
    };
    Failure::usage(&kind, format!("{path}: {e}"))
}

fn load_instance(path: &str) -> Result<Instance, Failure> {
    let text = read_input(path)?;
    let (instance, diagnostics) = parse_instance(&text).map_err(|e| format_failure(path, e))?;
    for w in diagnostics.warnings {
        eprintln!("warning: {path}: {}: {}", w.path, w.message);
    }
    Ok(instance)
}

fn load_solution(path: &str) -> Result<Solution, Failure> {
    let text = read_input(path)?;
    parse_solution(&text).map_err(|e| format_failure(path, e))
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values serialize")
    );
}

fn solution_json(solution: &Solution) -> Value {
    serde_json::from_str(&write_solution(solution)).expect("written solutions are valid JSON")
}

fn validate(path: &str, strict: bool, json: bool) -> Result<u8, Failure> {
    let text = read_input(path)?;
    let (instance, diagnostics) =
        parse_instance_with(&text, &ParseOptions { strict }).map_err(|e| format_failure(path, e))?;
    let (trains, ops) = (instance.num_trains(), instance.num_operations());
    let (resources, components) = (instance.resource_names().len(), instance.objective().len());
    if json {
        let warnings: Vec<Value> = diagnostics
            .warnings
            .iter()
            .map(|w| json!({ "path": w.path, "message": w.message }))
            .collect();
        print_json(&json!({
            "valid": true,
            "trains": trains,
            "operations": ops,
            "resources": resources,
            "objective_components": components,
            "warnings": warnings,
        }));
    } else {
        for w in &diagnostics.warnings {
            eprintln!("warning: {path}: {}: {}", w.path, w.message);
        }
        println!(
            "{}, {}, {}, {}",
            count(trains, "train"),
            count(ops, "operation"),
            count(resources, "resource"),
            count(components, "objective component")
        );
    }
    Ok(0)
}

/// Routes counted per train stop at this many.
const ROUTE_LIMIT: usize = 1_000_000;

fn stats(path: &str, json: bool) -> Result<u8, Failure> {
    let instance = load_instance(path)?;
    let mut routes = 0usize;
    let mut truncated = false;
    for train in instance.trains() {
        let e = enumerate_routes(train, ROUTE_LIMIT);
        routes += e.routes.len();
        truncated |= e.truncated;
    }
    let longest = instance.trains().iter().map(|t| t.len()).max().unwrap_or(0);
    let pairs = conflict_pairs(&instance).len();
    let horizon = time_horizon(&instance);
    if json {
        print_json(&json!({
            "trains": instance.num_trains(),
            "operations": instance.num_operations(),
            "resources": instance.resource_names().len(),
            "objective_components": instance.objective().len(),
            "max_operations_per_train": longest,
            "routes": routes,
            "routes_truncated": truncated,
            "conflict_pairs": pairs,
            "horizon": horizon,
        }));
    } else {
        println!("trains                  {}", instance.num_trains());
        println!("operations              {}", instance.num_operations());
        println!("resources               {}", instance.resource_names().len());
        println!("objective components    {}", instance.objective().len());
        println!("max operations/train    {longest}");
        println!(
            "routes                  {routes}{}",
            if truncated {
                " (counting stopped early)"
            } else {
                ""
            }
        );
        println!("conflict pairs          {pairs}");
        println!("horizon                 {horizon}");
    }
    Ok(0)
}

fn describe(location: &Location) -> String {
    match location {
        Location::Train { train } => format!("train {train}"),
        Location::Event(e) => format!(
            "event {} (train {} operation {})",
            e.position, e.train, e.operation
        ),
        Location::ResourcePair {
            first,
            second,
            resource,
        } => format!("events {} and {} on {resource}", first.position, second.position),
        Location::Solution => "solution".to_string(),
    }
}

fn verify_cmd(instance_path: &str, solution_path: &str, json: bool) -> Result<u8, Failure> {
    let instance = load_instance(instance_path)?;
    let solution = load_solution(solution_path)?;
    let verdict = verify(&instance, &solution);
    if json {
        print_json(&serde_json::to_value(&verdict).map_err(Failure::internal)?);
    } else if verdict.feasible {
        println!("feasible, objective {}", solution.objective_value);
    } else {
        println!("infeasible, {}", count(verdict.violations.len(), "violation"));
        for v in &verdict.violations {
            println!("  {} at {}: {}", v.kind, describe(&v.location), v.detail);
        }
    }
    Ok(if verdict.feasible { 0 } else { 1 })
}

fn seconds(value: f64, flag: &str) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(value).map_err(|e| Failure::usage("Usage", format!("{flag}: {e}")))
}

fn solve(args: SolveArgs, json: bool) -> Result<u8, Failure> {
    let instance = load_instance(&args.instance)?;
    let time_limit = args.time_limit.map(|s| seconds(s, "--time-limit")).transpose()?;
    let report: SolveReport = match args.mode {
        Mode::Exact => solve_exact(
            &instance,
            SolveBudget {
                node_limit: args.node_limit,
                time_limit,
                threads: args.threads.max(1),
            },
        ),
        Mode::Heuristic => {
            let defaults = HeuristicOptions::default();
            solve_heuristic(
                &instance,
                HeuristicOptions {
                    seed: args.seed,
                    time_limit: time_limit.or(defaults.time_limit),
                    restarts: args.restarts.unwrap_or(defaults.restarts),
                    node_limit: args.node_limit.unwrap_or(defaults.node_limit),
                },
            )
        }
    };
    let solved = report.solution.is_some();
    if let Some(sol) = &report.solution {
        if !(json && args.out == "-") {
            write_output(&args.out, &write_solution(sol))?;
        }
    }
    if json {
        print_json(&json!({
            "status": report.status,
            "objective": report.solution.as_ref().map(|s| s.objective_value),
            "bound": report.bound,
            "nodes_explored": report.nodes_explored,
            "wall_time_seconds": report.wall_time.as_secs_f64(),
            "solution": report.solution.as_ref().map(solution_json),
        }));
    } else {
        let objective = report
            .solution
            .as_ref()
            .map_or(String::new(), |s| format!(", objective {}", s.objective_value));
        let bound = report.bound.map_or(String::new(), |b| format!(", bound {b}"));
        eprintln!(
            "{:?}{objective}{bound} ({} nodes, {:.2} s)",
            report.status,
            report.nodes_explored,
            report.wall_time.as_secs_f64()
        );
    }
    match report.status {
        SolveStatus::Optimal | SolveStatus::Feasible if solved => Ok(0),
        _ => Ok(1),
    }
}

fn default_name_map(lp: &str) -> PathBuf {
    Path::new(lp).with_extension("names.json")
}

fn emit(
    path: &str,
    out: &str,
    name_map: Option<PathBuf>,
    options: ModelOptions,
    json: bool,
) -> Result<u8, Failure> {
    if json && out == "-" {
        return Err(Failure::usage("Usage", "--json needs --out FILE for the LP text"));
    }
    let instance = load_instance(path)?;
    let model = build_model(&instance, options);
    write_output(out, &emit_lp(&model))?;
    let map_path = name_map.or_else(|| (out != "-").then(|| default_name_map(out)));
    if let Some(p) = &map_path {
        let text = serde_json::to_string_pretty(&model.name_map()).map_err(Failure::internal)?;
        write_output(&p.to_string_lossy(), &(text + "\n"))?;
    }
    if json {
        print_json(&json!({
            "variables": model.variables.len(),
            "constraints": model.constraints.len(),
            "horizon": model.horizon,
            "lp": out,
            "name_map": map_path,
        }));
    } else {
        eprintln!(
            "{}, {}, horizon {}",
            count(model.variables.len(), "variable"),
            count(model.constraints.len(), "row"),
            model.horizon
        );
        if map_path.is_none() {
            eprintln!("note: no name map written; pass --name-map to keep one");
        }
    }
    Ok(0)
}

fn map(
    instance_path: &str,
    map_path: &str,
    assignment_path: &str,
    out: &str,
    json: bool,
) -> Result<u8, Failure> {
    let instance = load_instance(instance_path)?;
    let names: NameMap = serde_json::from_str(&read_input(map_path)?)
        .map_err(|e| Failure::usage("MalformedNameMap", format!("{map_path}: {e}")))?;
    let model = build_model(&instance, names.options);
    if model.name_map() != names {
        return Err(Failure::usage(
            "NameMapMismatch",
            format!("{map_path} does not describe the model of {instance_path}"),
        ));
    }
    let assignment = Assignment::parse(&read_input(assignment_path)?)
        .map_err(|e| Failure::usage(&variant_name(&e), format!("{assignment_path}: {e}")))?;
    let solution = map_solution(&model, &assignment, &instance).map_err(|e| {
        let kind = variant_name(&e);
        match e {
            MapError::IncompleteAssignment { .. } | MapError::UnknownVariable { .. } => {
                Failure::usage(&kind, format!("{assignment_path}: {e}"))
            }
            _ => Failure::rejected(&kind, format!("{assignment_path}: {e}")),
        }
    })?;
    if json {
        if out != "-" {
            write_output(out, &write_solution(&solution))?;
        }
        print_json(&json!({
            "objective": solution.objective_value,
            "solution": solution_json(&solution),
        }));
    } else {
        write_output(out, &write_solution(&solution))?;
        eprintln!("feasible, objective {}", solution.objective_value);
    }
    Ok(0)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateConfig {
    line: LineSpec,
    #[serde(default)]
    perturb: Option<PerturbSpec>,
    #[serde(default)]
    patterns: Vec<Pattern>,
}

fn config_from_file(path: &str) -> Result<GenerateConfig, Failure> {
    let value: Value = serde_json::from_str(&read_input(path)?)
        .map_err(|e| Failure::usage("MalformedSpec", format!("{path}: {e}")))?;
    let parsed = if value.get("line").is_some() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|line| GenerateConfig {
            line,
            perturb: None,
            patterns: Vec::new(),
        })
    };
    parsed.map_err(|e| Failure::usage("MalformedSpec", format!("{path}: {e}")))
}

fn config_from_flags(args: &GenerateArgs) -> Result<GenerateConfig, Failure> {
    let (Some(stations), Some(trains)) = (args.stations, args.trains) else {
        return Err(Failure::usage(
            "Usage",
            "need --spec or both --stations and --trains",
        ));
    };
    let mut line = LineSpec::new(stations, trains, args.seed.unwrap_or(0));
    if let Some(k) = args.tracks {
        line.tracks_per_station = k;
    }
    if let Some(shape) = &args.cost_shape {
        line.cost_shape = serde_json::from_value::<CostShape>(Value::from(shape.as_str())).map_err(|_| {
            Failure::usage(
                "Usage",
                format!("unknown cost shape {shape:?} (linear, steps, convex-pw)"),
            )
        })?;
    }
    if let Some(s) = args.departure_spread {
        line.departure_spread = s;
    }
    if args.max_span.is_some() {
        line.max_span = args.max_span;
    }
    if let Some(f) = args.eastbound_fraction {
        line.eastbound_fraction = f;
    }
    let perturb = args.perturb_at.map(|time_point| {
        let delay = args.delay.as_deref().map_or((0, 0), |d| (d[0], d[1]));
        PerturbSpec {
            time_point,
            delayed_fraction: args.delayed_fraction,
            delay,
            seed: line.seed,
        }
    });
    Ok(GenerateConfig {
        line,
        perturb,
        patterns: Vec::new(),
    })
}

fn gen_failure(e: GenError) -> Failure {
    let kind = variant_name(&e);
    match e {
        GenError::InvalidSpec { .. } | GenError::SpecInfeasible { .. } | GenError::PatternConflict { .. } => {
            Failure::usage(&kind, e)
        }
        GenError::NoReference => Failure::rejected(&kind, e),
        GenError::Model(_) => Failure::internal(e),
    }
}

fn generate(args: GenerateArgs, json: bool) -> Result<u8, Failure> {
    let mut config = match &args.spec {
        Some(path) => config_from_file(path)?,
        None => config_from_flags(&args)?,
    };
    if let (Some(_), Some(seed)) = (&args.spec, args.seed) {
        config.line.seed = seed;
    }
    if args.out_dir.is_none() && (args.count > 1 || (json && args.count == 1)) {
        return Err(Failure::usage(
            "Usage",
            "--out-dir is needed for more than one instance or with --json",
        ));
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::internal(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut written = Vec::new();
    for k in 0..args.count as u64 {
        let mut line = config.line.clone();
        line.seed = config.line.seed.wrapping_add(k);
        let mut gen = generate_line(&line).map_err(gen_failure)?;
        for pattern in &config.patterns {
            gen = add_pattern(&gen, pattern).map_err(gen_failure)?;
        }
        if let Some(p) = &config.perturb {
            let spec = PerturbSpec {
                seed: p.seed.wrapping_add(k),
                ..p.clone()
            };
            gen = perturb(&gen, &spec).map_err(gen_failure)?;
        }
        let text = write_instance(&gen.instance);
        match &args.out_dir {
            Some(dir) => {
                let path = dir.join(format!("instance_{}.json", line.seed));
                write_output(&path.to_string_lossy(), &text)?;
                written.push(json!({
                    "path": path,
                    "seed": line.seed,
                    "trains": gen.instance.num_trains(),
                    "operations": gen.instance.num_operations(),
                }));
            }
            None => write_output("-", &text)?,
        }
    }
    if json {
        print_json(&json!({ "written": written }));
    } else if args.out_dir.is_some() {
        eprintln!("wrote {}", count(written.len(), "instance"));
    }
    Ok(0)
}
