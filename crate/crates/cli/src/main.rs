//! `displib`: validate, verify, solve, export and generate train dispatching
//! instances from the command line.
//!
//! Exit codes: 0 success, 1 violations found or no solution, 2 bad input or
//! usage, 3 internal error. `-` stands for standard input or output wherever a
//! path is expected.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "displib",
    version,
    about = "Train dispatching instances: check, solve, export, generate"
)]
struct Cli {
    /// Machine-readable JSON on standard output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check an instance, then print its size.
    Validate {
        instance: String,
        /// Reject unknown keys instead of warning about them.
        #[arg(long)]
        strict: bool,
    },
    /// Size and structure statistics of an instance.
    Stats { instance: String },
    /// Check a solution against an instance.
    Verify { instance: String, solution: String },
    /// Compute a solution.
    Solve(SolveArgs),
    /// Write the MILP model of an instance in LP format, plus a name map.
    EmitLp {
        instance: String,
        #[arg(long, default_value = "-")]
        out: String,
        /// Where to write the variable name map. Defaults to the LP path
        /// with a `.names.json` extension; none when writing to stdout.
        #[arg(long)]
        name_map: Option<PathBuf>,
        /// Leave out the corrections to the lateness indicator and cost rows.
        #[arg(long)]
        paper_faithful: bool,
        /// Bound start times by the horizon only and enforce upper bounds on
        /// selected operations through extra rows.
        #[arg(long)]
        relaxed_bounds: bool,
    },
    /// Turn an external solver's variable assignment into a solution.
    MapSolution {
        instance: String,
        name_map: String,
        /// `name value` lines, as written by `scripts/solve_lp.py`.
        assignment: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Generate synthetic line instances.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Heuristic,
}

#[derive(Args)]
struct SolveArgs {
    instance: String,
    #[arg(long, value_enum, default_value_t = Mode::Heuristic)]
    mode: Mode,
    /// Wall-clock limit in seconds. The heuristic defaults to 10, the exact
    /// search to none.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Search node limit (per run for the heuristic).
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbed heuristic restarts after the first run.
    #[arg(long)]
    restarts: Option<usize>,
    /// Worker threads for the exact search.
    #[arg(long, env = "DISPLIB_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON file with a line spec, or `{"line": ..., "perturb": ..., "patterns": [...]}`.
    #[arg(long, conflicts_with_all = ["stations", "trains"])]
    spec: Option<String>,
    #[arg(long, required_unless_present = "spec")]
    stations: Option<usize>,
    #[arg(long, required_unless_present = "spec")]
    trains: Option<usize>,
    #[arg(long)]
    tracks: Option<usize>,
    /// linear, steps or convex-pw.
    #[arg(long)]
    cost_shape: Option<String>,
    #[arg(long)]
    departure_spread: Option<i64>,
    #[arg(long)]
    max_span: Option<usize>,
    #[arg(long)]
    eastbound_fraction: Option<f64>,
    /// Seed of the first instance; instance k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Cut the generated day at this time and restate it from there.
    #[arg(long)]
    perturb_at: Option<i64>,
    #[arg(long, default_value_t = 0.0, requires = "perturb_at")]
    delayed_fraction: f64,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], requires = "perturb_at")]
    delay: Option<Vec<i64>>,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Directory for `instance_<seed>.json` files. Without it a single
    /// instance goes to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let result = std::panic::catch_unwind(|| commands::run(cli));
    let code = match result {
        Ok(Ok(code)) => code,
        Ok(Err(failure)) => {
            failure.report(json);
            failure.code
        }
        Err(_) => 3,
    };
    ExitCode::from(code)
}
