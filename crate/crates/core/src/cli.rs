//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad input (scenario, plan file,
//! horizon, oversized oracle instance), 3 infeasible, 4 stopped at a limit,
//! 5 invalid plan.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{self, Backend, Suite};
use crate::encoder::{constraint_census, encode, VarIndex};
use crate::milp::write_lp;
use crate::oracle::{brute_force_optimum, OracleError, OracleOutcome};
use crate::plan::{extract_plan, validate_plan, AnnotatedPlan, ValidationReport};
use crate::scenario::{load_scenario, Scenario};
use crate::solver::{BranchingRule, SolveOptions, SolveResult, SolveStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_LIMIT: i32 = 4;
pub const EXIT_INVALID: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "thermopath", version, about = "Thermally constrained toolpath synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Branching {
    Most,
    First,
}

impl From<Branching> for BranchingRule {
    fn from(b: Branching) -> Self {
        match b {
            Branching::Most => BranchingRule::MostFractional,
            Branching::First => BranchingRule::FirstFractional,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Table1,
    Table2,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Table1 => Suite::Table1,
            SuiteArg::Table2 => Suite::Table2,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SolverArgs {
    /// External MILP solver command, run as `<cmd> <model.lp> <solution.sol>`.
    #[arg(long, env = "THERMOPATH_EXTERNAL_SOLVER")]
    pub external: Option<String>,
    /// Time limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    /// Stop branch-and-bound after this many nodes.
    #[arg(long)]
    pub node_limit: Option<u64>,
    #[arg(long, value_enum, default_value = "most")]
    pub branching: Branching,
}

impl SolverArgs {
    fn backend(&self) -> Backend {
        match &self.external {
            Some(cmd) if !cmd.trim().is_empty() => Backend::External(cmd.clone()),
            _ => Backend::BuiltIn,
        }
    }

    fn options(&self) -> Result<SolveOptions, Failure> {
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return Err(Failure::input(format!("time limit must be positive (got {})", self.time_limit)));
        }
        Ok(SolveOptions {
            time_limit: Duration::from_secs_f64(self.time_limit),
            node_limit: self.node_limit,
            branching_rule: self.branching.into(),
            ..SolveOptions::default()
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the MILP for a scenario as an LP file.
    Encode {
        scenario: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a scenario, validate the plan and write it as JSON.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a plan file against a scenario.
    Validate {
        scenario: PathBuf,
        plan: PathBuf,
        /// Horizon selecting the bound-constrained instants; defaults to the scenario's.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run a benchmark suite over diagonal patterns.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, env = "THERMOPATH_EXTERNAL_SOLVER")]
        external: Option<String>,
        /// Per-instance time limit in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
        /// Grid sizes to run (subset of 2, 3, 5, 7).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value = "first")]
        branching: Branching,
    },
    /// Exhaustive optimum for tiny scenarios.
    Oracle {
        scenario: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = read(path)?;
    load_scenario(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Resolves the horizon from the flag or the scenario and records it on the scenario.
fn horizon(scenario: &mut Scenario, flag: Option<usize>) -> Result<usize, Failure> {
    let d = flag
        .or(scenario.horizon)
        .ok_or_else(|| Failure::input("no horizon: pass --horizon or set `horizon` in the scenario"))?;
    if d == 0 {
        return Err(Failure::input("horizon must be at least 1"));
    }
    scenario.horizon = Some(d);
    Ok(d)
}

/// Outcome of encoding, solving, extracting and validating one scenario.
#[derive(Debug)]
pub struct Solved {
    pub result: SolveResult,
    pub index: VarIndex,
    pub plan: Option<AnnotatedPlan>,
    pub report: Option<ValidationReport>,
    pub encode_secs: f64,
    pub solve_secs: f64,
}

/// The full pipeline. `scenario.horizon` should already hold `d`.
pub fn solve_scenario(
    scenario: &Scenario,
    d: usize,
    backend: &Backend,
    options: &SolveOptions,
) -> Result<Solved, Failure> {
    let t0 = Instant::now();
    let (model, index) = encode(scenario, d).map_err(|e| Failure::input(e.to_string()))?;
    let encode_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let result = backend
        .solve(&model, options)
        .map_err(|e| Failure::io(format!("solver: {e}")))?;
    let solve_secs = t1.elapsed().as_secs_f64();
    let (plan, report) = match &result.assignment {
        Some(a) => {
            let plan = extract_plan(a, &index, scenario).map_err(|e| Failure {
                code: EXIT_INVALID,
                message: format!("cannot extract plan: {e}"),
            })?;
            let report = validate_plan(scenario, &plan).map_err(|e| Failure {
                code: EXIT_INVALID,
                message: e.to_string(),
            })?;
            (Some(plan), Some(report))
        }
        None => (None, None),
    };
    Ok(Solved {
        result,
        index,
        plan,
        report,
        encode_secs,
        solve_secs,
    })
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::TimedOut => "timed_out",
        SolveStatus::BoundOnly => "bound_only",
    }
}

fn cmd_encode(path: &Path, flag: Option<usize>, out: &Path) -> Result<i32, Failure> {
    let mut scenario = load(path)?;
    let d = horizon(&mut scenario, flag)?;
    let t0 = Instant::now();
    let (model, _) = encode(&scenario, d).map_err(|e| Failure::input(e.to_string()))?;
    let text = write_lp(&model);
    let secs = t0.elapsed().as_secs_f64();
    write(out, &text)?;
    let census = constraint_census(&scenario, d).map_err(|e| Failure::input(e.to_string()))?;
    println!("variables={}", model.num_vars());
    println!("constraints={}", model.num_constraints());
    println!(
        "census c1={} init={} c2={} c3={} c4={} c5={} makespan={}",
        census.c1, census.initial, census.c2, census.c3, census.c4, census.c5, census.makespan
    );
    println!("encode_secs={secs:.3}");
    Ok(EXIT_OK)
}

fn cmd_solve(path: &Path, flag: Option<usize>, args: &SolverArgs, out: Option<&Path>) -> Result<i32, Failure> {
    let mut scenario = load(path)?;
    let d = horizon(&mut scenario, flag)?;
    let options = args.options()?;
    let backend = args.backend();
    let solved = solve_scenario(&scenario, d, &backend, &options)?;
    let r = &solved.result;
    println!("status={}", status_name(r.status));
    if let Some(obj) = r.objective {
        println!("m={}", obj.round());
    }
    if r.best_bound.is_finite() {
        println!("bound={}", r.best_bound);
    }
    println!("encode_secs={:.3}", solved.encode_secs);
    println!("solve_secs={:.3}", solved.solve_secs);
    println!("nodes={}", r.stats.nodes);
    if let (Some(plan), Some(report)) = (&solved.plan, &solved.report) {
        if !report.is_valid() {
            let json = serde_json::to_string_pretty(report).expect("report serializes");
            return Err(Failure {
                code: EXIT_INVALID,
                message: format!("solver plan failed validation:\n{json}"),
            });
        }
        println!("prints={:?}", plan.print_times());
        if let Some(out) = out {
            write(out, &plan.to_json())?;
        }
    }
    Ok(match r.status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::TimedOut | SolveStatus::BoundOnly => EXIT_LIMIT,
    })
}

fn cmd_validate(path: &Path, plan_path: &Path, flag: Option<usize>) -> Result<i32, Failure> {
    let mut scenario = load(path)?;
    if let Some(d) = flag {
        scenario.horizon = Some(d);
    }
    let plan = AnnotatedPlan::from_json(&read(plan_path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", plan_path.display())))?;
    let report = validate_plan(&scenario, &plan).map_err(|e| Failure::input(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_bench(
    suite: Suite,
    external: Option<&str>,
    timeout: f64,
    format: Format,
    sizes: Option<&[usize]>,
    branching: Branching,
) -> Result<i32, Failure> {
    if !(timeout > 0.0 && timeout.is_finite()) {
        return Err(Failure::input(format!("timeout must be positive (got {timeout})")));
    }
    let backend = match external {
        Some(cmd) if !cmd.trim().is_empty() => Backend::External(cmd.to_string()),
        _ => Backend::BuiltIn,
    };
    let options = SolveOptions {
        time_limit: Duration::from_secs_f64(timeout),
        branching_rule: branching.into(),
        ..SolveOptions::default()
    };
    let mut rows = Vec::new();
    for inst in bench::suite_instances(suite) {
        if sizes.is_some_and(|s| !s.contains(&inst.size)) {
            continue;
        }
        let row = bench::run_instance(suite, &inst, &backend, &options)
            .map_err(|e| Failure::io(format!("{}x{}: {e}", inst.size, inst.size)))?;
        rows.push(row);
    }
    match format {
        Format::Markdown => print!("{}", bench::render_markdown(&rows)),
        Format::Csv => print!("{}", bench::render_csv(&rows)),
    }
    Ok(EXIT_OK)
}

fn cmd_oracle(path: &Path, flag: Option<usize>, out: Option<&Path>) -> Result<i32, Failure> {
    let mut scenario = load(path)?;
    let d = horizon(&mut scenario, flag)?;
    let t0 = Instant::now();
    let outcome = brute_force_optimum(&scenario, d).map_err(|e| match e {
        OracleError::TooLarge { .. } | OracleError::HorizonTooSmall(_) | OracleError::Scenario(_) => {
            Failure::input(e.to_string())
        }
    })?;
    let secs = t0.elapsed().as_secs_f64();
    match outcome {
        OracleOutcome::Optimal { cost, witness } => {
            println!("status=optimal");
            println!("m={cost}");
            println!("prints={:?}", witness.print_times());
            println!("search_secs={secs:.3}");
            if let Some(out) = out {
                write(out, &witness.to_json())?;
            }
            Ok(EXIT_OK)
        }
        OracleOutcome::Infeasible => {
            println!("status=infeasible");
            println!("search_secs={secs:.3}");
            Ok(EXIT_INFEASIBLE)
        }
    }
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Encode { scenario, horizon, out } => cmd_encode(scenario, *horizon, out),
        Command::Solve {
            scenario,
            horizon,
            solver,
            out,
        } => cmd_solve(scenario, *horizon, solver, out.as_deref()),
        Command::Validate { scenario, plan, horizon } => cmd_validate(scenario, plan, *horizon),
        Command::Bench {
            suite,
            external,
            timeout,
            format,
            sizes,
            branching,
        } => cmd_bench(
            (*suite).into(),
            external.as_deref(),
            *timeout,
            *format,
            sizes.as_deref(),
            *branching,
        ),
        Command::Oracle { scenario, horizon, out } => cmd_oracle(scenario, *horizon, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
