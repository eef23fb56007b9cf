//! The `bofc` command line.
//!
//! Exit codes: 0 on success or pass, 1 on a failed verdict or a failed
//! computation, 2 on usage, parse or validation errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::compare::compare_convergence;
use crate::equilibrium::{equilibrium_report, null_space_basis};
use crate::error::{Error, Result};
use crate::export::export_run;
use crate::graph::{classify, DirectedSensingGraph, GraphClass};
use crate::scenario::{builtin_names, load_scenario, run_batch, run_paper_scenario, Scenario};
use crate::simulate::{TrajectoryRecord, Verdict};

#[derive(Debug, Parser)]
#[command(name = "bofc", version, about = "Bearing-only formation control over directed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a sensing graph (graph JSON, scenario file or built-in name).
    Classify { graph: String },
    /// Print the equilibrium, stability tags and Lyapunov rate.
    Equilibrium {
        scenario: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Integrate a scenario; with --out, write trajectory.csv and verdict.json.
    Simulate {
        scenario: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Null-space dimensions and residuals of a one-to-many scenario.
    Nullspace { scenario: String },
    /// Run two scenarios from the same initial condition.
    Compare {
        scenario_a: String,
        scenario_b: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a built-in reproduction and report pass/fail.
    Paper { name: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Seed for random initial conditions (first seed of a batch).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Convergence tolerance on the bearing error.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of consecutive seeds to run.
    #[arg(long)]
    seeds: Option<u64>,
}

impl RunArgs {
    fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        if let Some(step) = self.step {
            scenario.settings.step = step;
        }
        if let Some(t_max) = self.t_max {
            scenario.settings.t_max = t_max;
        }
        if let Some(tol) = self.tol {
            scenario.settings.convergence_tol = tol;
        }
        scenario.settings.validate()
    }

    fn seeds(&self, scenario: &Scenario) -> Vec<u64> {
        let first = self.seed.or(scenario.seed()).unwrap_or(0);
        (first..first + self.seeds.unwrap_or(1).max(1)).collect()
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Validation(_) | Error::UnknownScenario(_) | Error::Io(_) => 2,
        Error::InvalidGraph(_) => 2,
        _ => 1,
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn load_graph(source: &str) -> Result<DirectedSensingGraph> {
    if let Ok(s) = load_scenario(source) {
        return Ok(s.target.graph().clone());
    }
    let text = std::fs::read_to_string(source).map_err(|_| Error::UnknownScenario(source.to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{source}: {e}")))
}

fn verdict_ok(scenario: &Scenario, verdict: Verdict) -> bool {
    match scenario.expected_verdict {
        Some(expected) => expected.matches(verdict),
        None => verdict == Verdict::Converged,
    }
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    scenario: &'a str,
    seed: Option<u64>,
    verdict: Verdict,
    final_time: Option<f64>,
    final_error: Option<f64>,
    expected_verdict_met: bool,
}

fn simulate(scenario: &Scenario, run: &RunArgs, out: &mut dyn Write) -> Result<bool> {
    let records: Vec<TrajectoryRecord> = run_batch(scenario, &run.seeds(scenario))?;
    let mut all_ok = true;
    let mut summaries = Vec::new();
    let batch = records.len() > 1;
    for record in &records {
        let ok = verdict_ok(scenario, record.verdict);
        all_ok &= ok;
        if let Some(dir) = &run.out {
            let dir = match (batch, record.seed) {
                (true, Some(seed)) => dir.join(format!("seed-{seed}")),
                _ => dir.clone(),
            };
            export_run(&dir, &scenario.name, record, &scenario.settings)?;
        }
        summaries.push(SimulateSummary {
            scenario: &scenario.name,
            seed: record.seed,
            verdict: record.verdict,
            final_time: record.final_time(),
            final_error: record.final_error(),
            expected_verdict_met: ok,
        });
    }
    if batch {
        print_json(out, &summaries)?;
    } else {
        print_json(out, &summaries[0])?;
    }
    Ok(all_ok)
}

#[derive(Serialize)]
struct NullSpaceSummary {
    #[serde(flatten)]
    dims: crate::equilibrium::NullSpaceDims,
    residual_g: f64,
    residual_n: f64,
}

fn nullspace(scenario: &Scenario, out: &mut dyn Write) -> Result<()> {
    let graph = scenario.target.graph();
    if classify(graph).class != GraphClass::OneToMany {
        return Err(Error::Validation("nullspace needs a one-to-many scenario".into()));
    }
    let mut by_head = vec![Vec::new(); graph.n() - 1];
    for (k, e) in graph.edges().iter().enumerate() {
        by_head[e.head - 1] = scenario.target.targets().vector(k).to_vec();
    }
    let basis = null_space_basis(&by_head)?;
    print_json(
        out,
        &NullSpaceSummary { dims: basis.dims(), residual_g: basis.residual_g, residual_n: basis.residual_n },
    )
}

#[derive(Serialize)]
struct CompareSummary {
    seed: Option<u64>,
    verdict_a: Verdict,
    verdict_b: Verdict,
    time_to_tol_a: Option<f64>,
    time_to_tol_b: Option<f64>,
    b_not_slower: bool,
}

fn compare(a: &Scenario, b: &Scenario, run: &RunArgs, out: &mut dyn Write) -> Result<bool> {
    let mut rows = Vec::new();
    let seeds: Vec<Option<u64>> =
        if a.seed().is_some() { run.seeds(a).into_iter().map(Some).collect() } else { vec![None] };
    for seed in seeds {
        let initial = a.initial_configuration(seed)?;
        let report = compare_convergence(&a.target, &b.target, &initial, &a.settings)?;
        rows.push(CompareSummary {
            seed,
            verdict_a: report.verdict_a,
            verdict_b: report.verdict_b,
            time_to_tol_a: report.time_to_tol_a,
            time_to_tol_b: report.time_to_tol_b,
            b_not_slower: report.b_not_slower,
        });
    }
    let ok = rows.iter().all(|r| r.b_not_slower);
    print_json(out, &rows)?;
    Ok(ok)
}

fn paper(name: &str, out: &mut dyn Write) -> Result<bool> {
    if !builtin_names().contains(&name) {
        return Err(Error::UnknownScenario(format!(
            "{name} (expected one of: {})",
            builtin_names().join(", ")
        )));
    }
    let report = run_paper_scenario(name)?;
    for check in &report.checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {name}: {} ({})", check.name, check.detail)?;
    }
    writeln!(out, "{name}: {}", if report.passed { "PASS" } else { "FAIL" })?;
    Ok(report.passed)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<bool> {
    match command {
        Command::Classify { graph } => {
            let graph = load_graph(&graph)?;
            print_json(out, &classify(&graph))?;
            Ok(true)
        }
        Command::Equilibrium { scenario, run } => {
            let mut s = load_scenario(&scenario)?;
            run.apply(&mut s)?;
            let initial = s.initial_configuration(run.seed)?;
            print_json(out, &equilibrium_report(&s.target, &initial)?)?;
            Ok(true)
        }
        Command::Simulate { scenario, run } => {
            let mut s = load_scenario(&scenario)?;
            run.apply(&mut s)?;
            simulate(&s, &run, out)
        }
        Command::Nullspace { scenario } => {
            nullspace(&load_scenario(&scenario)?, out)?;
            Ok(true)
        }
        Command::Compare { scenario_a, scenario_b, run } => {
            let mut a = load_scenario(&scenario_a)?;
            let b = load_scenario(&scenario_b)?;
            run.apply(&mut a)?;
            compare(&a, &b, &run, out)
        }
        Command::Paper { name } => paper(&name, out),
    }
}

/// Runs the command line on `argv` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
