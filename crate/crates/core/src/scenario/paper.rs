use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::distance;
use crate::simulate::{integrate, TrajectoryRecord, Verdict};

use super::{builtin, paper_data, Scenario};

/// One named pass/fail check of a reproduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: Option<u64>,
    pub verdict: Verdict,
    pub final_error: f64,
    pub final_time: f64,
    pub time_to_tol: Option<f64>,
}

impl RunSummary {
    fn of(record: &TrajectoryRecord, tol: f64) -> Self {
        RunSummary {
            seed: record.seed,
            verdict: record.verdict,
            final_error: record.final_error().unwrap_or(f64::NAN),
            final_time: record.final_time().unwrap_or(0.0),
            time_to_tol: record.time_to_error(tol),
        }
    }
}

/// Result of a built-in reproduction.
#[derive(Debug, Clone, Serialize)]
pub struct PaperRun {
    pub name: String,
    pub runs: Vec<RunSummary>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip)]
    pub records: Vec<TrajectoryRecord>,
}

/// Number of seeds each built-in scenario runs with.
pub fn seed_count(name: &str) -> u64 {
    match name {
        "hexagon-good" | "hexagon-bad" => 50,
        "lff-8" | "olff-8" | "unordered-8" => 20,
        _ => 1,
    }
}

/// Runs `scenario` once per seed in `seeds`, concurrently. Scenarios with
/// explicit positions run once regardless.
pub fn run_batch(scenario: &Scenario, seeds: &[u64]) -> Result<Vec<TrajectoryRecord>> {
    if scenario.seed().is_none() {
        let initial = scenario.initial_configuration(None)?;
        return Ok(vec![integrate(&scenario.target, &initial, &scenario.settings)?]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || -> Result<TrajectoryRecord> {
                    let initial = scenario.initial_configuration(Some(seed))?;
                    let mut record = integrate(&scenario.target, &initial, &scenario.settings)?;
                    record.seed = Some(seed);
                    Ok(record)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("integration thread")).collect()
    })
}

fn converged_fraction(runs: &[RunSummary]) -> f64 {
    let n = runs.iter().filter(|r| r.verdict == Verdict::Converged).count();
    n as f64 / runs.len() as f64
}

/// Runs a built-in scenario with its pinned settings and seed count and
/// checks the outcome against its expected verdict.
pub fn run_paper_scenario(name: &str) -> Result<PaperRun> {
    let scenario = builtin(name).ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    let seeds: Vec<u64> = (0..seed_count(name)).collect();
    let records = run_batch(&scenario, &seeds)?;
    let tol = scenario.settings.convergence_tol;
    let runs: Vec<RunSummary> = records.iter().map(|r| RunSummary::of(r, tol)).collect();
    let data = paper_data();
    let mut checks = Vec::new();
    match name {
        "one-to-many-5" => {
            let record = &records[0];
            checks.push(Check::new(
                "verdict",
                record.verdict == Verdict::Converged,
                format!("{:?}", record.verdict),
            ));
            let follower = record.final_config().map(|c| c.coords(6).to_vec()).unwrap_or_default();
            let offset = distance(&follower, &data.equilibrium);
            checks.push(Check::new(
                "final follower within 1e-3 of [1,1]",
                offset < 1e-3,
                format!("final follower {follower:?}, offset {offset:.3e}"),
            ));
        }
        "one-to-many-5-symmetric" => {
            let record = &records[0];
            checks.push(Check::new(
                "verdict",
                record.verdict != Verdict::Converged,
                format!("{:?}", record.verdict),
            ));
            let offsets: Vec<f64> =
                record.configs.iter().map(|c| distance(c.coords(6), &data.equilibrium)).collect();
            let growth = offsets.iter().cloned().fold(0.0, f64::max) / offsets[0];
            checks.push(Check::new(
                "distance from [1,1] grows 10x",
                growth >= 10.0,
                format!("growth factor {growth:.3e}"),
            ));
        }
        "hexagon-good" | "unordered-8" => {
            let fraction = converged_fraction(&runs);
            checks.push(Check::new(
                "converged for at least 90% of seeds",
                fraction >= 0.9,
                format!("{:.0}% of {} seeds", 100.0 * fraction, runs.len()),
            ));
        }
        "hexagon-bad" => {
            let failed = runs.iter().filter(|r| r.verdict != Verdict::Converged).count();
            checks.push(Check::new(
                "at least one seed fails to converge",
                failed >= 1,
                format!("{failed} of {} seeds not converged", runs.len()),
            ));
        }
        _ => {
            let fraction = converged_fraction(&runs);
            checks.push(Check::new(
                "converged for every seed",
                fraction == 1.0,
                format!("{:.0}% of {} seeds", 100.0 * fraction, runs.len()),
            ));
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(PaperRun { name: name.to_string(), runs, checks, passed, records })
}
