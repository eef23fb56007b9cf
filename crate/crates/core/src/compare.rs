//! Side-by-side runs of two target formations that share a witness, one
//! graph being a subgraph of the other.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, TargetFormation};
use crate::graph::{classify, GraphClass};
use crate::simulate::{integrate, IntegratorSettings, TrajectoryRecord, Verdict};

/// Shared-edge targets must agree to this tolerance.
pub const SHARED_TARGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// Sample times present in both records.
    pub times: Vec<f64>,
    pub errors_a: Vec<f64>,
    pub errors_b: Vec<f64>,
    pub verdict_a: Verdict,
    pub verdict_b: Verdict,
    pub time_to_tol_a: Option<f64>,
    pub time_to_tol_b: Option<f64>,
    /// `b` reached the tolerance no later than `a`.
    pub b_not_slower: bool,
    #[serde(skip)]
    pub record_a: TrajectoryRecord,
    #[serde(skip)]
    pub record_b: TrajectoryRecord,
}

fn is_ordered_lff(target: &TargetFormation) -> bool {
    matches!(classify(target.graph()).class, GraphClass::Lff | GraphClass::OrderedLff)
}

/// Runs both formations from `shared_initial` and compares their bearing
/// errors.
pub fn compare_convergence(
    target_a: &TargetFormation,
    target_b: &TargetFormation,
    shared_initial: &Configuration,
    settings: &IntegratorSettings,
) -> Result<ComparisonReport> {
    if !target_a.graph().is_subgraph_of(target_b.graph()) {
        return Err(Error::NotSubgraph);
    }
    if !is_ordered_lff(target_a) || !is_ordered_lff(target_b) {
        return Err(Error::NotOrderedLff);
    }
    for (k, edge) in target_a.graph().edges().iter().enumerate() {
        let ta = target_a.targets().vector(k);
        let tb = target_b.target_of(*edge).ok_or(Error::NotSubgraph)?;
        if ta.iter().zip(tb).any(|(x, y)| (x - y).abs() > SHARED_TARGET_TOL) {
            return Err(Error::MismatchedTargets);
        }
    }
    let record_a = integrate(target_a, shared_initial, settings)?;
    let record_b = integrate(target_b, shared_initial, settings)?;

    let mut times = Vec::new();
    let mut errors_a = Vec::new();
    let mut errors_b = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < record_a.len() && j < record_b.len() {
        let (ta, tb) = (record_a.times[i], record_b.times[j]);
        if ta == tb {
            times.push(ta);
            errors_a.push(record_a.errors[i]);
            errors_b.push(record_b.errors[j]);
            i += 1;
            j += 1;
        } else if ta < tb {
            i += 1;
        } else {
            j += 1;
        }
    }

    let tol = settings.convergence_tol;
    let time_to_tol_a = record_a.time_to_error(tol);
    let time_to_tol_b = record_b.time_to_error(tol);
    let b_not_slower = match (time_to_tol_b, time_to_tol_a) {
        (Some(b), Some(a)) => b <= a,
        (Some(_), None) => true,
        (None, _) => false,
    };
    Ok(ComparisonReport {
        times,
        errors_a,
        errors_b,
        verdict_a: record_a.verdict,
        verdict_b: record_b.verdict,
        time_to_tol_a,
        time_to_tol_b,
        b_not_slower,
        record_a,
        record_b,
    })
}
