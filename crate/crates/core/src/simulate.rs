//! Fixed-step classical Runge-Kutta integration of the closed loop
//! `p' = gain * u(p)`.
//!
//! A run stops at the first step whose bearing error drops below the
//! convergence tolerance, when an agent leaves the divergence ball or two
//! sensing agents collide, or at `t_max`. Sample times are computed as
//! `k * step`, so identical inputs give bit-identical records.

use serde::{Deserialize, Serialize};

use crate::control::{agent_norms, stacked_control_into};
use crate::error::{Error, Result};
use crate::geometry::{Configuration, TargetFormation};
use crate::graph::DirectedSensingGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub step: f64,
    pub t_max: f64,
    pub convergence_tol: f64,
    pub divergence_radius: f64,
    /// Steps between recorded samples.
    pub record_every: usize,
    /// Scalar gain on the control law; 1 reproduces the unit-gain law.
    pub gain: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            step: 0.01,
            t_max: 50.0,
            convergence_tol: 1e-3,
            divergence_radius: 1e6,
            record_every: 10,
            gain: 1.0,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be positive, got {v}")))
            }
        };
        positive("step", self.step)?;
        positive("t_max", self.t_max)?;
        positive("convergence_tol", self.convergence_tol)?;
        positive("divergence_radius", self.divergence_radius)?;
        positive("gain", self.gain)?;
        if self.step > self.t_max {
            return Err(Error::Validation("step exceeds t_max".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Validation("record_every must be at least 1".into()));
        }
        Ok(())
    }

    fn total_steps(&self) -> usize {
        (self.t_max / self.step).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converged,
    Diverged,
    TimedOut,
}

/// Time-sampled output of [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub configs: Vec<Configuration>,
    /// Stacked bearing error `|g(t) - g*|` per sample.
    pub errors: Vec<f64>,
    /// `|u_i|` per agent, per sample.
    pub control_norms: Vec<Vec<f64>>,
    pub verdict: Verdict,
    pub seed: Option<u64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_config(&self) -> Option<&Configuration> {
        self.configs.last()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.errors.last().copied()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Time of the first sample whose error is below `tol`.
    pub fn time_to_error(&self, tol: f64) -> Option<f64> {
        self.times.iter().zip(&self.errors).find(|(_, e)| **e < tol).map(|(t, _)| *t)
    }
}

/// Right-hand side of the closed loop on raw stacked coordinates.
struct ClosedLoop<'a> {
    graph: &'a DirectedSensingGraph,
    d: usize,
    targets: &'a [f64],
    gain: f64,
}

impl ClosedLoop<'_> {
    fn eval(&self, x: &[f64], out: &mut [f64]) -> bool {
        if stacked_control_into(self.graph, self.d, self.targets, x, out).is_err() {
            return false;
        }
        if self.gain != 1.0 {
            out.iter_mut().for_each(|v| *v *= self.gain);
        }
        true
    }

    /// Stacked bearing error; `None` on coincident agents.
    fn error(&self, x: &[f64]) -> Option<f64> {
        let d = self.d;
        let mut total = 0.0;
        for (k, e) in self.graph.edges().iter().enumerate() {
            let from = &x[d * (e.tail - 1)..d * e.tail];
            let to = &x[d * (e.head - 1)..d * e.head];
            let dist = crate::geometry::distance(from, to);
            if !(dist > crate::geometry::EPS_DIST) {
                return None;
            }
            for a in 0..d {
                let diff = (to[a] - from[a]) / dist - self.targets[d * k + a];
                total += diff * diff;
            }
        }
        Some(total.sqrt())
    }
}

/// Classical fourth-order step `x <- x + h (k1 + 2 k2 + 2 k3 + k4) / 6`.
/// Returns `false` when a stage hits coincident agents.
fn rk4_step(sys: &ClosedLoop, x: &mut [f64], h: f64, scratch: &mut [Vec<f64>; 5]) -> bool {
    let [k1, k2, k3, k4, tmp] = scratch;
    if !sys.eval(x, k1) {
        return false;
    }
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    if !sys.eval(tmp, k2) {
        return false;
    }
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    if !sys.eval(tmp, k3) {
        return false;
    }
    for i in 0..x.len() {
        tmp[i] = x[i] + h * k3[i];
    }
    if !sys.eval(tmp, k4) {
        return false;
    }
    for i in 0..x.len() {
        x[i] += h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    true
}

fn outside(d: usize, x: &[f64], radius: f64) -> bool {
    x.chunks(d)
        .any(|p| !p.iter().all(|v| v.is_finite()) || p.iter().map(|v| v * v).sum::<f64>().sqrt() > radius)
}

/// Integrates the closed loop from `initial`.
///
/// Fails only when the initial configuration is invalid (shape mismatch or
/// coincident agents on an edge); a collision during the run ends it with
/// [`Verdict::Diverged`].
pub fn integrate(
    target: &TargetFormation,
    initial: &Configuration,
    settings: &IntegratorSettings,
) -> Result<TrajectoryRecord> {
    settings.validate()?;
    let graph = target.graph();
    if initial.n() != graph.n() {
        return Err(Error::DimensionMismatch { expected: graph.n(), found: initial.n() });
    }
    if initial.d() != target.d() {
        return Err(Error::DimensionMismatch { expected: target.d(), found: initial.d() });
    }
    let d = initial.d();
    let sys = ClosedLoop { graph, d, targets: target.targets().stacked().as_slice(), gain: settings.gain };
    let mut x = initial.stacked().as_slice().to_vec();
    let mut u = vec![0.0; x.len()];
    if let Err(edge) = stacked_control_into(graph, d, sys.targets, &x, &mut u) {
        return Err(Error::CoincidentAgents { edge: Some(edge) });
    }

    let mut record = TrajectoryRecord {
        times: Vec::new(),
        configs: Vec::new(),
        errors: Vec::new(),
        control_norms: Vec::new(),
        verdict: Verdict::TimedOut,
        seed: None,
    };
    let push = |record: &mut TrajectoryRecord, t: f64, x: &[f64], err: f64| {
        let mut u = vec![0.0; x.len()];
        let norms = if sys.eval(x, &mut u) { agent_norms(d, &u) } else { vec![f64::NAN; x.len() / d] };
        record.times.push(t);
        record.configs.push(Configuration::from_stacked(d, x.to_vec().into()).expect("shape preserved"));
        record.errors.push(err);
        record.control_norms.push(norms);
    };

    let total = settings.total_steps();
    let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; x.len()]);
    let mut last_recorded = None;
    for k in 0..=total {
        let t = k as f64 * settings.step;
        let err = sys.error(&x);
        let verdict = match err {
            None => Some(Verdict::Diverged),
            Some(_) if outside(d, &x, settings.divergence_radius) => Some(Verdict::Diverged),
            Some(e) if e < settings.convergence_tol => Some(Verdict::Converged),
            Some(_) if k == total => Some(Verdict::TimedOut),
            Some(_) => None,
        };
        if verdict.is_some() || k % settings.record_every == 0 {
            push(&mut record, t, &x, err.unwrap_or(f64::NAN));
            last_recorded = Some(k);
        }
        if let Some(v) = verdict {
            record.verdict = v;
            return Ok(record);
        }
        if !rk4_step(&sys, &mut x, settings.step, &mut scratch) {
            // Collision inside a stage: keep the last valid state.
            if last_recorded != Some(k) {
                push(&mut record, t, &x, err.unwrap_or(f64::NAN));
            }
            record.verdict = Verdict::Diverged;
            return Ok(record);
        }
    }
    unreachable!("loop returns at k == total")
}
