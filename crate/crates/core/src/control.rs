//! The bearing-only control law `u_i = -sum_{ij in E} P_{g_ij} g*_ij`.
//!
//! The sum runs over the out-edges of agent `i`, so an agent without
//! out-edges (a leader) stays put. The aggregated form is
//! `u = -H_out^T diag(P_{g_k}) g*`, with `H_out` the out-incidence matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{bearing_function, projection, Configuration, TargetFormation, EPS_DIST};
use crate::graph::{out_incidence, DirectedSensingGraph, Edge};

/// Agreement required between the per-agent and aggregated assemblies.
pub const FORM_AGREEMENT_TOL: f64 = 1e-12;

/// Stacked agent velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector {
    d: usize,
    velocities: DVector<f64>,
}

impl ControlVector {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn stacked(&self) -> &DVector<f64> {
        &self.velocities
    }

    /// Velocity of agent `vertex` (1-based).
    pub fn agent(&self, vertex: usize) -> &[f64] {
        &self.velocities.as_slice()[self.d * (vertex - 1)..self.d * vertex]
    }

    /// `|u_i|` for every agent, in vertex order.
    pub fn norms(&self) -> Vec<f64> {
        agent_norms(self.d, self.velocities.as_slice())
    }
}

pub(crate) fn agent_norms(d: usize, stacked: &[f64]) -> Vec<f64> {
    stacked.chunks(d).map(|u| u.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
}

/// Writes `-P_g g* = g (g . g*) - g*` for the unit bearing from `from` toward
/// `to` into `acc` (accumulating). Returns `false` on coincident points.
#[inline]
fn accumulate_term(from: &[f64], to: &[f64], target: &[f64], acc: &mut [f64]) -> bool {
    let d = from.len();
    let mut diff = [0.0; 3];
    let mut norm_sq = 0.0;
    for a in 0..d {
        diff[a] = to[a] - from[a];
        norm_sq += diff[a] * diff[a];
    }
    let dist = norm_sq.sqrt();
    if !(dist > EPS_DIST) {
        return false;
    }
    let mut dot = 0.0;
    for a in 0..d {
        diff[a] /= dist;
        dot += diff[a] * target[a];
    }
    for a in 0..d {
        acc[a] += diff[a] * dot - target[a];
    }
    true
}

/// Allocation-free evaluation of the stacked control on raw coordinates.
/// `out` is overwritten; the error carries the first coincident edge.
pub(crate) fn stacked_control_into(
    graph: &DirectedSensingGraph,
    d: usize,
    targets: &[f64],
    coords: &[f64],
    out: &mut [f64],
) -> std::result::Result<(), Edge> {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (k, e) in graph.edges().iter().enumerate() {
        let from = &coords[d * (e.tail - 1)..d * e.tail];
        let to = &coords[d * (e.head - 1)..d * e.head];
        let acc = &mut out[d * (e.tail - 1)..d * e.tail];
        if !accumulate_term(from, to, &targets[d * k..d * (k + 1)], acc) {
            return Err(*e);
        }
    }
    Ok(())
}

fn check_shapes(config: &Configuration, target: &TargetFormation) -> Result<()> {
    if config.n() != target.graph().n() {
        return Err(Error::DimensionMismatch { expected: target.graph().n(), found: config.n() });
    }
    if config.d() != target.d() {
        return Err(Error::DimensionMismatch { expected: target.d(), found: config.d() });
    }
    Ok(())
}

/// Control input of agent `vertex` (1-based).
pub fn agent_control(
    vertex: usize,
    config: &Configuration,
    target: &TargetFormation,
) -> Result<DVector<f64>> {
    check_shapes(config, target)?;
    let d = config.d();
    let mut u = DVector::zeros(d);
    for (k, head) in target.graph().out_edges(vertex) {
        if !accumulate_term(
            config.coords(vertex),
            config.coords(head),
            target.targets().vector(k),
            u.as_mut_slice(),
        ) {
            return Err(Error::CoincidentAgents { edge: Some(Edge::new(vertex, head)) });
        }
    }
    Ok(u)
}

/// Control inputs of all agents.
///
/// Debug builds also assemble the aggregated matrix form and check that the
/// two agree within [`FORM_AGREEMENT_TOL`].
pub fn stacked_control(config: &Configuration, target: &TargetFormation) -> Result<ControlVector> {
    check_shapes(config, target)?;
    let d = config.d();
    let mut velocities = DVector::zeros(config.stacked().len());
    stacked_control_into(
        target.graph(),
        d,
        target.targets().stacked().as_slice(),
        config.stacked().as_slice(),
        velocities.as_mut_slice(),
    )
    .map_err(|e| Error::CoincidentAgents { edge: Some(e) })?;
    debug_assert!({
        let matrix_form = stacked_control_matrix_form(config, target)?;
        (matrix_form.stacked() - &velocities).amax() <= FORM_AGREEMENT_TOL
    });
    Ok(ControlVector { d, velocities })
}

/// The aggregated form `-H_out^T diag(P_{g_k}) g*`, built from explicit
/// matrices.
pub fn stacked_control_matrix_form(
    config: &Configuration,
    target: &TargetFormation,
) -> Result<ControlVector> {
    check_shapes(config, target)?;
    let d = config.d();
    let graph = target.graph();
    let measured = bearing_function(graph, config)?;
    let m = graph.edge_count();
    let mut block_diag = DMatrix::zeros(d * m, d * m);
    for k in 0..m {
        block_diag.view_mut((d * k, d * k), (d, d)).copy_from(&projection(measured.vector(k))?);
    }
    let h = out_incidence(graph, d);
    let velocities = -(h.transpose() * block_diag * target.targets().stacked());
    Ok(ControlVector { d, velocities })
}
