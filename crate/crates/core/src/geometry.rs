//! Configurations, bearings, projection matrices and the bearing rigidity
//! matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{signed_incidence, DirectedSensingGraph, Edge};

/// Distances at or below this are treated as coincident points.
pub const EPS_DIST: f64 = 1e-9;
/// Threshold on the normalized triangle area (sine of the angle at the
/// sensing agent) below which three points count as collinear.
pub const EPS_COLLINEAR: f64 = 1e-9;
/// Allowed deviation from unit norm for bearing vectors.
pub const UNIT_TOL: f64 = 1e-9;

fn check_dimension(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::Validation(format!("dimension must be 2 or 3, got {d}")))
    }
}

#[derive(Serialize, Deserialize)]
struct PointsRepr {
    d: usize,
    positions: Vec<Vec<f64>>,
}

fn stack(d: usize, points: &[Vec<f64>]) -> Result<DVector<f64>> {
    let mut flat = Vec::with_capacity(d * points.len());
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.len() });
        }
        flat.extend_from_slice(p);
    }
    Ok(DVector::from_vec(flat))
}

fn unstack(d: usize, flat: &DVector<f64>) -> Vec<Vec<f64>> {
    flat.as_slice().chunks(d).map(<[f64]>::to_vec).collect()
}

/// Stacked agent positions `p = [p_1; ...; p_n]` in dimension 2 or 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointsRepr", into = "PointsRepr")]
pub struct Configuration {
    d: usize,
    coords: DVector<f64>,
}

impl TryFrom<PointsRepr> for Configuration {
    type Error = Error;
    fn try_from(r: PointsRepr) -> Result<Self> {
        Configuration::new(r.d, &r.positions)
    }
}

impl From<Configuration> for PointsRepr {
    fn from(c: Configuration) -> Self {
        PointsRepr { d: c.d, positions: c.positions() }
    }
}

impl Configuration {
    pub fn new(d: usize, positions: &[Vec<f64>]) -> Result<Self> {
        check_dimension(d)?;
        if positions.is_empty() {
            return Err(Error::Validation("configuration needs at least one agent".into()));
        }
        Ok(Configuration { d, coords: stack(d, positions)? })
    }

    /// Builds a configuration from the stacked `dn` vector.
    pub fn from_stacked(d: usize, coords: DVector<f64>) -> Result<Self> {
        check_dimension(d)?;
        if coords.is_empty() || !coords.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, found: coords.len() % d });
        }
        Ok(Configuration { d, coords })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn stacked(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_stacked(self) -> DVector<f64> {
        self.coords
    }

    /// Coordinates of agent `vertex` (1-based).
    pub fn coords(&self, vertex: usize) -> &[f64] {
        let start = self.d * (vertex - 1);
        &self.coords.as_slice()[start..start + self.d]
    }

    /// Position of agent `vertex` (1-based) as a vector.
    pub fn position(&self, vertex: usize) -> DVector<f64> {
        DVector::from_column_slice(self.coords(vertex))
    }

    pub fn set_position(&mut self, vertex: usize, p: &[f64]) {
        let start = self.d * (vertex - 1);
        self.coords.as_mut_slice()[start..start + self.d].copy_from_slice(p);
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        unstack(self.d, &self.coords)
    }

    /// `s * p + 1_n (x) c`.
    pub fn scaled_translated(&self, s: f64, c: &[f64]) -> Configuration {
        let mut out = self.coords.clone() * s;
        for chunk in out.as_mut_slice().chunks_mut(self.d) {
            chunk.iter_mut().zip(c).for_each(|(x, ci)| *x += ci);
        }
        Configuration { d: self.d, coords: out }
    }

    pub fn centroid(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.d);
        for v in 1..=self.n() {
            c += self.position(v);
        }
        c / self.n() as f64
    }

    /// Largest pairwise distance between agents.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 1..=self.n() {
            for j in i + 1..=self.n() {
                best = best.max(distance(self.coords(i), self.coords(j)));
            }
        }
        best
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt()
}

/// Unit bearing vectors stacked in edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointsRepr", into = "PointsRepr")]
pub struct BearingSet {
    d: usize,
    coords: DVector<f64>,
}

impl TryFrom<PointsRepr> for BearingSet {
    type Error = Error;
    fn try_from(r: PointsRepr) -> Result<Self> {
        BearingSet::new(r.d, &r.positions)
    }
}

impl From<BearingSet> for PointsRepr {
    fn from(b: BearingSet) -> Self {
        PointsRepr { d: b.d, positions: unstack(b.d, &b.coords) }
    }
}

impl BearingSet {
    /// Builds a bearing set, rejecting vectors whose norm is not 1 within
    /// [`UNIT_TOL`].
    pub fn new(d: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        check_dimension(d)?;
        for (k, v) in vectors.iter().enumerate() {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if v.len() == d && (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::Validation(format!("target norm: bearing {} has norm {norm}", k + 1)));
            }
        }
        Ok(BearingSet { d, coords: stack(d, vectors)? })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn stacked(&self) -> &DVector<f64> {
        &self.coords
    }

    /// Bearing of edge `k` (0-based position in the edge list).
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.coords.as_slice()[self.d * k..self.d * (k + 1)]
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        unstack(self.d, &self.coords)
    }

    pub fn negated(&self) -> BearingSet {
        BearingSet { d: self.d, coords: -&self.coords }
    }
}

/// Unit vector pointing from `p_i` toward `p_j`.
pub fn bearing(p_i: &[f64], p_j: &[f64]) -> Result<DVector<f64>> {
    let dist = distance(p_i, p_j);
    if dist <= EPS_DIST {
        return Err(Error::CoincidentAgents { edge: None });
    }
    Ok(DVector::from_iterator(p_i.len(), p_i.iter().zip(p_j).map(|(a, b)| (b - a) / dist)))
}

/// Stacked bearings `g_k = (p_head - p_tail) / |p_head - p_tail|` over the
/// edges of `graph`.
pub fn bearing_function(graph: &DirectedSensingGraph, config: &Configuration) -> Result<BearingSet> {
    if config.n() != graph.n() {
        return Err(Error::DimensionMismatch { expected: graph.n(), found: config.n() });
    }
    let d = config.d();
    let mut coords = DVector::zeros(d * graph.edge_count());
    for (k, e) in graph.edges().iter().enumerate() {
        let g = bearing(config.coords(e.tail), config.coords(e.head))
            .map_err(|_| Error::CoincidentAgents { edge: Some(*e) })?;
        coords.rows_mut(d * k, d).copy_from(&g);
    }
    Ok(BearingSet { d, coords })
}

/// Orthogonal projector `I - x x^T / |x|^2` onto the complement of `x`.
pub fn projection(x: &[f64]) -> Result<DMatrix<f64>> {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    if norm_sq.sqrt() <= EPS_DIST {
        return Err(Error::ZeroVector);
    }
    let d = x.len();
    Ok(DMatrix::from_fn(d, d, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        id - x[r] * x[c] / norm_sq
    }))
}

/// Bearing rigidity matrix `diag(P_{g_k} / d_k) H`, with `H` the signed
/// incidence matrix.
pub fn bearing_rigidity_matrix(graph: &DirectedSensingGraph, config: &Configuration) -> Result<DMatrix<f64>> {
    let d = config.d();
    let bearings = bearing_function(graph, config)?;
    let h = signed_incidence(graph, d);
    let mut r = DMatrix::zeros(h.nrows(), h.ncols());
    for (k, e) in graph.edges().iter().enumerate() {
        let dist = distance(config.coords(e.tail), config.coords(e.head));
        let block = projection(bearings.vector(k))? / dist;
        let rows = block * h.rows(d * k, d);
        r.rows_mut(d * k, d).copy_from(&rows);
    }
    Ok(r)
}

/// Outcome of [`check_noncollinearity`].
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CollinearityReport {
    /// Violating triples `(i, j, k)`: sensing agent `i` and neighbors `j < k`.
    pub violations: Vec<(usize, usize, usize)>,
}

impl CollinearityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sine_between(a: &[f64], b: &[f64]) -> f64 {
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    if aa.sqrt() <= EPS_DIST || bb.sqrt() <= EPS_DIST {
        return 0.0;
    }
    // |a ^ b| / (|a| |b|)
    ((aa * bb - ab * ab).max(0.0)).sqrt() / (aa.sqrt() * bb.sqrt())
}

/// For every agent with two or more out-neighbors, checks that it is not
/// collinear with any pair of them.
pub fn check_noncollinearity(graph: &DirectedSensingGraph, config: &Configuration) -> CollinearityReport {
    let mut report = CollinearityReport::default();
    for i in 1..=graph.n() {
        let nbrs = graph.out_neighbors(i);
        for (a, &j) in nbrs.iter().enumerate() {
            for &k in &nbrs[a + 1..] {
                let pi = config.coords(i);
                let u: Vec<f64> = config.coords(j).iter().zip(pi).map(|(x, y)| x - y).collect();
                let v: Vec<f64> = config.coords(k).iter().zip(pi).map(|(x, y)| x - y).collect();
                if sine_between(&u, &v) <= EPS_COLLINEAR {
                    report.violations.push((i, j.min(k), j.max(k)));
                }
            }
        }
    }
    report
}

/// Point reflection `q_i = 2c - p_i` of every agent.
pub fn symmetric_configuration(config: &Configuration, c: &[f64]) -> Configuration {
    config.scaled_translated(-1.0, &c.iter().map(|x| 2.0 * x).collect::<Vec<_>>())
}

/// Euclidean norm of the stacked difference `|g - g*|`.
pub fn bearing_error(measured: &BearingSet, target: &BearingSet) -> Result<f64> {
    Ok(per_edge_bearing_errors(measured, target)?.iter().map(|e| e * e).sum::<f64>().sqrt())
}

/// Per-edge errors `|g_k - g*_k|`.
pub fn per_edge_bearing_errors(measured: &BearingSet, target: &BearingSet) -> Result<Vec<f64>> {
    if measured.d() != target.d() {
        return Err(Error::DimensionMismatch { expected: target.d(), found: measured.d() });
    }
    if measured.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), found: measured.len() });
    }
    Ok((0..target.len()).map(|k| distance(measured.vector(k), target.vector(k))).collect())
}

/// A target bearing formation: a graph with a desired unit bearing per edge
/// and, optionally, a configuration that realizes them.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFormation {
    graph: DirectedSensingGraph,
    targets: BearingSet,
    witness: Option<Configuration>,
}

/// Tolerance for a witness to count as realizing the targets.
pub const WITNESS_TOL: f64 = 1e-6;

impl TargetFormation {
    pub fn new(graph: DirectedSensingGraph, targets: BearingSet) -> Result<Self> {
        if targets.len() != graph.edge_count() {
            return Err(Error::Validation(format!(
                "{} target bearings for {} edges",
                targets.len(),
                graph.edge_count()
            )));
        }
        Ok(TargetFormation { graph, targets, witness: None })
    }

    /// Targets derived from a configuration that realizes them.
    pub fn from_witness(graph: DirectedSensingGraph, witness: Configuration) -> Result<Self> {
        let targets = bearing_function(&graph, &witness)?;
        Ok(TargetFormation { graph, targets, witness: Some(witness) })
    }

    /// Attaches a witness after checking that it realizes the targets.
    pub fn with_witness(mut self, witness: Configuration) -> Result<Self> {
        let measured = bearing_function(&self.graph, &witness)?;
        let worst = (measured.stacked() - self.targets.stacked()).amax();
        if worst > WITNESS_TOL {
            return Err(Error::Validation(format!("witness misses the targets by {worst:e}")));
        }
        self.witness = Some(witness);
        Ok(self)
    }

    pub fn graph(&self) -> &DirectedSensingGraph {
        &self.graph
    }

    pub fn targets(&self) -> &BearingSet {
        &self.targets
    }

    pub fn witness(&self) -> Option<&Configuration> {
        self.witness.as_ref()
    }

    pub fn d(&self) -> usize {
        self.targets.d()
    }

    /// Target bearing of `edge`, if the edge is in the graph.
    pub fn target_of(&self, edge: Edge) -> Option<&[f64]> {
        self.graph.edge_index(edge).map(|k| self.targets.vector(k))
    }

    /// The same graph with every target negated (witness dropped).
    pub fn negated(&self) -> TargetFormation {
        TargetFormation { graph: self.graph.clone(), targets: self.targets.negated(), witness: None }
    }
}
