//! Equilibria of the one-to-many and ordered-LFF closed loops, the kernel
//! structure of the one-to-many equilibrium condition, and stability.
//!
//! For a follower sensing fixed leaders `p_j` with targets `g*_j`, the
//! equilibrium is
//!
//! ```text
//! p_n = (sum_j P_{g*_j})^{-1} (sum_j P_{g*_j} p_j)
//! ```
//!
//! which exists whenever two of the targets are not parallel. It is stable
//! when the leaders realize `+g*` from it and unstable when they realize
//! `-g*`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{bearing, projection, Configuration, TargetFormation, EPS_DIST, UNIT_TOL};
use crate::graph::{classify, GraphClass};
use crate::linalg::{min_eigenvalue, null_space, numerical_rank, orthonormal_complement};
use crate::simulate::TrajectoryRecord;

/// Below this, the smallest eigenvalue of a projection sum counts as zero.
pub const SINGULAR_TOL: f64 = 1e-10;
/// Tolerance for matching equilibrium bearings against `+g*` or `-g*`.
pub const STABILITY_MATCH_TOL: f64 = 1e-6;
/// Residual norm below which a candidate bearing set counts as realized.
pub const REALIZABLE_TOL: f64 = 1e-6;

fn to_vector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn same_dimension<P: AsRef<[f64]>>(d: usize, items: &[P]) -> Result<()> {
    for p in items {
        if p.as_ref().len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.as_ref().len() });
        }
    }
    Ok(())
}

/// `sum_j P_{x_j}` over the given directions.
pub fn projection_sum<G: AsRef<[f64]>>(directions: &[G]) -> Result<DMatrix<f64>> {
    let d = directions.first().map(|g| g.as_ref().len()).unwrap_or(0);
    same_dimension(d, directions)?;
    let mut sum = DMatrix::zeros(d, d);
    for g in directions {
        sum += projection(g.as_ref())?;
    }
    Ok(sum)
}

/// Closed-form equilibrium of a follower sensing fixed `leaders` with target
/// bearings `targets` (one per leader, same order).
pub fn one_to_many_equilibrium<P: AsRef<[f64]>, G: AsRef<[f64]>>(
    leaders: &[P],
    targets: &[G],
) -> Result<DVector<f64>> {
    if leaders.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: leaders.len(), found: targets.len() });
    }
    if leaders.len() < 2 {
        return Err(Error::Validation("at least two leaders are required".into()));
    }
    let d = leaders[0].as_ref().len();
    same_dimension(d, leaders)?;
    same_dimension(d, targets)?;
    let mut lhs = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for (p, g) in leaders.iter().zip(targets) {
        let proj = projection(g.as_ref())?;
        rhs += &proj * to_vector(p.as_ref());
        lhs += proj;
    }
    if min_eigenvalue(&lhs) <= SINGULAR_TOL {
        return Err(Error::SingularProjectionSum);
    }
    lhs.cholesky().map(|c| c.solve(&rhs)).ok_or(Error::SingularProjectionSum)
}

/// Target configuration of an LFF or ordered-LFF formation, built agent by
/// agent from the leader position and the leader/first-follower distance.
pub fn cascade_target_configuration(
    target: &TargetFormation,
    leader: &[f64],
    first_follower_distance: f64,
) -> Result<Configuration> {
    let graph = target.graph();
    let class = classify(graph).class;
    if !matches!(class, GraphClass::Lff | GraphClass::OrderedLff) {
        return Err(Error::NotOrderedLff);
    }
    let d = target.d();
    if leader.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: leader.len() });
    }
    if !(first_follower_distance > 0.0) {
        return Err(Error::Validation("leader/first-follower distance must be positive".into()));
    }
    let mut points: Vec<Vec<f64>> = vec![leader.to_vec()];
    let (k21, _) = graph.out_edges(2).next().expect("first follower has one out-edge");
    let g21 = target.targets().vector(k21);
    points.push(leader.iter().zip(g21).map(|(p, g)| p - first_follower_distance * g).collect());
    for i in 3..=graph.n() {
        let mut nbr_positions = Vec::new();
        let mut nbr_targets = Vec::new();
        for (k, head) in graph.out_edges(i) {
            nbr_positions.push(points[head - 1].clone());
            nbr_targets.push(target.targets().vector(k).to_vec());
        }
        let p = one_to_many_equilibrium(&nbr_positions, &nbr_targets)?;
        points.push(p.as_slice().to_vec());
    }
    Configuration::new(d, &points)
}

/// Kernel structure of the one-to-many equilibrium condition at measured
/// bearings `g_1 .. g_{n-1}`.
///
/// `p_tilde = [P_{g_1} ... P_{g_{n-1}}]` has rank `d`; its kernel splits as
/// `range(G) (+) range(G_perp N)` with `G = diag(g_i)`,
/// `G_perp = diag(g_i^perp)` and `range(N) = ker(p_tilde G_perp)`.
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    pub bearings: Vec<DVector<f64>>,
    pub p_tilde: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub g_perp: DMatrix<f64>,
    pub n_basis: DMatrix<f64>,
    /// `max |p_tilde G|`
    pub residual_g: f64,
    /// `max |p_tilde G_perp N|`
    pub residual_n: f64,
}

/// Dimensions reported by the `nullspace` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NullSpaceDims {
    pub d: usize,
    pub n: usize,
    pub rank_p_tilde: usize,
    pub kernel_dim: usize,
    pub m: usize,
}

impl NullSpaceBasis {
    pub fn d(&self) -> usize {
        self.p_tilde.nrows()
    }

    /// Number of leaders, `n - 1`.
    pub fn leaders(&self) -> usize {
        self.bearings.len()
    }

    /// Number of columns of `N`.
    pub fn m(&self) -> usize {
        self.n_basis.ncols()
    }

    /// `[G | G_perp N]`, a basis of `ker(p_tilde)`.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        let gn = &self.g_perp * &self.n_basis;
        let mut k = DMatrix::zeros(self.g.nrows(), self.g.ncols() + gn.ncols());
        k.columns_mut(0, self.g.ncols()).copy_from(&self.g);
        k.columns_mut(self.g.ncols(), gn.ncols()).copy_from(&gn);
        k
    }

    pub fn dims(&self) -> NullSpaceDims {
        NullSpaceDims {
            d: self.d(),
            n: self.leaders() + 1,
            rank_p_tilde: numerical_rank(&self.p_tilde),
            kernel_dim: numerical_rank(&self.kernel_basis()),
            m: self.m(),
        }
    }

    /// Block `n_ij` of `N` for leader `i` (0-based) and column `j`.
    fn n_block(&self, i: usize, j: usize) -> DVector<f64> {
        let dm1 = self.d() - 1;
        self.n_basis.view((dm1 * i, j), (dm1, 1)).column(0).into_owned()
    }
}

/// Builds `p_tilde`, `G`, `G_perp` and `N` for measured unit bearings.
pub fn null_space_basis<G: AsRef<[f64]>>(bearings: &[G]) -> Result<NullSpaceBasis> {
    let count = bearings.len();
    if count == 0 {
        return Err(Error::Validation("no bearings given".into()));
    }
    let d = bearings[0].as_ref().len();
    same_dimension(d, bearings)?;
    let bearings: Vec<DVector<f64>> = bearings.iter().map(|g| to_vector(g.as_ref())).collect();
    for g in &bearings {
        if (g.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::Validation(format!("bearing {g} is not a unit vector")));
        }
    }
    let mut p_tilde = DMatrix::zeros(d, d * count);
    let mut g = DMatrix::zeros(d * count, count);
    let mut g_perp = DMatrix::zeros(d * count, (d - 1) * count);
    for (i, gi) in bearings.iter().enumerate() {
        p_tilde.view_mut((0, d * i), (d, d)).copy_from(&projection(gi.as_slice())?);
        g.view_mut((d * i, i), (d, 1)).copy_from(gi);
        g_perp.view_mut((d * i, (d - 1) * i), (d, d - 1)).copy_from(&orthonormal_complement(gi));
    }
    let rank = numerical_rank(&p_tilde);
    if rank < d {
        return Err(Error::DegenerateBearings { rank, expected: d });
    }
    let pg_perp = &p_tilde * &g_perp;
    let n_basis = null_space(&pg_perp);
    let residual_g = (&p_tilde * &g).amax();
    let residual_n = if n_basis.ncols() == 0 { 0.0 } else { (&pg_perp * &n_basis).amax() };
    Ok(NullSpaceBasis { bearings, p_tilde, g, g_perp, n_basis, residual_g, residual_n })
}

/// A member of the equilibrium set `y = G a + G_perp N b`, split per leader.
#[derive(Debug, Clone, PartialEq)]
pub struct YCandidate {
    pub vectors: Vec<DVector<f64>>,
    /// Whether `a_i^2 + |sum_j b_j n_ij|^2 = 1` for each component.
    pub unit: Vec<bool>,
}

impl YCandidate {
    pub fn all_unit(&self) -> bool {
        self.unit.iter().all(|u| *u)
    }
}

/// Evaluates `y_i = a_i g_i + g_i^perp (sum_j b_j n_ij)`.
pub fn y_candidate(basis: &NullSpaceBasis, a: &[f64], b: &[f64]) -> Result<YCandidate> {
    if a.len() != basis.leaders() {
        return Err(Error::DimensionMismatch { expected: basis.leaders(), found: a.len() });
    }
    if b.len() != basis.m() {
        return Err(Error::DimensionMismatch { expected: basis.m(), found: b.len() });
    }
    let d = basis.d();
    let mut vectors = Vec::with_capacity(a.len());
    let mut unit = Vec::with_capacity(a.len());
    for (i, ai) in a.iter().enumerate() {
        let mut coeff = DVector::zeros(d - 1);
        for (j, bj) in b.iter().enumerate() {
            coeff += basis.n_block(i, j) * *bj;
        }
        let perp = basis.g_perp.view((d * i, (d - 1) * i), (d, d - 1));
        let y = &basis.bearings[i] * *ai + perp * &coeff;
        unit.push((ai * ai + coeff.norm_squared() - 1.0).abs() <= UNIT_TOL);
        vectors.push(y);
    }
    Ok(YCandidate { vectors, unit })
}

fn bearing_residual(p: &DVector<f64>, leaders: &[DVector<f64>], y: &[DVector<f64>]) -> Option<DVector<f64>> {
    let d = p.len();
    let mut r = DVector::zeros(d * leaders.len());
    for (j, (lj, yj)) in leaders.iter().zip(y).enumerate() {
        let g = bearing(p.as_slice(), lj.as_slice()).ok()?;
        r.rows_mut(d * j, d).copy_from(&(g - yj));
    }
    Some(r)
}

/// Searches for a follower position that realizes `y` (bearing from the
/// follower toward each leader) by damped Gauss-Newton on the stacked
/// bearing residual, started at the leaders' centroid.
///
/// Returns the position when the residual norm falls below
/// [`REALIZABLE_TOL`], `None` otherwise.
pub fn realizability_check<P: AsRef<[f64]>, G: AsRef<[f64]>>(leaders: &[P], y: &[G]) -> Option<DVector<f64>> {
    const MAX_ITER: usize = 100;
    if leaders.is_empty() || leaders.len() != y.len() {
        return None;
    }
    let leaders: Vec<DVector<f64>> = leaders.iter().map(|p| to_vector(p.as_ref())).collect();
    let y: Vec<DVector<f64>> = y.iter().map(|g| to_vector(g.as_ref())).collect();
    let d = leaders[0].len();
    let mut p = leaders.iter().fold(DVector::zeros(d), |acc, l| acc + l) / leaders.len() as f64;
    // Nudge off a leader so the first residual is defined.
    if leaders.iter().any(|l| (l - &p).norm() <= EPS_DIST) {
        p[0] += 1e-3;
    }
    let mut r = bearing_residual(&p, &leaders, &y)?;
    let mut damping = 1e-3;
    for _ in 0..MAX_ITER {
        if r.norm() < REALIZABLE_TOL {
            break;
        }
        // d/dp (p_j - p)/|p_j - p| = -P_g / dist
        let mut jac = DMatrix::zeros(d * leaders.len(), d);
        for (j, lj) in leaders.iter().enumerate() {
            let diff = lj - &p;
            let dist = diff.norm();
            let block = -projection(diff.as_slice()).ok()? / dist;
            jac.view_mut((d * j, 0), (d, d)).copy_from(&block);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..20 {
            let lhs = &jtj + DMatrix::identity(d, d) * damping;
            let Some(step) = lhs.lu().solve(&(-&jtr)) else {
                damping *= 10.0;
                continue;
            };
            let candidate = &p + step;
            if let Some(rc) = bearing_residual(&candidate, &leaders, &y) {
                if rc.norm() < r.norm() {
                    p = candidate;
                    r = rc;
                    damping = (damping * 0.1).max(1e-12);
                    improved = true;
                    break;
                }
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (r.norm() < REALIZABLE_TOL).then_some(p)
}

/// Stability of an equilibrium of the one-to-many loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
    LeaderFixed,
}

/// Classifies the one-to-many equilibrium: stable when the leaders realize
/// the targets from it, unstable when they realize the negated targets.
pub fn classify_stability<P: AsRef<[f64]>, G: AsRef<[f64]>>(
    leaders: &[P],
    targets: &[G],
) -> Result<Stability> {
    let eq = one_to_many_equilibrium(leaders, targets)?;
    let mut plus = 0.0f64;
    let mut minus = 0.0f64;
    for (p, g) in leaders.iter().zip(targets) {
        let measured = bearing(eq.as_slice(), p.as_ref())?;
        let g = to_vector(g.as_ref()).normalize();
        plus = plus.max((&measured - &g).amax());
        minus = minus.max((&measured + &g).amax());
    }
    if plus <= STABILITY_MATCH_TOL {
        Ok(Stability::Stable)
    } else if minus <= STABILITY_MATCH_TOL {
        Ok(Stability::Unstable)
    } else {
        Err(Error::InconsistentConfiguration)
    }
}

/// `M = sum_j P_{g_j} / d_j` for a follower at `follower` and fixed
/// neighbors.
pub fn lyapunov_matrix<P: AsRef<[f64]>>(follower: &[f64], neighbors: &[P]) -> Result<DMatrix<f64>> {
    let d = follower.len();
    same_dimension(d, neighbors)?;
    let mut m = DMatrix::zeros(d, d);
    for q in neighbors {
        let diff: Vec<f64> = q.as_ref().iter().zip(follower).map(|(a, b)| a - b).collect();
        let dist = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dist <= EPS_DIST {
            return Err(Error::CoincidentAgents { edge: None });
        }
        m += projection(&diff)? / dist;
    }
    Ok(m)
}

/// `lambda_min` of [`lyapunov_matrix`].
pub fn lyapunov_exponent<P: AsRef<[f64]>>(follower: &[f64], neighbors: &[P]) -> Result<f64> {
    Ok(min_eigenvalue(&lyapunov_matrix(follower, neighbors)?))
}

/// Minimum over the recorded samples of `lambda_min(M(t))` for `follower`
/// and its sensed `neighbors` (1-based labels).
pub fn lyapunov_rate(trajectory: &TrajectoryRecord, follower: usize, neighbors: &[usize]) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut best = f64::INFINITY;
    for config in &trajectory.configs {
        let nbrs: Vec<&[f64]> = neighbors.iter().map(|j| config.coords(*j)).collect();
        best = best.min(lyapunov_exponent(config.coords(follower), &nbrs)?);
    }
    Ok(best)
}

/// Equilibrium positions with per-agent stability tags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub positions: Configuration,
    pub stability: Vec<Stability>,
    /// Smallest `lambda_min(M_i)` over followers at the equilibrium.
    pub rate: Option<f64>,
}

/// Equilibrium of the closed loop that starts from `initial`: the leaders'
/// positions are taken from `initial`, as is the leader/first-follower
/// distance for (ordered) LFF graphs.
pub fn equilibrium_report(target: &TargetFormation, initial: &Configuration) -> Result<EquilibriumReport> {
    let graph = target.graph();
    let n = graph.n();
    match classify(graph).class {
        GraphClass::OneToMany => {
            let leaders: Vec<&[f64]> = (1..n).map(|j| initial.coords(j)).collect();
            let targets: Vec<&[f64]> = (0..n - 1).map(|k| target.targets().vector(k)).collect();
            // Edge order may differ from leader order; pair by head label.
            let mut by_head = vec![Vec::new(); n - 1];
            for (k, e) in graph.edges().iter().enumerate() {
                by_head[e.head - 1] = targets[k].to_vec();
            }
            let eq = one_to_many_equilibrium(&leaders, &by_head)?;
            let stability = classify_stability(&leaders, &by_head)?;
            let mut positions = initial.clone();
            positions.set_position(n, eq.as_slice());
            let mut tags = vec![Stability::LeaderFixed; n - 1];
            tags.push(stability);
            let rate = lyapunov_exponent(eq.as_slice(), &leaders)?;
            Ok(EquilibriumReport { positions, stability: tags, rate: Some(rate) })
        }
        GraphClass::Lff | GraphClass::OrderedLff => {
            let leader = initial.coords(1);
            let d21 = crate::geometry::distance(leader, initial.coords(2));
            let positions = cascade_target_configuration(target, leader, d21)?;
            let mut tags = vec![Stability::LeaderFixed];
            tags.extend(std::iter::repeat_n(Stability::Stable, n - 1));
            let mut rate: Option<f64> = None;
            for i in 3..=n {
                let nbrs: Vec<&[f64]> =
                    graph.out_neighbors(i).into_iter().map(|j| positions.coords(j)).collect();
                let lam = lyapunov_exponent(positions.coords(i), &nbrs)?;
                rate = Some(rate.map_or(lam, |r| r.min(lam)));
            }
            Ok(EquilibriumReport { positions, stability: tags, rate })
        }
        _ => Err(Error::NotOrderedLff),
    }
}
