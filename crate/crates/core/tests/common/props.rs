//! Property checks. Each check takes a generated case and returns a
//! `TestCaseError` on failure, so both `proptest!` blocks and the acceptance
//! gate's `TestRunner` can drive it.

use bearing_formation::control::{agent_control, stacked_control, stacked_control_matrix_form};
use bearing_formation::equilibrium::{
    cascade_target_configuration, lyapunov_exponent, lyapunov_rate, null_space_basis,
    one_to_many_equilibrium, projection_sum,
};
use bearing_formation::geometry::{
    bearing, bearing_function, projection, symmetric_configuration, BearingSet,
};
use bearing_formation::linalg::min_eigenvalue;
use bearing_formation::{
    integrate, Configuration, DirectedSensingGraph, Error, IntegratorSettings, TargetFormation, Verdict,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError};

use super::oracle::{mat_vec, naive_agent_control, naive_projection, rref_kernel, to_rows};
use super::{complete_forward_graph, config, lff_graph, max_abs_diff, min_separation, norm, sub, unit};

/// Runner configuration with a fixed seed, so every run draws the same cases.
pub fn config_with_cases(cases: u32) -> Config {
    Config { cases, failure_persistence: None, rng_seed: RngSeed::Fixed(0x5eed), ..Config::default() }
}

pub fn dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3usize)]
}

fn coords(len: usize, half: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-half..half, len)
}

fn unit_vectors(d: usize, count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        coords(d, 1.0).prop_filter("nonzero", |v| norm(v) > 1e-2).prop_map(|v| unit(&v)),
        count,
    )
}

fn sine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let c = dot / (norm(a) * norm(b));
    (1.0 - c * c).max(0.0).sqrt()
}

/// Largest sine between any two of the directions.
pub fn max_pairwise_sine(dirs: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            best = best.max(sine(&dirs[i], &dirs[j]));
        }
    }
    best
}

// ---------------------------------------------------------------- projection

#[derive(Debug, Clone)]
pub struct ProjectionCase {
    pub x: Vec<f64>,
    pub scale: f64,
}

pub fn projection_case() -> impl Strategy<Value = ProjectionCase> {
    (dim(), prop_oneof![1e-3..1e3f64, -1e3..-1e-3f64]).prop_flat_map(|(d, scale)| {
        coords(d, 10.0)
            .prop_filter("nonzero", |x| norm(x) > 1e-3)
            .prop_map(move |x| ProjectionCase { x, scale })
    })
}

pub fn check_projection(case: &ProjectionCase) -> Result<(), TestCaseError> {
    let p = projection(&case.x).unwrap();
    let x = nalgebra::DVector::from_column_slice(&case.x);
    prop_assert!((&p * &p - &p).amax() <= 1e-12, "idempotence");
    prop_assert!((&p - p.transpose()).amax() <= 1e-12, "symmetry");
    prop_assert!((&p * &x).amax() <= 1e-12 * norm(&case.x).max(1.0), "annihilation");
    let scaled: Vec<f64> = case.x.iter().map(|v| v * case.scale).collect();
    let ps = projection(&scaled).unwrap();
    prop_assert!((&ps - &p).amax() <= 1e-12, "scale invariance");
    let naive = naive_projection(&case.x);
    for (i, row) in naive.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            prop_assert!((p[(i, j)] - v).abs() <= 1e-12, "entrywise formula");
        }
    }
    Ok(())
}

// ------------------------------------------------------------ invertibility

#[derive(Debug, Clone)]
pub struct InvertibilityCase {
    pub leaders: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub parallel: bool,
}

pub fn invertibility_case() -> impl Strategy<Value = InvertibilityCase> {
    (dim(), 2usize..7, any::<bool>()).prop_flat_map(|(d, k, parallel)| {
        (
            prop::collection::vec(coords(d, 5.0), k),
            unit_vectors(d, k),
            prop::collection::vec(any::<bool>(), k),
        )
            .prop_map(move |(leaders, mut targets, signs)| {
                if parallel {
                    let g0 = targets[0].clone();
                    for (t, s) in targets.iter_mut().zip(signs) {
                        *t = g0.iter().map(|v| if s { *v } else { -v }).collect();
                    }
                }
                InvertibilityCase { leaders, targets, parallel }
            })
    })
}

/// The projection sum is singular exactly when all targets are parallel.
pub fn check_invertibility(case: &InvertibilityCase) -> Result<(), TestCaseError> {
    let lam = min_eigenvalue(&projection_sum(&case.targets).unwrap());
    let eq = one_to_many_equilibrium(&case.leaders, &case.targets);
    if case.parallel {
        prop_assert!(lam.abs() <= 1e-10, "parallel targets gave lambda_min {lam}");
        prop_assert_eq!(eq.unwrap_err(), Error::SingularProjectionSum);
    } else {
        let s = max_pairwise_sine(&case.targets);
        prop_assume!(s > 1e-2);
        prop_assert!(lam > 1e-10, "non-parallel targets gave lambda_min {lam}");
        let p = eq.unwrap();
        // sum_j P_j (p - p_j) = 0
        let mut residual = vec![0.0; p.len()];
        for (l, t) in case.leaders.iter().zip(&case.targets) {
            let r = mat_vec(&naive_projection(t), &sub(p.as_slice(), l));
            residual.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        }
        prop_assert!(norm(&residual) <= 1e-9 * (1.0 + norm(p.as_slice())), "{residual:?}");
    }
    Ok(())
}

// ------------------------------------------------------ bearing invariance

#[derive(Debug, Clone)]
pub struct SimilarityCase {
    pub d: usize,
    pub flat: Vec<f64>,
    pub scale: f64,
    pub shift: Vec<f64>,
}

pub fn similarity_case() -> impl Strategy<Value = SimilarityCase> {
    (dim(), 3usize..7, 1e-2..1e2f64).prop_flat_map(|(d, n, scale)| {
        (coords(d * n, 5.0), coords(d, 10.0)).prop_map(move |(flat, shift)| SimilarityCase {
            d,
            flat,
            scale,
            shift,
        })
    })
}

pub fn check_bearing_similarity(case: &SimilarityCase) -> Result<(), TestCaseError> {
    let c = config(case.d, &case.flat);
    prop_assume!(min_separation(&c) >= 0.1);
    let graph = complete_forward_graph(c.n());
    let g = bearing_function(&graph, &c).unwrap();
    let moved = c.scaled_translated(case.scale, &case.shift);
    let gm = bearing_function(&graph, &moved).unwrap();
    let worst = max_abs_diff(g.stacked().as_slice(), gm.stacked().as_slice());
    prop_assert!(worst <= 1e-12, "bearings moved by {worst:e}");
    Ok(())
}

// ----------------------------------------------------------------- negation

#[derive(Debug, Clone)]
pub struct NegationCase {
    pub d: usize,
    pub flat: Vec<f64>,
    pub center: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
}

pub fn negation_case() -> impl Strategy<Value = NegationCase> {
    (dim(), 3usize..6).prop_flat_map(|(d, n)| {
        let m = n * (n - 1) / 2;
        (coords(d * n, 5.0), coords(d, 5.0), unit_vectors(d, m))
            .prop_map(move |(flat, center, targets)| NegationCase { d, flat, center, targets })
    })
}

/// The reflected configuration realizes the negated bearings, and negating
/// the targets negates the control.
pub fn check_negation(case: &NegationCase) -> Result<(), TestCaseError> {
    let c = config(case.d, &case.flat);
    prop_assume!(min_separation(&c) >= 0.1);
    let graph = complete_forward_graph(c.n());
    let g = bearing_function(&graph, &c).unwrap();
    let reflected = symmetric_configuration(&c, &case.center);
    let gr = bearing_function(&graph, &reflected).unwrap();
    let worst = max_abs_diff(g.negated().stacked().as_slice(), gr.stacked().as_slice());
    prop_assert!(worst <= 1e-12, "reflection off by {worst:e}");

    let targets = BearingSet::new(case.d, &case.targets).unwrap();
    let t = TargetFormation::new(graph, targets).unwrap();
    let u = stacked_control(&c, &t).unwrap();
    let un = stacked_control(&c, &t.negated()).unwrap();
    let worst = max_abs_diff(u.stacked().as_slice(), (-un.stacked()).as_slice());
    prop_assert!(worst <= 1e-12, "control negation off by {worst:e}");
    Ok(())
}

// --------------------------------------------------------- witness and forms

#[derive(Debug, Clone)]
pub struct FormationCase {
    pub d: usize,
    pub flat: Vec<f64>,
    pub mask: Vec<bool>,
    pub targets: Vec<Vec<f64>>,
}

pub fn formation_case() -> impl Strategy<Value = FormationCase> {
    (dim(), 3usize..7).prop_flat_map(|(d, n)| {
        let m = n * (n - 1) / 2;
        (coords(d * n, 5.0), prop::collection::vec(any::<bool>(), m), unit_vectors(d, m))
            .prop_map(move |(flat, mask, targets)| FormationCase { d, flat, mask, targets })
    })
}

impl FormationCase {
    fn graph_and_targets(&self, n: usize) -> (DirectedSensingGraph, Vec<Vec<f64>>) {
        let all = complete_forward_graph(n);
        let mut edges = Vec::new();
        let mut targets = Vec::new();
        for (k, e) in all.edges().iter().enumerate() {
            if self.mask[k] || k == 0 {
                edges.push((e.tail, e.head));
                targets.push(self.targets[k].clone());
            }
        }
        (DirectedSensingGraph::new(n, edges).unwrap(), targets)
    }
}

pub fn check_zero_at_witness(case: &FormationCase) -> Result<(), TestCaseError> {
    let c = config(case.d, &case.flat);
    prop_assume!(min_separation(&c) >= 0.1);
    let (graph, _) = case.graph_and_targets(c.n());
    let t = TargetFormation::from_witness(graph, c.clone()).unwrap();
    let u = stacked_control(&c, &t).unwrap();
    prop_assert!(u.stacked().amax() <= 1e-12, "control at witness {}", u.stacked().amax());
    Ok(())
}

pub fn check_form_agreement(case: &FormationCase) -> Result<(), TestCaseError> {
    let c = config(case.d, &case.flat);
    prop_assume!(min_separation(&c) >= 0.1);
    let (graph, targets) = case.graph_and_targets(c.n());
    let t = TargetFormation::new(graph.clone(), BearingSet::new(case.d, &targets).unwrap()).unwrap();
    let u = stacked_control(&c, &t).unwrap();
    let um = stacked_control_matrix_form(&c, &t).unwrap();
    let worst = max_abs_diff(u.stacked().as_slice(), um.stacked().as_slice());
    prop_assert!(worst <= 1e-12, "per-agent vs matrix form {worst:e}");
    for v in 1..=c.n() {
        let nbrs: Vec<Vec<f64>> = graph.out_neighbors(v).iter().map(|j| c.coords(*j).to_vec()).collect();
        let tv: Vec<Vec<f64>> = graph.out_edges(v).map(|(k, _)| targets[k].clone()).collect();
        let naive = naive_agent_control(c.coords(v), &nbrs, &tv);
        let ui = agent_control(v, &c, &t).unwrap();
        prop_assert!(max_abs_diff(ui.as_slice(), &naive) <= 1e-12, "agent {v}");
        prop_assert!(max_abs_diff(ui.as_slice(), u.agent(v)) <= 1e-12, "agent {v} stacked");
    }
    Ok(())
}

// ------------------------------------------------ equilibrium equivariance

#[derive(Debug, Clone)]
pub struct OneToManyCase {
    pub leaders: Vec<Vec<f64>>,
    pub point: Vec<f64>,
    pub shift: Vec<f64>,
}

pub fn one_to_many_case() -> impl Strategy<Value = OneToManyCase> {
    (dim(), 2usize..7).prop_flat_map(|(d, k)| {
        (prop::collection::vec(coords(d, 5.0), k), coords(d, 3.0), coords(d, 20.0))
            .prop_map(|(leaders, point, shift)| OneToManyCase { leaders, point, shift })
    })
}

impl OneToManyCase {
    /// Exact bearings from `point` to the leaders, if well conditioned.
    pub fn targets(&self) -> Option<Vec<Vec<f64>>> {
        if self.leaders.iter().any(|l| norm(&sub(l, &self.point)) < 0.2) {
            return None;
        }
        let t: Vec<Vec<f64>> =
            self.leaders.iter().map(|l| bearing(&self.point, l).unwrap().as_slice().to_vec()).collect();
        (max_pairwise_sine(&t) > 0.1).then_some(t)
    }
}

pub fn check_equilibrium_translation(case: &OneToManyCase) -> Result<(), TestCaseError> {
    let Some(targets) = case.targets() else {
        return Err(TestCaseError::reject("ill-conditioned"));
    };
    let p = one_to_many_equilibrium(&case.leaders, &targets).unwrap();
    prop_assert!(max_abs_diff(p.as_slice(), &case.point) <= 1e-9, "recovers the point");
    let shifted: Vec<Vec<f64>> =
        case.leaders.iter().map(|l| l.iter().zip(&case.shift).map(|(a, b)| a + b).collect()).collect();
    let ps = one_to_many_equilibrium(&shifted, &targets).unwrap();
    let expected: Vec<f64> = p.iter().zip(&case.shift).map(|(a, b)| a + b).collect();
    prop_assert!(max_abs_diff(ps.as_slice(), &expected) <= 1e-9, "translation");
    Ok(())
}

// ------------------------------------------------------ cascade equivariance

#[derive(Debug, Clone)]
pub struct CascadeCase {
    pub d: usize,
    pub flat: Vec<f64>,
    pub picks: Vec<(usize, usize)>,
    pub d21: f64,
}

pub fn cascade_case() -> impl Strategy<Value = CascadeCase> {
    (dim(), 3usize..8, 0.1..10.0f64).prop_flat_map(|(d, n, d21)| {
        (coords(d * n, 5.0), prop::collection::vec((0usize..8, 0usize..8), n - 2))
            .prop_map(move |(flat, picks)| CascadeCase { d, flat, picks, d21 })
    })
}

pub fn check_cascade_scaling(case: &CascadeCase) -> Result<(), TestCaseError> {
    let c = config(case.d, &case.flat);
    prop_assume!(min_separation(&c) >= 0.2);
    let graph = lff_graph(c.n(), &case.picks);
    for i in 3..=c.n() {
        let dirs: Vec<Vec<f64>> =
            graph.out_neighbors(i).iter().map(|j| sub(c.coords(*j), c.coords(i))).collect();
        prop_assume!(max_pairwise_sine(&dirs) > 0.05);
    }
    let t = TargetFormation::from_witness(graph, c.clone()).unwrap();
    let leader = c.coords(1);
    let one = cascade_target_configuration(&t, leader, case.d21).unwrap();
    let two = cascade_target_configuration(&t, leader, 2.0 * case.d21).unwrap();
    for v in 1..=c.n() {
        let a = sub(one.coords(v), leader);
        let b = sub(two.coords(v), leader);
        let scaled: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        prop_assert!(max_abs_diff(&b, &scaled) <= 1e-8 * (1.0 + norm(&b)), "agent {v}");
    }
    // At the witness's own distance the cascade reproduces the witness.
    let own = norm(&sub(c.coords(2), leader));
    let back = cascade_target_configuration(&t, leader, own).unwrap();
    prop_assert!(max_abs_diff(back.stacked().as_slice(), c.stacked().as_slice()) <= 1e-7);
    Ok(())
}

// ------------------------------------------------------------------- Weyl

#[derive(Debug, Clone)]
pub struct WeylCase {
    pub follower: Vec<f64>,
    pub leaders: Vec<Vec<f64>>,
    pub extra: Vec<f64>,
}

pub fn weyl_case() -> impl Strategy<Value = WeylCase> {
    (dim(), 1usize..6).prop_flat_map(|(d, k)| {
        (coords(d, 5.0), prop::collection::vec(coords(d, 5.0), k), coords(d, 5.0))
            .prop_map(|(follower, leaders, extra)| WeylCase { follower, leaders, extra })
    })
}

pub fn check_weyl(case: &WeylCase) -> Result<(), TestCaseError> {
    let far = |q: &Vec<f64>| norm(&sub(q, &case.follower)) >= 0.1;
    prop_assume!(case.leaders.iter().all(far) && far(&case.extra));
    let before = lyapunov_exponent(&case.follower, &case.leaders).unwrap();
    let mut more = case.leaders.clone();
    more.push(case.extra.clone());
    let after = lyapunov_exponent(&case.follower, &more).unwrap();
    prop_assert!(after >= before - 1e-12, "lambda_min fell from {before} to {after}");
    Ok(())
}

// ------------------------------------------------------- kernel structure

#[derive(Debug, Clone)]
pub struct KernelCase {
    pub bearings: Vec<Vec<f64>>,
}

pub fn kernel_case() -> impl Strategy<Value = KernelCase> {
    (dim(), 2usize..8).prop_flat_map(|(d, k)| unit_vectors(d, k).prop_map(|bearings| KernelCase { bearings }))
}

/// Dimensions, residuals and an elimination-based cross-check of the
/// kernel of `p_tilde` and of `p_tilde G_perp`.
pub fn check_kernel(case: &KernelCase) -> Result<(), TestCaseError> {
    prop_assume!(max_pairwise_sine(&case.bearings) > 0.05);
    let d = case.bearings[0].len();
    let n = case.bearings.len() + 1;
    let basis = null_space_basis(&case.bearings).unwrap();
    let dims = basis.dims();
    prop_assert_eq!(dims.rank_p_tilde, d);
    prop_assert_eq!(dims.kernel_dim, d * (n - 2));
    prop_assert_eq!(dims.m as isize, (d * (n - 2)) as isize - n as isize + 1);
    prop_assert!(basis.residual_g < 1e-10 && basis.residual_n < 1e-10);
    let k = basis.kernel_basis();
    prop_assert!((&basis.p_tilde * &k).amax() < 1e-10);

    let (rank, kernel) = rref_kernel(&to_rows(&basis.p_tilde), 1e-9);
    prop_assert_eq!(rank, d);
    prop_assert_eq!(kernel.len(), d * (n - 2));
    let pg = &basis.p_tilde * &basis.g_perp;
    let (_, kernel_n) = rref_kernel(&to_rows(&pg), 1e-9);
    prop_assert_eq!(kernel_n.len(), dims.m);
    Ok(())
}

// --------------------------------------------- first follower and leader

#[derive(Debug, Clone)]
pub struct TriangleCase {
    pub witness: Vec<f64>,
    pub start: Vec<f64>,
}

pub fn triangle_case() -> impl Strategy<Value = TriangleCase> {
    (coords(6, 3.0), coords(6, 3.0)).prop_map(|(witness, start)| TriangleCase { witness, start })
}

pub const FIRST_FOLLOWER_STEP: f64 = 0.01;

pub fn check_first_follower(case: &TriangleCase) -> Result<(), TestCaseError> {
    let w = config(2, &case.witness);
    let s = config(2, &case.start);
    prop_assume!(min_separation(&w) >= 0.3 && min_separation(&s) >= 0.3);
    let graph = DirectedSensingGraph::new(3, [(2, 1), (3, 1), (3, 2)]).unwrap();
    let dirs = [sub(w.coords(1), w.coords(3)), sub(w.coords(2), w.coords(3))];
    prop_assume!(max_pairwise_sine(&dirs) > 0.1);
    let t = TargetFormation::from_witness(graph, w).unwrap();
    let settings = IntegratorSettings {
        step: FIRST_FOLLOWER_STEP,
        t_max: 5.0,
        convergence_tol: 1e-14,
        record_every: 5,
        ..Default::default()
    };
    let r = integrate(&t, &s, &settings).unwrap();
    let d0 = norm(&sub(s.coords(2), s.coords(1)));
    for (time, c) in r.times.iter().zip(&r.configs) {
        prop_assert_eq!(c.coords(1), s.coords(1));
        let drift = (norm(&sub(c.coords(2), c.coords(1))) - d0).abs();
        let bound = 10.0 * FIRST_FOLLOWER_STEP * FIRST_FOLLOWER_STEP * time + 1e-12;
        prop_assert!(drift <= bound, "drift {drift:e} > {bound:e} at t={time}");
    }
    Ok(())
}

// ---------------------------------------------------------- Lyapunov

#[derive(Debug, Clone)]
pub struct LyapunovCase {
    pub system: OneToManyCase,
    pub start: Vec<f64>,
}

pub fn lyapunov_case() -> impl Strategy<Value = LyapunovCase> {
    (dim(), 2usize..6).prop_flat_map(|(d, k)| {
        (prop::collection::vec(coords(d, 5.0), k), coords(d, 3.0), coords(d, 6.0)).prop_map(
            |(leaders, point, start)| LyapunovCase {
                system: OneToManyCase { leaders, point, shift: vec![] },
                start,
            },
        )
    })
}

/// Result of integrating a one-to-many case for the Lyapunov checks.
pub struct LyapunovRun {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    /// Follower distance from its equilibrium.
    pub offsets: Vec<f64>,
    pub errors: Vec<f64>,
    pub rate: f64,
    pub verdict: Verdict,
}

pub fn run_lyapunov_case(case: &LyapunovCase) -> Option<LyapunovRun> {
    let targets = case.system.targets()?;
    let d = case.start.len();
    let k = case.system.leaders.len();
    if case.system.leaders.iter().any(|l| norm(&sub(l, &case.start)) < 0.3) {
        return None;
    }
    let mut points = case.system.leaders.clone();
    points.push(case.start.clone());
    let initial = Configuration::new(d, &points).unwrap();
    let graph = DirectedSensingGraph::one_to_many(k + 1).unwrap();
    let t = TargetFormation::new(graph, BearingSet::new(d, &targets).unwrap()).unwrap();
    let settings =
        IntegratorSettings { t_max: 20.0, convergence_tol: 1e-8, record_every: 1, ..Default::default() };
    let r = integrate(&t, &initial, &settings).ok()?;
    if r.verdict == Verdict::Diverged {
        return None;
    }
    let neighbors: Vec<usize> = (1..=k).collect();
    let rate = lyapunov_rate(&r, k + 1, &neighbors).ok()?;
    let offsets: Vec<f64> =
        r.configs.iter().map(|c| norm(&sub(c.coords(k + 1), &case.system.point))).collect();
    let v = offsets.iter().map(|e| 0.5 * e * e).collect();
    Some(LyapunovRun {
        times: r.times.clone(),
        v,
        offsets,
        errors: r.errors.clone(),
        rate,
        verdict: r.verdict,
    })
}

/// `|e(t)| <= |e(0)| exp(-lambda t)` with 5% slack for the follower's
/// position error `e`, and `V = |e|^2 / 2` non-increasing.
pub fn check_lyapunov_envelope(case: &LyapunovCase) -> Result<(), TestCaseError> {
    let Some(run) = run_lyapunov_case(case) else {
        return Err(TestCaseError::reject("ill-conditioned or collided"));
    };
    prop_assert!(run.rate > 0.0);
    for (t, e) in run.times.iter().zip(&run.offsets) {
        let bound = 1.05 * run.offsets[0] * (-run.rate * t).exp() + 1e-12;
        prop_assert!(*e <= bound, "|e({t})| = {e:e} exceeds {bound:e}");
    }
    for w in run.v.windows(2) {
        prop_assert!(w[1] <= w[0] + 1e-9, "V increased from {:e} to {:e}", w[0], w[1]);
    }
    Ok(())
}
