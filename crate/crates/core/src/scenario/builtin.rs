use crate::geometry::{bearing, symmetric_configuration, BearingSet, Configuration, TargetFormation};
use crate::graph::DirectedSensingGraph;
use crate::simulate::IntegratorSettings;

use super::{ExpectedVerdict, InitialSpec, RandomBox, Scenario, TargetSpec};

pub(crate) const HEXAGON: [[f64; 2]; 6] =
    [[0.5, 0.866], [-0.5, 0.866], [-1.2, 0.0], [-0.5, -0.866], [0.5, -0.866], [1.2, 0.0]];

/// Edges shared by both hexagon graphs; they differ only in the 3-4 edge.
const HEXAGON_COMMON: [(usize, usize); 10] =
    [(2, 1), (3, 1), (3, 2), (4, 2), (4, 6), (5, 3), (5, 4), (6, 1), (6, 3), (6, 5)];

pub(crate) const OCTAGON: [[f64; 2]; 8] =
    [[2.0, 1.0], [1.0, 2.0], [-1.0, 2.0], [-2.0, 1.0], [-2.0, -1.0], [-1.0, -2.0], [1.0, -2.0], [2.0, -1.0]];

pub(crate) const LFF_EDGES: [(usize, usize); 13] =
    [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (5, 2), (5, 3), (6, 2), (6, 4), (7, 5), (7, 6), (8, 6), (8, 7)];

pub(crate) const ORDERING_EDGES: [(usize, usize); 3] = [(5, 4), (6, 5), (7, 4)];

pub(crate) const UNORDERED_EDGE: (usize, usize) = (5, 8);

/// The five-leader one-to-many example.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperData {
    /// Target bearings as printed, to three decimals.
    pub printed_bearings: [[f64; 2]; 5],
    /// Leader positions as printed.
    pub printed_leaders: [[f64; 2]; 5],
    /// Leader positions used by the built-in scenario.
    pub leaders: [[f64; 2]; 5],
    /// Exact unit bearings from `equilibrium` to `leaders`.
    pub targets: Vec<Vec<f64>>,
    pub equilibrium: [f64; 2],
    pub follower_start: [f64; 2],
    pub symmetric_follower_start: [f64; 2],
    /// Reflection center of the symmetric scenario.
    pub reflection_center: [f64; 2],
}

pub fn paper_data() -> PaperData {
    let printed_leaders = [[1.618, 2.902], [-0.051, 1.764], [-0.294, 0.060], [1.556, -0.712], [2.500, 0.0]];
    let mut leaders = printed_leaders;
    // The printed fifth leader is off the ray [1,1] + s [1,0] its bearing names.
    leaders[4] = [2.5, 1.0];
    let equilibrium = [1.0, 1.0];
    let targets = leaders
        .iter()
        .map(|l| bearing(&equilibrium, l).expect("leaders differ from equilibrium").as_slice().to_vec())
        .collect();
    PaperData {
        printed_bearings: [[0.309, 0.951], [-0.809, 0.588], [-0.809, -0.588], [0.309, -0.951], [1.0, 0.0]],
        printed_leaders,
        leaders,
        targets,
        equilibrium,
        follower_start: [1.6254, 1.8106],
        symmetric_follower_start: [1.01, 1.01],
        reflection_center: [1.0, 1.0],
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &[
        "hexagon-good",
        "hexagon-bad",
        "one-to-many-5",
        "one-to-many-5-symmetric",
        "lff-8",
        "olff-8",
        "unordered-8",
    ]
}

fn rows<const D: usize>(points: &[[f64; D]]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.to_vec()).collect()
}

fn witness_scenario(
    name: &str,
    witness: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    settings: IntegratorSettings,
    expected: ExpectedVerdict,
) -> Scenario {
    let graph = DirectedSensingGraph::new(witness.len(), edges).expect("built-in graph is valid");
    let config = Configuration::new(2, &witness).expect("built-in witness is valid");
    let target = TargetFormation::from_witness(graph, config).expect("built-in witness is valid");
    Scenario {
        name: name.to_string(),
        target,
        targets_spec: TargetSpec::Witness(witness),
        initial: InitialSpec::RandomBox(RandomBox { seed: 0, half_width: None, center: None }),
        settings,
        expected_verdict: Some(expected),
    }
}

fn one_to_many_scenario(
    name: &str,
    leaders: Vec<Vec<f64>>,
    follower: [f64; 2],
    expected: ExpectedVerdict,
) -> Scenario {
    let data = paper_data();
    let graph = DirectedSensingGraph::one_to_many(6).expect("six agents");
    let targets = BearingSet::new(2, &data.targets).expect("exact unit bearings");
    let target = TargetFormation::new(graph, targets).expect("five targets");
    let mut positions = leaders;
    positions.push(follower.to_vec());
    Scenario {
        name: name.to_string(),
        target,
        targets_spec: TargetSpec::Bearings(data.targets),
        initial: InitialSpec::Positions(positions),
        settings: one_to_many_settings(),
        expected_verdict: Some(expected),
    }
}

/// Looks up a built-in scenario.
pub fn builtin(name: &str) -> Option<Scenario> {
    let data = paper_data();
    let hexagon = |extra: (usize, usize)| {
        let mut edges = HEXAGON_COMMON.to_vec();
        edges.push(extra);
        edges
    };
    let octagon = |edges: Vec<(usize, usize)>| {
        witness_scenario(name, rows(&OCTAGON), edges, octagon_settings(), ExpectedVerdict::Converged)
    };
    let scenario = match name {
        "hexagon-good" => witness_scenario(
            name,
            rows(&HEXAGON),
            hexagon((4, 3)),
            hexagon_settings(),
            ExpectedVerdict::Converged,
        ),
        "hexagon-bad" => witness_scenario(
            name,
            rows(&HEXAGON),
            hexagon((3, 4)),
            hexagon_settings(),
            ExpectedVerdict::NotConverged,
        ),
        "one-to-many-5" => {
            one_to_many_scenario(name, rows(&data.leaders), data.follower_start, ExpectedVerdict::Converged)
        }
        "one-to-many-5-symmetric" => {
            let leaders = Configuration::new(2, &rows(&data.leaders)).expect("leaders");
            let reflected = symmetric_configuration(&leaders, &data.reflection_center);
            one_to_many_scenario(
                name,
                reflected.positions(),
                data.symmetric_follower_start,
                ExpectedVerdict::NotConverged,
            )
        }
        "lff-8" => octagon(LFF_EDGES.to_vec()),
        "olff-8" => octagon(LFF_EDGES.iter().chain(&ORDERING_EDGES).copied().collect()),
        "unordered-8" => {
            octagon(LFF_EDGES.iter().chain(&ORDERING_EDGES).copied().chain([UNORDERED_EDGE]).collect())
        }
        _ => return None,
    };
    Some(scenario)
}

/// Random starts spread the octagon over roughly eight times its witness
/// size, and its narrowest sensing angle is about 18 degrees, so the slowest
/// follower mode decays at a rate near 0.004.
fn octagon_settings() -> IntegratorSettings {
    IntegratorSettings { t_max: 15_000.0, record_every: 1000, ..Default::default() }
}

fn hexagon_settings() -> IntegratorSettings {
    IntegratorSettings { t_max: 1000.0, record_every: 100, ..Default::default() }
}

/// Stopping at bearing error 1e-3 leaves the follower about 1e-3 from the
/// equilibrium; 1e-4 brings it well inside.
fn one_to_many_settings() -> IntegratorSettings {
    IntegratorSettings { convergence_tol: 1e-4, ..Default::default() }
}
