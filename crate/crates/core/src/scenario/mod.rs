//! Scenario files: a target formation, an initial condition and integrator
//! settings.
//!
//! ```json
//! {
//!   "name": "triangle",
//!   "d": 2,
//!   "graph": {"n": 3, "edges": [[2, 1], [3, 1], [3, 2]]},
//!   "targets": {"witness": [[0, 0], [2, 0], [1, 1]]},
//!   "initial": {"random_box": {"seed": 7}},
//!   "settings": {"step": 0.01, "t_max": 50},
//!   "expected_verdict": "Converged"
//! }
//! ```
//!
//! `targets` is either `{"bearings": [...]}` (one unit vector per edge, in
//! edge order) or `{"witness": [...]}` (a configuration the bearings are
//! read from). `initial` is either `{"positions": [...]}` or
//! `{"random_box": {"seed": s, "half_width": w, "center": c}}`; the box
//! defaults to the witness centroid and twice the witness diameter.

mod builtin;
mod paper;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BearingSet, Configuration, TargetFormation};
use crate::graph::DirectedSensingGraph;
use crate::simulate::{IntegratorSettings, Verdict};

pub use builtin::{builtin, builtin_names, paper_data};
pub use paper::{run_batch, run_paper_scenario, seed_count, Check, PaperRun, RunSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Bearings(Vec<Vec<f64>>),
    Witness(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBox {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Positions(Vec<Vec<f64>>),
    RandomBox(RandomBox),
}

/// Outcome a scenario is expected to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedVerdict {
    Converged,
    Diverged,
    TimedOut,
    NotConverged,
}

impl ExpectedVerdict {
    pub fn matches(self, verdict: Verdict) -> bool {
        match self {
            ExpectedVerdict::Converged => verdict == Verdict::Converged,
            ExpectedVerdict::Diverged => verdict == Verdict::Diverged,
            ExpectedVerdict::TimedOut => verdict == Verdict::TimedOut,
            ExpectedVerdict::NotConverged => verdict != Verdict::Converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    d: usize,
    graph: RawGraph,
    targets: TargetSpec,
    initial: InitialSpec,
    #[serde(default)]
    settings: IntegratorSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expected_verdict: Option<ExpectedVerdict>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub target: TargetFormation,
    pub targets_spec: TargetSpec,
    pub initial: InitialSpec,
    pub settings: IntegratorSettings,
    pub expected_verdict: Option<ExpectedVerdict>,
}

impl Scenario {
    fn from_file(file: ScenarioFile) -> Result<Self> {
        let graph = DirectedSensingGraph::new(file.graph.n, file.graph.edges.iter().copied()).map_err(
            |e| match e {
                Error::InvalidGraph(msg) => Error::Validation(msg),
                other => other,
            },
        )?;
        let d = file.d;
        let target = match &file.targets {
            TargetSpec::Bearings(vectors) => {
                let targets = BearingSet::new(d, vectors)?;
                TargetFormation::new(graph, targets)?
            }
            TargetSpec::Witness(points) => {
                let witness = Configuration::new(d, points)?;
                if witness.n() != graph.n() {
                    return Err(Error::Validation(format!(
                        "witness has {} agents, graph has {}",
                        witness.n(),
                        graph.n()
                    )));
                }
                TargetFormation::from_witness(graph, witness)?
            }
        };
        match &file.initial {
            InitialSpec::Positions(points) => {
                let c = Configuration::new(d, points)?;
                if c.n() != target.graph().n() {
                    return Err(Error::Validation(format!(
                        "initial agent count {} does not match graph vertex count {}",
                        c.n(),
                        target.graph().n()
                    )));
                }
            }
            InitialSpec::RandomBox(b) => {
                if b.half_width.is_none() && target.witness().is_none() {
                    return Err(Error::Validation(
                        "random_box needs half_width and center when no witness is given".into(),
                    ));
                }
                if b.center.as_ref().is_some_and(|c| c.len() != d) {
                    return Err(Error::Validation("random_box center has wrong dimension".into()));
                }
                if b.half_width.is_some_and(|w| !(w > 0.0)) {
                    return Err(Error::Validation("random_box half_width must be positive".into()));
                }
            }
        }
        file.settings.validate()?;
        Ok(Scenario {
            name: file.name,
            target,
            targets_spec: file.targets,
            initial: file.initial,
            settings: file.settings,
            expected_verdict: file.expected_verdict,
        })
    }

    fn to_file(&self) -> ScenarioFile {
        let graph = self.target.graph();
        ScenarioFile {
            name: self.name.clone(),
            d: self.target.d(),
            graph: RawGraph { n: graph.n(), edges: graph.edges().iter().map(|e| (e.tail, e.head)).collect() },
            targets: self.targets_spec.clone(),
            initial: self.initial.clone(),
            settings: self.settings.clone(),
            expected_verdict: self.expected_verdict,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Scenario::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    pub fn d(&self) -> usize {
        self.target.d()
    }

    /// Initial configuration; `seed` overrides the random box seed and is
    /// ignored for explicit positions.
    pub fn initial_configuration(&self, seed: Option<u64>) -> Result<Configuration> {
        match &self.initial {
            InitialSpec::Positions(points) => Configuration::new(self.d(), points),
            InitialSpec::RandomBox(b) => {
                let witness = self.target.witness();
                let center = match (&b.center, witness) {
                    (Some(c), _) => c.clone(),
                    (None, Some(w)) => w.centroid().as_slice().to_vec(),
                    (None, None) => vec![0.0; self.d()],
                };
                let half_width = b
                    .half_width
                    .or_else(|| witness.map(|w| 2.0 * w.diameter()))
                    .ok_or_else(|| Error::Validation("random_box needs half_width".into()))?;
                Ok(random_configuration(self.target.graph().n(), &center, half_width, seed.unwrap_or(b.seed)))
            }
        }
    }

    /// The seed stored in the scenario, if its initial condition is random.
    pub fn seed(&self) -> Option<u64> {
        match &self.initial {
            InitialSpec::RandomBox(b) => Some(b.seed),
            InitialSpec::Positions(_) => None,
        }
    }
}

/// Agents drawn uniformly from the axis-aligned box `center +- half_width`.
pub fn random_configuration(n: usize, center: &[f64], half_width: f64, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> =
        (0..n).map(|_| center.iter().map(|c| c + rng.gen_range(-half_width..half_width)).collect()).collect();
    Configuration::new(center.len(), &points).expect("box dimension is 2 or 3")
}

/// Loads a built-in scenario by name or a scenario file by path.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    if let Some(s) = builtin(name_or_path) {
        return Ok(s);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::UnknownScenario(name_or_path.to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, scenario.to_json())?;
    Ok(())
}
