//! Directed sensing graphs and their classification.
//!
//! An edge `i -> j` means agent `i` senses the bearing toward agent `j`; the
//! tail is the sensing agent. Vertices are labelled `1..=n` everywhere in the
//! public API. The order of the edge list is significant: it fixes the row
//! order of incidence matrices and of stacked bearing vectors.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A directed edge `tail -> head` with 1-based labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    pub const fn new(tail: usize, head: usize) -> Self {
        Edge { tail, head }
    }

    /// An edge is forward when its tail label exceeds its head label.
    pub fn is_forward(&self) -> bool {
        self.tail > self.head
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tail, self.head)
    }
}

/// Free-function form of [`Edge::is_forward`].
pub fn is_forward_edge(edge: Edge) -> bool {
    edge.is_forward()
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// A directed sensing graph on vertices `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct DirectedSensingGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl TryFrom<GraphRepr> for DirectedSensingGraph {
    type Error = Error;

    fn try_from(repr: GraphRepr) -> Result<Self> {
        DirectedSensingGraph::new(repr.n, repr.edges)
    }
}

impl From<DirectedSensingGraph> for GraphRepr {
    fn from(graph: DirectedSensingGraph) -> Self {
        GraphRepr { n: graph.n, edges: graph.edges.iter().map(|e| (e.tail, e.head)).collect() }
    }
}

impl DirectedSensingGraph {
    /// Builds a graph, rejecting self-loops, duplicate edges and labels
    /// outside `1..=n`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (tail, head) in edges {
            let edge = Edge::new(tail, head);
            if !(1..=n).contains(&tail) || !(1..=n).contains(&head) {
                return Err(Error::InvalidGraph(format!("edge {edge} references a vertex outside 1..={n}")));
            }
            if tail == head {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {tail}")));
            }
            if !seen.insert(edge) {
                return Err(Error::InvalidGraph(format!("duplicate edge {edge}")));
            }
            list.push(edge);
        }
        Ok(DirectedSensingGraph { n, edges: list })
    }

    /// The one-to-many star: follower `n` senses every leader `1..n`.
    pub fn one_to_many(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|j| (n, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Out-edges of `vertex` as `(edge index, head)` pairs, in edge-list order.
    pub fn out_edges(&self, vertex: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.tail == vertex).map(|(k, e)| (k, e.head))
    }

    pub fn out_neighbors(&self, vertex: usize) -> Vec<usize> {
        self.out_edges(vertex).map(|(_, h)| h).collect()
    }

    pub fn out_degree(&self, vertex: usize) -> usize {
        self.out_edges(vertex).count()
    }

    pub fn contains_edge(&self, edge: Edge) -> bool {
        self.edges.contains(&edge)
    }

    /// True when both graphs have the same vertex count and every edge of
    /// `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &DirectedSensingGraph) -> bool {
        self.n == other.n && self.edges.iter().all(|e| other.contains_edge(*e))
    }

    /// Index of `edge` in the edge list.
    pub fn edge_index(&self, edge: Edge) -> Option<usize> {
        self.edges.iter().position(|e| *e == edge)
    }
}

/// Graph classes distinguished by [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphClass {
    #[serde(rename = "LFF")]
    Lff,
    #[serde(rename = "OrderedLFF")]
    OrderedLff,
    OneToMany,
    Unclassified,
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphClass::Lff => "LFF",
            GraphClass::OrderedLff => "OrderedLFF",
            GraphClass::OneToMany => "OneToMany",
            GraphClass::Unclassified => "Unclassified",
        };
        f.write_str(s)
    }
}

/// A rule of the leader-first-follower definitions that a graph breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooFewVertices,
    LeaderHasOutEdges {
        out_degree: usize,
    },
    FirstFollowerOutDegree {
        out_degree: usize,
    },
    FirstFollowerTarget {
        head: usize,
    },
    /// LFF only: vertex `vertex >= 3` must have exactly two out-edges.
    NotExactlyTwo {
        vertex: usize,
        out_degree: usize,
    },
    /// Both classes: vertex `vertex >= 3` must have at least two out-edges.
    FewerThanTwo {
        vertex: usize,
        out_degree: usize,
    },
    BackwardEdge(Edge),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewVertices => write!(f, "fewer than two vertices"),
            Violation::LeaderHasOutEdges { out_degree } => {
                write!(f, "vertex 1 (leader) has {out_degree} outgoing edges, expected none")
            }
            Violation::FirstFollowerOutDegree { out_degree } => {
                write!(f, "vertex 2 (first follower) has {out_degree} outgoing edges, expected exactly one")
            }
            Violation::FirstFollowerTarget { head } => {
                write!(f, "vertex 2 (first follower) points to vertex {head}, expected the leader")
            }
            Violation::NotExactlyTwo { vertex, out_degree } => {
                write!(f, "vertex {vertex} has {out_degree} outgoing edges, LFF requires exactly two")
            }
            Violation::FewerThanTwo { vertex, out_degree } => {
                write!(f, "vertex {vertex} has {out_degree} outgoing edges, at least two required")
            }
            Violation::BackwardEdge(edge) => write!(f, "edge {edge} is not a forward edge"),
        }
    }
}

fn serialize_violations<S: Serializer>(v: &[Violation], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

/// Result of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphClassification {
    pub class: GraphClass,
    pub leader: Option<usize>,
    pub first_follower: Option<usize>,
    /// Set when the graph is LFF; every LFF graph is also ordered LFF.
    pub also_ordered_lff: bool,
    /// For `OrderedLFF`, the LFF rules that fail. For `Unclassified`, the
    /// ordered-LFF rules that fail. Empty otherwise.
    #[serde(serialize_with = "serialize_violations")]
    pub violations: Vec<Violation>,
}

/// Checks the leader-first-follower rules with labels as given.
/// Returns `(lff_only, shared)` violations: `shared` break ordered LFF (and
/// therefore LFF), `lff_only` break only the strict LFF definition.
fn lff_violations(graph: &DirectedSensingGraph) -> (Vec<Violation>, Vec<Violation>) {
    let mut shared = Vec::new();
    let mut lff_only = Vec::new();
    if graph.n() < 2 {
        shared.push(Violation::TooFewVertices);
        return (lff_only, shared);
    }
    let leader_out = graph.out_degree(1);
    if leader_out != 0 {
        shared.push(Violation::LeaderHasOutEdges { out_degree: leader_out });
    }
    let ff = graph.out_neighbors(2);
    if ff.len() != 1 {
        shared.push(Violation::FirstFollowerOutDegree { out_degree: ff.len() });
    } else if ff[0] != 1 {
        shared.push(Violation::FirstFollowerTarget { head: ff[0] });
    }
    for vertex in 3..=graph.n() {
        let out_degree = graph.out_degree(vertex);
        if out_degree < 2 {
            shared.push(Violation::FewerThanTwo { vertex, out_degree });
        } else if out_degree != 2 {
            lff_only.push(Violation::NotExactlyTwo { vertex, out_degree });
        }
    }
    for edge in graph.edges() {
        if !edge.is_forward() {
            shared.push(Violation::BackwardEdge(*edge));
        }
    }
    (lff_only, shared)
}

fn is_one_to_many(graph: &DirectedSensingGraph) -> bool {
    let n = graph.n();
    if n < 3 || graph.edge_count() != n - 1 {
        return false;
    }
    let heads: HashSet<usize> = graph.edges().iter().map(|e| e.head).collect();
    graph.edges().iter().all(|e| e.tail == n) && heads.len() == n - 1
}

/// Classifies a graph as LFF, ordered LFF, one-to-many, or unclassified.
///
/// LFF takes precedence over ordered LFF. Labels are used as given; no
/// relabelling is searched for.
pub fn classify(graph: &DirectedSensingGraph) -> GraphClassification {
    let (lff_only, shared) = lff_violations(graph);
    if shared.is_empty() {
        let lff = lff_only.is_empty();
        return GraphClassification {
            class: if lff { GraphClass::Lff } else { GraphClass::OrderedLff },
            leader: Some(1),
            first_follower: Some(2),
            also_ordered_lff: lff,
            violations: lff_only,
        };
    }
    if is_one_to_many(graph) {
        return GraphClassification {
            class: GraphClass::OneToMany,
            leader: None,
            first_follower: None,
            also_ordered_lff: false,
            violations: Vec::new(),
        };
    }
    GraphClassification {
        class: GraphClass::Unclassified,
        leader: None,
        first_follower: None,
        also_ordered_lff: false,
        violations: shared,
    }
}

/// Out-incidence matrix (`d|E| x dn`): block `(k, i)` is `I_d` when vertex
/// `i` is the tail of edge `k`.
pub fn out_incidence(graph: &DirectedSensingGraph, d: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(d * graph.edge_count(), d * graph.n());
    for (k, e) in graph.edges().iter().enumerate() {
        let col = d * (e.tail - 1);
        for a in 0..d {
            h[(d * k + a, col + a)] = 1.0;
        }
    }
    h
}

/// Signed incidence matrix (`d|E| x dn`): `+I_d` at the tail of each edge,
/// `-I_d` at its head.
pub fn signed_incidence(graph: &DirectedSensingGraph, d: usize) -> DMatrix<f64> {
    let mut h = out_incidence(graph, d);
    for (k, e) in graph.edges().iter().enumerate() {
        let col = d * (e.head - 1);
        for a in 0..d {
            h[(d * k + a, col + a)] = -1.0;
        }
    }
    h
}
