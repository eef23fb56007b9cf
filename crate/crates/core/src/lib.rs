//! Bearing-only formation control over directed sensing graphs.
//!
//! Agents are single integrators `p_i' = u_i` that measure unit bearings
//! toward the agents they sense and run
//!
//! ```text
//! u_i = -sum_{ij in E} P_{g_ij} g*_ij,    P_x = I - x x^T / |x|^2
//! ```
//!
//! The crate covers the graph classes for which this law is known to work
//! (leader-first-follower, ordered leader-first-follower, and the
//! one-follower/many-leader star), closed-form equilibria and their
//! stability, the kernel structure of the one-to-many equilibrium condition,
//! and a deterministic simulator with built-in reproduction scenarios.
//!
//! ```
//! use bearing_formation::equilibrium::one_to_many_equilibrium;
//!
//! let r = std::f64::consts::FRAC_1_SQRT_2;
//! let leaders = [[0.0, 0.0], [2.0, 0.0]];
//! let targets = [[-r, -r], [r, -r]];
//! let p = one_to_many_equilibrium(&leaders, &targets).unwrap();
//! assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compare;
pub mod control;
pub mod equilibrium;
pub mod error;
pub mod export;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod scenario;
pub mod simulate;

pub use error::{Error, Result};
pub use geometry::{BearingSet, Configuration, TargetFormation};
pub use graph::{classify, DirectedSensingGraph, Edge, GraphClass};
pub use simulate::{integrate, IntegratorSettings, TrajectoryRecord, Verdict};

// The guide's code listings run as doc-tests.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/control-law.md")]
    mod control_law {}
    #[doc = include_str!("../../../book/src/one-to-many.md")]
    mod one_to_many {}
    #[doc = include_str!("../../../book/src/ordered-lff.md")]
    mod ordered_lff {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
