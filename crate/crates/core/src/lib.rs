//! Distributed control of polygonal formations over daisy-chain topologies.
//!
//! Agents are single integrators `ṗ = u` connected in an open chain
//! `1 – 2 – … – n`. Interior agents compare consecutive relative positions
//! (optionally rotated by half a target turn angle and scaled by ratios) and
//! drive that error to zero; the chain ends optionally close the polygon with
//! a distance controller and add motion terms that spin or translate the
//! converged shape as a rigid body.
//!
//! The crate is organised by capability:
//!
//! - [`topology`]: daisy chains, incidence matrices and `⊗ I₂` expansion.
//! - [`geometry`]: rotations, shape specifications and every error signal.
//! - [`control`]: the velocity fields, from the three-agent gradient law to
//!   the full steering law.
//! - [`stability`]: the error-dynamics matrix, its closed-form and numerical
//!   spectra and the stable / marginal / unstable verdict.
//! - [`simulator`]: fixed-step integration, parameter events and formation
//!   metrics.
//! - [`cli`]: scenario files, CSV / JSON / SVG output and the command
//!   implementations behind the `polyform` binary.
//! - [`acceptance`]: the end-to-end verification criteria run by
//!   `polyform verify` and by the `acceptance` test target.
//!
//! Agent and edge indices are zero-based throughout: edge `k` joins agents
//! `k` and `k + 1`, and the relative position it carries is
//! `z_k = p_k − p_{k+1}`.
//!
//! Runnable walkthroughs live in `examples/`; start with
//! `cargo run --example hexagon`.

pub mod acceptance;
pub mod cli;
pub mod control;
pub mod error;
pub mod geometry;
pub mod simulator;
pub mod stability;
pub mod topology;

pub use error::FormationError;

/// A planar position or velocity.
pub type Point = nalgebra::Vector2<f64>;

pub type Result<T, E = FormationError> = std::result::Result<T, E>;
