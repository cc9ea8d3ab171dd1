//! Discrete conformal modulus on meshed metric surfaces.
//!
//! The crate computes the 2-modulus of the two conjugate boundary-crossing
//! curve families of a quadrilateral carried by a metric mesh, builds the
//! associated potential (distance) functions, extracts level curves in the
//! planar dual, and runs the verification suites for the inequalities that
//! hold between the two moduli: the reciprocal lower bound
//! `Mod Γ₁ · Mod Γ₂ ≥ 1/κ`, coarea-type level-line bounds, an oscillation
//! bound for the potential, and the small-ring vanishing test. Degenerate
//! surfaces (a disk collapsed to a point at mesh scale) are first-class:
//! zero-length edges and zero-area faces are handled throughout, and the
//! suites show which half of reciprocality survives the collapse.
//!
//! Module map:
//! - [`surface`]: metric meshes, quadrilateral frames, curve-family specs,
//!   mesh builders (rectangles, conformal weights, collapsed disk), metric
//!   balls, and minimal separating cuts in the planar dual.
//! - [`modulus`]: the constraint-generation modulus solver (shortest-path
//!   separation oracle + nonnegative dual coordinate ascent) with
//!   certificates.
//! - [`potential`]: clipped distance potentials from an extremal density,
//!   the edge-wise upper-gradient guarantee, a discrete maximum principle,
//!   and oscillation measures.
//! - [`level`]: level curves of a potential as dual-graph chains with
//!   length estimates.
//! - [`analysis`]: coarea checks, the oscillation bound, ring moduli, and
//!   the reciprocality report with the product bound chain.
//! - [`curves`]: shortest injective paths and the edge-covering double
//!   traversal of a subgraph.
//! - [`io`]: mesh file round-trip and deterministic report formatting.
//! - [`runner`]: the experiment driver used by the CLI `suite` subcommand.
//!
//! Everything geometric is generic over a [`Scalar`]; `f64` aliases are
//! exported at the root and used by the CLI.

pub mod analysis;
pub mod curves;
mod graph;
pub mod io;
pub mod level;
pub mod modulus;
pub mod potential;
pub mod runner;
mod scalar;
pub mod surface;

pub use scalar::Scalar;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no separating cut: {0}")]
    NoSeparatingCut(String),
    #[error("mesh file: {0}")]
    MeshFile(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

// Concrete aliases for the default double-precision toolkit.
pub type Mesh64 = surface::MetricMesh<f64>;
pub type Mesh32 = surface::MetricMesh<f32>;
pub type Density64 = modulus::Density<f64>;
pub type ModulusResult64 = modulus::ModulusResult<f64>;
pub type Potential64 = potential::PotentialField<f64>;
pub type ReciprocalityReport64 = analysis::ReciprocalityReport<f64>;
