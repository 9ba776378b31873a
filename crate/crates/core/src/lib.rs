//! Quasilinear Schrödinger operators `H = Δ_p + V` on weighted graphs:
//! energies, p-harmonic solvers, Green functions, Hardy weights,
//! criticality diagnostics and Landis-type uniqueness checks.

pub mod criticality;
pub mod error;
pub mod fit;
pub mod graph;
pub mod landis;
pub mod model;
pub mod operator;
pub mod solvers;

pub use error::{Error, Result};
pub use graph::{ball_decomposition, build_graph, read_graph, write_graph, BoundaryDecomposition, VertexFunction, WeightedGraph};
pub use model::{ModelGraphSpec, SphericalFunction};
pub use operator::{signed_power, SchrodingerOperator, Tag};
